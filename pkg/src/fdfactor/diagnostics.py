"""Residual diagnostics and the flat-spectrum test of iid errors.

Under iid errors the periodogram of each residual row is flat in
expectation across Fourier frequencies, so the empirical variance of the
row-averaged periodogram over a retained frequency set measures departure
from whiteness.  Two scalings of that variance are reported: lambda_fin,
asymptotically chi-square with f-1 degrees of freedom at a fixed number
f of frequencies, and lambda_inf, asymptotically standard normal when f
grows.  Low frequencies are damped by the fitting step itself, so a
cutoff removes them, and thinning keeps f/T small.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import (
    DegenerateVarianceError,
    DimensionError,
    DomainError,
    SelectionError,
)
from .panel import ObservationPanel, _readonly


def _as_values(residuals) -> np.ndarray:
    if isinstance(residuals, ObservationPanel):
        return residuals.values
    return np.asarray(residuals, dtype=float)


# ---------------------------------------------------------------------------
# periodogram

def periodogram(z, theta: float) -> float:
    """I_z(theta) = (1/p) |sum_k z_k exp(-i k theta)|^2, k = 1..p.

    theta must lie in (0, pi].  At any Fourier frequency 2*pi*l/p with
    1 <= l <= p-1 a constant input gives exactly zero.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size < 2:
        raise DimensionError("periodogram input must be 1-d with at least 2 entries")
    if not 0.0 < theta <= np.pi:
        raise DomainError(f"frequency must lie in (0, pi], got {theta}")
    k = np.arange(1, z.size + 1)
    return float(np.abs(np.sum(z * np.exp(-1j * k * theta))) ** 2 / z.size)


def _periodogram_rows(values: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """Periodograms of every row at every frequency, shape (T, f)."""
    p = values.shape[1]
    k = np.arange(1, p + 1)
    phases = np.exp(-1j * np.outer(k, thetas))
    return np.abs(values @ phases) ** 2 / p


# ---------------------------------------------------------------------------
# frequency selection

@dataclass(frozen=True)
class FrequencySelection:
    """Retained Fourier frequencies theta_l = 2*pi*l/p, l in a subset of 1..q.

    The retained index set drops everything at or below ceil(cutoff * q)
    and then keeps every m-th index of what remains.
    """

    p: int
    cutoff: float
    thinning: int
    indices: np.ndarray

    def __post_init__(self):
        idx = np.array(self.indices, dtype=int)
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def q(self) -> int:
        return self.p // 2

    @property
    def f(self) -> int:
        return self.indices.size

    @property
    def thetas(self) -> np.ndarray:
        return 2.0 * np.pi * self.indices / self.p


def select_frequencies(p: int, cutoff: float = 0.1, thinning: int = 1) -> FrequencySelection:
    """Build the retained frequency set for a length-p series.

    Parameters
    ----------
    p : int
        Series length, at least 6.
    cutoff : float in [0, 1)
        Fraction of the q = floor(p/2) fundamental indices to drop at the
        low end; index l is kept only if l > ceil(cutoff * q).
    thinning : int
        Keep every m-th retained index, starting at the first one.

    Raises
    ------
    SelectionError
        If fewer than two frequencies survive.
    """
    if p < 6:
        raise DimensionError(f"frequency selection needs p >= 6, got {p}")
    if not 0.0 <= cutoff < 1.0:
        raise DomainError(f"cutoff must lie in [0, 1), got {cutoff}")
    if thinning < 1:
        raise DomainError(f"thinning must be a positive integer, got {thinning}")
    q = p // 2
    first = int(np.ceil(cutoff * q)) + 1
    idx = np.arange(first, q + 1)
    idx = idx[(idx - first) % thinning == 0]
    if idx.size < 2:
        raise SelectionError(
            f"only {idx.size} frequencies retained (p={p}, cutoff={cutoff}, "
            f"thinning={thinning}); lower the cutoff or the thinning"
        )
    return FrequencySelection(p=p, cutoff=cutoff, thinning=thinning, indices=idx)


def auto_thinning(p: int, T: int, cutoff: float = 0.1, max_ratio: float = 0.3) -> int:
    """Smallest thinning m for which the retained count satisfies f/T <= max_ratio."""
    q = p // 2
    for m in range(1, q + 1):
        try:
            sel = select_frequencies(p, cutoff, m)
        except SelectionError:
            break
        if sel.f / T <= max_ratio:
            return m
    raise SelectionError(
        f"no thinning achieves f/T <= {max_ratio} with at least two "
        f"frequencies (p={p}, T={T}, cutoff={cutoff})"
    )


def averaged_periodogram(residuals, sel: FrequencySelection) -> np.ndarray:
    """Row-averaged periodogram xi over the retained frequencies, length f."""
    values = _as_values(residuals)
    if values.shape[1] != sel.p:
        raise DimensionError(
            f"panel has {values.shape[1]} columns but the selection is for p={sel.p}"
        )
    return _periodogram_rows(values, sel.thetas).mean(axis=0)


# ---------------------------------------------------------------------------
# variance estimation and the test

def gasser_variance(residuals) -> float:
    """Difference-based noise-variance estimate of Gasser et al. (1986).

    Averages squared second differences along each row,

        (1/T) sum_t [6(p-2)]^{-1} sum_{j=2}^{p-1} (u_{t,j+1} + u_{t,j-1} - 2 u_{t,j})^2,

    which is exactly zero for rows that are affine in the column index.
    """
    values = _as_values(residuals)
    if values.ndim != 2 or values.shape[1] < 3:
        raise DimensionError("the second-difference estimator needs p >= 3")
    d2 = values[:, 2:] + values[:, :-2] - 2.0 * values[:, 1:-1]
    p = values.shape[1]
    return float(np.mean(np.sum(d2**2, axis=1) / (6.0 * (p - 2))))


@dataclass(frozen=True)
class NoiseTestReport:
    """Outcome of the flat-spectrum iid-noise test."""

    sigma2_hat: float
    xi: np.ndarray
    s2_xi: float
    lambda_fin: float
    lambda_inf: float
    p_fin: float
    p_inf: float
    f: int
    T: int

    def __post_init__(self):
        object.__setattr__(self, "xi", _readonly(self.xi))

    def to_dict(self) -> dict:
        return {
            "sigma2_hat": self.sigma2_hat,
            "f": self.f,
            "lambda_fin": self.lambda_fin,
            "p_fin": self.p_fin,
            "lambda_inf": self.lambda_inf,
            "p_inf": self.p_inf,
        }


def iid_noise_test(residuals, sel: FrequencySelection, sigma2: float | None = None) -> NoiseTestReport:
    """Test whether residual rows behave like iid noise.

    Parameters
    ----------
    residuals : ObservationPanel or (T, p) array
    sel : FrequencySelection
    sigma2 : float, optional
        Noise-variance override; by default the Gasser second-difference
        estimate of the residual panel is used.

    Returns
    -------
    NoiseTestReport
        With lambda_fin = (f-1) T S^2_xi / sigma^4 (upper-tail p-value
        from chi-square with f-1 degrees of freedom) and
        lambda_inf = (T S^2_xi / sigma^4 - 1) sqrt((f-1)/2) (upper-tail
        p-value from the standard normal).

    Raises
    ------
    DegenerateVarianceError
        When the noise variance is estimated (or given) as <= 0, e.g.
        for an all-zero residual panel after a saturated fit.
    """
    values = _as_values(residuals)
    T = values.shape[0]
    xi = averaged_periodogram(values, sel)
    if sigma2 is None:
        sigma2 = gasser_variance(values)
    if not sigma2 > 0.0:
        raise DegenerateVarianceError(
            f"noise variance is {sigma2}; residuals are degenerate"
        )
    f = sel.f
    s2_xi = float(np.sum((xi - xi.mean()) ** 2) / (f - 1))
    lam_fin = (f - 1) * T * s2_xi / sigma2**2
    lam_inf = (T * s2_xi / sigma2**2 - 1.0) * np.sqrt((f - 1) / 2.0)
    return NoiseTestReport(
        sigma2_hat=float(sigma2),
        xi=xi,
        s2_xi=s2_xi,
        lambda_fin=float(lam_fin),
        lambda_inf=float(lam_inf),
        p_fin=chi2_upper_tail(lam_fin, f - 1),
        p_inf=normal_upper_tail(lam_inf),
        f=f,
        T=T,
    )


# ---------------------------------------------------------------------------
# residual summaries

def residual_acf(u, h_max: int):
    """Row autocovariance gamma(h) = (1/p) sum_i (u_{i+h}-ubar)(u_i-ubar).

    Returns ``(acvf, acf)`` with lags 0..h_max; ``acf`` is the
    gamma(h)/gamma(0) normalization, or None when gamma(0) = 0 (constant
    input), in which case the autocovariances are all zero anyway.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 1:
        raise DimensionError("acf input must be a single residual row")
    p = u.size
    if not 0 <= h_max <= p - 1:
        raise DimensionError(f"h_max must lie in [0, {p - 1}], got {h_max}")
    d = u - u.mean()
    acvf = np.array([np.dot(d[h:], d[: p - h]) / p for h in range(h_max + 1)])
    if acvf[0] > 0:
        return acvf, acvf / acvf[0]
    return acvf, None


def residual_covariance(residuals) -> np.ndarray:
    """Cross-sectional covariance (1/T) sum_t (U_t - Ubar)(U_t - Ubar)'."""
    values = _as_values(residuals)
    if values.shape[0] < 2:
        raise DimensionError("covariance needs at least two residual rows")
    Z = values - values.mean(axis=0)
    C = Z.T @ Z / values.shape[0]
    return (C + C.T) / 2.0


def residual_correlation(residuals):
    """Correlation version of :func:`residual_covariance`.

    Returns ``(corr, degenerate)`` where ``degenerate`` flags columns of
    zero variance; their correlation entries are set to NaN.
    """
    C = residual_covariance(residuals)
    d = np.sqrt(np.diag(C))
    degenerate = d == 0.0
    scale = np.where(degenerate, np.nan, d)
    corr = C / np.outer(scale, scale)
    np.fill_diagonal(corr, np.where(degenerate, np.nan, 1.0))
    return corr, degenerate


def ar1_spectral_density(theta_coef: float, sigma: float, theta: float) -> float:
    """Spectral density sigma^2 / |1 - theta_coef e^{i theta}|^2 of an AR(1).

    The normalization omits the 1/(2 pi) factor so that an iid sequence
    (theta_coef = 0) has the constant density sigma^2, matching the
    expected periodogram level.
    """
    if not abs(theta_coef) < 1.0:
        raise DomainError(f"AR(1) coefficient must satisfy |theta| < 1, got {theta_coef}")
    if not sigma > 0.0:
        raise DomainError(f"innovation scale must be positive, got {sigma}")
    return float(sigma**2 / (1.0 - 2.0 * theta_coef * np.cos(theta) + theta_coef**2))


# ---------------------------------------------------------------------------
# distribution tails

def chi2_upper_tail(x: float, dof: int) -> float:
    """P(chi^2_dof >= x), accurate to well below 1e-8 on x in [0, 200]."""
    if not isinstance(dof, (int, np.integer)) or dof < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {dof}")
    if x <= 0.0:
        return 1.0
    return float(special.gammaincc(dof / 2.0, x / 2.0))


def normal_upper_tail(z: float) -> float:
    """P(N(0,1) >= z)."""
    return float(0.5 * special.erfc(z / np.sqrt(2.0)))
