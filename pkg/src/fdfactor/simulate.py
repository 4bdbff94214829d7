"""Synthetic data generators, baselines, metrics and the Monte Carlo harness.

Two signal families are provided.  The rough family mixes three fixed
components -- a jump indicator, a folded tent with a kink, and a cosine
-- with independent Gaussian scores, producing curves that are
deliberately non-smooth.  The smooth family draws random coefficients on
a cubic B-spline basis, with geometrically decaying coefficient
variances rescaled to a target overall signal variance.  Noise rows are
independent stationary AR(1) paths (iid Gaussian when the coefficient
is zero).

Every randomized routine takes an explicit generator or seed, and the
harness derives one independent stream per (setting, replication) pair,
so results are reproducible bit for bit regardless of scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .diagnostics import auto_thinning, iid_noise_test, select_frequencies
from .errors import DimensionError, DomainError, NumericalError
from .factor import fit
from .order import lambda_scree, suggest_plateau_L
from .panel import ObservationPanel, SampleGrid

#: pinned random-number recipe, recorded in manifests so that
#: reimplementations can document divergence
RNG_ALGORITHM = "numpy PCG64 + SeedSequence(seed, spawn_key=(setting, replication)), ziggurat normals"

#: standard deviations of the three rough-signal scores
ROUGH_SCORE_SCALES = (1.0, 0.5, 0.25)


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def replication_rng(seed: int, setting_index: int, replication_index: int) -> np.random.Generator:
    """Independent stream for one (setting, replication) cell of a study."""
    ss = np.random.SeedSequence(seed, spawn_key=(setting_index, replication_index))
    return np.random.Generator(np.random.PCG64(ss))


# ---------------------------------------------------------------------------
# rough signals

def rough_components(s) -> np.ndarray:
    """The three rough basis curves evaluated at s, shape (3, len(s)).

    Component 1 jumps from 0 to 1 at s = 1/3; component 2 is a tent on
    [1/3, 2/3] peaking at 0.8 in s = 1/2 with its right half flipped to
    negative values; component 3 is cos(6 pi s).
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    jump = (s > 1.0 / 3.0).astype(float)
    flip = np.where((s > 0.5) & (s <= 2.0 / 3.0), -1.0, 1.0)
    tent = np.where(
        (s >= 1.0 / 3.0) & (s <= 2.0 / 3.0),
        flip * 4.0 * (0.2 - np.abs(s - 0.5)),
        0.0,
    )
    cosine = np.cos(6.0 * np.pi * s)
    return np.stack([jump, tent, cosine])


@dataclass(frozen=True)
class RoughDgpConfig:
    """Rough-signal study cell: grid size, sample size, noise variance, seed."""

    p: int
    T: int
    sigma2: float
    seed: Optional[int] = None

    def __post_init__(self):
        if self.p < 3:
            raise DimensionError(f"rough DGP needs p >= 3, got {self.p}")
        if self.T < 2:
            raise DimensionError(f"rough DGP needs T >= 2, got {self.T}")
        if self.sigma2 < 0:
            raise DomainError(f"noise variance must be nonnegative, got {self.sigma2}")


def gen_rough_signals(cfg: RoughDgpConfig, rng: Optional[np.random.Generator] = None):
    """Noiseless rough signals on the midpoint grid.

    Returns ``(panel, scores)`` where ``scores`` has shape (T, 3); the
    scores are independent centered Gaussians with standard deviations
    ``ROUGH_SCORE_SCALES``.
    """
    rng = _as_rng(cfg.seed) if rng is None else rng
    grid = SampleGrid.midpoints(cfg.p)
    basis = rough_components(grid.points)
    scores = rng.standard_normal((cfg.T, 3)) * np.asarray(ROUGH_SCORE_SCALES)
    return ObservationPanel(scores @ basis, grid), scores


# ---------------------------------------------------------------------------
# B-spline machinery and smooth signals

def _clamped_knots(K: int) -> np.ndarray:
    inner = np.linspace(0.0, 1.0, K - 2)[1:-1]
    return np.concatenate([np.zeros(4), inner, np.ones(4)])


def bspline_basis(K: int, s):
    """Clamped cubic B-spline basis on [0, 1], evaluated by Cox-de Boor.

    Returns shape (K,) for scalar input and (n, K) for an array of n
    points.  The K functions are nonnegative and sum to one everywhere;
    at s = 0 (and s = 1) a single function equals one.
    """
    if K < 4:
        raise DimensionError(f"cubic B-splines need K >= 4 basis functions, got {K}")
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr < 0.0) or np.any(s_arr > 1.0):
        raise DomainError("B-spline evaluation points must lie in [0, 1]")
    t = _clamped_knots(K)
    x = s_arr[:, None]
    left, right = t[:-1], t[1:]
    B = ((left <= x) & (x < right)) | ((x == 1.0) & (right == 1.0) & (left < 1.0))
    B = B.astype(float)
    for d in range(1, 4):
        nb = B.shape[1] - 1
        out = np.zeros((x.shape[0], nb))
        for j in range(nb):
            acc = 0.0
            if t[j + d] > t[j]:
                acc = (s_arr - t[j]) / (t[j + d] - t[j]) * B[:, j]
            if t[j + d + 1] > t[j + 1]:
                acc = acc + (t[j + d + 1] - s_arr) / (t[j + d + 1] - t[j + 1]) * B[:, j + 1]
            out[:, j] = acc
        B = out
    if np.isscalar(s) or np.asarray(s).ndim == 0:
        return B[0]
    return B


@dataclass(frozen=True)
class SmoothDgpConfig:
    """Smooth-signal study cell built on a K-dimensional cubic spline space.

    Coefficient k has variance proportional to 2^{-(k-1)/2}; the common
    scale is fixed so that the signal variance averaged over [0, 1]
    equals ``signal_variance``.  Noise is AR(1) with coefficient
    ``theta_ar`` and innovation standard deviation ``sigma``.
    """

    p: int
    T: int
    sigma: float
    theta_ar: float = 0.0
    K: int = 21
    signal_variance: float = 25.0
    seed: Optional[int] = None

    def __post_init__(self):
        if self.K < 4:
            raise DimensionError(f"spline basis needs K >= 4, got {self.K}")
        if not 0.0 <= self.theta_ar < 1.0:
            raise DomainError(f"AR coefficient must lie in [0, 1), got {self.theta_ar}")
        if self.p < 2 or self.T < 2:
            raise DimensionError("smooth DGP needs p >= 2 and T >= 2")
        if self.sigma < 0 or self.signal_variance < 0:
            raise DomainError("sigma and signal_variance must be nonnegative")


def coefficient_variances(K: int, signal_variance: float) -> np.ndarray:
    """Geometrically decaying coefficient variances, rescaled to the target.

    The rescaling uses a fixed 4001-point midpoint quadrature of
    sum_k v_k B_k(s)^2 over [0, 1], so it is deterministic and does not
    depend on the evaluation grid of any particular study.
    """
    decay = 2.0 ** (-np.arange(K) / 2.0)
    if signal_variance == 0.0:
        return np.zeros(K)
    squad = (np.arange(4001) + 0.5) / 4001
    B = bspline_basis(K, squad)
    avg_var = float(np.mean(B**2 @ decay))
    return signal_variance / avg_var * decay


def gen_spline_signals(cfg: SmoothDgpConfig, rng: Optional[np.random.Generator] = None) -> ObservationPanel:
    """Smooth signals X_t(s_i) = sum_k c_{tk} B_k(s_i) on the midpoint grid."""
    rng = _as_rng(cfg.seed) if rng is None else rng
    grid = SampleGrid.midpoints(cfg.p)
    B = bspline_basis(cfg.K, grid.points)
    sd = np.sqrt(coefficient_variances(cfg.K, cfg.signal_variance))
    coef = rng.standard_normal((cfg.T, cfg.K)) * sd
    return ObservationPanel(coef @ B.T, grid)


# ---------------------------------------------------------------------------
# noise, addition, metric

def gen_ar1_noise(p: int, T: int, theta_ar: float, sigma: float, seed_or_rng=None) -> np.ndarray:
    """T independent stationary AR(1) rows of length p.

    The first entry of each row is drawn from the stationary law
    N(0, sigma^2 / (1 - theta^2)) and the recursion
    u_j = theta u_{j-1} + sigma xi_j runs along the row.
    """
    if not abs(theta_ar) < 1.0:
        raise DomainError(f"AR coefficient must satisfy |theta| < 1, got {theta_ar}")
    if sigma < 0:
        raise DomainError(f"innovation scale must be nonnegative, got {sigma}")
    rng = _as_rng(seed_or_rng)
    U = np.empty((T, p))
    U[:, 0] = rng.standard_normal(T) * (sigma / np.sqrt(1.0 - theta_ar**2))
    for j in range(1, p):
        U[:, j] = theta_ar * U[:, j - 1] + sigma * rng.standard_normal(T)
    return U


def add_noise(signals: ObservationPanel, noise) -> ObservationPanel:
    """Entrywise sum of a signal panel and a noise array of equal shape."""
    noise = np.asarray(getattr(noise, "values", noise), dtype=float)
    if noise.shape != signals.values.shape:
        raise DimensionError(
            f"noise shape {noise.shape} does not match signals {signals.values.shape}"
        )
    return ObservationPanel(signals.values + noise, signals.grid)


def sse_appr(truth, estimate) -> float:
    """Mean squared error (1/pT) sum_{t,i} (X_{ti} - Xhat_{ti})^2."""
    a = np.asarray(getattr(truth, "values", truth), dtype=float)
    b = np.asarray(getattr(estimate, "values", estimate), dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def bspline_ls_fit(panel: ObservationPanel, K: int) -> ObservationPanel:
    """Per-curve least-squares projection onto K cubic B-splines.

    The classic smoothing baseline: normal equations solved with a
    Cholesky factorization of the (symmetric positive definite) design
    Gram matrix.
    """
    if K > panel.p:
        raise DimensionError(f"K = {K} exceeds the number of grid points {panel.p}")
    B = bspline_basis(K, panel.grid.points)
    G = B.T @ B
    try:
        factor = cho_factor((G + G.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"rank-deficient spline design (K={K}, p={panel.p}): {exc}") from exc
    coef = cho_solve(factor, B.T @ panel.values.T)
    return ObservationPanel((B @ coef).T, panel.grid)


# ---------------------------------------------------------------------------
# Monte Carlo harness

@dataclass(frozen=True)
class SimSetting:
    """One cell of a study grid.  ``sigma2`` is the innovation variance."""

    p: int
    T: int
    sigma2: float
    theta_ar: float = 0.0


@dataclass(frozen=True)
class SimulationSpec:
    """Complete, self-contained description of a Monte Carlo study.

    ``kind='sse'`` generates signal-plus-noise panels, fits each method
    and scores signal recovery; ``kind='noise-test'`` generates pure
    noise panels and records the iid-noise test outcomes.
    """

    dgp: str                                  # 'rough' | 'smooth'
    kind: str                                 # 'sse' | 'noise-test'
    settings: Sequence[SimSetting]
    replications: int
    seed: int
    methods: Sequence[str] = ("pca",)
    l_policy: str = "fixed"                   # 'fixed' | 'plateau'
    l_fixed: int = 3
    scree_l_max: int = 8
    cutoff: float = 0.1
    thinning: Optional[int] = None            # None -> smallest m with f/T <= 0.3
    levels: Sequence[float] = (0.01, 0.05, 0.10)
    smooth_K: int = 21
    signal_variance: float = 25.0

    def __post_init__(self):
        if self.dgp not in ("rough", "smooth"):
            raise DomainError(f"unknown dgp {self.dgp!r}")
        if self.kind not in ("sse", "noise-test"):
            raise DomainError(f"unknown study kind {self.kind!r}")
        if self.l_policy not in ("fixed", "plateau"):
            raise DomainError(f"unknown L policy {self.l_policy!r}")
        unknown = set(self.methods) - {"pca", "bspline"}
        if unknown:
            raise DomainError(f"unknown methods {sorted(unknown)}")
        if self.replications < 1:
            raise DomainError("replications must be >= 1")
        object.__setattr__(self, "settings", tuple(self.settings))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "levels", tuple(self.levels))


@dataclass(frozen=True)
class SettingResult:
    """Aggregated outcome of one setting x method cell."""

    dgp: str
    kind: str
    p: int
    T: int
    sigma2: float
    theta_ar: float
    method: str
    l_policy: str
    replications: int
    failures: int
    l_median: Optional[float] = None
    sse_median: Optional[float] = None
    sse_mean: Optional[float] = None
    rej_fin: Optional[dict] = None
    rej_inf: Optional[dict] = None
    lambda_fin_median: Optional[float] = None
    lambda_inf_median: Optional[float] = None


@dataclass(frozen=True)
class SimulationSummary:
    spec: SimulationSpec
    results: tuple
    rng_algorithm: str = RNG_ALGORITHM


def _resolve_workers(workers: Optional[int]) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get("FDFACTOR_WORKERS", "1")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def _generate_panel(spec: SimulationSpec, setting: SimSetting, rng):
    sigma = float(np.sqrt(setting.sigma2))
    if spec.dgp == "rough":
        cfg = RoughDgpConfig(p=setting.p, T=setting.T, sigma2=setting.sigma2)
        signals, _ = gen_rough_signals(cfg, rng)
    else:
        cfg = SmoothDgpConfig(
            p=setting.p, T=setting.T, sigma=sigma, theta_ar=setting.theta_ar,
            K=spec.smooth_K, signal_variance=spec.signal_variance,
        )
        signals = gen_spline_signals(cfg, rng)
    noise = gen_ar1_noise(setting.p, setting.T, setting.theta_ar, sigma, rng)
    return signals, add_noise(signals, noise)


def _selection_for(spec: SimulationSpec, setting: SimSetting):
    m = spec.thinning
    if m is None:
        m = auto_thinning(setting.p, setting.T, spec.cutoff)
    return select_frequencies(setting.p, spec.cutoff, m)


def _run_sse_rep(spec, si, setting, ri):
    rng = replication_rng(spec.seed, si, ri)
    signals, observed = _generate_panel(spec, setting, rng)
    out = {}
    for method in spec.methods:
        try:
            if method == "pca":
                if spec.l_policy == "fixed":
                    L = spec.l_fixed
                else:
                    sel = _selection_for(spec, setting)
                    l_max = min(spec.scree_l_max, min(setting.T - 1, setting.p))
                    curve = lambda_scree(observed, l_max, sel)
                    L = suggest_plateau_L(curve).L
                estimate = fit(observed, L).signals
                out[method] = (sse_appr(signals, estimate), float(L))
            else:
                K = max(4, setting.p // 3)
                estimate = bspline_ls_fit(observed, K)
                out[method] = (sse_appr(signals, estimate), float(K))
        except Exception:
            out[method] = None
    return out


def _run_test_rep(spec, si, setting, ri):
    rng = replication_rng(spec.seed, si, ri)
    noise = gen_ar1_noise(setting.p, setting.T, setting.theta_ar, float(np.sqrt(setting.sigma2)), rng)
    sel = _selection_for(spec, setting)
    try:
        rep = iid_noise_test(noise, sel)
        return (rep.lambda_fin, rep.lambda_inf, rep.p_fin, rep.p_inf)
    except Exception:
        return None


def run_monte_carlo(spec: SimulationSpec, workers: Optional[int] = None) -> SimulationSummary:
    """Run a full study grid; deterministic for a given spec regardless of workers.

    Each (setting, replication) pair draws from its own derived stream
    and results are aggregated in replication order, so thread count and
    scheduling cannot affect the output.  Failed replications are counted
    and excluded, never silently dropped.
    """
    workers = _resolve_workers(workers)
    runner = _run_sse_rep if spec.kind == "sse" else _run_test_rep
    R = spec.replications

    per_setting = []
    for si, setting in enumerate(spec.settings):
        cells = [None] * R

        def one(ri, _si=si, _setting=setting):
            cells[ri] = runner(spec, _si, _setting, ri)

        if workers == 1:
            for ri in range(R):
                one(ri)
        else:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                list(ex.map(one, range(R)))
        per_setting.append(cells)

    results = []
    for setting, cells in zip(spec.settings, per_setting):
        base = dict(
            dgp=spec.dgp, kind=spec.kind, p=setting.p, T=setting.T,
            sigma2=setting.sigma2, theta_ar=setting.theta_ar,
            l_policy=spec.l_policy, replications=R,
        )
        if spec.kind == "sse":
            for method in spec.methods:
                picks = [c[method] for c in cells]
                good = [v for v in picks if v is not None]
                failures = R - len(good)
                sse = np.array([v[0] for v in good])
                ls = np.array([v[1] for v in good])
                results.append(SettingResult(
                    method=method, failures=failures,
                    l_median=float(np.median(ls)) if good else None,
                    sse_median=float(np.median(sse)) if good else None,
                    sse_mean=float(np.mean(sse)) if good else None,
                    **base,
                ))
        else:
            good = [c for c in cells if c is not None]
            failures = R - len(good)
            arr = np.array(good) if good else np.empty((0, 4))
            rej_fin = {lv: float(np.mean(arr[:, 2] < lv)) for lv in spec.levels} if good else None
            rej_inf = {lv: float(np.mean(arr[:, 3] < lv)) for lv in spec.levels} if good else None
            results.append(SettingResult(
                method="noise-test", failures=failures,
                rej_fin=rej_fin, rej_inf=rej_inf,
                lambda_fin_median=float(np.median(arr[:, 0])) if good else None,
                lambda_inf_median=float(np.median(arr[:, 1])) if good else None,
                **base,
            ))
    return SimulationSummary(spec=spec, results=tuple(results))


SUMMARY_COLUMNS = (
    "dgp", "kind", "p", "T", "sigma2", "theta_ar", "method", "l_policy",
    "replications", "failures", "l_median", "sse_median", "sse_mean",
    "rej_fin_1", "rej_fin_5", "rej_fin_10",
    "rej_inf_1", "rej_inf_5", "rej_inf_10",
    "lambda_fin_median", "lambda_inf_median",
)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def summary_rows(summary: SimulationSummary):
    """Flatten a summary into CSV rows following ``SUMMARY_COLUMNS``."""
    rows = []
    for r in summary.results:
        rf = r.rej_fin or {}
        ri = r.rej_inf or {}
        rows.append([
            r.dgp, r.kind, r.p, r.T, r.sigma2, r.theta_ar, r.method, r.l_policy,
            r.replications, r.failures, r.l_median, r.sse_median, r.sse_mean,
            rf.get(0.01), rf.get(0.05), rf.get(0.10),
            ri.get(0.01), ri.get(0.05), ri.get(0.10),
            r.lambda_fin_median, r.lambda_inf_median,
        ])
    return rows


def write_summary_csv(summary: SimulationSummary, path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for row in summary_rows(summary):
            fh.write(",".join(_fmt(x) for x in row) + "\n")
