"""Choosing the number of factors: eigenvalue scree and test-statistic scree.

The classic scree plots the Gram eigenvalues in descending order and
looks for an elbow.  The alternative plots the iid-noise statistic
lambda_inf of the residuals against the number of fitted factors: with
too few factors the residuals keep common structure and the statistic is
huge; once the true order is reached it collapses to a stable baseline.
A small automation of that visual plateau rule is provided.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from .diagnostics import FrequencySelection, iid_noise_test
from .errors import DimensionError, DomainError, OrderError
from .panel import ObservationPanel, _readonly
from .spectral import EigenSystem, eigh_descending

_KINDS = ("eigenvalue", "test-statistic")


@dataclass(frozen=True)
class ScreeCurve:
    """Values v_l against candidate factor orders l = 1..l_max.

    ``suggested_L`` (with ``suggestion_method``) can be attached once an
    order has been chosen, e.g. via :func:`annotate_suggestion`.
    """

    orders: np.ndarray
    values: np.ndarray
    kind: str
    suggested_L: Optional[int] = None
    suggestion_method: Optional[str] = None

    def __post_init__(self):
        orders = np.array(self.orders, dtype=int)
        orders.setflags(write=False)
        values = _readonly(self.values)
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if orders.size != values.size:
            raise DimensionError("orders and values must have equal length")
        if np.any(np.diff(orders) <= 0):
            raise DimensionError("orders must be strictly increasing")
        if self.kind == "eigenvalue" and np.any(
            np.diff(values) > 1e-12 * max(abs(values[0]), 1.0)
        ):
            raise DimensionError("eigenvalue scree values must be non-increasing")
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "values", values)

    @property
    def l_max(self) -> int:
        return int(self.orders[-1])


class PlateauSuggestion(NamedTuple):
    L: int
    plateau_found: bool


def classic_scree(system: EigenSystem, l_max: int) -> ScreeCurve:
    """Descending Gram eigenvalues gamma_1 >= ... >= gamma_{l_max}."""
    if not 1 <= l_max <= system.count:
        raise OrderError(
            f"l_max must lie in 1..{system.count}, got {l_max}"
        )
    return ScreeCurve(
        orders=np.arange(1, l_max + 1),
        values=system.gram_eigenvalues[:l_max],
        kind="eigenvalue",
    )


def lambda_scree(panel: ObservationPanel, l_max: int, sel: FrequencySelection) -> ScreeCurve:
    """lambda_inf of the residuals after fitting l factors, for l = 1..l_max.

    A single eigendecomposition of the centered panel is reused for all
    orders: the rank-l residual is obtained from the rank-(l-1) one by
    peeling off one more eigendirection, which reproduces the per-l fits
    exactly.
    """
    T, p = panel.T, panel.p
    if not 1 <= l_max <= min(T - 1, p):
        raise OrderError(
            f"l_max must lie in 1..min(T-1, p) = {min(T - 1, p)}, got {l_max}"
        )
    Z = panel.values - panel.values.mean(axis=0)
    if T <= p:
        G = Z @ Z.T / T
        _, vecs = eigh_descending((G + G.T) / 2.0)
        resid = Z.copy()
        stats = []
        for l in range(1, l_max + 1):
            e = vecs[:, l - 1]
            resid = resid - np.outer(e, e @ resid)
            stats.append(iid_noise_test(resid, sel).lambda_inf)
    else:
        G = Z.T @ Z / T
        _, vecs = eigh_descending((G + G.T) / 2.0)
        resid = Z.copy()
        stats = []
        for l in range(1, l_max + 1):
            v = vecs[:, l - 1]
            resid = resid - np.outer(resid @ v, v)
            stats.append(iid_noise_test(resid, sel).lambda_inf)
    return ScreeCurve(
        orders=np.arange(1, l_max + 1),
        values=np.asarray(stats),
        kind="test-statistic",
    )


def suggest_plateau_L(curve: ScreeCurve, rel_tol: float = 0.1) -> PlateauSuggestion:
    """Automate the visual plateau rule on a test-statistic scree.

    The curve is examined on a log scale of elevations above its minimum,
    g_l = log(v_l - min v + rel_tol^2 * range); the floor keeps the log
    finite and damps baseline noise.  The suggested order is the smallest
    l whose next up-to-three steps |g_{l+1} - g_l| all stay within
    rel_tol of the total log-scale range; working with log elevations
    keeps the rule scale-free even when the first value dwarfs the rest.
    If no order qualifies, l_max is returned with ``plateau_found=False``.
    """
    if curve.kind != "test-statistic":
        raise ValueError("the plateau rule applies to test-statistic screes")
    if not 0.0 < rel_tol < 1.0:
        raise DomainError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    v = curve.values
    l_max = curve.l_max
    if l_max < 4:
        raise DimensionError(f"the plateau rule needs l_max >= 4, got {l_max}")
    elev = v - v.min()
    rng = float(elev.max())
    if rng == 0.0:
        return PlateauSuggestion(1, True)
    g = np.log(elev + rel_tol**2 * rng)
    steps = np.abs(np.diff(g))
    threshold = rel_tol * (g.max() - g.min())
    for l in range(1, l_max):
        last = min(l + 2, l_max - 1)
        if np.all(steps[l - 1 : last] <= threshold):
            return PlateauSuggestion(l, True)
    return PlateauSuggestion(l_max, False)


def annotate_suggestion(curve: ScreeCurve, rel_tol: float = 0.1) -> ScreeCurve:
    """Return a copy of the curve carrying its plateau suggestion."""
    suggestion = suggest_plateau_L(curve, rel_tol)
    method = "plateau" if suggestion.plateau_found else "plateau(no-plateau-fallback)"
    return replace(curve, suggested_L=suggestion.L, suggestion_method=method)
