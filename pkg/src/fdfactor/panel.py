"""Discretely observed curve panels: sampling grids, loading, centering.

A panel holds T curves measured at p common points in [0, 1], one curve
per row.  All containers are immutable after construction and all
operations are pure, so values can be shared freely across threads.
"""

from __future__ import annotations

import csv
import hashlib
import os
from dataclasses import dataclass
from typing import IO, Iterable, Union

import numpy as np

from .errors import DimensionError, DomainError, PanelFormatError

#: cell contents treated as missing when scanning raw tables
MISSING_TOKENS = frozenset({"", "na", "nan", "null"})

Source = Union[str, os.PathLike, IO[str]]


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SampleGrid:
    """Strictly increasing sampling points s_1 < ... < s_p inside [0, 1]."""

    points: np.ndarray

    def __post_init__(self):
        pts = _readonly(np.atleast_1d(self.points))
        if pts.ndim != 1 or pts.size < 2:
            raise DimensionError("a grid needs at least two points")
        if not np.all(np.isfinite(pts)):
            raise PanelFormatError("grid points must be finite")
        if np.any(np.diff(pts) <= 0):
            raise PanelFormatError("grid points must be strictly increasing")
        if pts[0] < 0.0 or pts[-1] > 1.0:
            raise DomainError(
                f"grid points must lie in [0, 1], got range [{pts[0]}, {pts[-1]}]"
            )
        object.__setattr__(self, "points", pts)

    @classmethod
    def midpoints(cls, p: int) -> "SampleGrid":
        """Equidistant midpoint grid s_i = (i - 0.5)/p, the default layout."""
        if p < 2:
            raise DimensionError("a grid needs at least two points")
        return cls((np.arange(1, p + 1) - 0.5) / p)

    @property
    def p(self) -> int:
        return self.points.size

    @property
    def mesh(self) -> float:
        """Largest gap between consecutive points (recomputed, never cached)."""
        return float(np.max(np.diff(self.points)))

    def spacings(self) -> np.ndarray:
        return np.diff(self.points)

    def is_equidistant(self, rtol: float = 1e-9) -> bool:
        gaps = self.spacings()
        return bool(np.max(gaps) - np.min(gaps) <= rtol * np.mean(gaps))

    def digest(self) -> str:
        """SHA-256 of the raw point bytes; identifies grids in manifests."""
        return hashlib.sha256(self.points.tobytes()).hexdigest()


@dataclass(frozen=True)
class ObservationPanel:
    """T x p matrix of raw measurements, row t = curve t on a common grid."""

    values: np.ndarray
    grid: SampleGrid

    def __post_init__(self):
        vals = _readonly(np.atleast_2d(self.values))
        if vals.ndim != 2:
            raise DimensionError("panel values must be a 2-d array")
        if vals.shape[0] < 2:
            raise DimensionError(f"a panel needs at least two curves, got {vals.shape[0]}")
        if vals.shape[1] != self.grid.p:
            raise DimensionError(
                f"panel has {vals.shape[1]} columns but the grid has {self.grid.p} points"
            )
        if not np.all(np.isfinite(vals)):
            raise PanelFormatError("panel entries must all be finite")
        object.__setattr__(self, "values", vals)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class MeanVector:
    """Pointwise mean curve on a grid (same units as the observations)."""

    values: np.ndarray

    def __post_init__(self):
        vals = _readonly(np.atleast_1d(self.values))
        if vals.ndim != 1:
            raise DimensionError("a mean vector must be 1-d")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.size


def column_mean(panel: ObservationPanel) -> MeanVector:
    """Pointwise average over curves: entry i is (1/T) sum_t Y[t, i]."""
    return MeanVector(panel.values.mean(axis=0))


def center(panel: ObservationPanel, mean: MeanVector) -> ObservationPanel:
    """Subtract a mean curve from every row.

    With ``mean = column_mean(panel)`` the result has exactly-zero column
    sums up to rounding.
    """
    if len(mean) != panel.p:
        raise DimensionError(
            f"mean has length {len(mean)} but the panel has {panel.p} columns"
        )
    return ObservationPanel(panel.values - mean.values, panel.grid)


def _iter_rows(source: Source) -> Iterable[list]:
    if hasattr(source, "read"):
        yield from csv.reader(source)
    else:
        with open(source, "r", newline="") as fh:
            yield from csv.reader(fh)


def _parse_row(cells, row_label):
    out = np.empty(len(cells))
    for j, cell in enumerate(cells):
        token = cell.strip()
        if token.lower() in MISSING_TOKENS:
            raise PanelFormatError(
                f"missing value at row {row_label}, column {j + 1}; "
                "run the 'impute' command first"
            )
        try:
            out[j] = float(token)
        except ValueError:
            raise PanelFormatError(
                f"could not parse {token!r} at row {row_label}, column {j + 1}"
            ) from None
        if not np.isfinite(out[j]):
            raise PanelFormatError(
                f"non-finite value at row {row_label}, column {j + 1}"
            )
    return out


def load_panel(source: Source, header: bool = False) -> ObservationPanel:
    """Read a comma-separated panel, one curve per row.

    Parameters
    ----------
    source : path or text stream
        Table with '.' decimal separator and no locale dependence.
    header : bool
        When True the first row holds the grid points.  Otherwise the
        equidistant midpoint grid (i - 0.5)/p is assumed.

    Raises
    ------
    PanelFormatError
        Ragged rows, unparsable or missing cells.
    DimensionError
        Fewer than 2 rows or fewer than 2 columns.
    """
    rows = [r for r in _iter_rows(source) if r]
    grid = None
    if header:
        if not rows:
            raise DimensionError("empty input")
        grid = SampleGrid(_parse_row(rows[0], "1 (header)"))
        rows = rows[1:]

    if len(rows) < 2:
        raise DimensionError(f"a panel needs at least two curves, got {len(rows)}")
    width = len(rows[0])
    if width < 2:
        raise DimensionError(f"a panel needs at least two columns, got {width}")

    data = np.empty((len(rows), width))
    for i, cells in enumerate(rows):
        if len(cells) != width:
            raise PanelFormatError(
                f"row {i + 1} has {len(cells)} values, expected {width}"
            )
        data[i] = _parse_row(cells, i + 1)

    if grid is None:
        grid = SampleGrid.midpoints(width)
    return ObservationPanel(data, grid)


def save_panel(panel: ObservationPanel, dest: Source, header: bool = True) -> None:
    """Write a panel as CSV using shortest round-tripping float reprs.

    A save/load cycle reproduces every entry bit-identically.
    """
    def _write(fh):
        if header:
            fh.write(",".join(repr(float(x)) for x in panel.grid.points) + "\n")
        for row in panel.values:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")

    if hasattr(dest, "write"):
        _write(dest)
    else:
        with open(dest, "w", newline="") as fh:
            _write(fh)


def read_table_with_missing(source: Source, header: bool = False):
    """Read a table like :func:`load_panel` but keep missing cells as NaN.

    Returns ``(values, grid_points_or_None)``; used by the impute pre-pass.
    """
    rows = [r for r in _iter_rows(source) if r]
    grid_points = None
    if header:
        if not rows:
            raise DimensionError("empty input")
        grid_points = _parse_row(rows[0], "1 (header)")
        rows = rows[1:]
    if not rows:
        raise DimensionError("no data rows")
    width = len(rows[0])
    data = np.empty((len(rows), width))
    for i, cells in enumerate(rows):
        if len(cells) != width:
            raise PanelFormatError(
                f"row {i + 1} has {len(cells)} values, expected {width}"
            )
        for j, cell in enumerate(cells):
            token = cell.strip()
            if token.lower() in MISSING_TOKENS:
                data[i, j] = np.nan
            else:
                try:
                    data[i, j] = float(token)
                except ValueError:
                    raise PanelFormatError(
                        f"could not parse {token!r} at row {i + 1}, column {j + 1}"
                    ) from None
    return data, grid_points


def impute_missing(values: np.ndarray, grid: SampleGrid) -> np.ndarray:
    """Fill NaN gaps by linear interpolation along each row.

    Interior gaps are interpolated against the grid positions; gaps at
    either edge copy the nearest observed value.  A row with no observed
    value at all cannot be imputed.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[1] != grid.p:
        raise DimensionError(
            f"table has {values.shape[1]} columns but the grid has {grid.p} points"
        )
    out = values.copy()
    s = grid.points
    for i, row in enumerate(out):
        known = np.isfinite(row)
        if known.all():
            continue
        if not known.any():
            raise PanelFormatError(f"row {i + 1} has no observed values to impute from")
        # np.interp extends the boundary value outside the known range
        row[~known] = np.interp(s[~known], s[known], row[known])
    return out
