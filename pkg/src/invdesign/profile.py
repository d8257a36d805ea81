"""Sampled profiles on uniform grids.

A :class:`Grid` has nodes ``x0 + i*dx`` for ``i = 0..n``.  A
:class:`SampledProfile` stores one value per cell; cell ``i`` is the
half-open interval ``(x_i, x_{i+1}]`` (left-continuous representative).
A :class:`LipschitzProfile` stores node values and is linear in between.

Whenever an operation needs values off the grid, densities are continued by
their boundary cell value and potentials linearly with the boundary slope.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ProfileFormatError

__all__ = [
    "Grid",
    "SampledProfile",
    "LipschitzProfile",
    "primitive",
    "derivative",
    "total_variation",
    "trace",
    "l1_distance",
    "resample",
    "read_profile_csv",
    "write_profile_csv",
]

_ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class Grid:
    x0: float
    dx: float
    n: int

    def __post_init__(self):
        if not self.dx > 0:
            raise ValueError(f"grid spacing must be positive, got {self.dx}")
        if self.n < 2:
            raise ValueError(f"grid needs at least 2 cells, got {self.n}")

    @classmethod
    def from_bounds(cls, a, b, n):
        return cls(float(a), (float(b) - float(a)) / n, int(n))

    @classmethod
    def covering(cls, a, b, ref: "Grid", min_cells=2):
        """Smallest grid aligned with ``ref`` whose span contains ``[a, b]``."""
        lo = int(np.floor((a - ref.x0) / ref.dx + _ALIGN_TOL))
        hi = int(np.ceil((b - ref.x0) / ref.dx - _ALIGN_TOL))
        if hi - lo < min_cells:
            extra = min_cells - (hi - lo)
            lo -= extra // 2
            hi += extra - extra // 2
        return cls(ref.x0 + lo * ref.dx, ref.dx, hi - lo)

    @property
    def x1(self):
        return self.x0 + self.n * self.dx

    @property
    def nodes(self):
        return self.x0 + self.dx * np.arange(self.n + 1)

    @property
    def right(self):
        return self.x0 + self.dx * np.arange(1, self.n + 1)

    @property
    def mid(self):
        return self.x0 + self.dx * (np.arange(self.n) + 0.5)

    def offset_from(self, other: "Grid") -> int:
        """Integer node offset of ``self`` relative to an aligned ``other``."""
        if abs(self.dx - other.dx) > _ALIGN_TOL * other.dx:
            raise ValueError(f"grids have different spacings {self.dx} and {other.dx}")
        k = (self.x0 - other.x0) / other.dx
        kr = int(round(k))
        if abs(k - kr) > 1e-6:
            raise ValueError("grids are not aligned")
        return kr

    def node_index(self, x) -> int:
        """Index of the node nearest to ``x`` (clipped to the grid)."""
        i = int(round((float(x) - self.x0) / self.dx))
        return min(max(i, 0), self.n)

    def cell_index(self, x):
        """Index of the cell ``(x_i, x_{i+1}]`` containing ``x`` (unclipped)."""
        x = np.asarray(x, dtype=float)
        return np.ceil((x - self.x0) / self.dx - _ALIGN_TOL).astype(int) - 1


@dataclass(frozen=True)
class SampledProfile:
    grid: Grid
    values: np.ndarray
    range_hint: tuple[float, float] | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} cell values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("profile values must be finite")
        object.__setattr__(self, "values", v)
        if self.range_hint is not None:
            lo, hi = self.range_hint
            if v.min() < lo - 1e-12 or v.max() > hi + 1e-12:
                raise ValueError(
                    f"values [{v.min():g}, {v.max():g}] outside range hint [{lo:g}, {hi:g}]")

    @classmethod
    def from_function(cls, func, grid: Grid, **kw):
        """Sample ``func`` at the cell midpoints."""
        return cls(grid, np.asarray(func(grid.mid), dtype=float) * np.ones(grid.n), **kw)

    @property
    def bounds(self):
        return float(self.values.min()), float(self.values.max())

    def at(self, x):
        idx = np.clip(self.grid.cell_index(x), 0, self.grid.n - 1)
        return self.values[idx]

    def pad(self, left: int, right: int) -> "SampledProfile":
        """Constant continuation by ``left``/``right`` extra cells."""
        left, right = max(int(left), 0), max(int(right), 0)
        v = np.concatenate([np.full(left, self.values[0]), self.values,
                            np.full(right, self.values[-1])])
        g = Grid(self.grid.x0 - left * self.grid.dx, self.grid.dx, self.grid.n + left + right)
        return SampledProfile(g, v)

    def on_grid(self, grid: Grid) -> "SampledProfile":
        """Values on an aligned ``grid`` (constant continuation outside)."""
        k = grid.offset_from(self.grid)
        idx = np.clip(np.arange(grid.n) + k, 0, self.grid.n - 1)
        return SampledProfile(grid, self.values[idx])

    def restrict(self, a, b) -> "SampledProfile":
        return self.on_grid(Grid.covering(a, b, self.grid))

    def __neg__(self):
        return SampledProfile(self.grid, -self.values)


@dataclass(frozen=True)
class LipschitzProfile:
    grid: Grid
    node_values: np.ndarray
    slope_bounds: tuple[float, float] = field(default=None)

    def __post_init__(self):
        v = np.asarray(self.node_values, dtype=float)
        if v.shape != (self.grid.n + 1,):
            raise ValueError(f"expected {self.grid.n + 1} node values, got shape {v.shape}")
        object.__setattr__(self, "node_values", v)
        if self.slope_bounds is None:
            s = np.diff(v) / self.grid.dx
            object.__setattr__(self, "slope_bounds", (float(s.min()), float(s.max())))

    @property
    def slopes(self):
        return np.diff(self.node_values) / self.grid.dx

    def at(self, x):
        """Linear interpolation; linear continuation with boundary slopes."""
        x = np.asarray(x, dtype=float)
        g = self.grid
        s = self.slopes
        inside = np.interp(x, g.nodes, self.node_values)
        left = self.node_values[0] + s[0] * (x - g.x0)
        right = self.node_values[-1] + s[-1] * (x - g.x1)
        return np.where(x < g.x0, left, np.where(x > g.x1, right, inside))

    def pad(self, left: int, right: int) -> "LipschitzProfile":
        left, right = max(int(left), 0), max(int(right), 0)
        g = self.grid
        s = self.slopes
        lv = self.node_values[0] - s[0] * g.dx * np.arange(left, 0, -1)
        rv = self.node_values[-1] + s[-1] * g.dx * np.arange(1, right + 1)
        ng = Grid(g.x0 - left * g.dx, g.dx, g.n + left + right)
        return LipschitzProfile(ng, np.concatenate([lv, self.node_values, rv]), self.slope_bounds)

    def on_grid(self, grid: Grid) -> "LipschitzProfile":
        grid.offset_from(self.grid)
        return LipschitzProfile(grid, self.at(grid.nodes))


def primitive(u: SampledProfile, x_check=None) -> LipschitzProfile:
    """Exact cell-wise integral of ``u``, vanishing at the node nearest ``x_check``.

    ``x_check`` defaults to the left end of the grid.
    """
    g = u.grid
    U = np.concatenate([[0.0], np.cumsum(u.values * g.dx)])
    if x_check is not None:
        U = U - U[g.node_index(x_check)]
    return LipschitzProfile(g, U, (float(u.values.min()), float(u.values.max())))


def derivative(U: LipschitzProfile) -> SampledProfile:
    return SampledProfile(U.grid, np.diff(U.node_values) / U.grid.dx)


def total_variation(u: SampledProfile) -> float:
    return float(np.sum(np.abs(np.diff(u.values))))


def trace(u: SampledProfile, x, side="left") -> float:
    """One-sided trace at the node nearest ``x``.

    ``left`` is the value of the cell ending at ``x``; ``right`` of the cell
    starting there.
    """
    g = u.grid
    k = int(round((float(x) - g.x0) / g.dx))
    if side == "left":
        if not 1 <= k <= g.n:
            raise ValueError(f"no cell ends at x={x:g} inside [{g.x0:g}, {g.x1:g}]")
        return float(u.values[k - 1])
    if side == "right":
        if not 0 <= k <= g.n - 1:
            raise ValueError(f"no cell starts at x={x:g} inside [{g.x0:g}, {g.x1:g}]")
        return float(u.values[k])
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def l1_distance(u: SampledProfile, v: SampledProfile, window=None) -> float:
    """L1 distance over the common cells of two aligned profiles.

    ``window=(a, b)`` further restricts to cells lying inside ``[a, b]``.
    """
    k = v.grid.offset_from(u.grid)
    lo = max(0, k)
    hi = min(u.grid.n, k + v.grid.n)
    if window is not None:
        a, b = window
        lo = max(lo, int(np.ceil((a - u.grid.x0) / u.grid.dx - _ALIGN_TOL)))
        hi = min(hi, int(np.floor((b - u.grid.x0) / u.grid.dx + _ALIGN_TOL)))
    if hi <= lo:
        raise ValueError("profiles share no cells")
    du = u.values[lo:hi] - v.values[lo - k:hi - k]
    return float(np.sum(np.abs(du)) * u.grid.dx)


def resample(u: SampledProfile, dx: float) -> SampledProfile:
    """Conservative remap onto a grid with spacing ``dx`` over the same span."""
    n = max(2, int(round((u.grid.x1 - u.grid.x0) / dx)))
    g = Grid(u.grid.x0, (u.grid.x1 - u.grid.x0) / n, n)
    U = primitive(u).at(g.nodes)
    return SampledProfile(g, np.diff(U) / g.dx)


def read_profile_csv(path, columns=None) -> SampledProfile:
    """Read a two-column CSV of cell right endpoints and cell values.

    The grid is inferred from the first column and must be uniform within
    1e-9 relative spacing.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ProfileFormatError(f"cannot read {path}: {exc.strerror}") from exc
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise ProfileFormatError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    if columns is not None and header[:2] != list(columns):
        raise ProfileFormatError(
            f"{path}: expected header {','.join(columns)}, got {','.join(header)}")
    try:
        data = np.array([[float(r[0]), float(r[1])] for r in rows[1:]])
    except (ValueError, IndexError) as exc:
        raise ProfileFormatError(f"{path}: rows must hold two numbers ({exc})") from exc
    if data.shape[0] < 2:
        raise ProfileFormatError(f"{path}: need at least 2 rows, got {data.shape[0]}")
    x, v = data[:, 0], data[:, 1]
    dxs = np.diff(x)
    dx = (x[-1] - x[0]) / (len(x) - 1)
    tol = 1e-9 * abs(dx) + 8 * np.finfo(float).eps * np.max(np.abs(x))
    if dx <= 0 or np.max(np.abs(dxs - dx)) > tol:
        raise ProfileFormatError(
            f"{path}: grid is not uniform (spacings range over "
            f"[{dxs.min():.12g}, {dxs.max():.12g}])")
    return SampledProfile(Grid(float(x[0] - dx), float(dx), len(x)), v)


def write_profile_csv(u: SampledProfile, path, header=("x", "value")):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for x, v in zip(u.grid.right, u.values):
            w.writerow([repr(float(x)), repr(float(v))])
    return path
