"""Inverse design for targets known only on a window ``[x1, x2]``.

Only the initial data on ``K_o = [pi(x1+), pi(x2-)]`` influence the target
on the window, and they do not depend on how the target is continued
outside it.  The window is therefore extended by its one-sided traces and
the full-line construction is restricted to ``K_o``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .design import DesignEnvelope, design, flat_design
from .exceptions import GlueMismatch
from .flux import FluxModel
from .forward import evolve
from .profile import Grid, SampledProfile, trace
from .reachability import dependency_interval

__all__ = [
    "LocalizedTarget",
    "RestrictedDesign",
    "DegenerateWindowWarning",
    "extend_profile",
    "restricted_design",
    "glue",
    "extension_consistency",
]


class DegenerateWindowWarning(UserWarning):
    """The dependency interval collapsed to (less than two cells around) a point."""


@dataclass(frozen=True)
class LocalizedTarget:
    window_T: tuple[float, float]
    profile: SampledProfile
    J: tuple[float, float]
    T: float

    def __post_init__(self):
        x1, x2 = map(float, self.window_T)
        if not x1 < x2:
            raise ValueError(f"window [{x1:g}, {x2:g}] is empty")
        object.__setattr__(self, "window_T", (x1, x2))
        g = self.profile.grid
        if abs(g.x0 - x1) > 1e-6 * g.dx or abs(g.x1 - x2) > 1e-6 * g.dx:
            object.__setattr__(self, "profile", self.profile.restrict(x1, x2))
        a, b = self.J
        lo, hi = self.profile.bounds
        if lo < a - 1e-12 or hi > b + 1e-12:
            raise ValueError(f"profile range [{lo:g}, {hi:g}] leaves J=[{a:g}, {b:g}]")


@dataclass(frozen=True)
class RestrictedDesign:
    K_o: tuple[float, float]
    envelope: DesignEnvelope
    degenerate: bool = False
    point_value: float | None = None


def _speed_bound(target: LocalizedTarget, flux: FluxModel) -> float:
    a, b = target.J
    if not (np.isfinite(a) and np.isfinite(b)):
        a, b = target.profile.bounds
    a, b = max(a, flux.domain[0]), min(b, flux.domain[1])
    return flux.max_speed(a, b)


def extend_profile(target: LocalizedTarget, flux: FluxModel | None = None) -> SampledProfile:
    """Continue the windowed profile by its traces at ``x1`` and ``x2``.

    With a flux, the extension reaches ``T max_J |f'| + 2 dx`` beyond the
    window on both sides, which covers ``K_o`` and every cone touching it.
    """
    u = target.profile
    dx = u.grid.dx
    margin = 2 * dx
    if flux is not None:
        margin += target.T * _speed_bound(target, flux)
    cells = int(np.ceil(margin / dx - 1e-9))
    return u.pad(cells, cells)


def restricted_design(target: LocalizedTarget, flux: FluxModel, x_check=None,
                      slack=None) -> RestrictedDesign:
    """Flat (and, for compact ``J``, sharp) envelope on ``K_o``."""
    u = target.profile
    dx = u.grid.dx
    K = dependency_interval(u, flux, target.T, slack)
    ext = extend_profile(target, flux)
    if x_check is None:
        x_check = target.window_T[0]
    compact = bool(np.all(np.isfinite(target.J)))
    build = design if compact else flat_design
    if K[1] - K[0] < 2 * dx:
        warnings.warn(
            f"dependency interval [{K[0]:g}, {K[1]:g}] is narrower than two cells; "
            "returning the point value of the flat design",
            DegenerateWindowWarning, stacklevel=2)
        mid = 0.5 * (K[0] + K[1])
        env = build(ext, flux, target.T, target.J, x_check, (mid - dx, mid + dx), slack)
        g = env.grid_o
        k = min(max(int(g.cell_index(mid)), 0), g.n - 1)
        return RestrictedDesign(K, env, True, float(env.u_flat.values[k]))
    env = build(ext, flux, target.T, target.J, x_check, K, slack)
    return RestrictedDesign(K, env)


def _common_grid(u: SampledProfile, v: SampledProfile) -> Grid:
    v.grid.offset_from(u.grid)
    return Grid.covering(min(u.grid.x0, v.grid.x0), max(u.grid.x1, v.grid.x1), u.grid)


def glue(u_left: SampledProfile, u_right: SampledProfile, x_bar: float, flux: FluxModel,
         T: float, tol=None, J=None) -> SampledProfile:
    """Initial datum equal to ``u_left`` left of ``pi(0)`` and ``u_right`` right of it.

    ``pi(0) = x_bar - T f'(w)`` where ``w`` is the common left trace at
    ``x_bar`` of both solutions at time ``T``.  The output lives on the
    union of the two (aligned) grids.
    """
    if tol is None:
        width = (J[1] - J[0]) if J is not None else 0.0
        tol = 1e-6 * max(1.0, abs(width))
    grid = _common_grid(u_left, u_right)
    dx = grid.dx
    win = (x_bar - 2 * dx, x_bar + 2 * dx)
    wl = trace(evolve(u_left, flux, T, window=win), x_bar, "left")
    wr = trace(evolve(u_right, flux, T, window=win), x_bar, "left")
    if abs(wl - wr) > tol:
        raise GlueMismatch(
            f"left traces at x={x_bar:g} differ: {wl:.6g} vs {wr:.6g} (tolerance {tol:g})",
            wl, wr)
    split = x_bar - T * float(flux.deriv(wl))
    a = u_left.on_grid(grid).values
    b = u_right.on_grid(grid).values
    # fraction of each cell lying left of the split point
    theta = np.clip((split - grid.nodes[:-1]) / dx, 0.0, 1.0)
    return SampledProfile(grid, theta * a + (1 - theta) * b)


def extension_consistency(u_1: SampledProfile, u_2: SampledProfile, window, flux: FluxModel,
                          T: float, J, slack=None) -> dict:
    """Compare the full-line envelopes of two targets that agree on ``window``.

    Both are restricted to the dependency interval of the window and the
    largest pointwise differences of the flat and sharp densities on its
    interior cells are reported.
    """
    x1, x2 = map(float, window)
    r1, r2 = u_1.restrict(x1, x2), u_2.restrict(x1, x2)
    if r1.grid != r2.grid or np.max(np.abs(r1.values - r2.values)) > 1e-12:
        raise ValueError("profiles do not agree on the window")
    K = dependency_interval(r1, flux, T, slack)
    compact = bool(np.all(np.isfinite(J)))
    build = design if compact else flat_design
    e1 = build(u_1, flux, T, J, x1, K, slack)
    e2 = build(u_2, flux, T, J, x1, K, slack)
    if e1.grid_o != e2.grid_o:
        raise ValueError("profiles are not on aligned grids")
    df = np.abs(e1.u_flat.values - e2.u_flat.values)
    inner = slice(1, -1) if df.size > 2 else slice(None)
    out = {
        "K_o": [float(K[0]), float(K[1])],
        "flat": float(df[inner].max()),
        "sharp": None,
    }
    if compact:
        ds = np.abs(e1.u_sharp.values - e2.u_sharp.values)
        out["sharp"] = float(ds[inner].max())
    return out
