"""Reachability of a target profile and the backward-characteristic map.

For a piecewise-constant target with speeds ``a_i = f'(u_i)`` the Oleinik
ratio over any pair of cells is a weighted average of adjacent-cell ratios,
so its supremum is attained by neighbours and the check is O(n).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import NotReachable
from .flux import FluxModel
from .profile import Grid, SampledProfile

__all__ = [
    "OleinikVerdict",
    "PiMap",
    "ContactSet",
    "default_slack",
    "oleinik_check",
    "oleinik_pair_scan",
    "pi_map",
    "contact_set",
    "dependency_interval",
]

GAP_WIDTH_CELLS = 2.0


@dataclass(frozen=True)
class OleinikVerdict:
    ok: bool
    ratio: float
    bound: float
    slack: float
    worst_pair: tuple[float, float] | None

    def to_dict(self):
        return {
            "reachable": bool(self.ok),
            "worst_pair": None if self.worst_pair is None else [float(x) for x in self.worst_pair],
            "ratio": _json_float(self.ratio),
            "bound": _json_float(self.bound),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _json_float(x):
    x = float(x)
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def default_slack(u: SampledProfile, flux: FluxModel, T: float) -> float:
    lo, hi = u.bounds
    lip = flux.max_second_deriv(lo, hi)
    return 10.0 * u.grid.dx * lip * max(1.0, 1.0 / T)


def _speeds(u: SampledProfile, flux: FluxModel):
    return flux.deriv(flux.check_values(u.values, "target"))


def oleinik_check(u_T: SampledProfile, flux: FluxModel, T: float, slack=None) -> OleinikVerdict:
    """Decide ``(f'(u(x+h)) - f'(u(x)))/h <= 1/T`` on the grid.

    Equivalent to ``x - T f'(u(x))`` being nondecreasing.  ``slack`` is added
    to the bound ``1/T`` and defaults to :func:`default_slack`.
    """
    if not T > 0:
        raise ValueError(f"horizon T must be positive, got {T}")
    if slack is None:
        slack = default_slack(u_T, flux, T)
    a = _speeds(u_T, flux)
    ratios = np.diff(a) / u_T.grid.dx
    if ratios.size == 0:
        return OleinikVerdict(True, 0.0, 1.0 / T, slack, None)
    k = int(np.argmax(ratios))
    ratio = float(ratios[k])
    xr = u_T.grid.right
    pair = (float(xr[k]), float(xr[k + 1]))
    ok = ratio <= 1.0 / T + slack
    return OleinikVerdict(bool(ok), ratio, 1.0 / T, float(slack), pair)


def oleinik_pair_scan(u_T: SampledProfile, flux: FluxModel, T: float):
    """O(n^2) max over all pairs ``i < j``; test oracle for :func:`oleinik_check`."""
    a = _speeds(u_T, flux)
    x = u_T.grid.right
    da = a[None, :] - a[:, None]
    dx = x[None, :] - x[:, None]
    upper = np.triu(np.ones_like(dx, dtype=bool), 1)
    r = np.where(upper, da / np.where(upper, dx, 1.0), -np.inf)
    i, j = np.unravel_index(int(np.argmax(r)), r.shape)
    return float(r[i, j]), (float(x[i]), float(x[j]))


@dataclass(frozen=True)
class PiMap:
    """``pi(x) = x - T f'(u_T(x))`` sampled at cell right endpoints.

    ``speeds`` holds ``f'(u_T)`` per cell so that one-sided limits at any node
    are available: ``pi(x_k-) = x_k - T a_{k-1}``, ``pi(x_k+) = x_k - T a_k``.
    """

    grid: Grid
    pi_values: np.ndarray
    T: float
    speeds: np.ndarray = field(repr=False)

    @property
    def pi_left(self):
        """``pi(x_k-)`` for nodes ``k = 1..n``."""
        return self.grid.right - self.T * self.speeds

    @property
    def pi_right(self):
        """``pi(x_k+)`` for nodes ``k = 0..n-1``."""
        return self.grid.nodes[:-1] - self.T * self.speeds

    @property
    def hull(self):
        return float(self.pi_right[0]), float(self.pi_left[-1])

    def at(self, x, side="left"):
        """``pi(x-)`` or ``pi(x+)`` with constant continuation of the target."""
        a = self.speeds
        g = self.grid
        k = (float(x) - g.x0) / g.dx
        kr = int(round(k))
        if abs(k - kr) < 1e-9:
            idx = kr - 1 if side == "left" else kr
        else:
            idx = int(np.ceil(k)) - 1
        idx = min(max(idx, 0), g.n - 1)
        return float(x) - self.T * float(a[idx])


@dataclass(frozen=True)
class Gap:
    lo: float
    hi: float
    x_gap: float
    left_speed: float
    right_speed: float

    @property
    def width(self):
        return self.hi - self.lo

    def to_dict(self):
        return {"lo": self.lo, "hi": self.hi, "x_gap": self.x_gap}


@dataclass(frozen=True)
class ContactSet:
    intervals: list
    gaps: list
    hull: tuple[float, float]

    def in_gap(self, x):
        """Boolean mask: ``x`` lies strictly inside some gap."""
        x = np.asarray(x, dtype=float)
        mask = np.zeros(x.shape, dtype=bool)
        for g in self.gaps:
            mask |= (x > g.lo) & (x < g.hi)
        return mask


def pi_map(u_T: SampledProfile, flux: FluxModel, T: float, slack=None) -> PiMap:
    verdict = oleinik_check(u_T, flux, T, slack)
    if not verdict.ok:
        raise NotReachable(
            f"Oleinik condition violated between x={verdict.worst_pair[0]:g} and "
            f"x={verdict.worst_pair[1]:g}: ratio {verdict.ratio:g} > 1/T = {1 / T:g}",
            verdict)
    a = _speeds(u_T, flux)
    return PiMap(u_T.grid, u_T.grid.right - T * a, float(T), a)


def contact_set(pi: PiMap, min_gap=None) -> ContactSet:
    """Split the hull of ``pi``'s range into contact intervals and gaps.

    A gap opens at an interior node where ``pi`` jumps forward by more than
    ``min_gap`` (default two cells); narrower jumps are absorbed into the
    contact set.
    """
    g = pi.grid
    if min_gap is None:
        min_gap = GAP_WIDTH_CELLS * g.dx * (1 + 1e-6)
    a = pi.speeds
    nodes = g.nodes[1:-1]
    lo = nodes - pi.T * a[:-1]
    hi = nodes - pi.T * a[1:]
    gaps = [Gap(float(lo[k]), float(hi[k]), float(nodes[k]), float(a[k]), float(a[k + 1]))
            for k in np.flatnonzero(hi - lo > min_gap)]
    h0, h1 = pi.hull
    intervals = []
    start = h0
    for gp in gaps:
        intervals.append((start, gp.lo))
        start = gp.hi
    intervals.append((start, h1))
    return ContactSet(intervals, gaps, (h0, h1))


def dependency_interval(u_T: SampledProfile, flux: FluxModel, T: float, slack=None):
    """``[pi(x1+), pi(x2-)]`` for a target known on its grid ``[x1, x2]``."""
    pi = pi_map(u_T, flux, T, slack)
    return pi.hull
