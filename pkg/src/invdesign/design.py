"""Extremal initial data for a reachable target and the band they span.

The flat potential is the sup-convolution

    U_flat(x) = sup_xi  U_T(xi) - T f*((xi - x)/T)

evaluated on a grid aligned with the target's.  Its density is read from the
smallest maximiser as ``(f*)'((xi* - x)/T)`` at cell midpoints.  The sharp
potential coincides with it on the contact set and is the largest function
with slopes in ``J`` across each gap.  Every admissible initial datum has its
primitive between the two.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ConstraintInfeasible, InverseDesignError, SharpUndefined
from .flux import FluxModel, ReflectedFlux
from ._envelope import cell_optimum, node_density, pick_optimum, tie_tol
from .forward import evolve, godunov
from .profile import (Grid, LipschitzProfile, SampledProfile, primitive,
                      total_variation)
from .reachability import ContactSet, contact_set, pi_map

__all__ = [
    "DesignEnvelope",
    "MembershipVerdict",
    "flat_design",
    "sharp_design",
    "design",
    "membership",
    "sample_design",
    "flat_via_reversal",
    "tv_and_hull_report",
    "write_envelope",
]


@dataclass(frozen=True)
class DesignEnvelope:
    grid_o: Grid
    U_flat: LipschitzProfile
    u_flat: SampledProfile
    J: tuple[float, float]
    contact: ContactSet
    T: float
    x_check: float
    y_check: float
    flux: FluxModel
    U_T: LipschitzProfile
    xi_star: np.ndarray
    U_sharp: LipschitzProfile | None = None
    u_sharp: SampledProfile | None = None

    @property
    def has_sharp(self):
        return self.U_sharp is not None

    @property
    def y_index(self) -> int:
        return self.grid_o.node_index(self.y_check)

    def band(self, base=None):
        """Lower and upper primitive bounds at the nodes of ``grid_o``.

        Both are based at ``base`` (default ``y_check``); any contact point
        gives an equivalent band.
        """
        if not self.has_sharp:
            raise SharpUndefined("sharp envelope not computed; call sharp_design first")
        iy = self.y_index if base is None else self.grid_o.node_index(base)
        lo = self.U_flat.node_values - self.U_flat.node_values[iy]
        hi = self.U_sharp.node_values - self.U_sharp.node_values[iy]
        return lo, hi

    def sidecar(self):
        return {
            "T": self.T,
            "J": [_jf(self.J[0]), _jf(self.J[1])],
            "x_check": self.x_check,
            "y_check": self.y_check,
            "grid": {"x0": self.grid_o.x0, "dx": self.grid_o.dx, "n": self.grid_o.n},
            "U_flat_x0": float(self.U_flat.node_values[0]),
            "U_sharp_x0": None if not self.has_sharp else float(self.U_sharp.node_values[0]),
            "gaps": [g.to_dict() for g in self.contact.gaps],
        }


def _jf(x):
    x = float(x)
    return x if np.isfinite(x) else ("inf" if x > 0 else "-inf")


def _sup_scan(U, x0, dx, q0, M, shift, flux, T, s_lo, s_hi):
    """``max_xi U(xi) - T f*((xi - x)/T)`` at ``x_m = x0 + (q0 + m) dx + shift``.

    Grid scan over the offsets allowed by the slope window, then the exact
    optimum in the two cells next to the best node.  Ties go to the smallest
    maximiser.  Returns values, maximisers and densities.
    """
    k_lo = int(np.floor((T * s_lo + shift) / dx)) - 1
    k_hi = int(np.ceil((T * s_hi + shift) / dx)) + 1
    base = q0 + np.arange(M)
    if base[0] + k_lo < 1 or base[-1] + k_hi > len(U) - 2:
        raise InverseDesignError("internal: target padding too small for the scan window")
    ks = np.arange(k_lo, k_hi + 1)
    cost = T * flux.conj((ks * dx - shift) / T, strict=False)
    tol = tie_tol(U)
    best = np.full(M, -np.inf)
    bestj = base + k_lo
    for k, c in zip(ks, cost):
        if not np.isfinite(c):
            continue
        j = base + k
        cand = U[j] - c
        better = cand > best + tol
        best = np.where(better, cand, best)
        bestj = np.where(better, j, bestj)
    x = x0 + base * dx + shift
    xi = x0 + bestj * dx
    lo_u, hi_u = flux.domain
    sl = np.clip(np.diff(U) / dx, lo_u, hi_u)
    node_u = node_density(flux, (xi - x) / T, sl[bestj - 1], sl[bestj])

    def anchor(u):
        return x + T * flux.deriv(u)

    cells = []
    for j in (bestj - 1, bestj):
        s, u, v = cell_optimum(U, x0, dx, j, x, anchor, flux, lo_u, hi_u)
        cells.append((s, v - T * flux.conj((s - x) / T, strict=False), u, j))
    return pick_optimum(best, xi, node_u, cells, x0, dx, tol, sign=-1.0)


def _check_J(u_T, flux, J):
    if J is None:
        J = (-np.inf, np.inf)
    a, b = float(J[0]), float(J[1])
    if not a <= b:
        raise ValueError(f"constraint interval J=[{a:g}, {b:g}] is empty")
    lo, hi = u_T.bounds
    tol = 1e-12 * max(1.0, abs(lo), abs(hi))
    if lo < a - tol or hi > b + tol:
        raise ConstraintInfeasible(
            f"target range [{lo:g}, {hi:g}] is not contained in J=[{a:g}, {b:g}]")
    d0, d1 = flux.domain
    return max(a, d0), min(b, d1)


def flat_design(u_T: SampledProfile, flux: FluxModel, T: float, J=None, x_check=None,
                window=None, slack=None) -> DesignEnvelope:
    """Flat envelope for the target ``u_T`` at horizon ``T``.

    ``window`` is the initial-time interval to reconstruct on and defaults to
    the dependency interval of the target grid.  The target is continued by
    its boundary values outside its grid.
    """
    J = _check_J(u_T, flux, J)
    pi = pi_map(u_T, flux, T, slack)
    cs = contact_set(pi)
    g = u_T.grid
    if x_check is None:
        x_check = 0.5 * (g.x0 + g.x1)
    x_check = float(g.nodes[g.node_index(x_check)])
    if window is None:
        window = cs.hull
    grid_o = Grid.covering(window[0], window[1], g)

    lo, hi = u_T.bounds
    s_lo, s_hi = float(flux.deriv(lo)), float(flux.deriv(hi))
    need_lo = min(grid_o.x0 + T * s_lo, g.x0) - 4 * g.dx
    need_hi = max(grid_o.x1 + T * s_hi, g.x1) + 4 * g.dx
    padded = u_T.pad(int(np.ceil((g.x0 - need_lo) / g.dx)),
                     int(np.ceil((need_hi - g.x1) / g.dx)))
    U_T = primitive(padded, x_check)
    q0 = grid_o.offset_from(U_T.grid)
    U = U_T.node_values
    x0 = U_T.grid.x0
    Uf, _, _ = _sup_scan(U, x0, g.dx, q0, grid_o.n + 1, 0.0, flux, T, s_lo, s_hi)
    _, xi_mid, u = _sup_scan(U, x0, g.dx, q0, grid_o.n, 0.5 * g.dx, flux, T, s_lo, s_hi)
    if np.any(np.diff(xi_mid) < -g.dx * (1 + 1e-9)):
        k = int(np.argmin(np.diff(xi_mid)))
        raise InverseDesignError(
            f"maximiser map decreases near x={grid_o.mid[k]:g}; target is not reachable "
            "at this resolution")
    u_flat = SampledProfile(grid_o, np.clip(u, lo, hi))
    U_flat = LipschitzProfile(grid_o, Uf, (lo, hi))

    # base point: pi(x_check-), snapped to a node outside every gap
    y = pi.at(x_check, "left")
    nodes = grid_o.nodes
    free = ~cs.in_gap(nodes)
    cand = np.flatnonzero(free) if free.any() else np.arange(nodes.size)
    y_check = float(nodes[cand[np.argmin(np.abs(nodes[cand] - y))]])
    return DesignEnvelope(grid_o, U_flat, u_flat, J, cs, float(T), x_check, y_check,
                          flux, U_T, xi_mid)


def sharp_design(env: DesignEnvelope) -> DesignEnvelope:
    """Fill the sharp envelope: two cones with slopes ``max J`` and ``min J`` per gap.

    The cone values at the gap endpoints are taken from the exact flat
    potential there, ``U_T(x_gap) - T f*(f'(u_T(x_gap +- 0)))``.
    """
    a, b = env.J
    if not (np.isfinite(a) and np.isfinite(b)):
        raise SharpUndefined(f"sharp envelope needs a compact J, got [{a:g}, {b:g}]")
    nodes = env.grid_o.nodes
    Uf = env.U_flat.node_values
    D = np.zeros_like(Uf)
    T, flux = env.T, env.flux
    for gp in env.contact.gaps:
        inside = (nodes > gp.lo) & (nodes < gp.hi)
        if not inside.any():
            continue
        Ug = float(env.U_T.at(gp.x_gap))
        v_lo = Ug - T * float(flux.conj(gp.left_speed))
        v_hi = Ug - T * float(flux.conj(gp.right_speed))
        x = nodes[inside]
        cone = np.minimum(v_lo + b * (x - gp.lo), v_hi - a * (gp.hi - x))
        D[inside] = np.maximum(cone - Uf[inside], 0.0)
    U_sharp = LipschitzProfile(env.grid_o, Uf + D, (a, b))
    # cells under a cone take the cone slope (the cell average at its kink);
    # cells touching the flat potential at one node correct the flat density
    Us = Uf + D
    on_cone = (D[:-1] > 0) & (D[1:] > 0)
    u = np.where(on_cone, np.diff(Us) / env.grid_o.dx,
                 env.u_flat.values + np.diff(D) / env.grid_o.dx)
    u = np.clip(u, a, b)
    return dataclasses.replace(env, U_sharp=U_sharp, u_sharp=SampledProfile(env.grid_o, u))


def design(u_T, flux, T, J, x_check=None, window=None, slack=None) -> DesignEnvelope:
    """``flat_design`` followed by ``sharp_design``."""
    return sharp_design(flat_design(u_T, flux, T, J, x_check, window, slack))


@dataclass(frozen=True)
class MembershipVerdict:
    member: bool
    reason: str
    witness: float | None
    excess: float
    tol: float

    def __bool__(self):
        return self.member

    def to_dict(self):
        return {"member": self.member, "reason": self.reason, "witness": self.witness,
                "excess": self.excess, "tol": self.tol}


def _as_envelope_grid(u_o: SampledProfile, env: DesignEnvelope):
    g = env.grid_o
    k = g.offset_from(u_o.grid)
    if k < 0 or k + g.n > u_o.grid.n:
        raise ValueError(
            f"candidate grid [{u_o.grid.x0:g}, {u_o.grid.x1:g}] does not cover the design "
            f"window [{g.x0:g}, {g.x1:g}]")
    return u_o.on_grid(g)


def membership(u_o: SampledProfile, env: DesignEnvelope, tol=None, base=None) -> MembershipVerdict:
    """Band test: values in ``J`` and the primitive based at ``base``
    (default ``y_check``) between the flat and sharp primitives at every node.

    The tolerance on primitives defaults to ``dx * width(J)``.  A rejection
    names the node nearest the base point where the band is left.
    """
    u = _as_envelope_grid(u_o, env)
    a, b = env.J
    dx = env.grid_o.dx
    if tol is None:
        tol = dx * (b - a) if b > a else dx
    vtol = 1e-9 * max(1.0, abs(a), abs(b))
    v = u.values
    if v.min() < a - vtol or v.max() > b + vtol:
        k = int(np.argmax((v < a - vtol) | (v > b + vtol)))
        return MembershipVerdict(False, "range", float(env.grid_o.mid[k]),
                                 float(max(a - v.min(), v.max() - b)), float(tol))
    iy = env.y_index if base is None else env.grid_o.node_index(base)
    lo, hi = env.band(env.grid_o.nodes[iy])
    P = primitive(u).node_values
    P = P - P[iy]
    ex = np.maximum(lo - P, P - hi)
    worst = float(ex.max())
    if worst > tol:
        # first exit from the band when walking away from the base point
        bad = np.flatnonzero(ex > tol)
        k = int(bad[np.argmin(np.abs(bad - iy))])
        reason = "below_flat" if lo[k] - P[k] > 0 else "above_sharp"
        return MembershipVerdict(False, reason, float(env.grid_o.nodes[k]), worst, float(tol))
    return MembershipVerdict(True, "member", None, max(worst, 0.0), float(tol))


def sample_design(env: DesignEnvelope, lam=None, seed=None) -> SampledProfile:
    """An element of the design set.

    With ``lam`` given, the derivative of ``lam U_sharp + (1 - lam) U_flat``.
    Otherwise a random primitive inside the band with slopes in ``J``, built
    by recursive midpoint perturbation over every run of free nodes.
    """
    if not env.has_sharp:
        raise SharpUndefined("sharp envelope not computed; call sharp_design first")
    a, b = env.J
    if lam is not None:
        lam = float(lam)
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"lam must lie in [0, 1], got {lam}")
        v = lam * env.u_sharp.values + (1 - lam) * env.u_flat.values
        return SampledProfile(env.grid_o, np.clip(v, a, b))
    rng = np.random.default_rng(seed)
    Uf = env.U_flat.node_values
    Us = env.U_sharp.node_values
    dx = env.grid_o.dx
    D = Us - Uf
    V = Uf.copy()
    free = D > 0
    edges = np.diff(np.concatenate([[0], free.astype(int), [0]]))
    starts, stops = np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)
    for s, e in zip(starts, stops):
        l, r = max(s - 1, 0), min(e, len(V) - 1)
        stack = [(l, r)]
        while stack:
            l, r = stack.pop()
            if r - l < 2:
                continue
            m = (l + r) // 2
            dl, dr = (m - l) * dx, (r - m) * dx
            lo = max(Uf[m], V[l] + a * dl, V[r] - b * dr)
            hi = min(Us[m], V[l] + b * dl, V[r] - a * dr)
            V[m] = rng.uniform(lo, hi) if hi > lo else 0.5 * (lo + hi)
            stack.append((l, m))
            stack.append((m, r))
    both = free[:-1] & free[1:]
    u = np.where(both, np.diff(V) / dx, env.u_flat.values + np.diff(V - Uf) / dx)
    return SampledProfile(env.grid_o, np.clip(u, a, b))


def flat_via_reversal(u_T: SampledProfile, flux: FluxModel, T: float, window=None,
                      scheme="hopflax", slack=None) -> SampledProfile:
    """Flat design by evolving ``-u_T`` under ``w -> f(-w)`` for time ``T``."""
    if window is None:
        window = contact_set(pi_map(u_T, flux, T, slack)).hull
    else:
        pi_map(u_T, flux, T, slack)
    g = u_T.grid
    grid_o = Grid.covering(window[0], window[1], g)
    left = max(0, -grid_o.offset_from(g))
    right = max(0, grid_o.offset_from(g) + grid_o.n - g.n)
    v0 = -(u_T.pad(left, right))
    g_flux = ReflectedFlux(flux)
    if scheme == "hopflax":
        v = evolve(v0, g_flux, T)
    elif scheme == "godunov":
        v = godunov(v0, g_flux, T)
    else:
        raise ValueError(f"scheme must be 'hopflax' or 'godunov', got {scheme!r}")
    return -(v.on_grid(grid_o))


def tv_and_hull_report(u_T: SampledProfile, env: DesignEnvelope, tv_tol=2e-2):
    """Total variations and closed convex hulls of the ranges of ``u_T`` and ``u_flat``."""
    tv_T = total_variation(u_T)
    tv_f = total_variation(env.u_flat)
    hull_T = u_T.bounds
    hull_f = env.u_flat.bounds
    fpp = env.flux.second_deriv(np.linspace(hull_T[0], hull_T[1], 65))
    steep = 1.0 / (env.T * float(np.min(fpp)))
    hull_tol = 2 * env.grid_o.dx * max(1.0, steep)
    hull_err = max(abs(hull_T[0] - hull_f[0]), abs(hull_T[1] - hull_f[1]))
    return {
        "tv_T": tv_T,
        "tv_flat": tv_f,
        "hull_T": list(hull_T),
        "hull_flat": list(hull_f),
        "tv_ok": bool(abs(tv_T - tv_f) <= tv_tol),
        "hull_ok": bool(hull_err <= hull_tol),
        "hull_tol": hull_tol,
        # operations only see f on its (possibly compact) tabulated domain
        "slope_domain": [_jf(v) for v in env.flux.slope_domain],
        "slope_domain_restricted": bool(np.all(np.isfinite(env.flux.slope_domain))),
    }


def write_envelope(env: DesignEnvelope, path) -> tuple[Path, Path]:
    """CSV with ``x,u_flat,u_sharp,U_flat,U_sharp`` at cell right endpoints plus
    a JSON sidecar holding the grid, ``T``, ``J``, base points and gaps."""
    path = Path(path)
    g = env.grid_o
    us = env.u_sharp.values if env.has_sharp else np.full(g.n, np.nan)
    Us = env.U_sharp.node_values if env.has_sharp else np.full(g.n + 1, np.nan)
    with path.open("w") as fh:
        fh.write("x,u_flat,u_sharp,U_flat,U_sharp\n")
        for i in range(g.n):
            row = (g.right[i], env.u_flat.values[i], us[i], env.U_flat.node_values[i + 1],
                   Us[i + 1])
            fh.write(",".join(repr(float(c)) for c in row) + "\n")
    side = path.with_suffix(".json")
    side.write_text(json.dumps(env.sidecar(), sort_keys=True, indent=2) + "\n")
    return path, side

