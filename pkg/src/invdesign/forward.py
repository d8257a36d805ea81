"""Forward entropy solutions: Hopf-Lax evaluation and a Godunov scheme.

Hopf-Lax works on the potential.  On a uniform grid the offsets ``x - xi``
between query points and data nodes are a fixed arithmetic sequence, so the
conjugate ``f*`` is tabulated once and the infimum is a scan over offsets
followed by an exact refinement inside the two cells adjacent to the winning
node, where the potential is linear and the optimum has a closed form.  Data are continued by constant density outside their grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._envelope import cell_optimum, node_density, pick_optimum, tie_tol
from .flux import FluxModel
from .profile import Grid, LipschitzProfile, SampledProfile, primitive

__all__ = ["EvolutionResult", "hopf_lax", "evolve", "godunov", "godunov_entropy_residual"]

def _inf_scan(U, x0, dx, q0, M, shift, flux, t, s_lo, s_hi, refine=True):
    """``min_xi U(xi) + t f*((x - xi)/t)`` at ``x_m = x0 + (q0 + m) dx + shift``.

    ``U`` holds node values at ``x0 + j dx``.  Returns the values, the
    smallest minimisers and the densities ``(f*)'((x - xi*)/t)``.
    """
    k_lo = int(np.floor((t * s_lo - shift) / dx)) - 1
    k_hi = int(np.ceil((t * s_hi - shift) / dx)) + 1
    base = q0 + np.arange(M)
    if base[0] - k_hi < 1 or base[-1] - k_lo > len(U) - 2:
        raise RuntimeError("internal: data padding too small for the Hopf-Lax window")
    ks = np.arange(k_lo, k_hi + 1)
    cost = t * flux.conj((ks * dx + shift) / t, strict=False)
    tol = tie_tol(U)
    best = np.full(M, np.inf)
    bestj = base - k_hi
    # descending k = ascending xi, strict improvement keeps the smallest minimiser
    for k, c in zip(ks[::-1], cost[::-1]):
        if not np.isfinite(c):
            continue
        j = base - k
        cand = U[j] + c
        better = cand < best - tol
        best = np.where(better, cand, best)
        bestj = np.where(better, j, bestj)
    x = x0 + base * dx + shift
    xi = x0 + bestj * dx
    lo_u, hi_u = flux.domain
    sl = np.clip(np.diff(U) / dx, lo_u, hi_u)
    node_u = node_density(flux, (x - xi) / t, sl[bestj - 1], sl[bestj])
    if not refine:
        return best, xi, node_u

    def anchor(u):
        return x - t * flux.deriv(u)

    def total(s, v):
        return v + t * flux.conj((x - s) / t, strict=False)

    sL, uL, vL = cell_optimum(U, x0, dx, bestj - 1, x, anchor, flux, lo_u, hi_u)
    sR, uR, vR = cell_optimum(U, x0, dx, bestj, x, anchor, flux, lo_u, hi_u)
    vL, vR = total(sL, vL), total(sR, vR)
    return pick_optimum(best, xi, node_u, [(sL, vL, uL, bestj - 1), (sR, vR, uR, bestj)],
                        x0, dx, tol, sign=1.0)


@dataclass(frozen=True)
class EvolutionResult:
    u_t: SampledProfile
    U_t: LipschitzProfile
    argmin_map: np.ndarray


def _prepare(U_o: LipschitzProfile, flux: FluxModel, t: float, window):
    if not t > 0:
        raise ValueError(f"time t must be positive, got {t}")
    g = U_o.grid
    lo, hi = U_o.slope_bounds
    flux.check_values([lo, hi], "initial datum")
    s_lo, s_hi = float(flux.deriv(lo)), float(flux.deriv(hi))
    qg = g if window is None else Grid.covering(window[0], window[1], g)
    need_lo = qg.x0 - t * s_hi - 4 * g.dx
    need_hi = qg.x1 - t * s_lo + 4 * g.dx
    left = int(np.ceil((g.x0 - need_lo) / g.dx))
    right = int(np.ceil((need_hi - g.x1) / g.dx))
    P = U_o.pad(left, right)
    q0 = qg.offset_from(P.grid)
    return P, qg, q0, s_lo, s_hi


def hopf_lax(U_o: LipschitzProfile, flux: FluxModel, t: float, window=None,
             refine=True) -> EvolutionResult:
    """Viscosity solution ``U(t, x) = inf_xi U_o(xi) + t f*((x - xi)/t)``.

    The density at time ``t`` is read at cell midpoints as
    ``(f*)'((x - xi*)/t)`` with ``xi*`` the smallest minimiser.
    """
    P, qg, q0, s_lo, s_hi = _prepare(U_o, flux, t, window)
    dx = P.grid.dx
    U = P.node_values
    vals, xi, _ = _inf_scan(U, P.grid.x0, dx, q0, qg.n + 1, 0.0, flux, t, s_lo, s_hi, refine)
    _, _, u = _inf_scan(U, P.grid.x0, dx, q0, qg.n, 0.5 * dx, flux, t, s_lo, s_hi, refine)
    return EvolutionResult(SampledProfile(qg, u), LipschitzProfile(qg, vals), xi)


def evolve(u_o: SampledProfile, flux: FluxModel, t: float, window=None,
           refine=True) -> SampledProfile:
    """Entropy solution at time ``t`` through the potential: primitive,
    Hopf-Lax, derivative."""
    P, qg, q0, s_lo, s_hi = _prepare(primitive(u_o), flux, t, window)
    _, _, u = _inf_scan(P.node_values, P.grid.x0, P.grid.dx, q0, qg.n, 0.5 * P.grid.dx,
                        flux, t, s_lo, s_hi, refine)
    lo, hi = u_o.bounds
    return SampledProfile(qg, np.clip(u, lo, hi))


def _riemann_flux(uL, uR, fL, fR, us, fs):
    # convex flux: min over [uL, uR] for uL <= uR, max over [uR, uL] otherwise
    inner = (uL < us) & (us < uR)
    return np.where(uL <= uR, np.where(inner, fs, np.minimum(fL, fR)), np.maximum(fL, fR))


def _godunov_setup(u_o, flux, t, cfl):
    if not (0 < cfl <= 0.9):
        raise ValueError(f"cfl must lie in (0, 0.9], got {cfl}")
    if not t > 0:
        raise ValueError(f"time t must be positive, got {t}")
    lo, hi = u_o.bounds
    flux.check_values([lo, hi], "initial datum")
    smax = flux.max_speed(lo, hi)
    dx = u_o.grid.dx
    if smax == 0:
        return u_o, 0, 0.0, 0
    pad = int(np.ceil(t * smax / dx)) + 2
    P = u_o.pad(pad, pad)
    nsteps = int(np.ceil(t * smax / (cfl * dx)))
    return P, nsteps, t / nsteps, pad


def godunov(u_o: SampledProfile, flux: FluxModel, t: float, cfl=0.9, window=None) -> SampledProfile:
    """First-order Godunov scheme with the exact convex Riemann flux.

    Data are padded by constant continuation beyond the domain of dependence,
    so the result on the input grid (or ``window``) is unaffected by boundaries.
    """
    P, nsteps, dt, _ = _godunov_setup(u_o, flux, t, cfl)
    u = P.values.copy()
    lam = dt / P.grid.dx
    us = flux.sonic_point()
    fs = float(flux.eval(us))
    for _ in range(nsteps):
        ue = np.concatenate([[u[0]], u, [u[-1]]])
        fe = flux.eval(ue)
        F = _riemann_flux(ue[:-1], ue[1:], fe[:-1], fe[1:], us, fs)
        u = u - lam * (F[1:] - F[:-1])
    out = SampledProfile(P.grid, u)
    if window is None:
        return out.on_grid(u_o.grid)
    return out.restrict(*window)


def godunov_entropy_residual(u_o: SampledProfile, flux: FluxModel, t: float, level: float,
                             cfl=0.9) -> float:
    """Largest violation of the cell entropy inequality for ``|u - level|``.

    Uses the Crandall-Majda numerical entropy flux
    ``G(a, b) = F(a v k, b v k) - F(a ^ k, b ^ k)``; a monotone scheme gives
    ``eta(u^{n+1}) - eta(u^n) + lam (G_{i+1/2} - G_{i-1/2}) <= 0``.
    """
    P, nsteps, dt, _ = _godunov_setup(u_o, flux, t, cfl)
    u = P.values.copy()
    lam = dt / P.grid.dx
    us = flux.sonic_point()
    fs = float(flux.eval(us))
    k = float(level)
    worst = 0.0

    def num_flux(a, b):
        return _riemann_flux(a, b, flux.eval(a), flux.eval(b), us, fs)

    for _ in range(nsteps):
        ue = np.concatenate([[u[0]], u, [u[-1]]])
        F = num_flux(ue[:-1], ue[1:])
        G = (num_flux(np.maximum(ue[:-1], k), np.maximum(ue[1:], k))
             - num_flux(np.minimum(ue[:-1], k), np.minimum(ue[1:], k)))
        new = u - lam * (F[1:] - F[:-1])
        res = np.abs(new - k) - np.abs(u - k) + lam * (G[1:] - G[:-1])
        worst = max(worst, float(np.max(res)))
        u = new
    return worst
