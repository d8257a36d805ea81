"""Exact optimisation of ``U(xi) +- t f*(+-(x - xi)/t)`` for piecewise-linear ``U``.

Shared by the forward (inf) and design (sup) envelope scans: after a scan
over grid nodes, the optimum in each adjacent cell is available in closed
form because ``U`` is linear there.
"""

import numpy as np


def tie_tol(U):
    return 1e-13 * (1.0 + float(np.max(np.abs(U))))


def cell_optimum(U, x0, dx, j, x, anchor, flux, lo_u, hi_u):
    """Exact optimum of ``U_lin(s) + c(s)`` over cell ``[x_j, x_{j+1}]``.

    On a cell the potential is linear with slope ``u_j`` and the first-order
    condition puts the stationary point at ``anchor(u_j)``; clipping to the
    cell gives the cell optimum.  Returns the point and the slope.
    """
    slope = np.clip((U[j + 1] - U[j]) / dx, lo_u, hi_u)
    xj = x0 + j * dx
    s = np.clip(anchor(slope), xj, xj + dx)
    return s, slope, U[j] + (U[j + 1] - U[j]) * (s - xj) / dx


def node_density(flux, y, u_left, u_right):
    lo, hi = flux.slope_domain
    u = flux.conj_deriv(np.clip(y, lo, hi))
    # optimality at a node puts the density between the two adjacent slopes
    return np.clip(u, np.minimum(u_left, u_right), np.maximum(u_left, u_right))


def pick_optimum(best, xi, node_u, cells, x0, dx, tol, sign):
    """Best of the node and the cell optima, ties to the smallest point.

    ``sign=+1`` minimises, ``-1`` maximises.  A cell optimum strictly inside
    its cell carries that cell's slope as density.
    """
    val, arg, dens = best.copy(), xi.copy(), node_u.copy()
    for s, v, u, j in cells:
        inner = (s > x0 + j * dx + 1e-9 * dx) & (s < x0 + (j + 1) * dx - 1e-9 * dx)
        better = sign * (val - v) > tol
        tie = (np.abs(val - v) <= tol) & (s < arg)
        take = inner & (better | tie)
        val = np.where(take, v, val)
        arg = np.where(take, s, arg)
        dens = np.where(take, u, dens)
    return val, arg, dens
