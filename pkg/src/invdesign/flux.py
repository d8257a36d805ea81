"""Strongly convex fluxes, their inverse derivatives and Legendre transforms.

Every flux exposes the same small surface::

    flux.eval(u)        f(u)
    flux.deriv(u)       f'(u), the characteristic speed
    flux.inv_deriv(y)   (f')^{-1}(y)
    flux.conj(y)        f*(y) = y (f')^{-1}(y) - f((f')^{-1}(y))
    flux.conj_deriv(y)  (f*)'(y) = (f')^{-1}(y)

Fluxes built from data live on a compact interval ``domain``; their
conjugate is only defined on ``slope_domain = f'(domain)``.  Queries outside
raise :class:`DomainError` instead of extrapolating.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.interpolate import PchipInterpolator

from .exceptions import DomainError, NonConvexFluxError

__all__ = [
    "FluxModel",
    "Burgers",
    "TabulatedFlux",
    "ReflectedFlux",
    "LegendreTable",
    "make_flux",
    "legendre",
    "lower_bound_certificate",
]

_DOMAIN_TOL = 1e-12


def bisect_increasing(fun, target, lo, hi, rtol=1e-12, max_iter=200):
    """Vectorised bisection for ``fun(x) = target`` with ``fun`` increasing.

    ``lo`` and ``hi`` are scalars bracketing every target.
    """
    target = np.asarray(target, dtype=float)
    a = np.full(target.shape, float(lo))
    b = np.full(target.shape, float(hi))
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        above = fun(m) >= target
        b = np.where(above, m, b)
        a = np.where(above, a, m)
        if np.all(b - a <= rtol * np.maximum(1.0, np.abs(m))):
            break
    return 0.5 * (a + b)


class FluxModel:
    """Base class: subclasses provide ``eval``, ``deriv``, ``inv_deriv``.

    ``conj`` and ``conj_deriv`` are derived from the inverse derivative, so a
    subclass only has to override them when a closed form is cheaper.
    """

    name = "flux"
    domain: tuple[float, float] = (-np.inf, np.inf)

    def eval(self, u):
        raise NotImplementedError

    def deriv(self, u):
        raise NotImplementedError

    def second_deriv(self, u):
        raise NotImplementedError

    def inv_deriv(self, y):
        raise NotImplementedError

    def __call__(self, u):
        return self.eval(u)

    @property
    def slope_domain(self) -> tuple[float, float]:
        lo, hi = self.domain
        s_lo = -np.inf if np.isinf(lo) else float(self.deriv(lo))
        s_hi = np.inf if np.isinf(hi) else float(self.deriv(hi))
        return s_lo, s_hi

    @property
    def is_bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.domain)))

    def check_values(self, u, what="value"):
        u = np.asarray(u, dtype=float)
        lo, hi = self.domain
        tol = _DOMAIN_TOL * max(1.0, abs(lo) if np.isfinite(lo) else 1.0,
                                abs(hi) if np.isfinite(hi) else 1.0)
        if u.size and (np.min(u) < lo - tol or np.max(u) > hi + tol):
            raise DomainError(
                f"{what} range [{np.min(u):g}, {np.max(u):g}] leaves the flux "
                f"domain [{lo:g}, {hi:g}] of {self.name}")
        return np.clip(u, lo, hi)

    def check_slopes(self, y, what="slope"):
        y = np.asarray(y, dtype=float)
        lo, hi = self.slope_domain
        tol = _DOMAIN_TOL * max(1.0, abs(lo) if np.isfinite(lo) else 1.0,
                                abs(hi) if np.isfinite(hi) else 1.0)
        if y.size and (np.min(y) < lo - tol or np.max(y) > hi + tol):
            raise DomainError(
                f"{what} range [{np.min(y):g}, {np.max(y):g}] leaves the slope "
                f"domain [{lo:g}, {hi:g}] of {self.name}")
        return np.clip(y, lo, hi)

    def conj(self, y, strict=True):
        """Legendre transform.  With ``strict=False`` returns ``+inf`` outside
        the slope domain, which is the conjugate of the flux restricted to
        its domain."""
        y = np.asarray(y, dtype=float)
        if strict:
            yc = self.check_slopes(y)
            u = self.inv_deriv(yc)
            return yc * u - self.eval(u)
        lo, hi = self.slope_domain
        inside = (y >= lo) & (y <= hi)
        yc = np.clip(y, lo if np.isfinite(lo) else -np.inf,
                     hi if np.isfinite(hi) else np.inf)
        u = self.inv_deriv(yc)
        out = yc * u - self.eval(u)
        return np.where(inside, out, np.inf)

    def conj_deriv(self, y):
        return self.inv_deriv(self.check_slopes(y))

    def sonic_point(self) -> float:
        """Minimiser of the flux over its domain."""
        lo, hi = self.slope_domain
        if lo <= 0.0 <= hi:
            return float(self.inv_deriv(0.0))
        return float(self.domain[0] if lo > 0 else self.domain[1])

    def max_second_deriv(self, lo, hi, n=65) -> float:
        """Lipschitz constant of f' on ``[lo, hi]`` estimated on samples."""
        if hi <= lo:
            return float(np.abs(self.second_deriv(np.array([lo])))[0])
        return float(np.max(self.second_deriv(np.linspace(lo, hi, n))))

    def max_speed(self, lo, hi) -> float:
        return float(max(abs(self.deriv(lo)), abs(self.deriv(hi))))

    def to_spec(self) -> dict[str, Any]:
        return {"kind": self.name}


class Burgers(FluxModel):
    """``f(u) = u**2 / 2``."""

    name = "burgers"

    def eval(self, u):
        u = np.asarray(u, dtype=float)
        return 0.5 * u * u

    def deriv(self, u):
        return np.asarray(u, dtype=float) * 1.0

    def second_deriv(self, u):
        return np.ones_like(np.asarray(u, dtype=float))

    def inv_deriv(self, y):
        return np.asarray(y, dtype=float) * 1.0

    def conj(self, y, strict=True):
        y = np.asarray(y, dtype=float)
        return 0.5 * y * y

    def conj_deriv(self, y):
        return np.asarray(y, dtype=float) * 1.0


class TabulatedFlux(FluxModel):
    """Convex flux given by samples ``(u_k, f_k)``.

    f' is the monotone cubic (PCHIP) interpolant of the divided differences,
    placed at the cell midpoints and linearly extrapolated to the two end
    samples; f is its antiderivative anchored at the first sample.
    """

    name = "table"

    def __init__(self, samples):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 2 or samples.shape[1] != 2:
            raise NonConvexFluxError("flux table must be a list of (u, f) pairs")
        if samples.shape[0] < 4:
            raise NonConvexFluxError(
                f"flux table needs at least 4 samples, got {samples.shape[0]}")
        u, f = samples[:, 0], samples[:, 1]
        if np.any(np.diff(u) <= 0):
            raise NonConvexFluxError("flux table abscissae must be strictly increasing")
        d = np.diff(f) / np.diff(u)
        dd = np.diff(d)
        if np.any(dd <= 0):
            k = int(np.argmax(dd <= 0))
            raise NonConvexFluxError(
                "flux table is not strictly convex: divided differences "
                f"{d[k]:g}, {d[k + 1]:g} around u={u[k + 1]:g} do not increase")
        mid = 0.5 * (u[:-1] + u[1:])
        first = d[0] - (d[1] - d[0]) * (mid[0] - u[0]) / (mid[1] - mid[0])
        last = d[-1] + (d[-1] - d[-2]) * (u[-1] - mid[-1]) / (mid[-1] - mid[-2])
        knots = np.concatenate([[u[0]], mid, [u[-1]]])
        vals = np.concatenate([[first], d, [last]])
        self.samples = samples
        self._fp = PchipInterpolator(knots, vals, extrapolate=False)
        self._fpp = self._fp.derivative()
        self._F = self._fp.antiderivative()
        self._f0 = float(f[0])
        self.domain = (float(u[0]), float(u[-1]))

    def eval(self, u):
        u = self.check_values(u)
        return self._f0 + self._F(u)

    def deriv(self, u):
        return self._fp(self.check_values(u))

    def second_deriv(self, u):
        return self._fpp(self.check_values(u))

    def inv_deriv(self, y):
        y = self.check_slopes(y)
        lo, hi = self.domain
        return bisect_increasing(self._fp, y, lo, hi)

    def to_spec(self):
        return {"kind": "table", "samples": self.samples.tolist()}


class ReflectedFlux(FluxModel):
    """``g(w) = f(-w)``, the flux of the time-reversed problem."""

    def __init__(self, base: FluxModel):
        self.base = base
        self.name = f"reflected({base.name})"
        lo, hi = base.domain
        self.domain = (-hi, -lo)

    def eval(self, w):
        return self.base.eval(-np.asarray(w, dtype=float))

    def deriv(self, w):
        return -self.base.deriv(-np.asarray(w, dtype=float))

    def second_deriv(self, w):
        return self.base.second_deriv(-np.asarray(w, dtype=float))

    def inv_deriv(self, y):
        return -self.base.inv_deriv(-np.asarray(y, dtype=float))

    @property
    def slope_domain(self):
        lo, hi = self.base.slope_domain
        return -hi, -lo

    def conj(self, y, strict=True):
        return self.base.conj(-np.asarray(y, dtype=float), strict=strict)

    def conj_deriv(self, y):
        return -self.base.conj_deriv(-np.asarray(y, dtype=float))

    def to_spec(self):
        return {"kind": "reflected", "base": self.base.to_spec()}


@dataclass(frozen=True)
class LegendreTable:
    """Conjugate pair view of a flux: ``conj_eval``, ``conj_deriv``, ``domain``."""

    flux: FluxModel

    @property
    def domain(self):
        return self.flux.slope_domain

    def conj_eval(self, y):
        return self.flux.conj(y)

    def conj_deriv(self, y):
        return self.flux.conj_deriv(y)


def legendre(flux: FluxModel, y):
    """f*(y) via ``y (f')^{-1}(y) - f((f')^{-1}(y))``; DomainError off ``f'(domain)``."""
    out = flux.conj(y, strict=True)
    return float(out) if np.ndim(out) == 0 else out


def lower_bound_certificate(flux: FluxModel, A: float) -> float:
    """Return ``alpha`` with ``f(u) >= alpha + A |u|`` at every sample point.

    For data-driven fluxes the slopes ``+-A`` must be attained inside the
    domain, otherwise the bound cannot be certified and DomainError is raised.
    """
    A = float(A)
    if not np.isfinite(A):
        raise DomainError("slope A must be finite")
    if isinstance(flux, Burgers):
        return -0.5 * A * A if A > 0 else 0.0
    s_lo, s_hi = flux.slope_domain
    if A > 0 and not (s_lo <= -A and s_hi >= A):
        raise DomainError(
            f"slope {A:g} not attained: f' ranges over [{s_lo:g}, {s_hi:g}]")
    if isinstance(flux, TabulatedFlux):
        u = flux.samples[:, 0]
    else:
        lo, hi = flux.domain
        u = np.linspace(lo, hi, 4001)
    return float(np.min(flux.eval(u) - A * np.abs(u)))


def make_flux(spec) -> FluxModel:
    """Build a flux from a name, a JSON string, a dict, or pass one through.

    Accepted forms: ``"burgers"``, ``{"kind": "burgers"}``,
    ``{"kind": "table", "samples": [[u, f], ...]}`` and
    ``{"kind": "traffic", "speed": "greenshields", "rho_bar": 0.4, ...}``.
    """
    if isinstance(spec, FluxModel):
        return spec
    if isinstance(spec, str):
        s = spec.strip()
        if s.startswith("{"):
            spec = json.loads(s)
        else:
            spec = {"kind": s}
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError(f"flux specification must name a 'kind', got {spec!r}")
    kind = spec["kind"]
    if kind == "burgers":
        return Burgers()
    if kind == "table":
        return TabulatedFlux(spec["samples"])
    if kind == "traffic":
        from .traffic import flux_from_speed, speed_law_from_spec

        return flux_from_speed(speed_law_from_spec(spec))
    if kind == "reflected":
        return ReflectedFlux(make_flux(spec["base"]))
    raise ValueError(f"unknown flux kind {kind!r} (expected burgers, table or traffic)")
