"""Highway inflow reconstruction from a measured outflow.

With flow ``q = rho v(rho)`` as unknown, the LWR model on a road ``[0, L]``
becomes ``d_x q + d_t f(q) = 0`` with ``f`` the inverse of ``rho -> rho v(rho)``
on the free-flow branch.  Space plays the role of time: the outflow
``q_out`` on ``[T1, T2]`` at ``x = L`` is the target, ``L`` the horizon, and
the inflow at ``x = 0`` on ``[tau1, tau2]`` the initial datum.  ``J`` is
``[0, q_bar]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .design import DesignEnvelope, MembershipVerdict, membership
from .exceptions import NonConvexFluxError, NotReachable
from .flux import FluxModel, TabulatedFlux, bisect_increasing
from .forward import godunov_entropy_residual
from .localization import LocalizedTarget, restricted_design
from .profile import LipschitzProfile, SampledProfile
from .reachability import oleinik_pair_scan

__all__ = [
    "SpeedLaw",
    "TrafficFlux",
    "OutflowRecord",
    "RoadLengthReport",
    "InflowEnvelope",
    "Event",
    "greenshields",
    "tabulated_speed_law",
    "speed_law_from_spec",
    "flux_from_speed",
    "max_road_length",
    "upstream_window",
    "inflow_envelope",
    "admissible_inflow",
    "detect_events",
    "entropy_spot_check",
]


@dataclass(frozen=True)
class SpeedLaw:
    """Speed ``v(rho)`` on ``[0, R]`` with derivatives and a working cap ``rho_bar``."""

    v: Callable
    R: float
    rho_bar: float
    dv: Callable
    d2v: Callable
    name: str = "custom"
    params: dict = field(default_factory=dict)
    # tabulated laws carry -rho v(rho) as a convex table and evaluate the flow from it
    neg_flow: TabulatedFlux | None = field(default=None, repr=False)

    def flow(self, rho):
        if self.neg_flow is not None:
            return -self.neg_flow.eval(rho)
        rho = np.asarray(rho, dtype=float)
        return rho * self.v(rho)

    def flow_deriv(self, rho):
        if self.neg_flow is not None:
            return -self.neg_flow.deriv(rho)
        rho = np.asarray(rho, dtype=float)
        return self.v(rho) + rho * self.dv(rho)

    def flow_second_deriv(self, rho):
        if self.neg_flow is not None:
            return -self.neg_flow.second_deriv(rho)
        rho = np.asarray(rho, dtype=float)
        return 2 * self.dv(rho) + rho * self.d2v(rho)

    def critical_density(self) -> float:
        """``rho_hat``, the maximiser of ``rho v(rho)`` on ``[0, R]``."""
        g1 = self.flow_deriv
        if g1(self.R) >= 0:
            return float(self.R)
        return float(bisect_increasing(lambda r: -g1(r), 0.0, 0.0, self.R))


def greenshields(vmax=1.0, R=1.0, rho_bar=0.4) -> SpeedLaw:
    """``v(rho) = vmax (1 - rho / R)``."""
    vmax, R = float(vmax), float(R)
    return SpeedLaw(
        v=lambda r: vmax * (1 - np.asarray(r, dtype=float) / R),
        R=R, rho_bar=float(rho_bar),
        dv=lambda r: np.full(np.shape(r), -vmax / R),
        d2v=lambda r: np.zeros(np.shape(r)),
        name="greenshields", params={"vmax": vmax, "R": R})


def tabulated_speed_law(samples, rho_bar) -> SpeedLaw:
    """Speed law from ``(rho, v)`` samples on ``[0, R]``.

    ``rho v(rho)`` must have strictly negative second divided differences;
    it is interpolated with the same shape-preserving construction as
    tabulated fluxes, applied to ``-rho v``.
    """
    s = np.asarray(samples, dtype=float)
    if s.ndim != 2 or s.shape[1] != 2:
        raise NonConvexFluxError("speed table must be a list of (rho, v) pairs")
    rho, v = s[:, 0], s[:, 1]
    try:
        neg = TabulatedFlux(np.column_stack([rho, -rho * v]))
    except NonConvexFluxError as exc:
        raise NonConvexFluxError(f"rho*v(rho) is not strictly concave: {exc}") from None

    def speed(r):
        r = np.asarray(r, dtype=float)
        return np.where(r > 0, -neg.eval(r) / np.where(r > 0, r, 1.0), -neg.deriv(r))

    def dspeed(r):
        r = np.asarray(r, dtype=float)
        safe = np.where(r > 0, r, 1.0)
        g, g1 = -neg.eval(r), -neg.deriv(r)
        return np.where(r > 0, (g1 * safe - g) / safe**2, -0.5 * neg.second_deriv(r))

    def d2speed(r):
        r = np.asarray(r, dtype=float)
        safe = np.where(r > 0, r, 1.0)
        g, g1, g2 = -neg.eval(r), -neg.deriv(r), -neg.second_deriv(r)
        return np.where(r > 0, (g2 * safe**2 - 2 * g1 * safe + 2 * g) / safe**3, 0.0)

    return SpeedLaw(speed, float(rho[-1]), float(rho_bar), dspeed, d2speed,
                    name="table", params={"samples": s.tolist()}, neg_flow=neg)


def speed_law_from_spec(spec: dict) -> SpeedLaw:
    """Accepts ``{"speed": "greenshields", "vmax", "R", "rho_bar"}`` or
    ``{"speed": {"kind": "table", "samples": [[rho, v], ...]}, "rho_bar"}``.
    ``speed_law`` is accepted as an alias of ``speed``."""
    speed = spec.get("speed", spec.get("speed_law", "greenshields"))
    if isinstance(speed, dict):
        kind = speed.get("kind", "greenshields")
        params = {k: v for k, v in speed.items() if k != "kind"}
    else:
        kind, params = speed, {}
    if "rho_bar" not in spec and "rho_bar" not in params:
        raise ValueError("traffic specification needs 'rho_bar'")
    rho_bar = float(spec.get("rho_bar", params.get("rho_bar")))
    if kind == "greenshields":
        return greenshields(float(params.get("vmax", spec.get("vmax", 1.0))),
                            float(params.get("R", spec.get("R", 1.0))), rho_bar)
    if kind == "table":
        return tabulated_speed_law(params["samples"], rho_bar)
    raise ValueError(f"unknown speed law {kind!r} (expected greenshields or table)")


class TrafficFlux(FluxModel):
    """``f(q) = rho`` where ``q = rho v(rho)`` and ``0 <= rho <= rho_bar``.

    Evaluated by root-finding on the flow, which is increasing on the
    free-flow branch; ``f' = 1/g'(rho)`` and ``f'' = -g''(rho)/g'(rho)^3``
    with ``g(rho) = rho v(rho)``.
    """

    name = "traffic"

    def __init__(self, law: SpeedLaw):
        self.law = law
        self.q_bar = float(law.flow(law.rho_bar))
        self.domain = (0.0, self.q_bar)

    def density(self, q):
        q = self.check_values(q)
        return bisect_increasing(self.law.flow, q, 0.0, self.law.rho_bar, rtol=1e-14)

    def eval(self, q):
        return self.density(q)

    def deriv(self, q):
        return 1.0 / self.law.flow_deriv(self.density(q))

    def second_deriv(self, q):
        rho = self.density(q)
        g1 = self.law.flow_deriv(rho)
        return -self.law.flow_second_deriv(rho) / g1**3

    def inv_deriv(self, y):
        y = self.check_slopes(y)
        law = self.law
        # g' is decreasing in rho: solve -g'(rho) = -1/y
        rho = bisect_increasing(lambda r: -law.flow_deriv(r), -1.0 / y, 0.0, law.rho_bar,
                                rtol=1e-14)
        return law.flow(rho)

    @property
    def slope_domain(self):
        g1 = self.law.flow_deriv
        return float(1.0 / g1(0.0)), float(1.0 / g1(self.law.rho_bar))

    def to_spec(self):
        spec = {"kind": "traffic", "rho_bar": self.law.rho_bar}
        if self.law.name == "greenshields":
            spec.update({"speed": "greenshields", **self.law.params})
        else:
            spec["speed"] = {"kind": self.law.name, **self.law.params}
        return spec


def flux_from_speed(law: SpeedLaw, n_check=257) -> TrafficFlux:
    """Validate the speed law and build the flow-to-density flux."""
    R = law.R
    if not R > 0:
        raise ValueError(f"jam density must be positive, got {R}")
    if abs(float(law.v(R))) > 1e-9 * max(1.0, abs(float(law.v(0.0)))):
        raise NonConvexFluxError(f"speed at jam density must vanish, got v(R)={float(law.v(R)):g}")
    rho = np.linspace(0.0, R, n_check)
    if np.any(law.v(rho) < -1e-12):
        raise NonConvexFluxError("speed must be nonnegative on [0, R]")
    if np.any(law.flow_second_deriv(rho) >= 0):
        k = int(np.argmax(law.flow_second_deriv(rho) >= 0))
        raise NonConvexFluxError(f"rho*v(rho) is not strictly concave near rho={rho[k]:g}")
    rho_hat = law.critical_density()
    if not 0 < law.rho_bar < rho_hat:
        raise ValueError(
            f"working cap rho_bar={law.rho_bar:g} must lie in (0, rho_hat={rho_hat:g})")
    return TrafficFlux(law)


@dataclass(frozen=True)
class OutflowRecord:
    """Measured flow at the road exit on the time grid ``[T1, T2]``."""

    profile: SampledProfile
    q_bar: float

    def __post_init__(self):
        lo, hi = self.profile.bounds
        tol = 1e-12 * max(1.0, self.q_bar)
        if lo < -tol or hi > self.q_bar + tol:
            raise ValueError(
                f"outflow range [{lo:g}, {hi:g}] leaves [0, q_bar={self.q_bar:g}]")

    @property
    def T1(self):
        return self.profile.grid.x0

    @property
    def T2(self):
        return self.profile.grid.x1


@dataclass(frozen=True)
class RoadLengthReport:
    L_max: float
    ratio: float
    worst_pair: tuple[float, float] | None
    jump: bool

    @property
    def feasible(self) -> bool:
        return self.L_max > 0

    def admits(self, L) -> bool:
        return bool(0 <= L <= self.L_max)

    def to_dict(self):
        return {
            "L_max": self.L_max if np.isfinite(self.L_max) else "inf",
            "ratio": self.ratio,
            "worst_pair": None if self.worst_pair is None else list(self.worst_pair),
            "jump": self.jump,
            "feasible": self.feasible,
        }


_JUMP_FACTOR = 4.0


def max_road_length(rec: OutflowRecord, flux: FluxModel) -> RoadLengthReport:
    """Largest ``L`` with ``(f'(q(t2)) - f'(q(t1)))/(t2 - t1) <= 1/L`` on the grid.

    The supremum over pairs is attained by neighbours.  A maximal step that
    is isolated (more than four times both neighbouring steps) is read as a
    jump of ``f' o q_out``, which no positive length admits.
    """
    a = flux.deriv(rec.profile.values)
    dt = rec.profile.grid.dx
    steps = np.diff(a)
    k = int(np.argmax(steps))
    ratio = float(steps[k] / dt)
    t = rec.profile.grid.right
    pair = (float(t[k]), float(t[k + 1]))
    if ratio <= 0:
        return RoadLengthReport(np.inf, ratio, pair if steps.size else None, False)
    left = steps[k - 1] if k > 0 else 0.0
    right = steps[k + 1] if k + 1 < steps.size else 0.0
    jump = bool(steps[k] > _JUMP_FACTOR * max(left, right, 0.0))
    return RoadLengthReport(0.0 if jump else 1.0 / ratio, ratio, pair, jump)


def max_road_length_pair_scan(rec: OutflowRecord, flux: FluxModel) -> float:
    """O(n^2) oracle for the threshold (no jump classification)."""
    ratio, _ = oleinik_pair_scan(rec.profile, flux, 1.0)
    return np.inf if ratio <= 0 else 1.0 / ratio


def _require_length(rec, L, flux):
    L = float(L)
    if L < 0:
        raise ValueError(f"road length must be nonnegative, got {L}")
    rep = max_road_length(rec, flux)
    if not rep.admits(L):
        raise NotReachable(
            f"outflow is not reachable over length L={L:g}: the largest admissible length is "
            f"{rep.L_max:g} (ratio {rep.ratio:g} between t={rep.worst_pair[0]:g} and "
            f"t={rep.worst_pair[1]:g})", rep)
    return L


def upstream_window(rec: OutflowRecord, L: float, flux: FluxModel) -> tuple[float, float]:
    """``[T1 - L f'(q_out(T1+)), T2 - L f'(q_out(T2-))]``."""
    L = _require_length(rec, L, flux)
    v = rec.profile.values
    return (float(rec.T1 - L * flux.deriv(v[0])), float(rec.T2 - L * flux.deriv(v[-1])))


@dataclass(frozen=True)
class Event:
    tau: float
    jump: float
    kind: str

    def to_dict(self):
        return {"tau": self.tau, "jump": self.jump, "kind": self.kind}


@dataclass(frozen=True)
class InflowEnvelope:
    window: tuple[float, float]
    q_flat: SampledProfile
    q_sharp: SampledProfile
    Q_flat: LipschitzProfile
    Q_sharp: LipschitzProfile
    envelope: DesignEnvelope
    L: float
    q_bar: float
    degenerate: bool = False

    def rows(self):
        g = self.q_flat.grid
        return zip(g.right, self.q_flat.values, self.q_sharp.values,
                   self.Q_flat.node_values[1:])


def inflow_envelope(rec: OutflowRecord, L: float, flux: FluxModel) -> InflowEnvelope:
    """Flat and sharp inflows on ``[tau1, tau2]`` compatible with ``q_out``.

    ``Q_flat`` is based at ``T1``: ``Q_flat(tau) = sup_t Q_out(t) - L f*((t - tau)/L)``
    with ``Q_out(t)`` the outflow integrated from ``T1``.
    """
    L = _require_length(rec, L, flux)
    if L == 0:
        raise ValueError("road length must be positive for an inflow reconstruction")
    target = LocalizedTarget((rec.T1, rec.T2), rec.profile, (0.0, rec.q_bar), L)
    rd = restricted_design(target, flux, x_check=rec.T1, slack=0.0)
    env = rd.envelope
    return InflowEnvelope(rd.K_o, env.u_flat, env.u_sharp, env.U_flat, env.U_sharp, env,
                          L, rec.q_bar, rd.degenerate)


def admissible_inflow(q_in: SampledProfile, env: InflowEnvelope, tol=None) -> MembershipVerdict:
    """Band test for the cumulative inflow counted from ``tau1``."""
    return membership(q_in, env.envelope, tol=tol, base=env.window[0])


def default_kink_threshold(env: InflowEnvelope) -> float:
    dt = env.q_flat.grid.dx
    width = max(env.window[1] - env.window[0], dt)
    return max(10 * dt * env.q_bar / width, 0.02 * env.q_bar)


def _kinks(slopes, nodes, threshold, sign):
    """Merged slope jumps of one sign; returns (position, total jump) pairs."""
    d = sign * np.diff(slopes)
    idx = np.flatnonzero(d > 0.25 * threshold)
    out = []
    run = []
    for i in idx:
        if run and i - run[-1] > 2:
            out.append(run)
            run = []
        run.append(i)
    if run:
        out.append(run)
    events = []
    for r in out:
        w = d[r]
        total = float(w.sum())
        if total > threshold:
            pos = float(np.sum(nodes[1:-1][r] * w) / total)
            events.append((pos, sign * total))
    return events


def detect_events(env: InflowEnvelope, kink_threshold=None) -> list[Event]:
    """Times where the inflow envelopes have corners.

    A convex corner of ``Q_flat`` (``q_flat`` jumps up) is a time where
    traffic resumes.  A concave corner of ``Q_sharp`` can only occur inside
    a gap, where the latest admissible blockage starts; it is reported as a
    blockage.  Slope jumps on nodes at most two cells apart are merged.
    """
    if kink_threshold is None:
        kink_threshold = default_kink_threshold(env)
    nodes = env.q_flat.grid.nodes
    ev = [Event(p, j, "resume") for p, j in _kinks(env.q_flat.values, nodes, kink_threshold, 1)]
    ev += [Event(p, j, "block") for p, j in _kinks(env.q_sharp.values, nodes, kink_threshold, -1)]
    return sorted(ev, key=lambda e: e.tau)


def entropy_spot_check(q_in: SampledProfile, flux: FluxModel, L: float, level=None) -> float:
    """Worst Kruzkov cell-entropy residual of the Godunov evolution over ``[0, L]``."""
    if level is None:
        level = float(np.median(q_in.values))
    return godunov_entropy_residual(q_in, flux, L, level)
