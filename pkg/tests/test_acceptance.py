"""Acceptance criteria, one check per criterion, each printing a PASS/FAIL line.

Run under pytest (lines are collected into the terminal summary) or as a
script: ``python3 tests/test_acceptance.py``.  Reference values come from
closed forms, brute-force scans or the Godunov scheme, never from the code
path being judged.
"""

from __future__ import annotations

import sys
import warnings

import numpy as np
import pytest

from helpers import on, random_data, step
from invdesign.design import (design, flat_design, flat_via_reversal, membership,
                              sample_design)
from invdesign.exceptions import NotReachable
from invdesign.flux import Burgers, legendre
from invdesign.forward import evolve
from invdesign.localization import (LocalizedTarget, extend_profile, extension_consistency,
                                    restricted_design)
from invdesign.profile import SampledProfile, l1_distance
from invdesign.reachability import oleinik_check
from invdesign.traffic import (OutflowRecord, detect_events, flux_from_speed, greenshields,
                               inflow_envelope, max_road_length, max_road_length_pair_scan)

BURGERS = Burgers()
J01 = (0.0, 1.0)
Q_BAR = 0.24


# ---------------------------------------------------------------- oracles

def gs_f(q):
    return (1 - np.sqrt(1 - 4 * q)) / 2


def gs_fprime(q):
    return 1 / np.sqrt(1 - 4 * q)


def gs_conj(y):
    """Greenshields-derived f*: the maximiser solves 1 - 4q = 1/y^2."""
    q = (1 - 1 / np.asarray(y, float) ** 2) / 4
    return y * q - gs_f(q)


def l1_on(u, ref, window):
    g = ref.restrict(*window).grid
    return float(np.sum(np.abs(u.on_grid(g).values - ref.on_grid(g).values)) * g.dx)


def feasible_suite(seed, count, T=1.0):
    """Oleinik-feasible targets on [-2, 2], dx = 1e-3: evolved random steps."""
    rng = np.random.default_rng(seed)
    return [evolve(random_data(rng, -3.5, 3.5, 7000), BURGERS, T, window=(-2, 2))
            for _ in range(count)]


def line(num, ok, title, detail):
    return f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"


# ---------------------------------------------------------------- criteria

def criterion_1():
    worst = 0.0
    targets = {
        "shock": on(-2, 2, 4000, step(1.0, 0.0)),
        "rarefaction": on(-2, 2, 4000, lambda x: np.clip(x, 0, 1)),
        "constant": on(-2, 2, 4000, lambda x: np.full_like(x, 0.5)),
    }
    for u_T in targets.values():
        env = design(u_T, BURGERS, 1.0, J01)
        for u_o in (env.u_flat, env.u_sharp):
            worst = max(worst, l1_on(evolve(u_o, BURGERS, 1.0, window=(-2, 2)), u_T, (-2, 2)))
    return worst <= 5e-3, "round-trip reconstruction", f"max L1 {worst:.2e}, tol 5e-3"


def criterion_2():
    worst = 0.0
    for u_T in feasible_suite(2, 20):
        env = flat_design(u_T, BURGERS, 1.0)
        win = (env.grid_o.x0, env.grid_o.x1)
        rev = flat_via_reversal(u_T, BURGERS, 1.0, window=win)
        god = flat_via_reversal(u_T, BURGERS, 1.0, window=win, scheme="godunov")
        pairs = [(env.u_flat, rev), (env.u_flat, god), (rev, god)]
        worst = max(worst, *(l1_distance(a, b) for a, b in pairs))
    return worst <= 1e-2, "triple-oracle agreement", f"max pairwise L1 {worst:.2e}, tol 1e-2"


def criterion_3():
    rng = np.random.default_rng(3)
    T = 1.0
    passed = sum(oleinik_check(evolve(random_data(rng, -3, 3, 3000), BURGERS, T,
                                      window=(-2, 2)), BURGERS, T).ok for _ in range(50))
    flagged = raised = 0
    for i in range(50):
        if i % 2 == 0:
            # jump of f'(u) = u upward by at least 0.05 at a random point
            c, lo = rng.uniform(-1.5, 1.5), rng.uniform(0, 0.7)
            hi = rng.uniform(lo + 0.05, 1.0)
            u = on(-2, 2, 2000, step(lo, hi, at=c))
        else:
            # continuous ramp with slope above 1/T
            s = rng.uniform(1.5, 10.0) / T
            c = rng.uniform(-1.5, 1.0)
            u = on(-2, 2, 2000, lambda x, c=c, s=s: np.clip(s * (x - c), 0, 1))
        flagged += not oleinik_check(u, BURGERS, T).ok
        try:
            flat_design(u, BURGERS, T)
        except NotReachable:
            raised += 1
    ok = passed == 50 and flagged == 50 and raised == 50
    return ok, "Oleinik equivalence", f"evolved pass {passed}/50, violations flagged " \
                                      f"{flagged}/50, NotReachable {raised}/50"


def criterion_4():
    dx = 1e-3
    u_T = on(-2, 2, 4000, step(1.0, 0.0))
    env = design(u_T, BURGERS, 1.0, J01, x_check=0.0)
    # closed form with U_T(0) = 0: U_flat(-1) = sup_x U_T(x) - (x + 1)^2 / 2 = -1/2 at x = 0
    val_err = abs(float(env.U_flat.at(-1.0)) + 0.5)
    # sharp potential min(U_flat(-1) + (x + 1), U_flat(0)) has its kink at -1/2
    us = env.u_sharp.values
    k = int(np.argmax(np.abs(np.diff(us)) * (np.abs(env.grid_o.right[:-1] + 0.5) < 0.25)))
    jump_at = float(env.grid_o.right[k])
    loc_err = abs(jump_at + 0.5)
    rng = np.random.default_rng(4)
    designs = [sample_design(env, lam=lam) for lam in np.linspace(0, 1, 50)]
    designs += [sample_design(env, seed=int(s)) for s in rng.integers(0, 2**31, 50)]
    members = sum(membership(d, env).member for d in designs)
    trip = max(l1_on(evolve(d, BURGERS, 1.0, window=(-2, 2)), u_T, (-2, 2)) for d in designs)
    rejected = 0
    g = env.grid_o
    x = g.mid
    for i in range(20):
        v = env.u_flat.values.copy()
        c = rng.uniform(-2.5, 1.5)
        if i % 4 == 0:
            v[(x > c) & (x < c + 0.2)] = 1.2  # leaves J
        elif i % 4 == 1:
            # mass moved inside the contact set right of the gap
            c = rng.uniform(0.1, 1.5)
            v[(x > c) & (x < c + 0.1)] += 0.3
        elif i % 4 == 2:
            # cumulative dips below the flat potential inside the gap
            c = rng.uniform(-0.9, -0.4)
            d = rng.uniform(0.05, 0.2)
            v[(x > c) & (x < c + 0.1)] -= min(d, float(v[(x > c) & (x < c + 0.1)].min()))
        else:
            # mass moved inside the contact set left of the gap
            c = rng.uniform(-2.8, -1.3)
            v[(x > c) & (x < c + 0.1)] -= rng.uniform(0.1, 0.5)
        verdict = membership(SampledProfile(g, v), env)
        rejected += (not verdict.member) and verdict.witness is not None
    ok = (val_err <= 2 * dx and loc_err <= 2 * dx and members == 100 and trip <= 5e-3
          and rejected == 20)
    detail = (f"|U_flat(-1)+1/2| {val_err:.1e}, sharp jump at {jump_at:.4f}, "
              f"members {members}/100, max round-trip L1 {trip:.1e}, rejected {rejected}/20")
    return ok, "envelope characterization", detail


def criterion_5():
    tv_worst = hull_worst_ratio = 0.0
    for u_T in feasible_suite(2, 20):
        env = flat_design(u_T, BURGERS, 1.0)
        tv_T = float(np.sum(np.abs(np.diff(u_T.values))))
        tv_f = float(np.sum(np.abs(np.diff(env.u_flat.values))))
        tv_worst = max(tv_worst, abs(tv_T - tv_f))
        # compression fans in u_flat have slope at most 1 / (T min f'') = 1
        tol = 2 * env.grid_o.dx * 1.0
        err = max(abs(u_T.values.min() - env.u_flat.values.min()),
                  abs(u_T.values.max() - env.u_flat.values.max()))
        hull_worst_ratio = max(hull_worst_ratio, err / tol)
    ok = tv_worst <= 2e-2 and hull_worst_ratio <= 1.0
    return ok, "TV and hull equalities", \
        f"max |dTV| {tv_worst:.2e} (tol 2e-2), max hull error / tol {hull_worst_ratio:.2f}"


def criterion_6():
    flat_worst = sharp_worst = ext_flat = ext_sharp = 0.0
    dx = 1e-3
    grid_tol = dx * (J01[1] - J01[0])
    rng = np.random.default_rng(6)
    cases = [(on(-4, 4, 8000, step(1.0, 0.0)), (-2.0, 2.0))]
    for _ in range(10):
        full = evolve(random_data(rng, -5, 5, 10000), BURGERS, 1.0, window=(-4, 4))
        a = float(np.round(rng.uniform(-2.0, 0.5), 3))
        cases.append((full, (a, float(np.round(a + rng.uniform(0.5, 1.5), 3)))))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for full, (x1, x2) in cases:
            target = LocalizedTarget((x1, x2), full.restrict(x1, x2), J01, 1.0)
            rd = restricted_design(target, BURGERS)
            if rd.degenerate:
                continue
            ref = design(full, BURGERS, 1.0, J01, x_check=x1, window=rd.K_o)
            e = rd.envelope
            # a cell straddling an end of K_o also sees data outside the window
            g = e.grid_o
            eps = 1e-9 * g.dx
            inside = (g.nodes[:-1] >= rd.K_o[0] - eps) & (g.nodes[1:] <= rd.K_o[1] + eps)
            flat_worst = max(flat_worst, float(np.max(np.abs(
                e.u_flat.values - ref.u_flat.values)[inside])))
            sharp_worst = max(sharp_worst, float(np.max(np.abs(
                e.u_sharp.values - ref.u_sharp.values)[inside])))
            other = extend_profile(target, BURGERS).on_grid(full.grid)
            rep = extension_consistency(full, other, (x1, x2), BURGERS, 1.0, J01)
            ext_flat = max(ext_flat, rep["flat"])
            ext_sharp = max(ext_sharp, rep["sharp"])
    ok = flat_worst <= 1e-9 and sharp_worst <= grid_tol and max(ext_flat, ext_sharp) <= grid_tol
    detail = (f"restricted vs full: flat {flat_worst:.1e} (tol 1e-9), sharp {sharp_worst:.1e}; "
              f"two extensions: flat {ext_flat:.1e}, sharp {ext_sharp:.1e} (grid tol {grid_tol:g})")
    return ok, "localization consistency", detail


def criterion_7():
    flux = flux_from_speed(greenshields(rho_bar=0.4))
    rec = OutflowRecord(on(0, 1, 2000, lambda t: 0.1 + 0.1 * t), Q_BAR)
    fast = max_road_length(rec, flux).L_max
    brute = max_road_length_pair_scan(rec, flux)
    rel = abs(fast - brute) / brute
    env = inflow_envelope(rec, 0.99 * fast, flux)
    back = evolve(env.q_flat, flux, env.L, window=(rec.T1, rec.T2))
    err = l1_on(back, rec.profile, (rec.T1, rec.T2))
    try:
        inflow_envelope(rec, 1.01 * fast, flux)
        refused = False
    except NotReachable:
        refused = True
    ok = rel <= 1e-6 and err <= 5e-3 and refused and not max_road_length(rec, flux).admits(
        1.01 * fast)
    detail = (f"L_max {fast:.7f} vs pair scan {brute:.7f} (rel {rel:.1e}), "
              f"L1 at 0.99 L_max {err:.1e}, 1.01 L_max refused {refused}")
    return ok, "traffic feasibility threshold", detail


def criterion_8():
    flux = flux_from_speed(greenshields(rho_bar=0.4))
    L, n = 0.3, 2000
    dt = 1.0 / n
    rec = OutflowRecord(on(0, 1, n, lambda t: np.where(t <= 0.5, 0.2, 0.1)), Q_BAR)
    ev = detect_events(inflow_envelope(rec, L, flux))
    # gap [tau_a, tau_b] behind the outflow drop; cones of slope q_bar and 0 from its ends
    y_a, y_b = gs_fprime(0.2), gs_fprime(0.1)
    tau_a = 0.5 - L * y_a
    tau_k = tau_a + L * (gs_conj(y_a) - gs_conj(y_b)) / Q_BAR
    const = OutflowRecord(on(0, 1, n, lambda t: np.full_like(t, 0.16)), Q_BAR)
    n_const = len(detect_events(inflow_envelope(const, L, flux)))
    off = abs(ev[0].tau - tau_k) / dt if len(ev) == 1 else np.inf
    ok = len(ev) == 1 and off <= 2 and n_const == 0
    got = f"{ev[0].tau:.5f}" if ev else "none"
    return ok, "event detection", (f"{len(ev)} event(s) at {got}, predicted {tau_k:.5f} "
                                   f"({off:.2f} cells), constant outflow {n_const} events")


def criterion_9():
    gs = flux_from_speed(greenshields(rho_bar=0.4))
    report = []
    ok = True
    cases = [
        (BURGERS, np.linspace(-2, 2, 41), lambda u: u * u / 2, lambda y: y, (-6.0, 6.0)),
        (gs, np.linspace(0.005, 0.235, 47), gs_f, lambda y: (1 - 1 / y ** 2) / 4, (0.0, Q_BAR)),
    ]
    for flux, us, f_exact, inv_exact, (a, b) in cases:
        ys = flux.deriv(us)
        fine = np.linspace(a, b, 1_000_001)
        brute = np.array([np.max(y * fine - f_exact(fine)) for y in ys])
        conj_err = float(np.max(np.abs(legendre(flux, ys) - brute)))
        # involution: f**(u) = u f'(u) - f*(f'(u))
        inv_err = float(np.max(np.abs(us * ys - legendre(flux, ys) - f_exact(us))))
        h = 1e-5
        fd = (legendre(flux, ys + h) - legendre(flux, ys - h)) / (2 * h)
        l2_err = float(max(np.max(np.abs(fd - inv_exact(ys))),
                           np.max(np.abs(flux.conj_deriv(ys) - inv_exact(ys))) * 1e4))
        U, Y = np.meshgrid(us, ys)
        young = flux(U) + legendre(flux, Y) - U * Y
        young_min = float(young.min())
        eq_err = float(np.max(np.abs(np.diag(young))))
        good = conj_err <= 1e-8 and inv_err <= 1e-8 and l2_err <= 1e-6 and \
            young_min >= -1e-12 and eq_err <= 1e-10
        ok &= good
        report.append(f"{flux.name}: f* {conj_err:.0e}, f** {inv_err:.0e}, "
                      f"(f*)' {l2_err:.0e}, Young min {young_min:.0e}, eq {eq_err:.0e}")
    ok &= legendre(BURGERS, 3.0) == pytest.approx(4.5) and legendre(BURGERS, 0.0) == 0.0
    return ok, "Legendre layer", "; ".join(report)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9]


def evaluate(num):
    ok, title, detail = CRITERIA[num - 1]()
    return bool(ok), line(num, ok, title, detail)


@pytest.mark.parametrize("num", range(1, len(CRITERIA) + 1))
def test_criterion(num, request):
    ok, text = evaluate(num)
    request.config.acceptance_lines.append(text)
    print(text)
    assert ok, text


if __name__ == "__main__":
    results = [evaluate(i) for i in range(1, len(CRITERIA) + 1)]
    for _, text in results:
        print(text)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
