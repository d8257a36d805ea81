import numpy as np
import pytest

from helpers import on, random_data, step
from invdesign.exceptions import DomainError
from invdesign.flux import TabulatedFlux
from invdesign.forward import evolve, godunov, godunov_entropy_residual, hopf_lax
from invdesign.profile import LipschitzProfile, Grid, l1_distance, primitive
from invdesign.reachability import oleinik_check


def test_hopf_lax_linear_datum(burgers):
    g = Grid.from_bounds(-1, 1, 200)
    res = hopf_lax(LipschitzProfile(g, 0.4 * g.nodes), burgers, 2.0)
    assert np.allclose(res.u_t.values, 0.4)
    assert np.all(np.diff(res.argmin_map) >= -1e-12)


def test_rarefaction(burgers):
    u0 = on(-2, 2, 4000, step(0.0, 1.0))
    res = hopf_lax(primitive(u0), burgers, 1.0)
    exact = np.clip(u0.grid.mid, 0, 1)
    assert np.max(np.abs(res.u_t.values - exact)) < 1e-6
    assert np.all(np.diff(res.argmin_map) >= -1e-12)


def test_shock_position(burgers):
    u0 = on(-2, 2, 4000, step(1.0, 0.0))
    u1 = evolve(u0, burgers, 1.0)
    x = u1.grid.right
    assert x[np.argmax(u1.values < 0.5)] == pytest.approx(0.5 + u1.grid.dx, abs=2 * u1.grid.dx)


def test_hopf_lax_potential_formula(burgers):
    # U_t(x) = min over xi of U_o(xi) + (x - xi)^2 / (2t) evaluated by brute force
    rng = np.random.default_rng(0)
    u0 = random_data(rng, -1, 1, 400)
    U0 = primitive(u0)
    t = 0.3
    res = hopf_lax(U0, burgers, t)
    xi = np.linspace(-3, 3, 60001)
    Uxi = U0.at(xi)
    for x in res.U_t.grid.nodes[::37]:
        brute = np.min(Uxi + (x - xi) ** 2 / (2 * t))
        assert res.U_t.at(x) == pytest.approx(brute, abs=1e-6)


def test_window_and_domain_errors(burgers):
    u0 = on(-2, 2, 400, step(1.0, 0.0))
    w = evolve(u0, burgers, 1.0, window=(-0.5, 1.5))
    assert w.grid.x0 == pytest.approx(-0.5) and w.grid.x1 == pytest.approx(1.5)
    with pytest.raises(ValueError):
        evolve(u0, burgers, 0.0)
    f = TabulatedFlux([[0, 0], [1, 0.5], [2, 2], [3, 4.5]])
    with pytest.raises(DomainError):
        evolve(on(0, 1, 10, lambda x: 0 * x + 4.0), f, 1.0)


def test_semigroup(burgers):
    u0 = random_data(np.random.default_rng(5), -3, 3, 3000)
    a = evolve(evolve(u0, burgers, 0.4), burgers, 0.6)
    b = evolve(u0, burgers, 1.0)
    assert l1_distance(a, b, window=(-1.5, 1.5)) < 5 * u0.grid.dx


def test_evolved_profiles_pass_oleinik(burgers):
    rng = np.random.default_rng(11)
    for _ in range(5):
        u = evolve(random_data(rng), burgers, 0.7)
        assert oleinik_check(u, burgers, 0.7).ok


def test_godunov_constant_and_cfl(burgers):
    c = on(0, 1, 50, lambda x: 0 * x + 0.3)
    assert np.array_equal(godunov(c, burgers, 0.5).values, c.values)
    with pytest.raises(ValueError, match="cfl"):
        godunov(c, burgers, 0.5, cfl=0.95)


def test_godunov_rarefaction_and_shock(burgers):
    r = on(-2, 2, 4000, step(0.0, 1.0))
    assert l1_distance(godunov(r, burgers, 1.0), evolve(r, burgers, 1.0)) < 5e-2
    s = on(-2, 2, 4000, step(1.0, 0.0))
    out = godunov(s, burgers, 1.0)
    x = out.grid.mid
    assert x[np.argmax(out.values < 0.5)] == pytest.approx(0.5, abs=2 * s.grid.dx)


def test_godunov_l1_contraction(burgers):
    rng = np.random.default_rng(2)
    t, pad = 0.5, 1.0
    for _ in range(5):
        u, v = random_data(rng, n=1200), random_data(rng, n=1200)
        win = (u.grid.x0 - pad, u.grid.x1 + pad)
        d0 = l1_distance(u.restrict(*win), v.restrict(*win))
        dt = l1_distance(godunov(u, burgers, t, window=win), godunov(v, burgers, t, window=win))
        # boundary states stay constant, so the flux through the ends bounds the growth
        inflow = t * (abs(burgers.eval(u.values[0]) - burgers.eval(v.values[0]))
                      + abs(burgers.eval(u.values[-1]) - burgers.eval(v.values[-1])))
        assert dt <= d0 + inflow + 1e-12


def test_godunov_entropy_residual(burgers):
    s = on(-1, 1, 400, step(1.0, 0.0))
    assert godunov_entropy_residual(s, burgers, 0.5, level=0.5) <= 1e-12
