import json

import numpy as np
import pytest

from helpers import on, step
from invdesign.exceptions import NotReachable
from invdesign.reachability import (contact_set, dependency_interval, oleinik_check,
                                    oleinik_pair_scan, pi_map)


def test_constant_is_reachable(burgers, constant_target):
    v = oleinik_check(constant_target, burgers, 2.0)
    assert v.ok and v.ratio == 0.0


def test_rarefaction_is_critical(burgers):
    u = on(-1, 2, 3000, lambda x: np.clip(x, 0, 1))
    v = oleinik_check(u, burgers, 1.0)
    assert v.ok
    assert v.ratio == pytest.approx(1.0, abs=1e-9)


def test_up_jump_violates(burgers):
    u = on(-1, 1, 2000, step(0.0, 1.0))
    v = oleinik_check(u, burgers, 1.0)
    assert not v.ok
    assert v.ratio == pytest.approx(1.0 / u.grid.dx)
    assert v.worst_pair[0] == pytest.approx(0.0, abs=1e-12)
    d = json.loads(v.to_json())
    assert d["reachable"] is False and d["bound"] == 1.0 and len(d["worst_pair"]) == 2


def test_check_matches_pair_scan_on_random_profiles(burgers):
    rng = np.random.default_rng(3)
    for _ in range(20):
        u = on(0, 1, 60, lambda x: rng.uniform(0, 1, x.size))
        ratio, _ = oleinik_pair_scan(u, burgers, 1.0)
        assert oleinik_check(u, burgers, 1.0).ratio == pytest.approx(ratio)


def test_negative_horizon(burgers, constant_target):
    with pytest.raises(ValueError):
        oleinik_check(constant_target, burgers, 0.0)


def test_pi_map_shock(burgers, shock_target):
    pi = pi_map(shock_target, burgers, 1.0)
    x = shock_target.grid.right
    expect = np.where(x <= 0, x - 1, x)
    assert np.allclose(pi.pi_values, expect)
    assert np.all(np.diff(pi.pi_values) >= 0)


def test_pi_map_constant_and_rarefaction(burgers):
    c = on(-1, 1, 200, lambda x: 0 * x + 0.3)
    assert np.allclose(pi_map(c, burgers, 2.0).pi_values, c.grid.right - 0.6)
    r = on(-1, 2, 3000, lambda x: np.clip(x, 0, 1))
    x = r.grid.right
    pv = pi_map(r, burgers, 1.0).pi_values
    inner = (x > 0.01) & (x < 0.99)
    assert np.allclose(pv[inner], 0.0, atol=r.grid.dx)
    assert np.allclose(pv[x <= 0], x[x <= 0], atol=r.grid.dx)
    assert np.allclose(pv[x > 1.01], x[x > 1.01] - 1, atol=r.grid.dx)


def test_pi_map_raises_with_verdict(burgers):
    u = on(-1, 1, 100, step(0.0, 1.0))
    with pytest.raises(NotReachable) as err:
        pi_map(u, burgers, 1.0)
    assert not err.value.verdict.ok


def test_contact_set_shock(burgers, shock_target):
    cs = contact_set(pi_map(shock_target, burgers, 1.0))
    assert len(cs.gaps) == 1
    g = cs.gaps[0]
    assert (g.lo, g.hi, g.x_gap) == (pytest.approx(-1.0), pytest.approx(0.0), pytest.approx(0.0))
    assert cs.hull == (pytest.approx(-3.0), pytest.approx(2.0))
    assert cs.intervals[0][1] == pytest.approx(-1.0) and cs.intervals[1][0] == pytest.approx(0.0)
    # tiling of the hull
    covered = sum(b - a for a, b in cs.intervals) + sum(gp.width for gp in cs.gaps)
    assert covered == pytest.approx(cs.hull[1] - cs.hull[0])
    assert cs.in_gap(np.array([-0.5, -1.0, 0.5])).tolist() == [True, False, False]


@pytest.mark.parametrize("fn", [lambda x: np.clip(x, 0, 1), lambda x: 0 * x + 0.7])
def test_no_gaps_without_shocks(burgers, fn):
    u = on(-2, 2, 4000, fn)
    assert contact_set(pi_map(u, burgers, 1.0)).gaps == []


def test_dependency_interval(burgers, shock_target):
    c = on(0, 1, 100, lambda x: 0 * x + 0.25)
    assert dependency_interval(c, burgers, 1.0) == (pytest.approx(-0.25), pytest.approx(0.75))
    assert dependency_interval(shock_target, burgers, 1.0) == (pytest.approx(-3), pytest.approx(2))
    r = on(0, 1, 1000, lambda x: np.clip(x, 0, 1))
    a, b = dependency_interval(r, burgers, 1.0)
    assert abs(a) < 1e-3 and abs(b) < 1e-3
