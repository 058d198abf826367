import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from hamcap.errors import BadParams, BadProfileParams, ThresholdNotMet
from hamcap.geometry import Chart
from hamcap.profiles import (
    ProfileHamiltonian,
    TrigHamiltonian,
    build_Gk,
    build_squeezing_pair,
    counterexample_annulus,
    counterexample_lagrangian,
    f_profile,
    g_profile,
    hamiltonian_from_dict,
    homotopy_levels,
    monotone_homotopy,
    mu,
    profile_from_dict,
    solve_slope_equation,
)
from hamcap.profiles.smooth import phi

CHART = Chart.annulus(0.9, -0.15)
R = 0.6


def pts(x):
    x = np.asarray(x, dtype=float)
    return np.stack([np.zeros_like(x), x], axis=1)


@pytest.fixture(scope="module")
def pair():
    H = ProfileHamiltonian(g_profile(0.0, 1.0, 0.2))
    return (H,) + build_squeezing_pair(H, 1, R, CHART)


def test_mu_examples():
    m = mu()
    assert m.value(-1.0) == 1.0 and m.value(2.0) == 0.0
    assert m.value(0.5) == pytest.approx(0.5, abs=1e-15)
    expected = phi(0.75) / (phi(0.25) + phi(0.75))
    assert m.value(0.25) == pytest.approx(expected, rel=1e-13)
    assert 0.5 < m.value(0.25) < 1.0
    assert m.value(0.25) == pytest.approx(0.935030, abs=1e-6)


def test_mu_symmetry(rng):
    x = rng.uniform(0.0, 1.0, 10_000)
    m = mu()
    assert np.abs(m.value(x) + m.value(1 - x) - 1.0).max() < 1e-14


def test_mu_derivatives_match_finite_differences():
    m = mu()
    x = np.linspace(0.05, 0.95, 37)
    h = 1e-6
    assert np.allclose(m.d1(x), (m.value(x + h) - m.value(x - h)) / (2 * h), atol=1e-7)
    assert np.allclose(m.d2(x), (m.d1(x + h) - m.d1(x - h)) / (2 * h), atol=1e-6)
    assert (m.d1(x) <= 0).all()


def test_g_and_f_examples():
    g = g_profile(0.0, 1.0, 1.0)
    assert g.value(0.0) == 1.0 and g.value(1.5) == 0.0
    f = f_profile(0.0, 1.0, 1.0)
    assert f.value(0.0) == 0.0 and f.value(2.0) == 1.0
    assert g_profile(-2.0, 3.0, 0.5).value(0.25) == pytest.approx(0.5, abs=1e-14)


@given(m=st.floats(-5, 5), h=st.floats(0.01, 5), eps=st.floats(0.01, 2))
def test_f_is_negated_g(m, h, eps):
    S = m + h
    x = np.linspace(-3 * eps, 3 * eps, 301)
    assert np.abs(f_profile(m, S, eps).value(x) + g_profile(-S, -m, eps).value(x)).max() < 1e-14


@pytest.mark.parametrize("args", [(1.0, 1.0, 0.5), (2.0, 1.0, 0.5), (0.0, 1.0, 0.0), (0.0, 1.0, -1.0)])
def test_bad_profile_params(args):
    with pytest.raises(BadProfileParams):
        g_profile(*args)
    with pytest.raises(BadProfileParams):
        f_profile(*args)


def test_profile_json_round_trip():
    for prof in (mu(), g_profile(-0.25, 1.5, 0.2), f_profile(0.1, 0.7, 0.3)):
        back = profile_from_dict(json.loads(json.dumps(prof.to_dict())))
        assert back.to_dict() == prof.to_dict()
        x = np.linspace(-1, 1, 101)
        assert np.array_equal(back.value(x), prof.value(x))


def test_hamiltonian_json_round_trip():
    H = TrigHamiltonian([{"amp": 0.05, "kq": [1], "omega": 1.0}, {"amp": 0.03, "kq": [2], "kp": [1], "phase": 0.3}], n=1)
    back = hamiltonian_from_dict(json.loads(json.dumps(H.to_dict())))
    assert back.to_dict() == H.to_dict()
    X = np.random.default_rng(1).uniform(-1, 1, (50, 2))
    assert np.array_equal(back.value(0.3, X), H.value(0.3, X))


def test_squeezing_pair_constants(pair):
    H, H0, H1, wc = pair
    assert wc.m0 == wc.S_Y == 0.0
    assert wc.S1 == wc.m_X
    # m_X is the infimum over the widened band |p| <= eps1, not the value 1 at p = 0
    band = np.linspace(-wc.eps1, wc.eps1, 4001)
    assert wc.m_X == pytest.approx(H.value(0.0, pts(band)).min(), abs=1e-9)
    assert wc.S1 - wc.m1 == wc.S0 - wc.m0
    assert all(wc.invariants().values()), wc.invariants()
    assert wc.m1 - 1 < wc.a < wc.m1
    assert wc.C + wc.m0 < wc.b < wc.S1
    assert wc.C + wc.S0 < wc.c < wc.C + wc.S0 + 1


def test_squeezing_pair_sandwich(pair):
    H, H0, H1, wc = pair
    q, p = np.meshgrid(np.linspace(0, 1, 200), np.linspace(-0.15, 0.75, 200))
    X = np.stack([q.ravel(), p.ravel()], axis=1)
    h, h0, h1 = H.value(0.0, X), H0.value(0.0, X), H1.value(0.0, X)
    assert (h1 <= h + 1e-12).all() and (h <= h0 + 1e-12).all()


def test_squeezing_pair_needs_gap():
    H = ProfileHamiltonian(g_profile(0.0, 0.5, 0.2))
    with pytest.raises(ThresholdNotMet):
        build_squeezing_pair(H, 1, R, CHART)
    with pytest.raises(BadParams):
        build_squeezing_pair(H, 0, R, CHART)


def bisection_roots(dh, lo, hi, n=10_000):
    x = np.linspace(lo, hi, n + 1)
    v = dh(x)
    idx = np.nonzero(np.sign(v[:-1]) != np.sign(v[1:]))[0]
    return [brentq(dh, x[i], x[i + 1], xtol=1e-15) for i in idx]


def test_slope_roots_match_bisection():
    g = g_profile(0.0, 1.0, 1.0)
    s0, s1 = solve_slope_equation(g, 1.5, 1.0)
    oracle = bisection_roots(lambda x: g.d1(x) + 1.5, 1e-9, 1 - 1e-9)
    assert len(oracle) == 2
    assert s0 == pytest.approx(oracle[0], abs=1e-10) and s1 == pytest.approx(oracle[1], abs=1e-10)
    assert s0 < 0.5 < s1
    assert g.d2(s0) < 0 < g.d2(s1)
    assert abs(g.d1(s0) + 1.5) < 1e-10 and abs(g.d1(s1) + 1.5) < 1e-10


def test_slope_roots_symmetric(pair):
    _, _, _, wc = pair
    f0 = wc.h0()
    # h0 is an f-profile: its slope on (-eps1, 0) mirrors h1's on (0, eps1)
    x = np.linspace(1e-3, wc.eps1 - 1e-3, 50)
    assert np.allclose(f0.d1(-x), wc.h1().d1(x), atol=1e-12)
    assert wc.s0 + wc.s1 == pytest.approx(wc.eps1, abs=1e-10)


def test_gk_properties():
    H = TrigHamiltonian([{"amp": 1.0, "kp": [1]}, {"amp": 0.01, "kq": [1], "omega": 1.0}], n=1)
    k = 2
    Gk = build_Gk(H, k)
    q = np.linspace(0, 1, 64)
    for t in (0.0, 0.3):
        X = np.stack([q, np.zeros_like(q)], axis=1)
        assert np.array_equal(Gk.value(t, X), H.value(t, X))
        assert np.abs(Gk.value(t, np.stack([q, np.full_like(q, k + 2)], axis=1))).max() == 0.0
        inner = np.stack([q, np.linspace(-k, k, 64)], axis=1)
        h = 1e-6
        fd = (H.value(t, inner + [h, 0]) - H.value(t, inner - [h, 0])) / (2 * h)
        assert np.abs(Gk.grad(t, inner)[:, 0] - H.grad(t, inner)[:, 0]).max() < 1e-12
        assert np.abs(Gk.grad(t, inner)[:, 0] - fd).max() < 1e-6


def test_homotopy_endpoints_and_plateau(pair):
    _, H0, H1, wc = pair
    p = np.linspace(-0.15, 0.75, 1000)
    X = pts(p)
    assert np.array_equal(monotone_homotopy(H0, H1, wc, 0.0).value(0.0, X), H0.value(0.0, X))
    assert np.array_equal(monotone_homotopy(H0, H1, wc, 1.0).value(0.0, X), H1.value(0.0, X))
    mid = monotone_homotopy(H0, H1, wc, 0.5).value(0.0, X)
    plateau = (p >= wc.eps1 + 1e-9) & (p <= wc.R - 1e-9)
    assert np.allclose(mid[plateau], wc.m0, atol=1e-14)
    assert homotopy_levels(wc, 0.0)[0][0] == pytest.approx(wc.R - wc.s0)
    with pytest.raises(BadParams):
        monotone_homotopy(H0, H1, wc, 1.5)


def test_homotopy_monotone_in_s(pair):
    _, H0, H1, wc = pair
    X = pts(np.linspace(-0.15, 0.75, 1000))
    vals = np.stack([monotone_homotopy(H0, H1, wc, s).value(0.0, X) for s in np.linspace(0, 1, 100)])
    assert (np.diff(vals, axis=0) <= 1e-12).all()


def test_counterexample_annulus():
    C, delta, r = 0.6, 0.03, 1
    H = counterexample_annulus(C, delta, r, 0.15)
    p = np.linspace(-0.15, 0.75, 10_000)
    slopes = H.grad(0.0, pts(p))[:, 1]
    assert slopes.min() > -r
    assert H.certificate["holds"]
    gap = H.value(0.0, pts([0.0]))[0] - H.value(0.0, pts([C / r]))[0]
    assert gap == pytest.approx(C - delta, abs=1e-12)
    with pytest.raises(BadParams):
        counterexample_annulus(C, C, r, 0.15)


def test_counterexample_lagrangian():
    for k in (1, 2, 4):
        H = counterexample_lagrangian(2, (0.5, 0.0), k)
        q = np.random.default_rng(k).uniform(0, 1, (20, 2))
        at0 = H.value(0.0, np.hstack([q, np.zeros((20, 2))]))
        atw = H.value(0.0, np.hstack([q, np.tile([0.5, 0.0], (20, 1))]))
        assert np.ptp(at0) == 0 and np.ptp(atw) == 0
        assert at0[0] - atw[0] == pytest.approx(k, abs=1e-12)
        # q-independent, so the q-gradient vanishes
        X = np.random.default_rng(0).uniform(0, 1, (100, 4))
        assert np.abs(H.grad(0.0, X)[:, :2]).max() == 0.0
