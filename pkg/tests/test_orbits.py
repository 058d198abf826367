import csv
import dataclasses
import json

import numpy as np
import pytest

from hamcap.dynamics import Monodromy, Trajectory
from hamcap.errors import ClassMismatch, EscapesWindow, NotInHalfStrip
from hamcap.geometry import Chart, HomotopyClass, ReferenceLoop
from hamcap.orbits import (
    PeriodicOrbit,
    action,
    build_orbit,
    dedupe,
    export_csv,
    export_json,
    find_orbits,
    homotopy_sweep,
    osc_check,
    project_orbit,
    q_gradient_bound,
    rescale_check,
    search_orbits,
    translate_orbit,
    verify_window,
)
from hamcap.presets import RunConfig, build_setup, torus_hamiltonian
from hamcap.profiles import (
    ConstantHamiltonian,
    ProfileHamiltonian,
    TrigHamiltonian,
    build_Gk,
    build_squeezing_pair,
    counterexample_annulus,
    g_profile,
)

CHART = Chart.annulus(0.9, -0.15)
ALPHA = HomotopyClass((-1,))
TORUS = Chart.torus2()
COS_P = TrigHamiltonian([{"amp": 1.0, "kp": [1]}], n=1)


@pytest.fixture(scope="module")
def pair():
    H = ProfileHamiltonian(g_profile(0.0, 1.0, 0.2))
    return build_squeezing_pair(H, 1, 0.6, CHART)


@pytest.fixture(scope="module")
def h1_search(pair):
    _, H1, _ = pair
    return search_orbits(H1, ALPHA, CHART, grid=64)


def synthetic(p_of_t, q_of_t, cls=ALPHA, steps=256):
    t = np.linspace(0.0, 1.0, steps + 1)
    states = np.stack([q_of_t(t), p_of_t(t)], axis=1)
    traj = Trajectory(t, states, 1.0 / steps, 1)
    return PeriodicOrbit(traj, cls, 0.0, Monodromy(np.eye(2)), False, steps=steps)


def test_counterexample_has_no_orbits():
    H = counterexample_annulus(0.6, 0.03, 1, 0.15)
    assert find_orbits(H, ALPHA, CHART, grid=64) == []


def test_h1_has_two_families_with_closed_form_actions(pair, h1_search):
    _, _, wc = pair
    assert h1_search.families == 2 and h1_search.isolated == 0
    closed = wc.closed_form_actions()
    levels = sorted(o.p_level for o in h1_search.orbits)
    assert levels == pytest.approx([wc.s0, wc.s1], abs=1e-9)
    for o in h1_search.orbits:
        key = "H1_x0" if abs(o.p_level - wc.s0) < 1e-6 else "H1_x1"
        assert o.action == pytest.approx(closed[key], abs=1e-8)
        assert o.family_size > 1


def test_windows(pair, h1_search):
    _, _, wc = pair
    rep = verify_window(h1_search.orbits, wc, "H1")
    assert rep.passed and not rep.violations
    bad = dataclasses.replace(wc, b=wc.c - 1e-3)
    rep = verify_window(h1_search.orbits, bad, "H1")
    assert not rep.passed
    assert [v["label"] for v in rep.violations] == ["H1_x0"]


def test_seeds_on_a_circle_form_one_family(pair):
    _, H1, wc = pair
    seeds = np.stack([np.arange(64) / 64, np.full(64, wc.s0)], axis=1)
    s = search_orbits(H1, ALPHA, CHART, seeds=seeds)
    assert s.families == 1 and s.isolated == 0
    assert s.orbits[0].family_size == 64


def test_distant_isolated_points_stay_apart():
    H = TrigHamiltonian([{"amp": 0.1, "kq": [1]}, {"amp": 0.1, "kp": [1]}], n=1)
    orbits = [build_orbit(H, x, HomotopyClass((0, 0)), TORUS, 256) for x in ([0.0, 0.0], [0.5, 0.0])]
    assert all(o.nondegenerate for o in orbits)
    isolated, families = dedupe(orbits, TORUS, radius=1e-3, autonomous=False)
    assert len(isolated) == 2 and families == []


def test_threads_do_not_change_results(pair, h1_search):
    _, H1, _ = pair
    s2 = search_orbits(H1, ALPHA, CHART, grid=64, threads=2)
    assert [tuple(o.start) for o in s2.orbits] == [tuple(o.start) for o in h1_search.orbits]


def test_action_of_constant_hamiltonian():
    orb = synthetic(lambda t: 0.0 * t, lambda t: -t)
    z = ReferenceLoop(CHART, 1)
    assert action(ConstantHamiltonian(0.7), orb, z) == pytest.approx(0.7, abs=1e-15)
    with pytest.raises(ClassMismatch):
        action(ConstantHamiltonian(0.7), orb, ReferenceLoop(CHART, 2))


FORCED = TrigHamiltonian(
    [{"amp": 1.0, "kp": [1]}, {"amp": 0.05, "kq": [1], "omega": 1.0}, {"amp": 0.03, "kq": [2], "kp": [1], "omega": 1.0, "phase": 0.3}],
    n=1,
)
FORCED_SEED = [0.6182981973770182, 0.5026052493210217]


@pytest.mark.slow
def test_action_converges_at_second_order():
    alpha = HomotopyClass((-1, 0))
    acts = {}
    for steps in (512, 2048, 4096, 8192):
        found = search_orbits(FORCED, alpha, TORUS, seeds=[FORCED_SEED], steps=steps, coarse_steps=steps, stabilize=False, tol=1e-12).orbits
        assert len(found) == 1
        acts[steps] = found[0].action
    ref = acts[8192] + (acts[8192] - acts[4096]) / 3
    err = {k: abs(v - ref) for k, v in acts.items()}
    assert err[512] / err[2048] == pytest.approx(16, rel=0.2)
    assert err[512] / err[4096] == pytest.approx(64, rel=0.2)


def test_perturbed_torus_has_four_isolated_orbits():
    setup = build_setup(RunConfig.load(preset="torus"))
    s = search_orbits(setup.H, setup.alpha, setup.chart, grid=setup.grid)
    assert s.isolated == 4 and s.families == 0
    assert len(s.orbits) % 2 == 0
    assert all(o.residual < 1e-9 for o in s.orbits)


def test_homotopy_sweep_is_nonincreasing(pair):
    H0, H1, wc = pair
    out = homotopy_sweep(H0, H1, wc, CHART, s_values=[0.0, 0.3, 0.6, 1.0], grid=64)
    assert out["nonincreasing"]
    for row in out["rows"]:
        assert row["action"] == pytest.approx(row["predicted"], abs=1e-8)


def test_translate_identity_and_errors():
    orb = synthetic(lambda t: 3.5 + 0.0 * t, lambda t: -t)
    G = build_Gk(COS_P, 3)
    assert translate_orbit(G, orb, 0, 1, 0.0) is orb
    with pytest.raises(NotInHalfStrip):
        translate_orbit(G, orb, 2, -1, 0.0)
    with pytest.raises(ValueError):
        translate_orbit(G, orb, 2, 0, 0.0)


@pytest.mark.parametrize("r", [1, 2])
def test_translate_shifts_action_by_rl(r):
    k, l = 3, 2
    orb = synthetic(lambda t: k + 0.5 + 0.0 * t, lambda t: -r * t, cls=HomotopyClass((-r,)))
    Gk, Gkl = build_Gk(COS_P, k), build_Gk(COS_P, k + l)
    orb.action = action(Gk, orb)
    moved = translate_orbit(Gkl, orb, l, 1, 0.0)
    assert moved.action - orb.action == pytest.approx(r * l, abs=1e-12)


def test_translate_real_orbit_closes():
    p0 = 0.5 - np.arcsin(1 / (2 * np.pi)) / (2 * np.pi)
    G1, G3 = build_Gk(COS_P, 1), build_Gk(COS_P, 3)
    orb = build_orbit(G1, [0.0, p0], ALPHA, Chart.strip(), 1024)
    assert orb.residual < 1e-9
    moved = translate_orbit(G3, orb, 2, 1, 0.4)
    assert moved.residual < 1e-9 + orb.residual
    assert moved.action - orb.action == pytest.approx(2.0, abs=1e-9)


def test_osc_check():
    S = q_gradient_bound(COS_P)
    assert S == 0.0
    flat = build_orbit(build_Gk(COS_P, 3), [0.2, np.arcsin(1 / (2 * np.pi)) / (2 * np.pi)], ALPHA, Chart.strip(), 512)
    assert osc_check(flat, S)
    wobble = synthetic(lambda t: 0.3 * np.sin(2 * np.pi * t), lambda t: -t)
    assert not osc_check(wobble, 0.4)
    assert osc_check(wobble, 0.6)


def test_project_orbit():
    H = torus_hamiltonian()
    p0 = 0.5 - np.arcsin(1 / (2 * np.pi)) / (2 * np.pi)
    G3 = build_Gk(H, 3)
    found = search_orbits(G3, ALPHA, Chart.strip(), seeds=[[0.0, p0], [0.5, p0]], stabilize=False).orbits
    assert found
    for o in found:
        assert max(abs(v) for v in o.p_range) < 0.7
        assert project_orbit(o, H, 3).residual < 1e-9
    with pytest.raises(EscapesWindow):
        project_orbit(synthetic(lambda t: 3.5 + 0.0 * t, lambda t: -t), H, 3)


def test_rescaled_orbits_close_under_h():
    H = ProfileHamiltonian(g_profile(0.0, 1.0, 0.2))
    res = rescale_check(H, 2, ALPHA, CHART, grid=16)
    assert res and max(res) < 1e-9


def test_export(tmp_path, h1_search):
    export_json(h1_search.orbits, tmp_path / "o.json", {"note": "x"})
    data = json.load(open(tmp_path / "o.json"))
    assert data["note"] == "x" and len(data["orbits"]) == 2
    assert data["orbits"][0]["class"] == [-1]
    export_csv(h1_search.orbits, tmp_path / "o.csv")
    rows = list(csv.reader(open(tmp_path / "o.csv")))
    assert len(rows) == 3 and rows[0][0] == "index"
