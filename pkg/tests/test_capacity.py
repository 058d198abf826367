import dataclasses
import json
import math

import numpy as np
import pytest

from hamcap.capacity import (
    CapacityEstimate,
    annulus_family,
    bps_capacity,
    cp_comparison,
    estimate_capacity,
    lagrangian_family,
    rotation_vector,
    write_report,
)
from hamcap.dynamics import flow
from hamcap.errors import BadParams, BracketInvalid
from hamcap.geometry import Chart, HomotopyClass
from hamcap.orbits import search_orbits
from hamcap.profiles import ConstantHamiltonian, ProfileHamiltonian, counterexample_lagrangian, f_profile


@pytest.fixture(scope="module")
def fam():
    return annulus_family(1, 0.6, grid=32)


@pytest.fixture(scope="module")
def estimate(fam):
    return estimate_capacity(fam, (0.25, 1.0), tol=0.05)


def test_annulus_estimate_brackets_r_times_area(estimate):
    assert estimate.contains(0.6)
    assert estimate.width <= 0.05
    assert estimate.witnesses
    assert all(o.cls.winding == (-1,) for o in estimate.witnesses)
    # every "no orbit" verdict below r * Area carries the analytic certificate
    assert estimate.certificates and all(c["holds"] for c in estimate.certificates)


def test_bracket_errors(fam):
    with pytest.raises(BracketInvalid):
        estimate_capacity(fam, (1.0, 0.5))
    with pytest.raises(BracketInvalid):
        estimate_capacity(fam, (0.8, 1.0))
    with pytest.raises(BracketInvalid):
        estimate_capacity(fam, (0.2, 0.4))


def test_degenerate_bracket(fam):
    est = estimate_capacity(fam, (0.8, 0.8))
    assert est.width == 0.0 and est.witnesses


def test_bps_variant(fam):
    est = bps_capacity(fam, (0.25, 1.0), tol=0.05)
    assert est.contains(0.6)
    wider = bps_capacity(annulus_family(1, 0.6, grid=32, plateau=0.1), (0.25, 1.0), tol=0.05)
    assert wider.upper <= est.upper + 0.05
    with pytest.raises(BadParams):
        bps_capacity(dataclasses.replace(fam, alpha=HomotopyClass((0,))), (0.25, 1.0))


def test_rotation_vector_of_witness_orbit(estimate):
    for o in estimate.witnesses:
        rho = rotation_vector(None, o)
        assert rho.components[0] == pytest.approx(-1.0, abs=1e-9)
        assert rho.labels == ("dq1", "dp1")


def test_rotation_vector_of_profile_trajectory():
    H = ProfileHamiltonian(f_profile(-0.4, 0.6, 0.5))
    p0 = 0.17
    tr = flow(H, [0.0, p0], 512, t_end=3.0)
    assert rotation_vector(H, tr).components[0] == pytest.approx(H.profile.d1(p0), abs=1e-12)
    assert rotation_vector(H, tr, T=1.0, birkhoff=True).components[0] == pytest.approx(H.profile.d1(p0), abs=1e-12)


def test_long_time_average_matches_class():
    fam = annulus_family(1, 0.6)
    H = fam.member(0.8)
    s = search_orbits(H, fam.alpha, fam.chart, grid=32)
    o = s.orbits[0]
    tr = flow(H, o.start, 100 * 64, t_end=100.0)
    rho = rotation_vector(H, tr, T=100.0, birkhoff=True)
    assert rho.components[0] == pytest.approx(-1.0, abs=1e-6)


def test_zero_hamiltonian_has_zero_rotation():
    tr = flow(ConstantHamiltonian(0.0), [0.3, 0.2], 32)
    assert np.array_equal(rotation_vector(None, tr).components, np.zeros(2))


def test_cp_comparison_on_annulus(fam, estimate):
    cp = cp_comparison(fam.member, estimate, fam.alpha, fam.chart, samples=[estimate.upper + 0.1], grid=32)
    assert cp["criterion_met"] is True
    assert all(r["equal"] for r in cp["rows"])
    assert {r["c"] for r in cp["rows"]} == {estimate.upper, estimate.upper + 0.1}


def test_cp_comparison_vacuous_without_witness():
    fam = lagrangian_family()
    est = estimate_capacity(fam, (1.0, 4.0), allow_unbounded=True)
    assert math.isinf(est.upper) and not est.witnesses
    cp = cp_comparison(fam.member, est, fam.alpha, fam.chart)
    assert cp["criterion_met"] is None and "vacuous" in cp["note"]


def test_lagrangian_positive_control():
    # a dense p1 seed line finds the beta-direction families the 8^4 grid misses
    H = counterexample_lagrangian(2, (0.5, 0.0), 1)
    p1 = np.linspace(0.0, 1.0, 200, endpoint=False)
    seeds = np.stack([np.zeros(200), np.zeros(200), p1, np.zeros(200)], axis=1)
    chart = Chart.product_torus(2)
    along = search_orbits(H, HomotopyClass((-1, 0, 0, 0)), chart, seeds=seeds)
    assert along.families == 2
    assert sorted(o.start[2] for o in along.orbits) == pytest.approx([0.2899, 0.4601], abs=1e-3)
    assert search_orbits(H, HomotopyClass((0, 1, 0, 0)), chart, seeds=seeds).orbits == []


def test_report(tmp_path, estimate):
    write_report(tmp_path / "c.json", estimate, {"family": "x"})
    data = json.load(open(tmp_path / "c.json"))
    assert data["family"] == "x" and data["lower"] == estimate.lower
    inf = CapacityEstimate(4.0, math.inf, 0.01, [], [], 8)
    assert inf.to_dict()["upper"] is None


def test_ball_hypotheses_and_orbits():
    from hamcap.presets import RunConfig, build_setup
    from hamcap.profiles.constructions import ball_hypotheses

    setup = build_setup(RunConfig.load(preset="ball"))
    hyp = ball_hypotheses(setup.H, 0.3, [-1, 0])
    assert hyp["gap_exceeds_bound"] and hyp["sup_below_bound"]
    s = search_orbits(setup.H, setup.alpha, setup.chart, seeds=setup.seeds)
    assert s.orbits
    for o in s.orbits:
        rho = np.hypot(*(o.start[2:] - np.rint(o.start[2:])))
        slope = setup.H.inner.profile.d1(rho)
        assert slope == pytest.approx(-1.0, abs=1e-9)
        assert rotation_vector(None, o).components[:2] == pytest.approx([-1.0, 0.0], abs=1e-9)
