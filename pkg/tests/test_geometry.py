import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hamcap.errors import NonContinuousLoop, OutOfChart
from hamcap.geometry import (
    Chart,
    HomotopyClass,
    LiftedLoop,
    PhasePoint,
    ReferenceLoop,
    annulus_area,
    lift,
    project,
    winding_class,
)

T = np.linspace(0.0, 1.0, 401)
ANNULUS = Chart.annulus(1.0)


def loop(q, p):
    return LiftedLoop(ANNULUS, np.stack([q, np.broadcast_to(p, q.shape)], axis=1))


def test_constant_loop_is_contractible():
    assert winding_class(loop(np.full_like(T, 0.3), 0.1)).winding == (0,)


def test_wrapped_samples_are_lifted():
    wrapped = np.stack([np.mod(-2 * T, 1.0), np.full_like(T, 0.5)], axis=1)
    assert winding_class(LiftedLoop.from_wrapped(ANNULUS, wrapped)).winding == (-2,)


def test_wiggly_loop_winds_once():
    assert winding_class(loop(T + 0.1 * np.sin(2 * np.pi * T), 0.0)).winding == (1,)


def test_jump_raises():
    q = T.copy()
    q[200:] += 3.0
    with pytest.raises(NonContinuousLoop):
        winding_class(loop(q, 0.0))


def test_open_path_raises():
    with pytest.raises(NonContinuousLoop):
        winding_class(loop(0.5 * T, 0.0))


def test_torus_class_has_two_entries():
    s = np.stack([-T, 2 * T], axis=1)
    assert winding_class(LiftedLoop(Chart.torus2(), s)).winding == (-1, 2)


@given(
    w=st.integers(-4, 4),
    a=st.floats(-0.9, 0.9),
    amp=st.floats(0.0, 0.24),
    phase=st.floats(0.0, 1.0),
)
def test_winding_invariant_under_reparametrization_and_wiggles(w, a, amp, phase):
    s = T + a * np.sin(2 * np.pi * T) / (2 * np.pi)
    q = w * s + amp * np.sin(2 * np.pi * (3 * s + phase))
    assert winding_class(loop(q, 0.2)).winding == (w,)


def test_loop_class_and_reference_loop():
    cls = HomotopyClass.loop_class(ANNULUS, 3)
    assert cls.winding == (-3,)
    z = ReferenceLoop(ANNULUS, 3)
    assert winding_class(LiftedLoop(ANNULUS, z.samples)).winding == (-3,)
    assert z.p_dq() == 0.0
    assert not cls.is_trivial and HomotopyClass((0,)).is_trivial


def test_annulus_area_examples():
    assert annulus_area(ANNULUS, 0.0, 0.6) == pytest.approx(0.6, abs=1e-15)
    assert annulus_area(ANNULUS, 0.2, 0.2) == 0.0
    assert annulus_area(Chart.torus2(), 0.0, 0.3) == pytest.approx(0.3)
    assert annulus_area(Chart.torus2(), 0.7, 0.2) == pytest.approx(0.5)


def test_annulus_area_additive_and_bounded():
    assert annulus_area(ANNULUS, 0.1, 0.4) + annulus_area(ANNULUS, 0.4, 0.9) == pytest.approx(
        annulus_area(ANNULUS, 0.1, 0.9)
    )
    with pytest.raises(OutOfChart):
        annulus_area(ANNULUS, 0.0, 1.5)


def test_project_example():
    pt = project(PhasePoint(2.3, 1.4), Chart.torus2())
    assert pt.q_lift[0] == pytest.approx(0.3)
    assert pt.p[0] == pytest.approx(0.4)
    # p is not a circle coordinate on the annulus
    assert project(PhasePoint(2.3, 0.4), ANNULUS).p[0] == 0.4


def test_project_lift_round_trip(rng):
    torus = Chart.torus2()
    for x in rng.uniform(-5, 5, size=(10_000, 2)):
        pt = PhasePoint(x[0], x[1])
        back = lift(project(pt, torus), pt, torus)
        assert np.allclose(back.state, pt.state, atol=1e-12)


def test_chart_round_trip():
    for chart in (ANNULUS, Chart.annulus(0.9, -0.15), Chart.torus2(), Chart.strip(), Chart.strip(3.0), Chart.product_torus(2)):
        assert Chart.from_dict(chart.to_dict()) == chart
