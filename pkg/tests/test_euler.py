import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stronginv.errors import BoundViolated, NoAdmissibleVelocity, NoConvergence, PreconditionError
from stronginv.euler import (EulerConfig, HullSample, Trajectory, batch_map, build_polygonal_arc,
                             default_schedule, hull_sample, integrate_feedback, partition,
                             refine_many, refine_trajectory, select_velocity, solve_feedback,
                             step_size)
from stronginv.mollifier import Feedback, mollified_feedback
from stronginv.nonsmooth import quadratic, smooth_function
from stronginv.scenarios import intro_realization

NEG_ONE = smooth_function(lambda x: -1.0, lambda x: np.zeros(len(x)), name="-1")
ZERO_FIELD = Feedback(lambda t, x: np.zeros(1), 1.0, 1, anchor=[0.3])


def intro_setup(x0=0.5):
    f = intro_realization([x0])
    return f, EulerConfig.from_feedback(f)


def test_default_schedule():
    s = default_schedule()
    assert s[0] == (10, 0.1) and len(s) == 6
    assert s[-1] == (320, 0.1 / 32)


def test_step_size_examples():
    cfg = EulerConfig(gamma=1.0, anchor=[0.0], c1=1.0, c2=0.0, horizon=1.0)
    assert cfg.velocity_bound == 2.0
    cfg = EulerConfig(gamma=1.0, anchor=[0.0], c1=2.0, c2=0.0, horizon=1.0)
    assert cfg.velocity_bound == 3.0
    assert step_size(10, cfg) == pytest.approx(1.0 / 120.0, rel=1e-15)
    assert step_size(20, cfg) == pytest.approx(0.5 * step_size(10, cfg), rel=1e-15)
    with pytest.raises(PreconditionError):
        step_size(10, EulerConfig(gamma=0.0, anchor=[0.0], c1=1.0, c2=0.0, horizon=1.0))
    with pytest.raises(PreconditionError):
        step_size(0, cfg)


@given(st.floats(0.01, 10), st.floats(0, 5), st.floats(0, 5), st.floats(-3, 3), st.integers(1, 500))
def test_step_respects_growth_bound(gamma, c1, c2, a, k):
    cfg = EulerConfig(gamma=gamma, anchor=[a], c1=c1, c2=c2, horizon=1.0)
    g_max = cfg.growth_bound([abs(a) + gamma / 2], k)
    if gamma / (4 * k * cfg.velocity_bound) * 2 * k * g_max > 1 + 1e-9:
        with pytest.raises(BoundViolated):
            step_size(k, cfg)
    else:
        assert step_size(k, cfg) * 2 * k * g_max <= 1 + 1e-9


def test_step_size_guard():
    assert step_size(1, EulerConfig(gamma=1.0, anchor=[0.0], c1=0.0, c2=1.0, horizon=1.0)) == 0.1
    with pytest.raises(BoundViolated):
        step_size(1, EulerConfig(gamma=10.0, anchor=[0.0], c1=0.0, c2=0.0, horizon=1.0))


def test_partition_last_interval():
    f, cfg = intro_setup()
    times, h = partition(10, cfg)
    assert times[-1] == cfg.t_tilde
    assert times[-1] - times[-2] <= h * (1 + 1e-12)
    assert len(times) - 1 == math.ceil(cfg.t_tilde / h - 1e-12)


def test_hull_sample_examples():
    c = Feedback(lambda t, x: np.array([0.7]), 1.0, 1)
    G = hull_sample(c, 0.2, [0.1], 5)
    assert np.all(G.velocities == 0.7)
    G = hull_sample(c, 0.2, [0.1], 5, budget=1)
    assert G.points.shape == (1, 1) and G.reference[0] == 0.7
    with pytest.raises(PreconditionError):
        hull_sample(c, 0.2, [0.1], 5, budget=0)


@pytest.mark.parametrize("k", [2, 5, 20])
def test_hull_diameter_lipschitz(k):
    L = 3.0
    f = Feedback(lambda t, x: np.array([L * np.sin(x[0])]), 1.0, 1)
    G = hull_sample(f, 0.0, [0.4], k)
    dense = L * np.sin(np.linspace(0.4 - 1 / k, 0.4 + 1 / k, 2001))
    assert np.ptp(G.velocities) <= np.ptp(dense) + 1e-12
    assert np.ptp(G.velocities) <= 2 * L / k + 1e-12
    assert np.ptp(G.velocities) >= 0.9 * np.ptp(dense)


def test_select_velocity_examples():
    psi = quadratic()
    G = HullSample(np.array([0.5]), 0.1, 0.0, np.array([[0.5], [0.6]]), np.array([[-1.0], [1.0]]))
    h, k = 0.01, 10
    v = select_velocity(psi, [0.5], h, G, k)
    assert v[0] == -1.0
    assert (0.5 - h) ** 2 <= 0.25 + h / k
    Z = HullSample(np.array([0.5]), 0.1, 0.0, np.array([[0.5]]), np.array([[0.0]]))
    assert select_velocity(psi, [0.5], h, Z, k)[0] == 0.0
    lin = smooth_function(lambda x: float(x[0]), lambda x: np.array([1.0]))
    one = HullSample(np.array([0.0]), 0.5, 0.0, np.array([[0.0]]), np.array([[1.0]]))
    with pytest.raises(NoAdmissibleVelocity):
        select_velocity(lin, [0.0], 0.1, one, 2)


def test_zero_field_gives_constant_arc():
    cfg = EulerConfig.from_feedback(ZERO_FIELD)
    arc = build_polygonal_arc(ZERO_FIELD, 0.1, 10, quadratic(), [0.3], cfg)
    assert np.all(arc.points == 0.3) and arc.classification == "horizon-reached"
    ref = refine_trajectory(ZERO_FIELD, quadratic(), [0.3], cfg, default_schedule())
    assert ref.meta["gaps"] == [0.0]


def test_anchor_required():
    f, cfg = intro_setup()
    with pytest.raises(PreconditionError):
        build_polygonal_arc(f, 0.1, 10, quadratic(), [0.4], cfg)


@pytest.mark.parametrize("k", [10, 20, 40])
def test_intro_arc_bounds(k):
    f, cfg = intro_setup()
    arc = build_polygonal_arc(f, 0.1, k, quadratic(), [0.5], cfg)
    assert np.all(np.diff(arc.points[:, 0]) < 0)
    assert arc.psi_values.max() <= 0.25 + (cfg.t_tilde + cfg.gamma) / k
    # confinement to D and the velocity bound delta(D)
    assert np.all(np.abs(arc.points[:, 0] - 0.5) <= cfg.gamma / 2)
    assert np.all(np.abs(arc.velocities) <= cfg.velocity_bound + 1e-12)


def test_compound_growth_oracle():
    f = Feedback(lambda t, x: x, 1.0, 1, c1=0.0, c2=1.0, gamma=2.0, anchor=[1.0])
    cfg = EulerConfig.from_feedback(f)
    arc = build_polygonal_arc(f, None, 10, NEG_ONE, [1.0], cfg)
    steps = np.diff(arc.times)
    assert arc.terminal[0] == pytest.approx(np.prod(1 + steps), rel=1e-13)
    for h in (0.1, 0.01, 0.001):
        ref = integrate_feedback(f, [1.0], 1.0, h)
        assert ref.terminal[0] == pytest.approx((1 + h) ** round(1 / h), rel=1e-12)
        assert abs(ref.terminal[0] - math.e) <= 1.5 * h * math.e


def test_first_order_gaps():
    f = Feedback(lambda t, x: -x, 1.0, 1, c1=0.0, c2=1.0, gamma=1.0, anchor=[0.5])
    cfg = EulerConfig.from_feedback(f)
    psi = smooth_function(lambda x: float(x @ x) - 1.0, lambda x: 2 * x)
    arcs = [build_polygonal_arc(f, None, k, psi, [0.5], cfg) for k in (20, 40, 80, 160)]
    gaps = [a.sup_distance(b) for a, b in zip(arcs, arcs[1:])]
    ratios = np.array(gaps[:-1]) / np.array(gaps[1:])
    assert np.all((ratios > 1.9) & (ratios < 2.1))
    # selection from the 1/k-hull drifts by at most 1/k per unit time
    exact = 0.5 * np.exp(-arcs[-1].times)
    assert np.max(np.abs(arcs[-1].points[:, 0] - exact)) <= cfg.t_tilde / 160 + 1e-5


def test_refine_intro():
    f, cfg = intro_setup()
    arc = refine_trajectory(f, quadratic(), [0.5], cfg)
    phi = np.maximum(0.5 - arc.times, 0.0)
    assert np.max(np.abs(arc.points[:, 0] - phi)) <= 1e-2
    assert arc.meta["gaps"][-1] < 1e-3


def test_refine_errors():
    f, cfg = intro_setup()
    with pytest.raises(PreconditionError):
        refine_trajectory(f, quadratic(), [0.5], cfg, [(10, 0.1)])
    with pytest.raises(PreconditionError):
        refine_trajectory(f, quadratic(), [0.5], cfg, [(20, 0.1), (10, 0.05)])
    with pytest.raises(NoConvergence) as info:
        refine_trajectory(f, quadratic(), [0.5], cfg, [(10, 0.1), (20, 0.05)], tol=1e-9)
    assert info.value.gap > 1e-9 and info.value.arc.meta["k"] == 20


def test_integrate_matches_refined_intro():
    f, cfg = intro_setup()
    ref = refine_trajectory(f, quadratic(), [0.5], cfg)
    plain = integrate_feedback(f, [0.5], cfg.t_tilde, 1e-4)
    assert ref.sup_distance(plain) <= 1e-2
    with pytest.raises(PreconditionError):
        integrate_feedback(f, [0.5], 1.0, 0.0)


def test_solve_feedback_restarts_at_breakpoints():
    f = intro_realization([0.5])
    arc = solve_feedback(f, [0.5], 1.0, num=101)
    assert np.allclose(arc.points[:, 0], np.maximum(0.5 - arc.times, 0.0), atol=1e-10)


def test_batch_order_independent():
    f, cfg = intro_setup()
    one = refine_many([(f, quadratic(), [0.5], cfg)] * 3, jobs=1)
    many = refine_many([(f, quadratic(), [0.5], cfg)] * 3, jobs=3)
    for a, b in zip(one, many):
        assert np.array_equal(a.points, b.points)
    assert batch_map(lambda v: v * v, range(5), jobs=2) == [0, 1, 4, 9, 16]


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.0], [[0.0], [1.0]], [[1.0]])
    with pytest.raises(ValueError):
        Trajectory([0.0, 1.0], [[0.0], [1.0]], [[1.0]], classification="bogus")
    t = Trajectory([0.0, 1.0], [[0.0], [2.0]], [[2.0]])
    assert t.at(0.25)[0] == 0.5 and t.lipschitz_constant() == 2.0
