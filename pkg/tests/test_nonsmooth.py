import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stronginv.errors import PointNotInSet, PointOutsideDomain, PreconditionError, SearchExhausted
from stronginv.nonsmooth import (ClosedBall, ClosedBox, FiniteUnion, HalfSpace, ProxWitness, Singleton,
                                 Sublevel, clarke_tangent_contains, complement_of_open_box, distance,
                                 indicator, lsc_function, mvi_search, proximal_normal_generators,
                                 proximal_subgradients, quadratic, smooth_function, validate_normal,
                                 witness_holds)
from stronginv.sets import point

coord = st.floats(-4, 4, allow_nan=False)

# x2 >= 0 written as <(0,-1), x> <= 0
UPPER = HalfSpace([0.0, -1.0], 0.0)


def directions(ws):
    return sorted(tuple(np.round(w.direction / max(np.linalg.norm(w.direction), 1e-300), 9)) for w in ws)


@pytest.mark.parametrize("S,x,expected", [
    (Singleton([0.0]), [3.0], 3.0),
    (ClosedBall([0.0, 0.0], 1.0), [0.2, 0.3], 0.0),
    (UPPER, [5.0, -2.0], 2.0),
    (ClosedBox([-1, -1], [1, 1]), [3.0, 0.0], 2.0),
])
def test_distance_examples(S, x, expected):
    assert distance(S, x) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("S,s,expected", [
    (Singleton([0.0]), [0.0], [(-1.0,), (1.0,)]),
    (ClosedBall([0.0, 0.0], 1.0), [1.0, 0.0], [(1.0, 0.0)]),
    (UPPER, [0.7, 0.0], [(0.0, -1.0)]),
    (ClosedBox([-1, -1], [1, 1]), [1.0, 1.0], [(0.0, 1.0), (1.0, 0.0)]),
    (ClosedBox([-1, -1], [1, 1]), [0.0, 0.0], [(0.0, 0.0)]),
])
def test_normal_generators_golden(S, s, expected):
    ws = proximal_normal_generators(S, s)
    got = directions(ws) if any(np.any(w.direction) for w in ws) else [tuple(ws[0].direction)]
    assert got == sorted(expected)
    for w in ws:
        assert witness_holds(w, S)


def test_ball_normal_matches_projection_oracle():
    S = ClosedBall([0.0, 0.0], 1.0)
    s = np.array([np.cos(0.7), np.sin(0.7)])
    (w,) = proximal_normal_generators(S, s)
    for r in (0.5, 1e-3):
        q = s * (1 + r)
        assert np.allclose(S.project(q), s, atol=1e-12)
        assert np.allclose(w.direction / np.linalg.norm(w.direction), (q - s) / np.linalg.norm(q - s))


def test_numeric_normal_fallback_on_sublevel():
    S = Sublevel(lambda x: float(x @ x) - 1.0, lambda x: 2 * x, dimension=2)
    ws = proximal_normal_generators(S, [0.0, 1.0])
    assert len(ws) >= 1
    for w in ws:
        assert np.allclose(w.direction / np.linalg.norm(w.direction), [0.0, 1.0], atol=1e-3)
        assert witness_holds(w, S)


def test_reentrant_corner_has_only_zero_normal():
    S = FiniteUnion((ClosedBox([-1, -1], [0, 1]), ClosedBox([-1, -1], [1, 0])))
    ws = proximal_normal_generators(S, [0.0, 0.0])
    assert all(np.allclose(w.direction, 0.0) for w in ws)


def test_point_not_in_set():
    with pytest.raises(PointNotInSet):
        proximal_normal_generators(Singleton([0.0]), [1.0])


@given(st.floats(0.01, 100))
def test_normal_cone_is_a_cone(lam):
    S = ClosedBall([0.0, 0.0], 1.0)
    (w,) = proximal_normal_generators(S, [0.0, -1.0])
    scaled = ProxWitness(w.base, lam * w.direction, lam * w.sigma, w.radius)
    assert witness_holds(scaled, S)


def test_invalid_normal_rejected():
    # (1, 1) is not normal to the lower-half boundary point of the ball
    assert validate_normal(ClosedBall([0.0, 0.0], 1.0), np.array([0.0, -1.0]), np.array([1.0, 1.0])) is None


@pytest.mark.parametrize("psi,x,expected", [
    (quadratic(), [3.0], [[6.0]]),
    (lsc_function(lambda x: -abs(x[0]) ** 1.5), [0.0], []),
    (lsc_function(lambda x: abs(x[0]) ** 1.5), [0.0], [[0.0]]),
    (lsc_function(lambda x: abs(x[0])), [0.0], [[-1.0], [0.0], [1.0]]),
    (indicator(Singleton([0.0])), [0.0], [[-1.0], [1.0]]),
    (indicator(ClosedBall([0.0], 1.0)), [0.5], [[0.0]]),
])
def test_subgradients_golden(psi, x, expected):
    ws = proximal_subgradients(psi, x)
    got = sorted(tuple(np.round(w.direction, 4)) for w in ws)
    assert got == sorted(tuple(e) for e in expected)
    for w in ws:
        assert witness_holds(w, psi)


def test_subgradient_domain_error():
    psi = lsc_function(lambda x: np.inf if x[0] > 0 else 0.0)
    with pytest.raises(PointOutsideDomain):
        proximal_subgradients(psi, [1.0])


@given(coord, coord)
def test_smooth_gradient_is_validated(a, b):
    psi = smooth_function(lambda x: float(x[0] ** 2 + np.sin(x[1])),
                          lambda x: np.array([2 * x[0], np.cos(x[1])]), dim=2)
    (w,) = proximal_subgradients(psi, [a, b])
    assert np.allclose(w.direction, [2 * a, np.cos(b)])
    assert witness_holds(w, psi)


@given(coord, coord)
def test_projection_idempotent(a, b):
    for S in (ClosedBall([0.0, 0.0], 1.0), ClosedBox([-1, 0], [1, 2]), UPPER,
              complement_of_open_box([-1, -1], [1, 1])):
        p = S.project([a, b])
        assert np.allclose(S.project(p), p, atol=1e-12)
        assert S.contains(p)


def test_mvi_examples():
    lin = smooth_function(lambda x: float(x[0]), lambda x: np.array([1.0]))
    z, zeta = mvi_search(lin, [0.0], point(1.0), 0.5, 0.1)
    assert zeta[0] == pytest.approx(1.0)
    z, zeta = mvi_search(quadratic(), [0.0], point(1.0), 0.5, 0.1)
    # grid enumeration oracle: the first z along [0, 1] with 2 z > 0.5
    grid = np.linspace(0.0, 1.0, 41)
    assert z[0] == pytest.approx(grid[np.argmax(2 * grid > 0.5)])
    assert zeta[0] * 1.0 > 0.5
    with pytest.raises(PreconditionError):
        mvi_search(quadratic(), [0.0], point(1.0), 2.0, 0.1)


def test_mvi_exhausted_on_coarse_grid():
    # steep ramp on (0.45, 0.55) is the only place with a large enough slope
    ramp = lsc_function(lambda x: float(np.clip(20 * (x[0] - 0.45), 0.0, 2.0)))
    with pytest.raises(SearchExhausted):
        mvi_search(ramp, [0.0], point(1.0), 0.5, 0.01, grid=2)
    z, zeta = mvi_search(ramp, [0.0], point(1.0), 0.5, 0.01, grid=3)
    assert 0.45 <= z[0] <= 0.55 and zeta[0] > 0.5


@pytest.mark.parametrize("S,x,v,expected", [
    (Singleton([0.0]), [0.0], [0.0], True),
    (Singleton([0.0]), [0.0], [1.0], False),
    (UPPER, [0.0, 0.0], [1.0, 0.0], True),
    (UPPER, [0.0, 0.0], [0.0, -1.0], False),
    (ClosedBall([0.0, 0.0], 1.0), [1.0, 0.0], [0.0, 1.0], True),
])
def test_clarke_tangent(S, x, v, expected):
    assert clarke_tangent_contains(S, x, v) is expected
