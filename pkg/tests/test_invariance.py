import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stronginv.errors import RealizationUnavailable
from stronginv.euler import Trajectory, integrate_feedback
from stronginv.invariance import (BoundaryRegion, Certificate, GridRegion, PointsRegion,
                                  SublevelRegion, certify_hamiltonian, certify_normal_cone,
                                  certify_remark_variant, classify_escape,
                                  empirical_strong_invariance, equivalence_suite)
from stronginv.mollifier import Feedback
from stronginv.multifunction import Multifunction, constant, hamiltonian
from stronginv.nonsmooth import (HalfSpace, Singleton, complement_of_open_box, lsc_function,
                                 quadratic)
from stronginv.scenarios import get_scenario, intro_realization
from stronginv.sets import point

INTRO = get_scenario("intro")
UNIT = constant([1.0])


def test_escape_classes():
    const = Trajectory(np.linspace(0, 1, 11), np.zeros((11, 1)), np.zeros((10, 1)))
    assert classify_escape(const).classification == "E1"
    unit = Feedback(lambda t, x: np.array([1.0]), 2.0, 1)
    arc = integrate_feedback(unit, [0.0], 2.0, 1e-3)
    rep = classify_escape(arc, complement_of_open_box([-1.0], [1.0]), 2.0)
    assert rep.classification == "E3" and rep.escape_time == pytest.approx(1.0, abs=1e-9)
    arc = integrate_feedback(unit, [0.0], 1.0, 1e-2)
    rep = classify_escape(arc, complement_of_open_box([-10.0], [10.0]), 1.0)
    assert rep.classification == "horizon-reached"
    big = Trajectory([0.0, 1.0], [[0.0], [1e7]], [[1e7]])
    assert classify_escape(big).classification == "E2"


def test_hamiltonian_certificates():
    cert = certify_hamiltonian(INTRO.F, quadratic(), GridRegion((-0.5,), (0.5,), 21))
    assert cert.verdict == "pass"
    for w in cert.witnesses:
        assert w.margin == pytest.approx(-2 * abs(w.x[0]), abs=1e-12)
    cert = certify_hamiltonian(UNIT, quadratic(), GridRegion((-0.5,), (0.5,), 11, open_=False))
    assert cert.verdict == "fail"
    (w,) = [w for w in cert.witnesses if abs(w.x[0] - 0.1) < 1e-12]
    assert w.direction[0] == pytest.approx(0.2) and w.margin == pytest.approx(0.2)


def test_vacuous_pass():
    psi = lsc_function(lambda x: -abs(x[0]) ** 1.5)
    cert = certify_hamiltonian(UNIT, psi, PointsRegion([[0.0]]))
    assert cert.verdict == "vacuous-pass" and cert.witnesses == ()


def test_normal_cone_examples():
    cert = certify_normal_cone(INTRO.F, Singleton([0.0]))
    assert cert.verdict == "fail" and cert.max_margin == 1.0
    contraction = get_scenario("contraction")
    cert = certify_normal_cone(contraction.F, contraction.S)
    assert cert.verdict == "pass"
    assert sorted(w.margin for w in cert.witnesses) == [-1.0, -1.0]
    F = constant([-1.0, 0.0])
    cert = certify_normal_cone(F, HalfSpace([1.0, 0.0], 0.0))
    assert cert.verdict == "pass" and cert.max_margin == pytest.approx(-1.0)


def test_remark_variant_examples():
    f = intro_realization([0.5])
    region = GridRegion((0.3,), (0.7,), 9)
    assert certify_remark_variant([f], quadratic(), region).verdict == "pass"
    zero = Feedback(lambda t, x: np.zeros(1), 1.0, 1, anchor=[0.5])
    assert certify_remark_variant([zero], quadratic(), region).verdict == "pass"
    up = Feedback(lambda t, x: np.array([1.0]), 1.0, 1, anchor=[0.5])
    assert certify_remark_variant([up], quadratic(), region).verdict == "fail"


def test_witness_margins_reproducible():
    cert = certify_hamiltonian(UNIT, quadratic(), GridRegion((-0.5,), (0.5,), 21))
    for w in cert.witnesses:
        assert abs(hamiltonian(UNIT, w.x, w.direction) - w.margin) <= 1e-12


@given(st.floats(1e-9, 1.0))
def test_certificates_monotone_in_tolerance(extra):
    region = GridRegion((-0.5,), (0.5,), 11)
    for F in (INTRO.F, Multifunction(1, lambda x: point(0.05))):
        cert = certify_hamiltonian(F, quadratic(), region, tol=1e-9)
        looser = certify_hamiltonian(F, quadratic(), region, tol=1e-9 + extra)
        if cert.verdict == "pass":
            assert looser.verdict == "pass"


def test_certificate_json_roundtrip_and_determinism():
    a = certify_hamiltonian(UNIT, quadratic(), SublevelRegion(quadratic(), (-0.5,), (0.5,)))
    b = certify_hamiltonian(UNIT, quadratic(), SublevelRegion(quadratic(), (-0.5,), (0.5,)))
    assert a.to_json(sort_keys=True) == b.to_json(sort_keys=True)
    d = json.loads(a.to_json())
    assert {"condition", "verdict", "witnesses", "grid", "tol"} <= set(d)
    assert Certificate.from_dict(d).to_dict() == a.to_dict()


def test_parallel_certificate_matches_serial():
    region = GridRegion((-0.5,), (0.5,), 21)
    a = certify_hamiltonian(INTRO.F, quadratic(), region, jobs=1)
    b = certify_hamiltonian(INTRO.F, quadratic(), region, jobs=4)
    assert a.to_dict() == b.to_dict()


def test_empirical_examples():
    rep = empirical_strong_invariance(INTRO.S, INTRO.provider(), [(0.0,)], 1.0)
    assert rep.verdict == "pass"
    cx = get_scenario("counterexample31")
    rep = empirical_strong_invariance(cx.S, cx.provider(), [(0.0,)], 1.0, tol=1e-6)
    assert rep.verdict == "fail"
    assert rep.violations[0].time == pytest.approx(1e-6, rel=1e-9)
    ex = get_scenario("example24")
    assert certify_hamiltonian(ex.F, ex.psi, ex.region).verdict == "pass"
    rep = empirical_strong_invariance(ex.S, ex.provider(), [(0.0,), (0.4,)], ex.horizon)
    assert rep.verdict == "pass"


def test_realization_unavailable():
    with pytest.raises(RealizationUnavailable):
        empirical_strong_invariance(Singleton([0.0]), lambda x0: [], [(0.0,)], 1.0)


@pytest.mark.parametrize("name,label", [("contraction", "agreement"), ("expansion", "agreement"),
                                        ("intro", "expected-divergence")])
def test_equivalence_labels(name, label):
    sc = get_scenario(name)
    rep = equivalence_suite(sc.F, sc.S, sc.provider(), sc.starts, sc.horizon, usharp=sc.usharp)
    assert rep.label == label
    if name == "expansion":
        assert rep.normal_cone.verdict == "fail" and rep.empirical.verdict == "fail"
        assert any(abs(w.x[0]) == 1.0 and w.margin > 0 for w in rep.normal_cone.witnesses)


def test_equivalence_flags_unexpected_divergence():
    # declared (U#) but the provider ignores F, so the verdicts disagree
    sc = get_scenario("contraction")
    drift = lambda x0: [Feedback(lambda t, x: np.array([1.0]), 1.0, 1, anchor=x0)]
    rep = equivalence_suite(sc.F, sc.S, drift, [(1.0,)], 1.0, usharp=True)
    assert rep.label == "unexpected-divergence"


def test_boundary_region_spec():
    r = BoundaryRegion(get_scenario("contraction").S)
    assert r.spec()["set"] == "ClosedBox"
    assert sorted(p[0] for p in r.points()) == [-1.0, 1.0]
