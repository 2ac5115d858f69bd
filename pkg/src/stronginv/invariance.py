"""Sampling-relative certificates for strong invariance.

All certificates carry the grid they were computed on: a "pass" means no
violation was found on that grid at that tolerance, nothing more.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .euler import batch_map, integrate_feedback
from .errors import RealizationUnavailable
from .multifunction import eval_set, hamiltonian
from .nonsmooth import ClosedBall, proximal_normal_generators, proximal_subgradients
from .sampling import box_grid
from .sets import as_vector

SCHEMA_VERSION = 1
DEFAULT_TOL = 1e-9
BLOWUP_NORM = 1e6
NEIGHBORHOOD_MARGIN = 0.1
VERDICTS = ("pass", "fail", "vacuous-pass")
CONDITIONS = ("hamiltonian-subgradient", "normal-cone", "remark-variant")


# --------------------------------------------------------------------------
# regions


@dataclass(frozen=True, eq=False)
class GridRegion:
    """Tensor grid over a box; `open_` drops the box faces."""

    lower: tuple
    upper: tuple
    num: int = 21
    open_: bool = True

    def points(self):
        return box_grid(self.lower, self.upper, self.num, open_=self.open_)

    def spec(self):
        return {"kind": "grid", "lower": [float(v) for v in np.atleast_1d(self.lower)],
                "upper": [float(v) for v in np.atleast_1d(self.upper)], "num": self.num,
                "open": self.open_}


@dataclass(frozen=True, eq=False)
class PointsRegion:
    pts: tuple

    def points(self):
        arr = np.asarray(self.pts, dtype=float)
        return arr[:, None] if arr.ndim == 1 else arr

    def spec(self):
        return {"kind": "points", "points": self.points().tolist()}


@dataclass(frozen=True, eq=False)
class SublevelRegion:
    """Grid points of a bounding box with psi(x) < margin."""

    psi: object
    lower: tuple
    upper: tuple
    num: int = 41
    margin: float = NEIGHBORHOOD_MARGIN

    def points(self):
        pts = box_grid(self.lower, self.upper, self.num)
        return np.array([p for p in pts if self.psi(p) < self.margin])

    def spec(self):
        return {"kind": "sublevel", "margin": self.margin, "num": self.num,
                "lower": [float(v) for v in np.atleast_1d(self.lower)],
                "upper": [float(v) for v in np.atleast_1d(self.upper)]}


@dataclass(frozen=True, eq=False)
class BoundaryRegion:
    """Boundary sweep of a catalog closed set."""

    S: object
    num: int = 32

    def points(self):
        return self.S.boundary_sample(self.num)

    def spec(self):
        return {"kind": "boundary", "set": type(self.S).__name__, "num": self.num}


# --------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class Witness:
    x: tuple
    direction: tuple
    margin: float
    time: float = None

    def to_dict(self):
        d = {"x": list(self.x), "direction": list(self.direction), "margin": self.margin}
        if self.time is not None:
            d["t"] = self.time
        return d


@dataclass(frozen=True)
class Certificate:
    condition: str
    verdict: str
    witnesses: tuple
    grid: dict
    tol: float
    budgets: dict = field(default_factory=dict)

    @property
    def max_margin(self):
        return max((w.margin for w in self.witnesses), default=float("-inf"))

    @property
    def violations(self):
        return [w for w in self.witnesses if w.margin > self.tol]

    def to_dict(self):
        return {
            "schema": "stronginv.certificate",
            "schema_version": SCHEMA_VERSION,
            "condition": self.condition,
            "verdict": self.verdict,
            "tol": self.tol,
            "grid": self.grid,
            "budgets": self.budgets,
            "witnesses": [w.to_dict() for w in self.witnesses],
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        ws = tuple(Witness(tuple(w["x"]), tuple(w["direction"]), w["margin"], w.get("t"))
                   for w in d["witnesses"])
        return cls(d["condition"], d["verdict"], ws, d["grid"], d["tol"], d.get("budgets", {}))


def _verdict(records, tol):
    if not records:
        return "vacuous-pass"
    return "fail" if any(r.margin > tol for r in records) else "pass"


def _vec(v):
    return tuple(float(c) for c in np.atleast_1d(v))


@dataclass(frozen=True)
class EscapeReport:
    classification: str
    escape_time: float
    terminal_distance: float

    def to_dict(self):
        return {"schema": "stronginv.escape", "schema_version": SCHEMA_VERSION,
                "classification": self.classification, "escape_time": self.escape_time,
                "terminal_distance": self.terminal_distance}


@dataclass(frozen=True)
class Violation:
    """First exit of one run: interpolated crossing time and point, plus the
    distance to S at the first grid node beyond the tolerance."""

    start: tuple
    realization: int
    time: float
    point: tuple
    distance: float

    def to_dict(self):
        return {"start": list(self.start), "realization": self.realization, "t": self.time,
                "point": list(self.point), "distance": self.distance}


@dataclass(frozen=True)
class InvarianceReport:
    verdict: str
    starts: int
    runs: int
    violations: tuple
    tol: float
    horizon: float
    step: float

    def to_dict(self):
        return {"schema": "stronginv.empirical", "schema_version": SCHEMA_VERSION,
                "verdict": self.verdict, "starts": self.starts, "runs": self.runs,
                "tol": self.tol, "horizon": self.horizon, "step": self.step,
                "violations": [v.to_dict() for v in self.violations]}


@dataclass(frozen=True)
class EquivalenceReport:
    normal_cone: Certificate
    empirical: InvarianceReport
    usharp: bool
    agreement: bool
    label: str

    def to_dict(self):
        return {"schema": "stronginv.equivalence", "schema_version": SCHEMA_VERSION,
                "agreement": self.agreement, "label": self.label, "usharp": self.usharp,
                "normal_cone": self.normal_cone.to_dict(), "empirical": self.empirical.to_dict()}


# --------------------------------------------------------------------------
# operations


def classify_escape(traj, complement=None, horizon=None, tol=1e-9, blowup=BLOWUP_NORM):
    """Classify how an arc leaves the open set G = R^n minus `complement`.

    ``complement=None`` means G is all of R^n. E1 is only reported when the
    arc settles into a constant tail; otherwise a bounded arc that stays in
    G is "horizon-reached".
    """
    pts, times = traj.points, traj.times
    norms = np.linalg.norm(pts, axis=1)
    if complement is None:
        dists = np.full(len(pts), np.inf)
    else:
        dists = np.array([complement.distance(p) for p in pts])
    hit = np.flatnonzero(dists <= tol)
    big = np.flatnonzero(norms > blowup)
    first_hit = hit[0] if hit.size else None
    first_big = big[0] if big.size else None
    if first_big is not None and (first_hit is None or first_big < first_hit):
        return EscapeReport("E2", float(times[first_big]), float(dists[first_big]))
    if first_hit is not None and first_hit > 0:
        i = first_hit
        d0, d1 = dists[i - 1], dists[i]
        frac = d0 / (d0 - d1) if d0 > d1 else 1.0
        t_esc = times[i - 1] + frac * (times[i] - times[i - 1])
        if horizon is None or t_esc <= horizon:
            return EscapeReport("E3", float(t_esc), float(d1))
    if first_hit == 0:
        return EscapeReport("E3", float(times[0]), float(dists[0]))
    tail = max(2, len(traj.velocities) // 10)
    if len(traj.velocities) and np.all(np.abs(traj.velocities[-tail:]) <= tol):
        return EscapeReport("E1", float("inf"), float(dists[-1]))
    return EscapeReport("horizon-reached", float(times[-1]), float(dists[-1]))


def certify_hamiltonian(F, psi, region, budget=16, tol=DEFAULT_TOL, jobs=1):
    """Check H_F(x, zeta) <= tol for validated zeta in the proximal
    subdifferential of psi at every sampled x."""
    pts = region.points()

    def one(x):
        return [Witness(_vec(x), _vec(w.direction), float(hamiltonian(F, x, w.direction)))
                for w in proximal_subgradients(psi, x, budget)]

    records = [r for rs in batch_map(one, pts, jobs) for r in rs]
    return Certificate("hamiltonian-subgradient", _verdict(records, tol), tuple(records),
                       region.spec(), tol, {"subgradient_budget": budget, "points": len(pts)})


def certify_normal_cone(F, S, boundary=None, budget=32, tol=DEFAULT_TOL, jobs=1):
    """Check H_F(x, zeta) <= tol for proximal normal generators at sampled
    boundary points of S."""
    boundary = boundary or BoundaryRegion(S)
    pts = boundary.points()

    def one(x):
        return [Witness(_vec(x), _vec(w.direction), float(hamiltonian(F, x, w.direction)))
                for w in proximal_normal_generators(S, x, budget)]

    records = [r for rs in batch_map(one, pts, jobs) for r in rs]
    return Certificate("normal-cone", _verdict(records, tol), tuple(records), boundary.spec(), tol,
                       {"normal_budget": budget, "points": len(pts)})


def certify_remark_variant(realizations, psi, region, times=11, budget=16, tol=DEFAULT_TOL):
    """Check <f(t, x), zeta> <= tol for each realization f on its locality
    ball, over sampled times and validated subgradients zeta."""
    pts = region.points()
    records = []
    for f in realizations:
        ball = ClosedBall(f.anchor, f.gamma)
        local = [x for x in pts if ball.contains(x)]
        ts = np.linspace(0.0, f.horizon, times)
        for x in local:
            for w in proximal_subgradients(psi, x, budget):
                for t in ts:
                    m = float(f(t, x) @ w.direction)
                    records.append(Witness(_vec(x), _vec(w.direction), m, float(t)))
    spec = dict(region.spec(), times=times, realizations=len(realizations))
    return Certificate("remark-variant", _verdict(records, tol), tuple(records), spec, tol,
                       {"subgradient_budget": budget})


def _first_exit(traj, S, tol):
    d = np.array([S.distance(p) for p in traj.points])
    out = np.flatnonzero(d > tol)
    if not out.size:
        return None
    i = out[0]
    if i == 0:
        return 0.0, traj.points[0], d[0]
    d0, d1 = d[i - 1], d[i]
    frac = (tol - d0) / (d1 - d0)
    t = traj.times[i - 1] + frac * (traj.times[i] - traj.times[i - 1])
    return float(t), traj.at(t), float(d1)


def empirical_strong_invariance(S, provider, starts, horizon, tol=1e-6, step=1e-3, jobs=1):
    """Integrate every provided realization from every start in S and report
    the first exits from S.

    `provider(x0)` returns the list of feedbacks realizing the declared
    trajectories from x0 and raises RealizationUnavailable when it has none.
    """
    starts = [as_vector(x) for x in starts]

    def one(x0):
        fs = provider(x0)
        if not fs:
            raise RealizationUnavailable("no realization for start %s" % (x0,))
        found = []
        for j, f in enumerate(fs):
            arc = integrate_feedback(f, x0, horizon, step)
            hit = _first_exit(arc, S, tol)
            if hit is not None:
                t, p, d = hit
                found.append(Violation(_vec(x0), j, t, _vec(p), d))
        return len(fs), found

    results = batch_map(one, starts, jobs)
    violations = tuple(v for _, vs in results for v in vs)
    runs = sum(n for n, _ in results)
    return InvarianceReport("fail" if violations else "pass", len(starts), runs, violations, tol,
                            horizon, step)


def _convex_values(F, S, pts):
    return all(eval_set(F, x).convex for x in pts)


def equivalence_suite(F, S, provider, starts, horizon, boundary=None, tol=DEFAULT_TOL,
                      empirical_tol=1e-6, step=1e-3, usharp=None, jobs=1):
    """Compare the normal-cone certificate with empirical strong invariance.

    On systems meeting the lower-semicontinuous convex-valued hypothesis the
    two verdicts must agree; elsewhere a disagreement is labeled expected.
    """
    cert = certify_normal_cone(F, S, boundary, tol=tol, jobs=jobs)
    emp = empirical_strong_invariance(S, provider, starts, horizon, empirical_tol, step, jobs)
    if usharp is None:
        usharp = F.lower_semicontinuous
    if usharp:
        sample = [as_vector(x) for x in starts] + [np.asarray(w.x) for w in cert.witnesses]
        usharp = _convex_values(F, S, sample)
    cert_ok = cert.verdict != "fail"
    emp_ok = emp.verdict == "pass"
    agree = cert_ok == emp_ok
    if agree:
        label = "agreement"
    elif usharp:
        label = "unexpected-divergence"
    else:
        label = "expected-divergence"
    return EquivalenceReport(cert, emp, bool(usharp), agree, label)
