"""Worked systems with explicit feedback realizations.

Each scenario bundles the set-valued dynamics, a constraint (verification
function and/or closed set), a family of declared trajectories, and a
constructor turning a declared trajectory into a Caratheodory feedback that
selects from cone{F(x)} near its start point.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import GuardViolated, NoSelectionFound, PreconditionError
from .invariance import GridRegion, PointsRegion
from .mollifier import Feedback
from .multifunction import Multifunction, constant
from .nonsmooth import ClosedBox, HalfSpace, Singleton, quadratic, smooth_function
from .sets import FinitePoints, SetRepr, Union, as_vector, interval, point

FILIPPOV_GRID = 1000
FILIPPOV_REFINEMENTS = 2


@dataclass(frozen=True, eq=False)
class DeclaredTrajectory:
    """Closed-form arc phi with derivative dphi on [0, horizon]."""

    phi: Callable
    dphi: Callable
    horizon: float
    breakpoints: tuple = ()

    def __call__(self, t):
        return as_vector(self.phi(t))


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    F: Multifunction
    psi: Optional[object]
    S: object
    trajectories: Callable
    realize: Callable
    expected: dict = field(default_factory=dict)
    region: object = None
    starts: tuple = ()
    horizon: float = 1.0
    usharp: bool = False
    params: dict = field(default_factory=dict)

    def realizations(self, x0):
        """Feedbacks for every declared trajectory from x0."""
        return [self.realize(x0, phi) for phi in self.trajectories(x0)]

    def provider(self):
        return self.realizations


# --------------------------------------------------------------------------
# Sign-switching inclusion: F(0) = [-1, 1], F(x) = {-sign x}


def _sign_dynamics():
    seg = interval(-1.0, 1.0)

    def oracle(x):
        if x[0] == 0.0:
            return seg
        return point(-math.copysign(1.0, x[0]))

    return Multifunction(1, oracle, c1=1.0, c2=0.0, lower_semicontinuous=False, name="intro")


def _intro_trajectories(horizon):
    def family(x0):
        a = float(as_vector(x0)[0])
        if a == 0.0:
            return [DeclaredTrajectory(lambda t: np.array([0.0]), lambda t: np.array([0.0]), horizon)]
        s = math.copysign(1.0, a)
        return [DeclaredTrajectory(lambda t: np.array([s * max(abs(a) - t, 0.0)]),
                                   lambda t: np.array([-s if t < abs(a) else 0.0]),
                                   horizon, (abs(a),))]

    return family


def intro_realization(x0, horizon=1.0, gamma0=1.0):
    """f(t, x) = -sign(x0) beta(t) with beta the indicator of [0, |x0|]."""
    a = float(as_vector(x0)[0])
    if a == 0.0:
        return Feedback(lambda t, x: np.zeros(1), horizon, 1, c1=0.0, c2=0.0, gamma=gamma0,
                        anchor=[0.0], regularity="continuous", name="intro_zero")
    s = math.copysign(1.0, a)
    bps = (abs(a),) if abs(a) < horizon else ()
    return Feedback(lambda t, x: np.array([-s if t <= abs(a) else 0.0]), horizon, 1,
                    c1=1.0, c2=0.0, gamma=abs(a) / 2.0, anchor=[a],
                    regularity="piecewise-constant", breakpoints=bps, name="intro_beta")


def scenario_intro(horizon=1.0):
    return Scenario(
        name="intro",
        F=_sign_dynamics(),
        psi=quadratic(),
        S=Singleton([0.0]),
        trajectories=_intro_trajectories(horizon),
        realize=lambda x0, phi: intro_realization(x0, horizon),
        expected={"hamiltonian": "pass", "normal-cone": "fail", "empirical": "pass",
                  "equivalence": "expected-divergence"},
        region=GridRegion((-0.5,), (0.5,), 21),
        starts=((0.0,),),
        horizon=horizon,
        usharp=False,
        params={"horizon": horizon},
    )


# --------------------------------------------------------------------------
# counterexample: F = {1}, psi = x^2


def scenario_counterexample_31(horizon=1.0):
    def family(x0):
        a = float(as_vector(x0)[0])
        return [DeclaredTrajectory(lambda t: np.array([a + t]), lambda t: np.array([1.0]), horizon)]

    def realize(x0, phi):
        return Feedback(lambda t, x: np.array([1.0]), horizon, 1, c1=1.0, c2=0.0, gamma=1.0,
                        anchor=x0, regularity="continuous", name="unit_drift")

    return Scenario(
        name="counterexample31",
        F=constant([1.0], name="counterexample31"),
        psi=quadratic(),
        S=Singleton([0.0]),
        trajectories=family,
        realize=realize,
        expected={"hamiltonian-boundary": "pass", "hamiltonian": "fail", "empirical": "fail"},
        region=GridRegion((-0.1,), (0.1,), 21),
        starts=((0.0,),),
        horizon=horizon,
        usharp=True,
        params={"horizon": horizon},
    )


# --------------------------------------------------------------------------
# Lipschitz projection realizations


def scenario_lipschitz_projection(F, trajectory, gamma=1.0, modulus=None):
    """Feedback f(t, x) = proj_{F(x)}(dphi(t)) for convex-valued F."""
    probe = trajectory(0.0)
    if not F(probe).convex:
        from .errors import NonconvexValue

        raise NonconvexValue("projection realization needs convex values")

    def field_(t, x):
        return F(x).project(trajectory.dphi(t))

    return Feedback(field_, trajectory.horizon, F.dim, modulus=modulus or (lambda r: r), c1=F.c1,
                    c2=F.c2, gamma=gamma, anchor=probe, regularity="measurable",
                    breakpoints=trajectory.breakpoints, name="projection")


def _linear_system(sign, horizon):
    F = Multifunction(1, lambda x: point(sign * x[0]), c1=0.0, c2=1.0, lower_semicontinuous=True,
                      name="linear%+d" % sign)

    def family(x0):
        a = float(as_vector(x0)[0])
        return [DeclaredTrajectory(lambda t: np.array([a * math.exp(sign * t)]),
                                   lambda t: np.array([sign * a * math.exp(sign * t)]), horizon)]

    def realize(x0, phi):
        f = scenario_lipschitz_projection(F, phi, gamma=1.0, modulus=lambda r: r)
        return f

    return F, family, realize


def scenario_contraction(horizon=1.0):
    """F(x) = {-x} with S = [-1, 1]: strongly invariant."""
    F, family, realize = _linear_system(-1, horizon)
    return Scenario("contraction", F, smooth_function(lambda x: float(x @ x) - 1.0, lambda x: 2 * x),
                    ClosedBox([-1.0], [1.0]), family, realize,
                    expected={"normal-cone": "pass", "empirical": "pass", "equivalence": "agreement"},
                    region=GridRegion((-1.2,), (1.2,), 25),
                    starts=tuple((v,) for v in np.linspace(-1.0, 1.0, 9)), horizon=horizon,
                    usharp=True, params={"horizon": horizon})


def scenario_expansion(horizon=1.0):
    """F(x) = {+x} with S = [-1, 1]: leaves S from the boundary."""
    F, family, realize = _linear_system(+1, horizon)
    return Scenario("expansion", F, smooth_function(lambda x: float(x @ x) - 1.0, lambda x: 2 * x),
                    ClosedBox([-1.0], [1.0]), family, realize,
                    expected={"normal-cone": "fail", "empirical": "fail", "equivalence": "agreement"},
                    region=GridRegion((-1.2,), (1.2,), 25),
                    starts=tuple((v,) for v in np.linspace(-1.0, 1.0, 9)), horizon=horizon,
                    usharp=True, params={"horizon": horizon})


# --------------------------------------------------------------------------
# A piecewise multifunction with a union-valued branch


def _example21_oracle(x):
    if x[0] < 0:
        return point(1.0)
    if x[0] == 0:
        return Union((point(0.0), interval(1.0, 2.0)))
    return interval(0.0, 2.0)


def scenario_example21(horizon=1.0, speed=1.5):
    """F(x) = {1} (x<0), {0} U [1,2] (x=0), [0,2] (x>0); f(t, x) = dphi(t)."""
    F = Multifunction(1, _example21_oracle, c1=2.0, c2=0.0, name="example21")

    def family(x0):
        a = float(as_vector(x0)[0])
        if a < 0:
            t0 = -a
            return [DeclaredTrajectory(lambda t: np.array([a + t if t <= t0 else speed * (t - t0)]),
                                       lambda t: np.array([1.0 if t < t0 else speed]), horizon, (t0,))]
        return [DeclaredTrajectory(lambda t: np.array([a + speed * t]), lambda t: np.array([speed]),
                                   horizon)]

    def realize(x0, phi):
        return Feedback(lambda t, x: as_vector(phi.dphi(t)), horizon, 1, c1=2.0, c2=0.0, gamma=1.0,
                        anchor=x0, regularity="piecewise-constant", breakpoints=phi.breakpoints,
                        name="example21_velocity")

    return Scenario("example21", F, None, None, family, realize, region=GridRegion((-1.0,), (1.0,), 21),
                    starts=((-0.5,), (0.0,), (0.5,)), horizon=horizon, params={"horizon": horizon,
                                                                            "speed": speed})


# --------------------------------------------------------------------------
# Filippov-type measurable selections


def _grid_for(A, num):
    """Parameter grid over a set value and the local half-width for zooming."""
    if isinstance(A, FinitePoints):
        return A.points, None
    from .sets import Box, Segment

    if isinstance(A, Segment):
        s = np.linspace(0.0, 1.0, num)[:, None]
        return A.a + s * (A.b - A.a), (A.b - A.a) / (num - 1)
    if isinstance(A, Box):
        from .sampling import box_grid

        per = max(2, int(round(num ** (1.0 / A.dim)))) if A.dim > 1 else num
        return box_grid(A.lower, A.upper, per), (A.upper - A.lower) / (per - 1)
    pts = A.sample(num)
    return pts, None


def _best_gain(g, U, w):
    """For each row of g, the b in U minimizing ||g b - w|| and the residual."""
    if g.ndim == 1:
        g = g[:, None]
    if U.dim == 1:
        gg = np.einsum("ij,ij->i", g, g)
        b0 = np.where(gg > 0, g @ w / np.where(gg > 0, gg, 1.0), 0.0)
        b = U.nearest_rows(b0[:, None])[:, 0]
        res = np.linalg.norm(g * b[:, None] - w, axis=1)
        return b[:, None], res
    # scalar g, vector-valued gain set
    s = g[:, 0]
    safe = np.where(s != 0, s, 1.0)
    bs = U.nearest_rows(np.where(s[:, None] != 0, w[None, :] / safe[:, None], 0.0))
    res = np.linalg.norm(s[:, None] * bs - w, axis=1)
    return bs, res


def filippov_node(g, A, Ux, x, w, grid=FILIPPOV_GRID, refinements=FILIPPOV_REFINEMENTS):
    """Grid search over A (exact inner minimization over the gain set) for
    the pair minimizing ||g(x, a) b - w||."""
    pts, half = _grid_for(A, grid)
    best = None
    for level in range(refinements + 1):
        gv = np.asarray(g(x, pts), dtype=float)
        if gv.ndim == 1 and A.dim == pts.shape[1] and gv.shape[0] == pts.shape[0]:
            gv = gv[:, None]
        bs, res = _best_gain(gv, Ux, w)
        i = int(np.argmin(res))
        if best is None or res[i] < best[2]:
            best = (pts[i].copy(), bs[i].copy(), float(res[i]))
        if half is None or best[2] == 0.0:
            break
        lo = np.maximum(best[0] - half, A.nearest(best[0] - half))
        hi = np.minimum(best[0] + half, A.nearest(best[0] + half))
        from .sampling import box_grid

        per = grid if A.dim == 1 else max(2, int(round(grid ** (1.0 / A.dim))))
        pts = box_grid(lo, hi, per)
        pts = A.nearest_rows(pts)
        half = (hi - lo) / (per - 1)
    return best


def check_condition_h(g, A, lower, upper, num=9):
    """Sampled one-sided Lipschitz constant of x -> g(x, a) over a box."""
    from .sampling import box_grid

    xs = box_grid(lower, upper, num)
    As = A.extremes()
    worst = -np.inf
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            dx = xs[i] - xs[j]
            d2 = dx @ dx
            if d2 == 0:
                continue
            gi = np.asarray(g(xs[i], As), dtype=float).reshape(len(As), -1)
            gj = np.asarray(g(xs[j], As), dtype=float).reshape(len(As), -1)
            diff = gi - gj
            if diff.shape[1] == 1 and len(dx) > 1:
                continue
            worst = max(worst, float(np.max(diff @ dx) / d2))
    return worst


def scenario_filippov_selection(g, A, U, trajectory, grid=200, tol=1e-6, gamma=1.0, c1=None, c2=0.0,
                                modulus=None, h_box=None, search_grid=FILIPPOV_GRID):
    """Measurable selection (alpha, beta) on a time grid with
    dphi(t) = g(phi(t), alpha(t)) beta(t), returned as the feedback
    f(t, x) = g(x, alpha(t)) beta(t), left-constant between nodes.

    `g(x, a)` must broadcast over a leading axis of `a`. `U(x)` returns the
    set value holding the gain b.
    """
    T = trajectory.horizon
    nodes = np.union1d(np.linspace(0.0, T, grid + 1), np.asarray(trajectory.breakpoints, dtype=float))
    nodes = nodes[(nodes >= 0) & (nodes <= T)]
    alphas, betas, worst = [], [], 0.0
    for i, t in enumerate(nodes):
        # right-continuous velocity on each cell
        tm = t if i == len(nodes) - 1 else 0.5 * (t + nodes[i + 1])
        x = trajectory(t)
        xm = trajectory(tm)
        w = as_vector(trajectory.dphi(tm))
        a, b, r = filippov_node(g, A, U(xm), xm, w, search_grid)
        if r > tol:
            raise NoSelectionFound("residual %.3g above tol %.3g at t=%.6g" % (r, tol, t),
                                   residual=r, time=float(t))
        alphas.append(a)
        betas.append(b)
        worst = max(worst, r)
    alphas = np.array(alphas)
    betas = np.array(betas)
    L = None if h_box is None else check_condition_h(g, A, *h_box)

    def field_(t, x):
        i = min(max(int(np.searchsorted(nodes, t, side="right")) - 1, 0), len(nodes) - 1)
        gv = np.asarray(g(x, alphas[i][None, :]), dtype=float).reshape(-1)
        b = betas[i]
        return gv * b if U_dim == 1 else gv[0] * b

    x0 = trajectory(0.0)
    U_dim = U(x0).dim
    if c1 is None:
        c1 = float(max(np.linalg.norm(as_vector(trajectory.dphi(t))) for t in nodes))
    return Feedback(field_, T, len(x0), modulus=modulus or (lambda r: r), c1=c1, c2=c2, gamma=gamma,
                    anchor=x0, regularity="piecewise-constant", breakpoints=tuple(nodes[1:-1]),
                    name="filippov",
                    meta={"nodes": nodes, "alpha": alphas, "beta": betas, "max_residual": worst,
                          "one_sided_lipschitz": L})


# --------------------------------------------------------------------------
# Control system: F(x) = {lambda(x) + U(x) delta(x)} R


def default_u(x):
    """Discontinuous measurable U: R -> [-1, 1]."""
    return 0.5 if x[0] >= 0.3 else -0.5


def scenario_example24(lam=2.0, delta=1.0, R=None, U=default_u, horizon=0.5, start=0.0,
                       guard_box=(-2.0, 2.0), grid=200):
    """Scalar instance of the lambda/delta/U/R system.

    `lam` and `delta` may be constants or callables of x. R defaults to {1}.
    """
    lam_f = lam if callable(lam) else (lambda x, c=float(lam): c)
    del_f = delta if callable(delta) else (lambda x, c=float(delta): c)
    R = R if R is not None else point(1.0)
    xs = np.linspace(guard_box[0], guard_box[1], 201)
    for xv in xs:
        x = np.array([xv])
        if abs(lam_f(x)) < 2 * abs(del_f(x)):
            raise GuardViolated("|lambda(x)| < 2|delta(x)| at x=%g" % xv)
    if not isinstance(R, SetRepr):
        raise PreconditionError("R must be a set value")

    def oracle(x):
        return R.scaled(lam_f(x) + U(x) * del_f(x))

    c1 = max(abs(lam_f(np.array([v]))) + abs(del_f(np.array([v]))) for v in xs) * R.max_norm()
    F = Multifunction(1, oracle, c1=float(c1), c2=0.0, lower_semicontinuous=False, name="example24")

    def g(x, a):
        a = np.asarray(a, dtype=float)
        return lam_f(x) + a[..., 0] * del_f(x)

    r_star = float(R.extremes().max()) if R.dim == 1 else 1.0

    def family(x0):
        # forward arc with u(t) = U(phi(t)) and r(t) = r_star
        a0 = float(as_vector(x0)[0])
        return [_forward_arc(lam_f, del_f, U, r_star, a0, horizon)]

    def realize(x0, phi):
        return scenario_filippov_selection(g, interval(-1.0, 1.0), lambda x: R, phi, grid=grid,
                                           tol=1e-8, gamma=1.0, c1=float(c1),
                                           modulus=_lam_modulus(lam_f, del_f, R, guard_box))

    # velocities are positive, so S = {-x <= 0} is strongly invariant
    psi = smooth_function(lambda x: -float(x[0]), lambda x: np.array([-1.0]), name="-x")
    return Scenario("example24", F, psi, HalfSpace([-1.0], 0.0), family, realize,
                    expected={"cone": "pass", "hamiltonian": "pass", "empirical": "pass"}, region=GridRegion((guard_box[0],), (guard_box[1],), 21),
                    starts=((start,),), horizon=horizon, usharp=False,
                    params={"lam": lam if not callable(lam) else "callable",
                            "delta": delta if not callable(delta) else "callable", "horizon": horizon,
                            "start": start})


def _lam_modulus(lam_f, del_f, R, box):
    xs = np.linspace(box[0], box[1], 401)
    lv = np.array([lam_f(np.array([v])) for v in xs])
    dv = np.array([del_f(np.array([v])) for v in xs])
    slope = float(np.max(np.abs(np.diff(lv)) + np.abs(np.diff(dv))) / (xs[1] - xs[0]))
    scale = R.max_norm()
    return lambda r: 1.01 * slope * scale * r


def _forward_arc(lam_f, del_f, U, r_star, a0, horizon, samples=4001):
    """Arc of x' = (lambda(x) + u delta(x)) r_star with u = U(x), found with
    RK4 steps on pieces of constant u; switches are located by bisection."""
    def rate(x, u):
        xv = np.array([x])
        return (lam_f(xv) + u * del_f(xv)) * r_star

    def rk4(x, u, h):
        k1 = rate(x, u)
        k2 = rate(x + 0.5 * h * k1, u)
        k3 = rate(x + 0.5 * h * k2, u)
        k4 = rate(x + h * k3, u)
        return x + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0

    dt = horizon / (samples - 1)
    pieces = []
    t, x = 0.0, float(a0)
    while t < horizon - 1e-15:
        u = U(np.array([x]))
        ts, xs = [t], [x]
        while t < horizon - 1e-15:
            step = min(dt, horizon - t)
            y = rk4(x, u, step)
            if U(np.array([y])) != u:
                lo, hi = 0.0, step
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    if U(np.array([rk4(x, u, mid)])) == u:
                        lo = mid
                    else:
                        hi = mid
                t, x = t + hi, rk4(x, u, hi)
                ts.append(t)
                xs.append(x)
                break
            t, x = t + step, y
            ts.append(t)
            xs.append(x)
        ts, xs = np.array(ts), np.array(xs)
        vs = np.array([rate(v, u) for v in xs])
        spline = CubicHermiteSpline(ts, xs, vs) if len(ts) > 1 else None
        pieces.append((ts[0], ts[-1], u, spline, xs[0]))
    starts = np.array([p[0] for p in pieces])

    def piece(t):
        return pieces[min(max(int(np.searchsorted(starts, t, side="right")) - 1, 0), len(pieces) - 1)]

    def phi(t):
        p = piece(t)
        return np.array([float(p[3](t)) if p[3] is not None else p[4]])

    def dphi(t):
        p = piece(t)
        return np.array([rate(phi(t)[0], p[2])])

    return DeclaredTrajectory(phi, dphi, horizon, tuple(float(v) for v in starts[1:]))


def uniqueness_spot_check(f, x0, horizon=None, delta=1e-6, num=201):
    """Largest sup-norm gap between the reference solution from x0 and those
    from x0 +/- delta e_i, divided by delta."""
    T = f.horizon if horizon is None else horizon
    x0 = as_vector(x0, f.dim)
    from .euler import solve_feedback

    base = solve_feedback(f, x0, T, num)
    worst = 0.0
    for i in range(f.dim):
        for sgn in (1.0, -1.0):
            y = x0.copy()
            y[i] += sgn * delta
            other = solve_feedback(f, y, T, num)
            worst = max(worst, float(np.max(np.abs(other.points - base.points))))
    return worst / delta


# --------------------------------------------------------------------------
# registry


REGISTRY = {
    "intro": scenario_intro,
    "counterexample31": scenario_counterexample_31,
    "contraction": scenario_contraction,
    "expansion": scenario_expansion,
    "example21": scenario_example21,
    "example24": scenario_example24,
}


def get_scenario(name, **params):
    try:
        ctor = REGISTRY[name]
    except KeyError:
        raise KeyError("unknown scenario %r; choose from %s" % (name, ", ".join(sorted(REGISTRY)))) from None
    return ctor(**params)
