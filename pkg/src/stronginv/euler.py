"""Euler polygonal arcs steered by a verification function.

At each partition node the scheme samples the hull of mollified feedback
velocities over a (1/k)-ball, picks a velocity that keeps psi from rising by
more than h/k, and steps. Refining k and shrinking the mollification width
together approximates a viable trajectory of the original feedback.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BoundViolated, NoAdmissibleVelocity, NoConvergence, PreconditionError
from .mollifier import mollified_feedback
from .sampling import ball_points
from .sets import as_vector

SELECT_TOL = 1e-9
CLASSIFICATIONS = ("horizon-reached", "escaped-E1", "escaped-E2", "escaped-E3")


def default_schedule(levels=6):
    return [(10 * 2 ** j, 0.1 * 2.0 ** (-j)) for j in range(levels)]


@dataclass(frozen=True, eq=False)
class EulerConfig:
    gamma: float
    anchor: np.ndarray
    c1: float
    c2: float
    horizon: float
    hull_budget: int = 16
    select_tol: float = SELECT_TOL

    def __post_init__(self):
        object.__setattr__(self, "anchor", as_vector(self.anchor))

    @classmethod
    def from_feedback(cls, f, **overrides):
        kw = dict(gamma=f.gamma, anchor=f.anchor, c1=f.c1, c2=f.c2, horizon=f.horizon)
        kw.update(overrides)
        return cls(**kw)

    @property
    def dim(self):
        return self.anchor.shape[0]

    @property
    def velocity_bound(self):
        """delta(D) = 1 + c1 + c2 + c2 * sup{||v|| : v in D}, D = (gamma/2)B(anchor)."""
        sup_d = np.linalg.norm(self.anchor) + 0.5 * self.gamma
        return 1.0 + self.c1 + self.c2 + self.c2 * sup_d

    @property
    def t_tilde(self):
        return min(self.horizon, self.gamma / (8.0 * self.velocity_bound))

    def growth_bound(self, x, k):
        """g_f[t, x, k] = 1 + c1 + c2 (||x|| + 1/k)."""
        return 1.0 + self.c1 + self.c2 * (np.linalg.norm(x) + 1.0 / k)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    psi_values: np.ndarray = None
    classification: str = "horizon-reached"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.points, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        v = np.asarray(self.velocities, dtype=float).reshape(max(len(t) - 1, 0), x.shape[1])
        if len(t) != len(x):
            raise ValueError("times and points differ in length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("time grid must be strictly increasing")
        if self.classification not in CLASSIFICATIONS:
            raise ValueError("unknown classification %r" % self.classification)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", x)
        object.__setattr__(self, "velocities", v)
        if self.psi_values is not None:
            object.__setattr__(self, "psi_values", np.asarray(self.psi_values, dtype=float))

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def terminal(self):
        return self.points[-1]

    def at(self, t):
        """Piecewise-linear evaluation; t may be scalar or array."""
        t = np.asarray(t, dtype=float)
        cols = [np.interp(t, self.times, self.points[:, j]) for j in range(self.dim)]
        return np.stack(cols, axis=-1)

    def sup_distance(self, other):
        """Sup-norm gap between two polygonal arcs on their common interval."""
        end = min(self.times[-1], other.times[-1])
        grid = np.union1d(self.times, other.times)
        grid = grid[grid <= end]
        return float(np.max(np.linalg.norm(self.at(grid) - other.at(grid), axis=1)))

    def lipschitz_constant(self):
        if len(self.times) < 2:
            return 0.0
        return float(np.max(np.linalg.norm(self.velocities, axis=1)))


@dataclass(frozen=True, eq=False)
class HullSample:
    """Vertex velocities f_eps(t, y_j) for y_j in the (1/k)-ball around x."""

    center: np.ndarray
    radius: float
    time: float
    points: np.ndarray
    velocities: np.ndarray

    @property
    def reference(self):
        """f_eps(t, x): the velocity at the forced centre vertex."""
        return self.velocities[0]

    def candidates(self, scores=None, best=8):
        """Vertices plus pairwise midpoints of the `best` lowest-score ones.

        Returns ``(velocities, weights)`` where each row of `weights` holds
        the convex coefficients over the vertices.
        """
        m = len(self.velocities)
        order = np.arange(m) if scores is None else np.lexsort((np.arange(m), scores))
        top = order[:best]
        weights = [np.eye(m)[i] for i in range(m)]
        for a in range(len(top)):
            for b in range(a + 1, len(top)):
                w = np.zeros(m)
                w[top[a]] += 0.5
                w[top[b]] += 0.5
                weights.append(w)
        W = np.array(weights)
        return W @ self.velocities, W

    def claim_bound(self, modulus, k):
        return modulus(1.0 / k) + 1.0 / k


def step_size(k, cfg):
    """h_k = gamma / (4 k delta(D)), checked against h_k <= 1/(2k g_f) over D."""
    if k < 1:
        raise PreconditionError("k must be >= 1")
    if not cfg.gamma > 0:
        raise PreconditionError("gamma must be positive")
    h = cfg.gamma / (4.0 * k * cfg.velocity_bound)
    g_max = 1.0 + cfg.c1 + cfg.c2 * (np.linalg.norm(cfg.anchor) + 0.5 * cfg.gamma + 1.0 / k)
    if h > (1.0 + 1e-12) / (2.0 * k * g_max):
        raise BoundViolated("h_k = %.6g exceeds 1/(2k g_f) = %.6g; reduce gamma" % (h, 1.0 / (2 * k * g_max)))
    return h


def hull_sample(f_eps, t, x, k, budget=16):
    """Deterministic vertex set: the centre, the 2n axis extremes, then a
    low-discrepancy fill of the (1/k)-ball."""
    if budget < 1:
        raise PreconditionError("budget must be >= 1")
    x = as_vector(x, f_eps.dim)
    n = len(x)
    r = 1.0 / k
    verts = [x.copy()]
    eye = np.eye(n)
    for i in range(n):
        verts.append(x + r * eye[i])
        verts.append(x - r * eye[i])
    verts = verts[:budget]
    if budget > len(verts):
        verts.extend(x + r * ball_points(budget - len(verts), n))
    pts = np.array(verts)
    vel = np.array([f_eps(t, y) for y in pts])
    return HullSample(x.copy(), r, float(t), pts, vel)


def select_velocity(psi, x, h, G, k, tol=SELECT_TOL):
    """Velocity in the sampled hull with psi(x + h v) <= psi(x) + h/k + tol.

    Minimizes psi(x + h v); ties go to the candidate closest to f_eps(t, x).
    """
    x = as_vector(x)
    base = psi(x)
    vert_scores = np.array([psi(x + h * v) for v in G.velocities])
    cands, _ = G.candidates(vert_scores)
    m = len(G.velocities)
    scores = np.concatenate([vert_scores, [psi(x + h * v) for v in cands[m:]]])
    ok = scores <= base + h / k + tol
    if not np.any(ok):
        raise NoAdmissibleVelocity(
            "no sampled velocity keeps psi within h/k at x=%s (best increase %.3g > %.3g)"
            % (np.array2string(x), scores.min() - base, h / k), point=x)
    best = scores[ok].min()
    tie = ok & (scores <= best + 1e-12 * (1.0 + abs(best)))
    idx = np.flatnonzero(tie)
    dist = np.linalg.norm(cands[idx] - G.reference, axis=1)
    return cands[idx[int(np.argmin(dist))]].copy()


def partition(k, cfg):
    h = step_size(k, cfg)
    T = cfg.t_tilde
    c = max(1, math.ceil(T / h * (1.0 - 1e-12)))
    times = np.arange(c + 1, dtype=float) * h
    times[-1] = T
    return times, h


def build_polygonal_arc(f, eps, k, psi, x_bar, cfg):
    """Polygonal arc on [0, T~] built from convex-hull velocity selections.

    ``eps=None`` skips mollification (for fields already continuous in t).
    """
    x_bar = as_vector(x_bar, f.dim)
    if not np.array_equal(x_bar, cfg.anchor):
        raise PreconditionError("start point must be the configuration anchor")
    times, h = partition(k, cfg)
    f_eps = f if eps is None else mollified_feedback(f, eps)
    pts = [x_bar.copy()]
    vels = []
    for i in range(len(times) - 1):
        G = hull_sample(f_eps, times[i], pts[-1], k, cfg.hull_budget)
        try:
            v = select_velocity(psi, pts[-1], h, G, k, cfg.select_tol)
        except NoAdmissibleVelocity as err:
            raise NoAdmissibleVelocity(str(err), node=i, time=float(times[i]), point=pts[-1]) from err
        vels.append(v)
        pts.append(pts[-1] + (times[i + 1] - times[i]) * v)
    psi_vals = np.array([psi(p) for p in pts])
    meta = dict(k=int(k), eps=eps, h=h, t_tilde=cfg.t_tilde, velocity_bound=cfg.velocity_bound,
                gamma=cfg.gamma)
    return Trajectory(times, np.array(pts), np.array(vels).reshape(len(vels), len(x_bar)), psi_vals,
                      meta=meta)


def refine_trajectory(f, psi, x_bar, cfg, schedule=None, tol=1e-3):
    """Build arcs along a (k, eps) schedule until consecutive arcs agree.

    Returns the first arc whose sup-norm gap to its predecessor is below
    `tol`; raises NoConvergence when the schedule runs out first.
    """
    schedule = list(schedule or default_schedule())
    if len(schedule) < 2:
        raise PreconditionError("schedule needs at least two (k, eps) entries")
    ks = [k for k, _ in schedule]
    es = [e for _, e in schedule]
    if any(b <= a for a, b in zip(ks, ks[1:])) or any(b >= a for a, b in zip(es, es[1:])):
        raise PreconditionError("schedule needs increasing k and decreasing eps")
    prev = None
    gaps = []
    for k, eps in schedule:
        arc = build_polygonal_arc(f, eps, k, psi, x_bar, cfg)
        if prev is not None:
            gaps.append(prev.sup_distance(arc))
            if gaps[-1] < tol:
                arc.meta.update(gaps=gaps, schedule=schedule[:len(gaps) + 1])
                return arc
        prev = arc
    prev.meta.update(gaps=gaps, schedule=schedule)
    err = NoConvergence("sup-norm gap %.3g still above tol %.3g at schedule end" % (gaps[-1], tol),
                        gap=gaps[-1])
    err.arc = prev
    raise err


def integrate_feedback(f, x_bar, T, h, psi=None):
    """Plain forward Euler for x' = f(t, x) on [0, T] (last step may be short)."""
    if not h > 0:
        raise PreconditionError("h must be positive")
    x = as_vector(x_bar, f.dim)
    n = max(1, math.ceil(T / h * (1.0 - 1e-12)))
    times = np.arange(n + 1, dtype=float) * h
    times[-1] = T
    pts = np.empty((n + 1, len(x)))
    vels = np.empty((n, len(x)))
    pts[0] = x
    for i in range(n):
        vels[i] = f(times[i], pts[i])
        pts[i + 1] = pts[i] + (times[i + 1] - times[i]) * vels[i]
    psi_vals = None if psi is None else np.array([psi(p) for p in pts])
    return Trajectory(times, pts, vels, psi_vals, meta=dict(h=h, horizon=T))


def solve_feedback(f, x_bar, T, num=401, rtol=1e-11, atol=1e-13):
    """High-accuracy reference solution of x' = f(t, x), restarted at the
    declared breakpoints; sampled on a uniform grid of `num` nodes."""
    x = as_vector(x_bar, f.dim)
    cuts = [0.0] + [b for b in f.breakpoints if 0.0 < b < T] + [T]
    grid = np.linspace(0.0, T, num)
    pts = np.empty((num, len(x)))
    for a, b in zip(cuts[:-1], cuts[1:]):
        # keep stage times strictly inside the piece so jumps at b are not seen
        top = np.nextafter(b, a)
        sol = solve_ivp(lambda t, y, a=a, top=top: f(min(max(t, a), top), y), (a, b), x,
                        method="DOP853", rtol=rtol, atol=atol, dense_output=True)
        if not sol.success:
            raise NoConvergence("reference solve failed: %s" % sol.message, gap=float("nan"))
        sel = (grid >= a) & (grid <= b)
        if sel.any():
            pts[sel] = sol.sol(grid[sel]).T
        x = sol.y[:, -1]
    return Trajectory(grid, pts, np.array([f(t, p) for t, p in zip(grid[:-1], pts[:-1])]),
                      meta=dict(horizon=T, method="DOP853"))


def batch_map(fn, items, jobs=1):
    """Order-preserving map with an optional thread pool."""
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def refine_many(problems, jobs=1, **kwargs):
    """refine_trajectory over (f, psi, x_bar, cfg) tuples."""
    return batch_map(lambda p: refine_trajectory(*p, **kwargs), problems, jobs)
