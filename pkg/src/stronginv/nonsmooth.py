"""Proximal calculus on a small catalog of closed sets and lower
semicontinuous functions.

Proximal normals and subgradients are returned as :class:`ProxWitness`
records: a direction together with a constant sigma that was fitted and
checked on a deterministic local grid. Emptiness of a subdifferential can
only be reported as "no validated witness at this budget", never proved.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq, minimize

from .errors import PointNotInSet, PointOutsideDomain, PreconditionError, SearchExhausted
from .sampling import box_grid, sphere_directions
from .sets import as_vector

MEMBER_TOL = 1e-8
VALIDATION_RADIUS = 0.1
SIGMA_HEADROOM = 1.1
SIGMA_FLOOR = 1e-9
# validation shells span radius * 2^-k for k in [0, SHELL_OCTAVES]
SHELL_OCTAVES = 16
_EPS = np.finfo(float).eps


# --------------------------------------------------------------------------
# closed sets


class ClosedSet:
    dim = None

    def contains(self, x, tol=MEMBER_TOL):
        return self.distance(x) <= tol

    def project(self, x):
        raise NotImplementedError

    def distance(self, x):
        x = as_vector(x, self.dim)
        return float(np.linalg.norm(x - self.project(x)))

    def on_boundary(self, x, tol=MEMBER_TOL):
        raise NotImplementedError

    def normal_directions(self, s, tol=MEMBER_TOL):
        """Analytic generators of the proximal normal cone, or None."""
        return None

    def boundary_sample(self, num=32):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Singleton(ClosedSet):
    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", as_vector(self.point))

    @property
    def dim(self):
        return self.point.shape[0]

    def project(self, x):
        return self.point.copy()

    def on_boundary(self, x, tol=MEMBER_TOL):
        return self.contains(x, tol)

    def normal_directions(self, s, tol=MEMBER_TOL):
        eye = np.eye(self.dim)
        return [d for i in range(self.dim) for d in (eye[i], -eye[i])]

    def boundary_sample(self, num=32):
        return self.point[None, :].copy()


@dataclass(frozen=True, eq=False)
class ClosedBall(ClosedSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        if not self.radius >= 0:
            raise ValueError("radius must be >= 0")

    @property
    def dim(self):
        return self.center.shape[0]

    def project(self, x):
        x = as_vector(x, self.dim)
        d = x - self.center
        r = np.linalg.norm(d)
        if r <= self.radius:
            return x.copy()
        return self.center + d * (self.radius / r)

    def on_boundary(self, x, tol=MEMBER_TOL):
        x = as_vector(x, self.dim)
        return abs(np.linalg.norm(x - self.center) - self.radius) <= tol

    def normal_directions(self, s, tol=MEMBER_TOL):
        if self.radius == 0:
            return Singleton(self.center).normal_directions(s)
        if not self.on_boundary(s, tol):
            return [np.zeros(self.dim)]
        d = s - self.center
        return [d / np.linalg.norm(d)]

    def boundary_sample(self, num=32):
        return self.center + self.radius * sphere_directions(num, self.dim)


@dataclass(frozen=True, eq=False)
class ClosedBox(ClosedSet):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, hi = as_vector(self.lower), as_vector(self.upper)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("box needs matching bounds with lower <= upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.shape[0]

    def project(self, x):
        return np.clip(as_vector(x, self.dim), self.lower, self.upper)

    def on_boundary(self, x, tol=MEMBER_TOL):
        x = as_vector(x, self.dim)
        if not self.contains(x, tol):
            return False
        return bool(np.any(np.abs(x - self.lower) <= tol) or np.any(np.abs(x - self.upper) <= tol))

    def normal_directions(self, s, tol=MEMBER_TOL):
        eye = np.eye(self.dim)
        out = []
        for i in range(self.dim):
            if abs(s[i] - self.upper[i]) <= tol:
                out.append(eye[i])
            if abs(s[i] - self.lower[i]) <= tol:
                out.append(-eye[i])
        return out or [np.zeros(self.dim)]

    def boundary_sample(self, num=32):
        n = self.dim
        if n == 1:
            return np.unique(np.array([self.lower, self.upper]), axis=0)
        per_axis = max(2, int(round((num / (2 * n)) ** (1.0 / (n - 1)))))
        pts = []
        for i in range(n):
            others = [j for j in range(n) if j != i]
            face = box_grid(self.lower[others], self.upper[others], per_axis)
            for side in (self.lower[i], self.upper[i]):
                block = np.empty((face.shape[0], n))
                block[:, others] = face
                block[:, i] = side
                pts.append(block)
        return np.unique(np.vstack(pts), axis=0)


@dataclass(frozen=True, eq=False)
class HalfSpace(ClosedSet):
    """The closed half-space {x : <normal, x> <= offset}; `normal` points out."""

    normal: np.ndarray
    offset: float = 0.0
    window: float = 1.0

    def __post_init__(self):
        a = as_vector(self.normal)
        if not np.any(a):
            raise ValueError("half-space normal must be nonzero")
        object.__setattr__(self, "normal", a)

    @property
    def dim(self):
        return self.normal.shape[0]

    def _excess(self, x):
        return (self.normal @ x - self.offset) / np.linalg.norm(self.normal)

    def project(self, x):
        x = as_vector(x, self.dim)
        e = self._excess(x)
        if e <= 0:
            return x.copy()
        return x - e * self.normal / np.linalg.norm(self.normal)

    def on_boundary(self, x, tol=MEMBER_TOL):
        return abs(self._excess(as_vector(x, self.dim))) <= tol

    def normal_directions(self, s, tol=MEMBER_TOL):
        if not self.on_boundary(s, tol):
            return [np.zeros(self.dim)]
        return [self.normal / np.linalg.norm(self.normal)]

    def boundary_sample(self, num=32):
        a = self.normal / np.linalg.norm(self.normal)
        base = a * self.offset / np.linalg.norm(self.normal)
        if self.dim == 1:
            return base[None, :]
        # orthonormal basis of the hyperplane
        q, _ = np.linalg.qr(np.column_stack([a, np.eye(self.dim)]))
        tangents = q[:, 1:self.dim]
        per_axis = max(2, int(round(num ** (1.0 / (self.dim - 1)))))
        coeffs = box_grid(-self.window * np.ones(self.dim - 1), self.window * np.ones(self.dim - 1), per_axis)
        return base + coeffs @ tangents.T


@dataclass(frozen=True, eq=False)
class Sublevel(ClosedSet):
    """{x : phi(x) <= level} for a smooth phi with gradient `grad`."""

    phi: Callable
    grad: Callable
    level: float = 0.0
    dimension: int = 1
    center: Optional[np.ndarray] = None

    @property
    def dim(self):
        return self.dimension

    def _center(self):
        if self.center is not None:
            return as_vector(self.center, self.dim)
        res = minimize(lambda y: float(self.phi(y)), np.zeros(self.dim),
                       jac=lambda y: np.asarray(self.grad(y), dtype=float))
        return res.x

    def _to_boundary(self, y):
        for _ in range(60):
            g = np.asarray(self.grad(y), dtype=float)
            r = float(self.phi(y)) - self.level
            gg = g @ g
            if abs(r) <= 1e-14 * (1.0 + abs(self.level)) or gg == 0:
                break
            y = y - r * g / gg
        return y

    def project(self, x):
        # damped tangential descent along the level surface
        x = as_vector(x, self.dim)
        if float(self.phi(x)) <= self.level:
            return x.copy()
        y = self._to_boundary(x.copy())
        for _ in range(2000):
            g = np.asarray(self.grad(y), dtype=float)
            gn = np.linalg.norm(g)
            if gn == 0:
                break
            n = g / gn
            d = x - y
            t = d - (d @ n) * n
            if np.linalg.norm(t) <= 1e-10:
                break
            y = self._to_boundary(y + 0.5 * t)
        return y

    def on_boundary(self, x, tol=MEMBER_TOL):
        x = as_vector(x, self.dim)
        g = np.linalg.norm(np.asarray(self.grad(x), dtype=float))
        return abs(float(self.phi(x)) - self.level) <= tol * max(g, 1.0)

    def normal_directions(self, s, tol=MEMBER_TOL):
        if not self.on_boundary(s, tol):
            return [np.zeros(self.dim)]
        g = np.asarray(self.grad(s), dtype=float)
        gn = np.linalg.norm(g)
        if gn == 0:
            return None
        return [g / gn]

    def boundary_sample(self, num=32):
        c = self._center()
        out = []
        for u in sphere_directions(num, self.dim):
            f = lambda r: float(self.phi(c + r * u)) - self.level
            if f(0.0) > 0:
                continue
            hi = 1.0
            while f(hi) <= 0 and hi < 1e6:
                hi *= 2.0
            if f(hi) <= 0:
                continue
            r = brentq(f, 0.0, hi, xtol=1e-14)
            out.append(c + r * u)
        return np.array(out)


@dataclass(frozen=True, eq=False)
class FiniteUnion(ClosedSet):
    members: tuple = field(default_factory=tuple)

    def __post_init__(self):
        members = tuple(self.members)
        if not members or len({m.dim for m in members}) != 1:
            raise ValueError("union needs members of a common dimension")
        object.__setattr__(self, "members", members)

    @property
    def dim(self):
        return self.members[0].dim

    def project(self, x):
        x = as_vector(x, self.dim)
        cands = [m.project(x) for m in self.members]
        return cands[int(np.argmin([np.linalg.norm(c - x) for c in cands]))]

    def on_boundary(self, x, tol=MEMBER_TOL):
        x = as_vector(x, self.dim)
        if not self.contains(x, tol):
            return False
        inside = [m for m in self.members if m.contains(x, tol)]
        return all(m.on_boundary(x, tol) for m in inside)

    def boundary_sample(self, num=32):
        pts = [p for m in self.members for p in m.boundary_sample(num) if self.on_boundary(p)]
        return np.array(pts) if pts else np.empty((0, self.dim))


def complement_of_open_box(lower, upper):
    """Closed complement of the open box prod (lower_i, upper_i)."""
    lower, upper = as_vector(lower), as_vector(upper)
    eye = np.eye(len(lower))
    members = []
    for i in range(len(lower)):
        members.append(HalfSpace(eye[i], lower[i]))
        members.append(HalfSpace(-eye[i], -upper[i]))
    return FiniteUnion(tuple(members))


def distance(S, x):
    return S.distance(x)


# --------------------------------------------------------------------------
# functions


@dataclass(frozen=True, eq=False)
class LscFunction:
    """Lower semicontinuous Psi: R^n -> (-inf, inf]."""

    value: Callable
    gradient: Optional[Callable] = None
    indicator_of: Optional[ClosedSet] = None
    dim: int = 1
    name: str = ""

    @property
    def smooth(self):
        return self.gradient is not None

    def __call__(self, x):
        return float(self.value(as_vector(x, self.dim)))


def smooth_function(value, gradient, dim=1, name=""):
    return LscFunction(value, gradient, dim=dim, name=name)


def lsc_function(value, dim=1, name=""):
    return LscFunction(value, dim=dim, name=name)


def indicator(S, name=""):
    """I_S: 0 on S, 1 off S."""
    return LscFunction(lambda x: 0.0 if S.contains(x) else 1.0, indicator_of=S, dim=S.dim,
                       name=name or "indicator")


def quadratic(dim=1):
    """Psi(x) = ||x||^2."""
    return smooth_function(lambda x: float(x @ x), lambda x: 2.0 * np.asarray(x, dtype=float),
                           dim=dim, name="|x|^2")


# --------------------------------------------------------------------------
# witnesses


@dataclass(frozen=True, eq=False)
class ProxWitness:
    base: np.ndarray
    direction: np.ndarray
    sigma: float
    radius: float
    kind: str = "normal"


def local_offsets(dim, radius, octaves=SHELL_OCTAVES, total=1000):
    """About `total` offsets on geometric shells radius*2^-k, k in [0, octaves]."""
    if dim == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        dirs = sphere_directions({2: 48, 3: 96}.get(dim, 128), dim)
    nshell = max(4, total // len(dirs))
    radii = radius * 2.0 ** (-np.linspace(0.0, octaves, nshell))
    return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, dim)


def _fit_sigma(dists, excess, radius):
    """Quadratic constant covering `excess <= sigma * dist^2`, or None.

    The candidate is rejected when the required constant keeps growing as
    the test points close in on the base point.
    """
    mask = (dists > 0) & (dists <= radius * (1 + 1e-12)) & np.isfinite(excess)
    d, e = dists[mask], excess[mask]
    if d.size == 0:
        return SIGMA_FLOOR
    ratio = np.maximum(e, 0.0) / d ** 2
    octave = np.floor(np.log2(radius / d)).astype(int)
    # projections can land much closer than the finest shell; anchor on the shells
    top = min(octave.max(), SHELL_OCTAVES + 1)
    coarse = ratio[octave <= 3].max(initial=0.0)
    fine = ratio[octave >= top - 3].max(initial=0.0)
    if fine > 0 and fine > 4.0 * coarse:
        return None
    return max(SIGMA_HEADROOM * float(ratio.max()), SIGMA_FLOOR)


def _set_test_points(S, s, radius):
    offs = local_offsets(S.dim, radius)
    cand = s + offs
    pts = [S.project(q) for q in cand]
    pts += [q for q in cand if S.contains(q, 0.0)]
    return np.array(pts)


def validate_normal(S, s, zeta, radius=VALIDATION_RADIUS):
    """Fitted sigma for zeta as a proximal normal to S at s, or None."""
    pts = _set_test_points(S, s, radius)
    e = pts - s
    d = np.linalg.norm(e, axis=1)
    excess = e @ zeta - 8 * _EPS * np.linalg.norm(zeta) * (d + np.linalg.norm(s))
    return _fit_sigma(d, excess, radius)


def validate_subgradient(psi, x, zeta, radius=VALIDATION_RADIUS):
    """Fitted sigma for zeta as a proximal subgradient of psi at x, or None."""
    offs = local_offsets(len(x), radius)
    fx = psi(x)
    vals = np.array([psi(x + o) for o in offs])
    lin = offs @ zeta
    slack = 8 * _EPS * (abs(fx) + np.abs(np.where(np.isfinite(vals), vals, 0.0)) + np.abs(lin)
                        + np.linalg.norm(zeta) * np.linalg.norm(x))
    excess = fx + lin - vals - slack
    return _fit_sigma(np.linalg.norm(offs, axis=1), excess, radius)


def witness_holds(witness, target, grid_total=1000):
    """Re-check a witness inequality on a fresh local grid."""
    s, z, sig, r = witness.base, witness.direction, witness.sigma, witness.radius
    if witness.kind == "normal":
        pts = _set_test_points(target, s, r)
        e = pts - s
        d = np.linalg.norm(e, axis=1)
        keep = d <= r * (1 + 1e-12)
        lhs = e[keep] @ z
        rhs = sig * d[keep] ** 2 + 8 * _EPS * np.linalg.norm(z) * (d[keep] + np.linalg.norm(s))
        return bool(np.all(lhs <= rhs))
    offs = local_offsets(len(s), r, total=grid_total)
    fx = target(s)
    vals = np.array([target(s + o) for o in offs])
    d = np.linalg.norm(offs, axis=1)
    lin = offs @ z
    slack = 8 * _EPS * (abs(fx) + np.abs(np.where(np.isfinite(vals), vals, 0.0)) + np.abs(lin)
                        + np.linalg.norm(z) * np.linalg.norm(s))
    return bool(np.all(vals + slack >= fx + lin - sig * d ** 2))


def _dedupe(vectors, tol=1e-6):
    out = []
    for v in vectors:
        if not any(np.linalg.norm(v - u) <= tol * (1 + np.linalg.norm(u)) for u in out):
            out.append(v)
    return out


# --------------------------------------------------------------------------
# operations


def proximal_normal_generators(S, s, budget=32, radius=VALIDATION_RADIUS):
    """Validated generators of the proximal normal cone N_S^P(s)."""
    s = as_vector(s, S.dim)
    if not S.contains(s):
        raise PointNotInSet("base point is not in the set (distance %.3g)" % S.distance(s))
    dirs = S.normal_directions(s)
    if dirs is None:
        dirs = []
        rho = radius * 1e-3
        for u in sphere_directions(max(budget, 2), S.dim):
            q = s + rho * u
            if S.contains(q, 0.0):
                continue
            p = S.project(q)
            if np.linalg.norm(p - s) <= 1e-6 * rho:
                z = q - p
                dirs.append(z / np.linalg.norm(z))
        if not dirs:
            dirs = [np.zeros(S.dim)]
        dirs = _dedupe(dirs)
    out = []
    for z in dirs:
        sigma = validate_normal(S, s, z, radius)
        if sigma is not None:
            out.append(ProxWitness(s.copy(), np.asarray(z, dtype=float), sigma, radius, "normal"))
    return out


def _difference_candidates(psi, x, budget):
    n = len(x)
    eye = np.eye(n)
    fx = psi(x)
    cands = []
    for h in (1e-4, 1e-6, 1e-3, 1e-5):
        fp = np.array([psi(x + h * eye[i]) for i in range(n)])
        fm = np.array([psi(x - h * eye[i]) for i in range(n)])
        for c in ((fp - fm) / (2 * h), (fp - fx) / h, (fx - fm) / h):
            if np.all(np.isfinite(c)):
                cands.append(c)
    return _dedupe(cands, tol=1e-3)[:budget]


def proximal_subgradients(psi, x, budget=16, radius=VALIDATION_RADIUS):
    """Validated proximal subgradients of psi at x (possibly none)."""
    x = as_vector(x, psi.dim)
    if not np.isfinite(psi(x)):
        raise PointOutsideDomain("psi(x) is infinite")
    S = psi.indicator_of
    if S is not None:
        if not (S.contains(x) and S.on_boundary(x)):
            return [ProxWitness(x.copy(), np.zeros(psi.dim), SIGMA_FLOOR, radius, "subgradient")]
        out = []
        for w in proximal_normal_generators(S, x, budget, radius):
            zn = np.linalg.norm(w.direction)
            r = radius if zn == 0 else min(radius, 0.5 / zn)
            sigma = validate_subgradient(psi, x, w.direction, r)
            if sigma is not None:
                out.append(ProxWitness(x.copy(), w.direction, sigma, r, "subgradient"))
        return out
    if psi.smooth:
        cands = [np.asarray(psi.gradient(x), dtype=float).reshape(psi.dim)]
    else:
        cands = _difference_candidates(psi, x, budget)
    out = []
    for z in cands:
        sigma = validate_subgradient(psi, x, z, radius)
        if sigma is not None:
            out.append(ProxWitness(x.copy(), z, sigma, radius, "subgradient"))
    return out


def mvi_search(psi, x, Y, delta, lam, grid=41, budget=16):
    """Grid search for the point/subgradient pair of the mean value inequality.

    Returns ``(z, zeta)`` with z in [x, Y] + lam*B and zeta a validated
    proximal subgradient of psi at z such that ``<zeta, y - x> > delta``
    for all y in Y. Raises SearchExhausted when the grid finds none.
    """
    x = as_vector(x, psi.dim)
    if not lam > 0:
        raise PreconditionError("lam must be positive")
    if not Y.convex:
        raise PreconditionError("Y must be compact and convex")
    ys = np.vstack([Y.extremes(), Y.sample(64)])
    gap = min(psi(y) for y in ys) - psi(x)
    if not delta < gap:
        raise PreconditionError("need delta < min_Y psi - psi(x) = %.6g, got %.6g" % (gap, delta))
    ext = Y.extremes()
    offsets = np.vstack([np.zeros(psi.dim), lam * 0.5 * sphere_directions(8, psi.dim)])
    for s in np.linspace(0.0, 1.0, grid):
        for y in ext:
            for o in offsets:
                z = (1 - s) * x + s * y + o
                try:
                    ws = proximal_subgradients(psi, z, budget)
                except PointOutsideDomain:
                    continue
                for w in ws:
                    worst = -Y.support(-w.direction) - w.direction @ x
                    if worst > delta:
                        return z, w.direction
    raise SearchExhausted("no (z, zeta) pair found at grid=%d; refine the grid" % grid)


def clarke_tangent_contains(S, x, v, samples=12, scale=0.1, budget=16):
    """Budgeted falsification test for v in the Clarke tangent cone at x.

    True means no falsifying sequence was found at this budget.
    """
    x = as_vector(x, S.dim)
    v = as_vector(v, S.dim)
    if not S.contains(x):
        raise PointNotInSet("base point is not in the set")
    dirs = sphere_directions(budget, S.dim)
    gaps = []
    for i in range(samples):
        t = scale * 2.0 ** (-i)
        xs = [x] + [S.project(x + t * u) for u in dirs]
        gaps.append(max(S.distance(xi + t * v) / t for xi in xs))
    # a tangent direction leaves a gap that decays with t; a falsifier does not
    last = min(gaps[-3:])
    return not (last > 1e-6 * (1.0 + np.linalg.norm(v)) and last > 0.5 * gaps[-4])
