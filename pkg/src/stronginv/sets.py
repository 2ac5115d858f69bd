"""Concrete set values with exact support functions.

Every class here is an immutable, nonempty subset of R^n that can answer
``support(p) = sup_{v in set} <v, p>`` in closed form, report its nearest
point to a query, and produce a dense sample of its members.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .errors import DimensionMismatch, NonconvexValue


def as_vector(x, dim=None):
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise DimensionMismatch("expected a vector, got shape %s" % (v.shape,))
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatch("expected dimension %d, got %d" % (dim, v.shape[0]))
    return v


def _as_points(points):
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("need a nonempty list of vectors")
    return arr


def hull_nearest(vertices, w):
    """Closest point of conv(vertices) to w.

    Solved as a nonnegative least-squares problem with the simplex
    constraint appended as a heavily weighted row.
    """
    V = np.asarray(vertices, dtype=float)
    if V.shape[0] == 1:
        return V[0].copy()
    scale = 1.0 + np.abs(V).max() + np.abs(w).max()
    big = 1e6 * scale
    A = np.vstack([V.T, big * np.ones(V.shape[0])])
    b = np.concatenate([w, [big]])
    lam, _ = nnls(A, b, maxiter=50 * V.shape[0])
    total = lam.sum()
    if total <= 0:
        lam = np.full(V.shape[0], 1.0 / V.shape[0])
    else:
        lam = lam / total
    return lam @ V


class SetRepr:
    """Common interface; subclasses are frozen dataclasses."""

    convex = True

    @property
    def dim(self):
        raise NotImplementedError

    def support(self, p):
        raise NotImplementedError

    def nearest(self, w):
        raise NotImplementedError

    def nearest_rows(self, W):
        """Row-wise nearest points for an (m, n) array."""
        W = np.asarray(W, dtype=float).reshape(-1, self.dim)
        return np.array([self.nearest(w) for w in W]).reshape(W.shape)

    def distance(self, w):
        w = as_vector(w, self.dim)
        return float(np.linalg.norm(w - self.nearest(w)))

    def contains(self, w, tol=1e-9):
        return self.distance(w) <= tol

    def max_norm(self):
        raise NotImplementedError

    def extremes(self):
        """Finite point set whose convex hull contains the extreme points."""
        raise NotImplementedError

    def sample(self, num=64):
        raise NotImplementedError

    def scaled(self, c):
        raise NotImplementedError

    def project(self, w):
        """Exact projection; only defined for convex values."""
        if not self.convex:
            raise NonconvexValue("projection requires a convex set value, got %r" % (self,))
        return self.nearest(as_vector(w, self.dim))


@dataclass(frozen=True)
class FinitePoints(SetRepr):
    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", _as_points(self.points))

    @property
    def convex(self):
        return bool(np.all(np.abs(self.points - self.points[0]) == 0))

    @property
    def dim(self):
        return self.points.shape[1]

    def support(self, p):
        p = as_vector(p, self.dim)
        return float(np.max(self.points @ p))

    def nearest(self, w):
        w = as_vector(w, self.dim)
        d = np.linalg.norm(self.points - w, axis=1)
        return self.points[int(np.argmin(d))].copy()

    def nearest_rows(self, W):
        W = np.asarray(W, dtype=float).reshape(-1, self.dim)
        d = np.linalg.norm(W[:, None, :] - self.points[None, :, :], axis=2)
        return self.points[np.argmin(d, axis=1)]

    def max_norm(self):
        return float(np.max(np.linalg.norm(self.points, axis=1)))

    def extremes(self):
        return self.points.copy()

    def sample(self, num=64):
        return self.points.copy()

    def scaled(self, c):
        return FinitePoints(c * self.points)

    def __eq__(self, other):
        return isinstance(other, FinitePoints) and np.array_equal(self.points, other.points)

    __hash__ = None


@dataclass(frozen=True)
class Segment(SetRepr):
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a, b = as_vector(self.a), as_vector(self.b)
        if a.shape != b.shape:
            raise DimensionMismatch("segment endpoints differ in dimension")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def dim(self):
        return self.a.shape[0]

    def support(self, p):
        p = as_vector(p, self.dim)
        return float(max(self.a @ p, self.b @ p))

    def nearest(self, w):
        w = as_vector(w, self.dim)
        d = self.b - self.a
        dd = d @ d
        if dd == 0:
            return self.a.copy()
        s = np.clip((w - self.a) @ d / dd, 0.0, 1.0)
        return self.a + s * d

    def nearest_rows(self, W):
        W = np.asarray(W, dtype=float).reshape(-1, self.dim)
        d = self.b - self.a
        dd = d @ d
        if dd == 0:
            return np.tile(self.a, (len(W), 1))
        s = np.clip((W - self.a) @ d / dd, 0.0, 1.0)
        return self.a + s[:, None] * d

    def max_norm(self):
        return float(max(np.linalg.norm(self.a), np.linalg.norm(self.b)))

    def extremes(self):
        return np.vstack([self.a, self.b])

    def sample(self, num=64):
        s = np.linspace(0.0, 1.0, max(num, 2))[:, None]
        return self.a + s * (self.b - self.a)

    def scaled(self, c):
        return Segment(c * self.a, c * self.b)

    def __eq__(self, other):
        return (isinstance(other, Segment) and np.array_equal(self.a, other.a)
                and np.array_equal(self.b, other.b))

    __hash__ = None


@dataclass(frozen=True)
class Box(SetRepr):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, hi = as_vector(self.lower), as_vector(self.upper)
        if lo.shape != hi.shape:
            raise DimensionMismatch("box bounds differ in dimension")
        if np.any(lo > hi):
            raise ValueError("box requires lower <= upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.shape[0]

    def support(self, p):
        p = as_vector(p, self.dim)
        return float(np.sum(np.maximum(self.lower * p, self.upper * p)))

    def nearest(self, w):
        w = as_vector(w, self.dim)
        return np.clip(w, self.lower, self.upper)

    def nearest_rows(self, W):
        W = np.asarray(W, dtype=float).reshape(-1, self.dim)
        return np.clip(W, self.lower, self.upper)

    def max_norm(self):
        return float(np.linalg.norm(np.maximum(np.abs(self.lower), np.abs(self.upper))))

    def extremes(self):
        import itertools

        corners = itertools.product(*zip(self.lower, self.upper))
        return np.unique(np.array(list(corners), dtype=float), axis=0)

    def sample(self, num=64):
        from .sampling import box_grid

        per_axis = max(2, int(round(num ** (1.0 / self.dim))))
        return box_grid(self.lower, self.upper, per_axis)

    def scaled(self, c):
        lo, hi = c * self.lower, c * self.upper
        return Box(np.minimum(lo, hi), np.maximum(lo, hi))

    def __eq__(self, other):
        return (isinstance(other, Box) and np.array_equal(self.lower, other.lower)
                and np.array_equal(self.upper, other.upper))

    __hash__ = None


@dataclass(frozen=True)
class Ball(SetRepr):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        if not self.radius >= 0:
            raise ValueError("ball radius must be >= 0")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return self.center.shape[0]

    def support(self, p):
        p = as_vector(p, self.dim)
        return float(self.center @ p + self.radius * np.linalg.norm(p))

    def nearest(self, w):
        w = as_vector(w, self.dim)
        d = w - self.center
        r = np.linalg.norm(d)
        if r <= self.radius:
            return w.copy()
        return self.center + d * (self.radius / r)

    def max_norm(self):
        return float(np.linalg.norm(self.center) + self.radius)

    def extremes(self):
        from .sampling import sphere_directions

        dirs = sphere_directions(64, self.dim)
        return self.center + self.radius * dirs

    def sample(self, num=64):
        from .sampling import ball_points

        return self.center + self.radius * np.vstack([np.zeros(self.dim), ball_points(num - 1, self.dim)])

    def scaled(self, c):
        return Ball(c * self.center, abs(c) * self.radius)

    def __eq__(self, other):
        return (isinstance(other, Ball) and np.array_equal(self.center, other.center)
                and self.radius == other.radius)

    __hash__ = None


@dataclass(frozen=True)
class HullOfPoints(SetRepr):
    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", _as_points(self.points))

    @property
    def dim(self):
        return self.points.shape[1]

    def support(self, p):
        p = as_vector(p, self.dim)
        return float(np.max(self.points @ p))

    def nearest(self, w):
        return hull_nearest(self.points, as_vector(w, self.dim))

    def max_norm(self):
        return float(np.max(np.linalg.norm(self.points, axis=1)))

    def extremes(self):
        return self.points.copy()

    def sample(self, num=64):
        from .sampling import halton

        m = self.points.shape[0]
        w = -np.log(np.clip(halton(num, min(m, 12)), 1e-12, 1.0))
        if m > 12:
            w = np.hstack([w, np.zeros((num, m - 12))])
        w /= w.sum(axis=1, keepdims=True)
        return np.vstack([self.points, w @ self.points])

    def scaled(self, c):
        return HullOfPoints(c * self.points)

    def __eq__(self, other):
        return isinstance(other, HullOfPoints) and np.array_equal(self.points, other.points)

    __hash__ = None


@dataclass(frozen=True)
class Union(SetRepr):
    members: tuple = field(default_factory=tuple)

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("union needs at least one member")
        dims = {m.dim for m in members}
        if len(dims) != 1:
            raise DimensionMismatch("union members differ in dimension")
        object.__setattr__(self, "members", members)

    convex = False

    @property
    def dim(self):
        return self.members[0].dim

    def support(self, p):
        return max(m.support(p) for m in self.members)

    def nearest(self, w):
        w = as_vector(w, self.dim)
        cands = [m.nearest(w) for m in self.members]
        d = [np.linalg.norm(c - w) for c in cands]
        return cands[int(np.argmin(d))]

    def max_norm(self):
        return max(m.max_norm() for m in self.members)

    def extremes(self):
        return np.vstack([m.extremes() for m in self.members])

    def sample(self, num=64):
        per = max(2, num // len(self.members))
        return np.vstack([m.sample(per) for m in self.members])

    def scaled(self, c):
        return Union(tuple(m.scaled(c) for m in self.members))


def point(*coords):
    """Singleton set value {v}."""
    return FinitePoints(np.atleast_2d(np.asarray(coords, dtype=float).ravel()))


def interval(a, b):
    """Scalar closed interval [a, b] as a segment in R^1."""
    return Segment([a], [b])
