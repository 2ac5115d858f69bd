"""Set-valued dynamics x -> F(x) and the quantities the invariance tests
need from them: the upper Hamiltonian, cone membership and linear-growth
constants."""

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import nnls

from .sets import FinitePoints, SetRepr, Union, as_vector, point

DEFAULT_TOL = 1e-9
# cone{F(x)} is searched over eta in {0} U {2^j : |j| <= ETA_EXPONENT}
ETA_EXPONENT = 20


@dataclass(frozen=True)
class Multifunction:
    """Dynamics F with linear growth ||v|| <= c1 + c2 ||x|| on F(x).

    Parameters
    ----------
    dim : int
        State dimension n.
    oracle : callable
        Maps a state vector to a :class:`~stronginv.sets.SetRepr`.
    c1, c2 : float
        Linear growth constants.
    lower_semicontinuous : bool
        Caller's declaration used by the equivalence suite.
    name : str
        Label carried into reports.
    """

    dim: int
    oracle: Callable
    c1: float = 0.0
    c2: float = 0.0
    lower_semicontinuous: bool = False
    name: str = ""

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("growth constants must be nonnegative")

    def __call__(self, x):
        return eval_set(self, x)


def constant(value, name="constant"):
    """F(x) = {value} for every x."""
    v = as_vector(value)
    s = point(*v)
    return Multifunction(len(v), lambda x: s, c1=float(np.linalg.norm(v)), c2=0.0,
                         lower_semicontinuous=True, name=name)


def eval_set(F, x):
    x = as_vector(x, F.dim)
    value = F.oracle(x)
    if not isinstance(value, SetRepr):
        raise TypeError("oracle must return a SetRepr, got %r" % type(value))
    if value.dim != F.dim:
        from .errors import DimensionMismatch

        raise DimensionMismatch("oracle returned a set in R^%d for R^%d dynamics" % (value.dim, F.dim))
    return value


def hamiltonian(F, x, p):
    """Upper Hamiltonian sup_{v in F(x)} <v, p>."""
    p = as_vector(p, F.dim)
    return eval_set(F, x).support(p)


def hamiltonian_over_set(F, x, D, tol=DEFAULT_TOL):
    """True iff H_F(x, d) <= tol for every d in D (vacuously true for empty D)."""
    return all(hamiltonian(F, x, d) <= tol for d in D)


def _dist_scaled(S, w, eta):
    if eta == 0.0:
        return float(np.linalg.norm(w))
    return eta * S.distance(w / eta)


def _ray_distance(s, w):
    ss = s @ s
    eta = max(0.0, float(w @ s) / ss) if ss > 0 else 0.0
    return float(np.linalg.norm(w - eta * s))


def _golden_min(fun, lo, hi, iters=200):
    """Golden-section search for a convex function on [lo, hi]."""
    g = 0.5 * (np.sqrt(5.0) - 1.0)
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if b - a <= 1e-15 * max(1.0, abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fun(d)
    return min(fc, fd)


def cone_distance(S, w):
    """dist(w, cone{S}) where cone{S} is the union of eta*S, eta >= 0.

    Finite point sets use exact ray distances and unions split into their
    members. For convex values eta -> dist(w, eta*S) is convex, so a
    geometric eta-grid brackets the minimum and golden-section search
    polishes it.
    """
    w = as_vector(w, S.dim)
    if isinstance(S, FinitePoints):
        return min(_ray_distance(p, w) for p in S.points)
    if isinstance(S, Union):
        return min(cone_distance(m, w) for m in S.members)
    etas = np.concatenate([[0.0], 2.0 ** np.arange(-ETA_EXPONENT, ETA_EXPONENT + 1)])
    vals = np.array([_dist_scaled(S, w, e) for e in etas])
    i = int(np.argmin(vals))
    best = vals[i]
    if best == 0.0:
        return 0.0
    lo = etas[max(i - 1, 0)]
    hi = etas[min(i + 1, len(etas) - 1)]
    if hi > lo:
        best = min(best, _golden_min(lambda e: _dist_scaled(S, w, e), lo, hi))
    return float(best)


def cone_contains(F, x, w, tol=DEFAULT_TOL):
    if not tol > 0:
        raise ValueError("tol must be positive")
    return cone_distance(eval_set(F, x), w) <= tol


def growth_estimate(F, samples):
    """Fit ||v|| <= c1 + c2 ||x|| over sampled states.

    The line is a nonnegative least-squares fit to the extreme velocity
    norms, after which c1 is raised until the envelope dominates every
    sample.
    """
    xs = [as_vector(x, F.dim) for x in samples]
    if not xs:
        raise ValueError("need at least one sample")
    r = np.array([np.linalg.norm(x) for x in xs])
    vmax = np.array([eval_set(F, x).max_norm() for x in xs])
    if np.ptp(r) == 0:
        c2 = 0.0
    else:
        A = np.column_stack([np.ones_like(r), r])
        (_, c2), _ = nnls(A, vmax)
    c1 = max(0.0, float(np.max(vmax - c2 * r)))
    return c1, float(c2)
