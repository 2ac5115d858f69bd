"""Time mollification of Caratheodory feedbacks with the standard bump kernel.

The kernel is ``eta(t) = C exp(1 / (t^2 - 1))`` on (-1, 1), rescaled as
``eta_eps(t) = eta(t / eps) / eps``. Feedbacks are extended by zero outside
their horizon [0, T] before convolving.
"""

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .sets import as_vector

GAUSS_NODES = 64
REGULARITY = ("measurable", "piecewise-constant", "continuous")


def _bump_raw(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(1.0 / (ti * ti - 1.0))
    return out


@lru_cache(maxsize=None)
def bump_constant():
    """C with C * int_{-1}^{1} exp(1/(t^2-1)) dt = 1."""
    mass, _ = quad(lambda t: float(_bump_raw(t)), -1.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    return 1.0 / mass


def bump(t):
    return bump_constant() * _bump_raw(t)


def kernel(t, eps):
    """eta_eps(t) = eta(t / eps) / eps."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    return bump(np.asarray(t, dtype=float) / eps) / eps


@dataclass(frozen=True)
class BumpKernel:
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("width must be positive")

    @property
    def constant(self):
        return bump_constant()

    def __call__(self, t):
        return kernel(t, self.width)

    def mass(self):
        return quad(lambda t: float(self(t)), -self.width, self.width,
                    epsabs=1e-14, epsrel=1e-13, limit=200)[0]


def _zero_modulus(r):
    return 0.0


@dataclass(frozen=True, eq=False)
class Feedback:
    """Single-valued field f(t, x) on [0, T] x R^n, zero for t outside [0, T].

    Parameters
    ----------
    field : callable
        ``field(t, x) -> vector``; only evaluated for t in [0, T].
    horizon : float
        T > 0.
    dim : int
        State dimension.
    modulus : callable
        Modulus of continuity in x, uniform in t, on the compact set of
        interest.
    c1, c2 : float
        Linear growth constants of the field.
    gamma, anchor :
        Radius and centre of the ball on which f selects from cone{F}.
    regularity : str
        One of ``measurable``, ``piecewise-constant``, ``continuous``.
    breakpoints : tuple of float
        Jump times in t for piecewise-constant fields.
    """

    field: Callable
    horizon: float
    dim: int = 1
    modulus: Callable = _zero_modulus
    c1: float = 0.0
    c2: float = 0.0
    gamma: float = 1.0
    anchor: Optional[np.ndarray] = None
    regularity: str = "measurable"
    breakpoints: tuple = ()
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.regularity not in REGULARITY:
            raise ValueError("unknown regularity tag %r" % self.regularity)
        anchor = np.zeros(self.dim) if self.anchor is None else as_vector(self.anchor, self.dim)
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "breakpoints", tuple(sorted(float(b) for b in self.breakpoints)))

    def __call__(self, t, x):
        if t < 0.0 or t > self.horizon:
            return np.zeros(self.dim)
        return np.asarray(self.field(t, as_vector(x, self.dim)), dtype=float).reshape(self.dim)


@lru_cache(maxsize=8)
def _gauss_legendre(n):
    return np.polynomial.legendre.leggauss(n)


def _panels(f, lo, hi):
    cuts = [lo, hi]
    for b in (0.0, f.horizon) + f.breakpoints:
        if lo < b < hi:
            cuts.append(b)
    return sorted(set(cuts))


def mollify(f, eps, t, x, nodes=GAUSS_NODES):
    """f_eps(t, x) = int f(s, x) eta_eps(t - s) ds by composite Gauss-Legendre.

    The support [t - eps, t + eps] is split at 0, T and the declared
    breakpoints; weights are normalized by the kernel mass on the full
    support so constants are reproduced exactly away from the horizon ends.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if nodes < 16:
        raise ValueError("need at least 16 quadrature nodes")
    x = as_vector(x, f.dim)
    gx, gw = _gauss_legendre(nodes)
    cuts = _panels(f, t - eps, t + eps)
    total = 0.0
    acc = np.zeros(f.dim)
    for a, b in zip(cuts[:-1], cuts[1:]):
        half = 0.5 * (b - a)
        s = 0.5 * (a + b) + half * gx
        w = half * gw * kernel(t - s, eps)
        total += w.sum()
        if b <= 0.0 or a >= f.horizon:
            continue
        if f.regularity == "piecewise-constant":
            # panels are split at every jump, so one evaluation per panel is exact
            acc += w.sum() * f(0.5 * (a + b), x)
            continue
        for si, wi in zip(s, w):
            if wi != 0.0:
                acc += wi * f(si, x)
    return acc / total


def mollified_feedback(f, eps, nodes=GAUSS_NODES):
    """Wrap mollify as a Feedback sharing the modulus and growth metadata."""
    if not eps > 0:
        raise ValueError("eps must be positive")

    def field_eps(t, x):
        return mollify(f, eps, t, x, nodes)

    meta = dict(f.meta)
    meta["mollified_eps"] = eps
    return replace(f, field=field_eps, regularity="continuous", breakpoints=(),
                   name=(f.name + "_eps" if f.name else "mollified"), meta=meta)
