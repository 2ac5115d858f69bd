"""Deterministic point sets used for hull sampling, validation grids and
boundary sweeps. Nothing here draws random numbers."""

import itertools

import numpy as np

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def van_der_corput(i, base):
    q, denom = 0.0, 1.0
    while i > 0:
        denom *= base
        i, rem = divmod(i, base)
        q += rem / denom
    return q


def halton(num, dim, skip=1):
    """First `num` points of the Halton sequence in [0, 1)^dim."""
    if dim > len(_PRIMES):
        raise ValueError("halton sequence supports at most %d dimensions" % len(_PRIMES))
    out = np.empty((num, dim))
    for i in range(num):
        for j in range(dim):
            out[i, j] = van_der_corput(i + skip, _PRIMES[j])
    return out


def sphere_directions(num, dim):
    """Roughly uniform unit vectors in R^dim.

    1-D gives the pair {+1, -1}; 2-D uses equally spaced angles; higher
    dimensions use a Fibonacci lattice (3-D) or normalized Halton points
    pushed through the inverse normal CDF.
    """
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        ang = 2.0 * np.pi * np.arange(num) / num
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if dim == 3:
        i = np.arange(num) + 0.5
        z = 1.0 - 2.0 * i / num
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        phi = np.pi * (1.0 + 5.0 ** 0.5) * i
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    from scipy.special import ndtri

    pts = ndtri(np.clip(halton(num, dim), 1e-12, 1 - 1e-12))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def ball_points(num, dim):
    """Low-discrepancy points filling the closed unit ball (no randomness)."""
    if num <= 0:
        return np.empty((0, dim))
    if dim == 1:
        u = halton(num, 1)[:, 0]
        return (2.0 * u - 1.0)[:, None]
    u = halton(num, dim + 1)
    from scipy.special import ndtri

    g = ndtri(np.clip(u[:, :dim], 1e-12, 1 - 1e-12))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    radius = u[:, dim] ** (1.0 / dim)
    return g * radius[:, None]


def box_grid(lower, upper, num, open_=False):
    """Tensor grid with `num` points per axis; `open_` drops the endpoints."""
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    axes = []
    for lo, hi in zip(lower, upper):
        if open_:
            axes.append(np.linspace(lo, hi, num + 2)[1:-1])
        else:
            axes.append(np.linspace(lo, hi, num))
    return np.array(list(itertools.product(*axes)), dtype=float)
