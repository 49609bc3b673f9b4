"""Gauss rules on intervals, simplices and the half line.

All rules are cached by their integer parameters and returned as read-only
arrays, so they can be shared between threads.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_genlaguerre, roots_jacobi, roots_legendre

__all__ = ["legendre_rule", "simplex_rule", "laguerre_rule", "map_simplex"]


def _readonly(*arrays):
    for a in arrays:
        a.setflags(write=False)
    return arrays


@lru_cache(maxsize=256)
def legendre_rule(m: int, lo: float = 0.0, hi: float = 1.0):
    """Gauss-Legendre nodes and weights on ``[lo, hi]``."""
    x, w = roots_legendre(int(m))
    half = 0.5 * (hi - lo)
    return _readonly(lo + half * (x + 1.0), half * w)


@lru_cache(maxsize=128)
def simplex_rule(n: int, m: int):
    """Conical product rule on the unit simplex ``{y >= 0, sum(y) <= 1}``.

    The collapsed (Duffy) coordinates ``y_1 = u_1``, ``y_k = u_k prod_{j<k}
    (1 - u_j)`` absorb the Jacobian into Gauss-Jacobi weights, so ``m`` nodes
    per axis integrate polynomials of degree ``2m - 1`` exactly.

    Returns
    -------
    nodes : ndarray, shape (m**n, n)
    weights : ndarray, shape (m**n,)
        Sum to ``1/n!``.
    """
    if n < 1:
        raise ValueError("simplex dimension must be positive")
    axes_u, axes_w = [], []
    for k in range(n):
        alpha = n - 1 - k
        x, w = roots_jacobi(int(m), alpha, 0.0)
        axes_u.append(0.5 * (x + 1.0))
        axes_w.append(w / 2.0 ** (alpha + 1))
    grids = np.meshgrid(*axes_u, indexing="ij")
    wgrids = np.meshgrid(*axes_w, indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    y = np.empty_like(u)
    remaining = np.ones(u.shape[0])
    for k in range(n):
        y[:, k] = u[:, k] * remaining
        remaining = remaining * (1.0 - u[:, k])
    return _readonly(y, weights)


def map_simplex(vertices: np.ndarray, m: int):
    """Nodes and weights of ``simplex_rule`` pushed onto a simplex.

    Parameters
    ----------
    vertices : array, shape (n + 1, n)
    m : int
        Nodes per collapsed axis.
    """
    vertices = np.asarray(vertices, dtype=float)
    n = vertices.shape[1]
    y, w = simplex_rule(n, m)
    edges = vertices[1:] - vertices[0]
    jac = abs(np.linalg.det(edges))
    return vertices[0] + y @ edges, w * jac


@lru_cache(maxsize=64)
def laguerre_rule(m: int, alpha: float = 0.0):
    """Generalized Gauss-Laguerre rule for ``int_0^inf r^alpha e^{-r} f(r) dr``."""
    x, w = roots_genlaguerre(int(m), float(alpha))
    return _readonly(x, w)
