"""Small H-polytopes with exact rational vertex enumeration.

The polytopes met in this package have dimension at most seven and a
handful of facets, so vertices are found by brute force over subsets of
active constraints, solved in rational arithmetic.  Exponential integrals
use Brion's vertex formula, falling back to a triangulation whenever a
vertex is not simple.
"""

from __future__ import annotations

import json
import math
import threading
from contextlib import contextmanager
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .errors import DecompositionFailure, InvalidArgument, PerturbationRequired

__all__ = [
    "Polytope",
    "to_fraction",
    "solve_exact",
    "rank_exact",
    "exponential_integral",
    "simplex_exponential_integral",
    "mp_precision",
]


# mpmath keeps its working precision in one process-wide context, so
# concurrent workdps blocks would clobber each other.
_MP_LOCK = threading.RLock()


@contextmanager
def mp_precision(dps: int):
    """``mpmath.workdps`` guarded by a process-wide lock."""
    with _MP_LOCK, mpmath.workdps(dps):
        yield


def to_fraction(x) -> Fraction:
    """Exact rational from an int, Fraction, or float (via its shortest repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(float(x)):
            raise InvalidArgument("polytope data must be finite")
        return Fraction(repr(float(x)))
    if isinstance(x, str):
        return Fraction(x)
    raise InvalidArgument(f"cannot convert {x!r} to a rational")


def solve_exact(A: Sequence[Sequence[Fraction]], b: Sequence[Fraction]):
    """Solve a square rational system; ``None`` when singular."""
    n = len(A)
    M = [list(row) + [b[i]] for i, row in enumerate(A)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if M[r][col] != 0), None)
        if pivot is None:
            return None
        M[col], M[pivot] = M[pivot], M[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [vr - f * vc for vr, vc in zip(M[r], M[col])]
    return tuple(M[i][n] for i in range(n))


def rank_exact(rows: Sequence[Sequence[Fraction]]) -> int:
    M = [list(r) for r in rows]
    if not M:
        return 0
    ncol = len(M[0])
    rank = 0
    for col in range(ncol):
        pivot = next((r for r in range(rank, len(M)) if M[r][col] != 0), None)
        if pivot is None:
            continue
        M[rank], M[pivot] = M[pivot], M[rank]
        for r in range(rank + 1, len(M)):
            if M[r][col] != 0:
                f = M[r][col] / M[rank][col]
                M[r] = [vr - f * vc for vr, vc in zip(M[r], M[rank])]
        rank += 1
    return rank


def _det_exact(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    M = [list(r) for r in rows]
    n = len(M)
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if M[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            M[col], M[pivot] = M[pivot], M[col]
            det = -det
        det *= M[col][col]
        for r in range(col + 1, n):
            if M[r][col] != 0:
                f = M[r][col] / M[col][col]
                M[r] = [vr - f * vc for vr, vc in zip(M[r], M[col])]
    return det


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


class Polytope:
    """Bounded full-dimensional polytope ``{x : <a_k, x> <= b_k}``.

    Parameters
    ----------
    halfspaces : iterable of (covector, offset)
        Entries may be ints, Fractions or floats; floats are converted to
        the rational with the same shortest decimal representation.
    vertices : optional
        Precomputed vertices.  They are checked against the halfspaces but
        otherwise trusted.
    """

    def __init__(self, halfspaces: Iterable, vertices=None):
        rows, offsets = [], []
        for a, b in halfspaces:
            rows.append(tuple(to_fraction(v) for v in a))
            offsets.append(to_fraction(b))
        if not rows:
            raise InvalidArgument("a polytope needs at least one halfspace")
        n = len(rows[0])
        if any(len(r) != n for r in rows):
            raise InvalidArgument("halfspace covectors have inconsistent lengths")
        self.A = tuple(rows)
        self.b = tuple(offsets)
        self.dim = n
        self._lock = threading.RLock()
        self._vertices = None
        self._triangulations = {}
        if vertices is not None:
            verts = tuple(tuple(to_fraction(v) for v in row) for row in vertices)
            for v in verts:
                if any(_dot(a, v) > b + Fraction(1, 10**10) for a, b in zip(self.A, self.b)):
                    raise InvalidArgument("supplied vertex violates a halfspace")
            self._vertices = verts

    # -- basic data --------------------------------------------------------
    @property
    def halfspaces(self):
        return list(zip(self.A, self.b))

    @property
    def A_float(self) -> np.ndarray:
        return np.array([[float(v) for v in r] for r in self.A])

    @property
    def b_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.b])

    def scaled(self, t) -> "Polytope":
        """The dilate ``t P`` (exact when ``t`` is rational)."""
        t = to_fraction(t)
        if t <= 0:
            raise InvalidArgument("dilation factor must be positive")
        verts = None if self._vertices is None else [tuple(t * x for x in v) for v in self._vertices]
        return Polytope([(a, t * b) for a, b in zip(self.A, self.b)], vertices=verts)

    def contains(self, points, tol: float = 1e-10) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all(pts @ self.A_float.T <= self.b_float + tol, axis=1)

    # -- vertices ----------------------------------------------------------
    @property
    def vertices(self) -> tuple:
        with self._lock:
            if self._vertices is None:
                self._vertices = self._enumerate_vertices()
            return self._vertices

    def vertex_array(self) -> np.ndarray:
        return np.array([[float(x) for x in v] for v in self.vertices])

    def _enumerate_vertices(self) -> tuple:
        found = {}
        m = len(self.A)
        for subset in combinations(range(m), self.dim):
            sol = solve_exact([self.A[i] for i in subset], [self.b[i] for i in subset])
            if sol is None:
                continue
            if all(_dot(a, sol) <= b for a, b in zip(self.A, self.b)):
                found[sol] = None
        if not found:
            raise DecompositionFailure("polytope has no vertices (empty or unbounded)")
        return tuple(sorted(found))

    def active(self, vertex) -> tuple:
        return tuple(i for i, (a, b) in enumerate(zip(self.A, self.b)) if _dot(a, vertex) == b)

    @property
    def simple_flags(self) -> tuple:
        return tuple(len(self.active(v)) == self.dim for v in self.vertices)

    def is_simple(self) -> bool:
        return all(self.simple_flags)

    def tangent_rays(self, index: int) -> tuple:
        """Extreme rays of the tangent cone at ``vertices[index]``."""
        v = self.vertices[index]
        act = self.active(v)
        rays = []
        for subset in combinations(act, self.dim - 1):
            rows = [self.A[i] for i in subset]
            if rank_exact(rows) < self.dim - 1:
                continue
            direction = _null_vector(rows)
            for sign in (1, -1):
                r = tuple(sign * x for x in direction)
                if all(_dot(self.A[i], r) <= 0 for i in act):
                    key = _normalize_ray(r)
                    if key not in rays:
                        rays.append(key)
                    break
        return tuple(rays)

    def tangent_cone_simplices(self, index: int) -> tuple:
        """Simplicial cones (as ray tuples) triangulating the tangent cone at a vertex.

        A simple vertex gives its own rays.  Otherwise the cone is cut by
        ``<g, y> <= 1`` with ``g`` minus the sum of the active normals, and the
        resulting pyramid is pulled from its apex.
        """
        with self._lock:
            cache = self.__dict__.setdefault("_cone_cache", {})
            if index in cache:
                return cache[index]
            v = self.vertices[index]
            act = self.active(v)
            if len(act) == self.dim:
                out = (self.tangent_rays(index),)
            else:
                g = [-sum(self.A[i][c] for i in act) for c in range(self.dim)]
                pyramid = Polytope([(self.A[i], 0) for i in act] + [(g, 1)])
                origin = tuple(Fraction(0) for _ in range(self.dim))
                first = pyramid.vertices.index(origin)
                out = tuple(
                    tuple(q for q in simplex if q != origin)
                    for simplex in pyramid.triangulate("pulling", first=first)
                )
            cache[index] = out
            return out

    # -- faces and triangulations -----------------------------------------
    def _affine_dim(self, ids) -> int:
        pts = [self.vertices[i] for i in ids]
        base = pts[0]
        return rank_exact([tuple(x - y for x, y in zip(p, base)) for p in pts[1:]])

    def _facets_of(self, ids: frozenset, dim: int) -> list:
        facets = []
        for a, b in zip(self.A, self.b):
            tight = frozenset(i for i in ids if _dot(a, self.vertices[i]) == b)
            if not tight or tight == ids or tight in facets:
                continue
            if self._affine_dim(tight) == dim - 1:
                facets.append(tight)
        return facets

    def triangulate(self, method: str = "barycentric", first: int | None = None) -> tuple:
        """Decompose into simplices with disjoint interiors.

        Parameters
        ----------
        method : {"barycentric", "pulling"}
            ``barycentric`` cones each face over its centroid (a stellar
            subdivision of every face); ``pulling`` cones every face from its
            lowest-index vertex and uses only the original vertices.
        first : int, optional
            For ``pulling``, the vertex index pulled first, so that every
            simplex contains it.
        """
        if method not in ("barycentric", "pulling"):
            raise InvalidArgument(f"unknown triangulation method {method!r}")
        with self._lock:
            key = (method, first)
            if key not in self._triangulations:
                memo = {}
                allids = frozenset(range(len(self.vertices)))
                order = (lambda i: (i != first, i))
                simplices = self._triangulate_face(allids, self.dim, method, memo, order)
                self._triangulations[key] = tuple(simplices)
            return self._triangulations[key]

    def _triangulate_face(self, ids: frozenset, dim: int, method: str, memo: dict, order) -> list:
        if ids in memo:
            return memo[ids]
        if dim == 0:
            out = [(self.vertices[next(iter(ids))],)]
        elif len(ids) == dim + 1:
            out = [tuple(self.vertices[i] for i in sorted(ids))]
        else:
            if method == "barycentric":
                k = Fraction(len(ids))
                apex = tuple(sum(self.vertices[i][c] for i in ids) / k for c in range(self.dim))
                facets = self._facets_of(ids, dim)
            else:
                apex_id = min(ids, key=order)
                apex = self.vertices[apex_id]
                facets = [f for f in self._facets_of(ids, dim) if apex_id not in f]
            out = []
            for facet in facets:
                for simplex in self._triangulate_face(facet, dim - 1, method, memo, order):
                    out.append((apex,) + simplex)
        memo[ids] = out
        return out

    def volume(self) -> Fraction:
        total = Fraction(0)
        for simplex in self.triangulate("pulling"):
            base = simplex[0]
            edges = [tuple(x - y for x, y in zip(p, base)) for p in simplex[1:]]
            total += abs(_det_exact(edges))
        return total / math.factorial(self.dim)

    # -- serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "halfspaces": [{"a": [float(x) for x in a], "b": float(b)} for a, b in zip(self.A, self.b)],
            "vertices": [[float(x) for x in v] for v in self.vertices],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "Polytope":
        try:
            hs = [(h["a"], h["b"]) for h in data["halfspaces"]]
        except (KeyError, TypeError) as exc:
            raise InvalidArgument("polytope JSON needs 'halfspaces' with 'a' and 'b'") from exc
        return cls(hs, vertices=data.get("vertices"))

    @classmethod
    def from_json(cls, text: str) -> "Polytope":
        return cls.from_dict(json.loads(text))


def _null_vector(rows) -> tuple:
    """A nonzero rational vector orthogonal to ``n - 1`` independent rows."""
    n = len(rows[0])
    for free in range(n):
        square = [list(r) for r in rows]
        rhs = [-r[free] for r in rows]
        cols = [c for c in range(n) if c != free]
        sol = solve_exact([[r[c] for c in cols] for r in square], rhs)
        if sol is not None:
            vec = [Fraction(0)] * n
            vec[free] = Fraction(1)
            for c, v in zip(cols, sol):
                vec[c] = v
            return tuple(vec)
    raise DecompositionFailure("constraint rows do not determine a line")


def _normalize_ray(r) -> tuple:
    scale = max(abs(x) for x in r)
    return tuple(x / scale for x in r)


def _to_mpf(x):
    if isinstance(x, mpmath.mpf):
        return x
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def _mp_dot(xi, v):
    return mpmath.fsum(x * mpmath.mpf(c.numerator) / c.denominator for x, c in zip(xi, v))


def _cone_term(xi, apex, rays, det, tol, scale=1):
    denom = mpmath.mpf(1)
    for r in rays:
        p = -_mp_dot(xi, r)
        size = mpmath.sqrt(mpmath.fsum(x * x for x in xi)) * max(abs(float(c)) for c in r)
        if abs(p) <= tol * size or p == 0:
            raise PerturbationRequired("direction is orthogonal to a tangent ray")
        denom *= p
    return mpmath.exp(scale * _mp_dot(xi, apex)) * abs(det) / denom


def simplex_exponential_integral(simplex, xi, tol: float = 1e-12, scale=1):
    """``int_{tS} exp(<xi, x>) dx`` over the dilate of a simplex, in mpmath.

    The edge determinant and the edge pairings scale by the same power of
    ``t``, so only the exponent sees the dilation.
    """
    total = mpmath.mpf(0)
    for j, apex in enumerate(simplex):
        rays = [tuple(p - q for p, q in zip(other, apex)) for k, other in enumerate(simplex) if k != j]
        det = _det_exact(rays)
        total += _cone_term(xi, apex, rays, mpmath.mpf(det.numerator) / det.denominator, tol, scale)
    return total


def exponential_integral(P: Polytope, xi, tol: float = 1e-12, dps: int = 30, method: str = "auto", scale=1):
    """Brion's formula ``int_{tP} exp(<xi, x>) dx`` evaluated in mpmath.

    Parameters
    ----------
    P : Polytope
    xi : sequence
        Direction; entries may be mpmath numbers.
    tol : float
        A tangent ray with ``|<xi, r>| <= tol |xi| |r|`` counts as orthogonal and
        raises ``PerturbationRequired``.
    dps : int
        Working precision in decimal digits.
    method : {"auto", "vertex", "barycentric", "pulling"}
        ``vertex`` (the default) sums tangent-cone contributions, splitting
        the cone of a non-simple vertex into simplicial cones; the other two
        sum simplex contributions over a triangulation of ``P``.
    scale : number
        Dilation ``t``; the vertex data of ``P`` is reused.

    Returns
    -------
    mpmath.mpf
    """
    with mp_precision(dps):
        xi = [_to_mpf(x) for x in xi]
        t = _to_mpf(scale)
        if method == "auto":
            method = "vertex"
        total = mpmath.mpf(0)
        if method == "vertex":
            for idx, v in enumerate(P.vertices):
                for rays in P.tangent_cone_simplices(idx):
                    det = _det_exact(rays)
                    total += _cone_term(xi, v, rays, mpmath.mpf(det.numerator) / det.denominator, tol, t)
        else:
            for simplex in P.triangulate(method):
                total += simplex_exponential_integral(simplex, xi, tol, t)
        return +total
