"""Chamber polytopes, the maximizer X0, its cone basis and Brion volumes.

Two coordinate systems are used.  The *chamber chart* is the trace-zero
chart of ``root_algebra``.  The *cone chart* writes ``X = sum_i x_i beta_i``
with ``x_i = mu_i(X)``; in it the truncated chamber polytope is
``{x_i <= t} cap {alpha_k(X) >= 0}`` and the cone at X0 is the negative
orthant.  Lebesgue measure transforms by ``dX = sqrt(det Gram(beta)) dx``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product

import mpmath
import numpy as np
from scipy.optimize import nnls

from .errors import InvalidDimension, OracleFailure, OutOfRange, PerturbationRequired
from .polytope import Polytope, exponential_integral, mp_precision, solve_exact, to_fraction
from .root_algebra import ChamberVector, build_root_datum, weyl_apply

__all__ = [
    "ConeDatum",
    "ShrinkParams",
    "BrionResult",
    "AppendixBConstants",
    "middle_index",
    "compute_x0",
    "x0_oracle",
    "mu_basis",
    "chamber_polytope",
    "cone_polytope",
    "in_p_plus",
    "in_cone_description",
    "to_cone_chart",
    "from_cone_chart",
    "covector_to_cone_chart",
    "brion_exponential_integral",
    "brion_integral_robust",
    "alternating_brion_sum",
    "brion_volume",
    "volume_leading_term",
    "shrink_parameters",
    "appendix_b_constants",
    "levi_blocks",
]


def middle_index(d: int) -> int:
    """The integer ``s``: ``d/2`` for even ``d`` and ``(d+1)/2`` for odd ``d``."""
    return d // 2 if d % 2 == 0 else (d + 1) // 2


def _check_d(d: int, lo: int = 3, hi: int = 8) -> int:
    if not isinstance(d, (int, np.integer)) or not lo <= d <= hi:
        raise InvalidDimension(f"d must be an integer in [{lo}, {hi}], got {d!r}")
    return int(d)


@lru_cache(maxsize=None)
def _x0_exact(d: int) -> tuple:
    s = middle_index(d)
    if d % 2 == 0:
        return tuple([Fraction(1)] * s + [Fraction(-1)] * s)
    return tuple([Fraction(1)] * (s - 1) + [Fraction(0)] + [Fraction(-1)] * (s - 1))


def compute_x0(d: int) -> ChamberVector:
    """Closed-form maximizer of ``<rho, .>`` on the unit chamber polytope.

    ``(1, ..., 1, -1, ..., -1)`` for even ``d`` and the same with a zero in
    the middle for odd ``d``.
    """
    if isinstance(d, (int, np.integer)) and 2 <= d < 3:
        raise InvalidDimension("X0 is defined for d >= 3")
    d = _check_d(d)
    return ChamberVector(tuple(float(x) for x in _x0_exact(d)))


def _rho_exact(d: int) -> tuple:
    return tuple(Fraction(d + 1 - 2 * i, 2) for i in range(1, d + 1))


@lru_cache(maxsize=None)
def _ambient_polytope(d: int) -> Polytope:
    """Unit chamber polytope in the free coordinates ``(X_1, ..., X_{d-1})``.

    ``X_d = -sum`` and the constraints are ``X_1 <= 1``, ``-X_d <= 1`` and
    ``X_{k+1} - X_k <= 0``.  This description shares nothing with the cone
    chart, which is what makes it useful as an oracle.
    """
    n = d - 1
    hs = []
    e = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    ones = [Fraction(1)] * n
    hs.append((e[0], 1))
    hs.append((ones, 1))
    for k in range(n - 1):
        hs.append(([e[k + 1][j] - e[k][j] for j in range(n)], 0))
    hs.append(([-ones[j] - e[n - 1][j] for j in range(n)], 0))
    return Polytope(hs)


def x0_oracle(d: int) -> ChamberVector:
    """Maximize ``<rho, .>`` over the unit chamber polytope by vertex enumeration."""
    d = _check_d(d)
    P = _ambient_polytope(d)
    rho = _rho_exact(d)
    best, arg, ties = None, None, 0
    for v in P.vertices:
        full = tuple(v) + (-sum(v),)
        val = sum(r * x for r, x in zip(rho, full))
        if best is None or val > best:
            best, arg, ties = val, full, 1
        elif val == best:
            ties += 1
    if ties != 1:
        raise OracleFailure("maximizer of <rho, .> is not a unique vertex", ties=ties)
    return ChamberVector(tuple(float(x) for x in arg))


@dataclass(frozen=True, eq=False)
class ConeDatum:
    """The basis ``mu_i`` of linear forms and its dual basis ``beta_i``.

    Attributes
    ----------
    x0 : ChamberVector
    mu : ndarray, shape (d - 1, d)
        Trace-zero covectors.
    beta_dual : ndarray, shape (d - 1, d)
        Rows are the vectors ``beta_i``, with ``mu_j(beta_i) = delta_ij``.
    gram_det_sqrt : float
        ``sqrt(det(beta beta^T))``, the Jacobian of the cone chart.
    rho_coefficients : tuple of int
        ``rho = sum_i m_i mu_i``.
    mu_exact, beta_exact : tuple of tuple of Fraction
    """

    d: int
    x0: ChamberVector
    mu: np.ndarray
    beta_dual: np.ndarray
    gram_det_sqrt: float
    rho_coefficients: tuple
    mu_exact: tuple
    beta_exact: tuple
    gram_det: Fraction


@lru_cache(maxsize=None)
def mu_basis(d: int) -> ConeDatum:
    """Build the cone basis at X0.

    ``mu_1`` is the first coordinate, ``mu_{d-1}`` minus the last one.  The
    middle forms are ``+X_i`` for ``i`` below the middle index and ``-X_{i+1}``
    above it, skipping the zero coordinate of X0 when ``d`` is odd.
    """
    d = _check_d(d)
    s = middle_index(d)
    # (coordinate, sign) pairs, zero based
    picks = [(0, 1)]
    for i in range(2, d - 1):
        upper = s - 1 if d % 2 == 1 else s
        if i <= upper:
            picks.append((i - 1, 1))
        else:
            picks.append((i, -1))
    picks.append((d - 1, -1))
    mu_exact = []
    for k, sign in picks:
        row = [Fraction(-sign, d)] * d
        row[k] += sign
        mu_exact.append(tuple(row))
    # beta_j solves mu_i(beta_j) = delta_ij with trace zero
    beta_exact = []
    system = [list(r) for r in mu_exact] + [[Fraction(1)] * d]
    for j in range(d - 1):
        rhs = [Fraction(int(i == j)) for i in range(d - 1)] + [Fraction(0)]
        sol = solve_exact(system, rhs)
        if sol is None:
            raise OracleFailure("mu basis is degenerate")
        beta_exact.append(sol)
    gram = [[sum(a * b for a, b in zip(bi, bj)) for bj in beta_exact] for bi in beta_exact]
    gram_det = _det(gram)
    rho = _rho_exact(d)
    coeffs = tuple(sum(r * x for r, x in zip(rho, b)) for b in beta_exact)
    if any(c.denominator != 1 for c in coeffs):
        raise OracleFailure("rho is not an integral combination of the mu basis")
    x0 = compute_x0(d)
    return ConeDatum(
        d=d,
        x0=x0,
        mu=_ro(np.array([[float(x) for x in r] for r in mu_exact])),
        beta_dual=_ro(np.array([[float(x) for x in r] for r in beta_exact])),
        gram_det_sqrt=math.sqrt(gram_det),
        rho_coefficients=tuple(int(c) for c in coeffs),
        mu_exact=tuple(mu_exact),
        beta_exact=tuple(beta_exact),
        gram_det=gram_det,
    )


def _ro(a):
    a.setflags(write=False)
    return a


def _det(M) -> Fraction:
    from .polytope import _det_exact

    return _det_exact(M)


def to_cone_chart(X, d: int | None = None) -> np.ndarray:
    """``x_i = mu_i(X)`` for an array of chamber-chart points."""
    X = np.asarray(X.array if isinstance(X, ChamberVector) else X, dtype=float)
    cone = mu_basis(d or X.shape[-1])
    return X @ cone.mu.T


def from_cone_chart(x, d: int) -> np.ndarray:
    """``X = sum_i x_i beta_i``."""
    return np.asarray(x, dtype=float) @ mu_basis(d).beta_dual


def covector_to_cone_chart(xi, d: int) -> tuple:
    """Components ``<xi, beta_i>`` of a covector; exact when ``xi`` is rational."""
    cone = mu_basis(d)
    vals = [to_fraction(v) if not isinstance(v, Fraction) else v for v in xi]
    return tuple(sum(a * b for a, b in zip(vals, beta)) for beta in cone.beta_exact)


@lru_cache(maxsize=None)
def chamber_polytope(d: int) -> Polytope:
    """Unit chamber polytope in the cone chart: ``x_i <= 1`` and ``alpha_k(X) >= 0``."""
    d = _check_d(d)
    cone = mu_basis(d)
    n = d - 1
    hs = []
    for i in range(n):
        hs.append(([Fraction(int(i == j)) for j in range(n)], 1))
    for k in range(d - 1):
        # -alpha_k(sum x_i beta_i) <= 0
        hs.append(([-(b[k] - b[k + 1]) for b in cone.beta_exact], 0))
    return Polytope(hs)


def cone_polytope(d: int, t=1) -> Polytope:
    """The dilate ``t P`` of the unit chamber polytope, in the cone chart."""
    P = chamber_polytope(d)
    return P if t == 1 else P.scaled(t)


def in_p_plus(X, tol: float = 1e-9) -> np.ndarray:
    """Membership in the unit chamber polytope from its defining inequalities."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    chamber = np.all(X[:, :-1] - X[:, 1:] >= -tol, axis=1)
    return chamber & (X[:, 0] <= 1 + tol) & (-X[:, -1] <= 1 + tol)


def in_cone_description(X, tol: float = 1e-9) -> np.ndarray:
    """Membership in ``(X0 + C0) cap closed chamber`` via ``mu_i(X) <= 1``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    cone = mu_basis(X.shape[1])
    chamber = np.all(X[:, :-1] - X[:, 1:] >= -tol, axis=1)
    return chamber & np.all(X @ cone.mu.T <= 1 + tol, axis=1)


# -- Brion ---------------------------------------------------------------------

@dataclass(frozen=True)
class BrionResult:
    value: float
    disagreement: float
    perturbed: bool
    flagged: bool


def brion_exponential_integral(P: Polytope, xi, scale=1, method: str = "auto") -> float:
    """``int_{tP} exp(<xi, x>) dx`` by Brion's formula.

    Raises
    ------
    PerturbationRequired
        When ``xi`` is orthogonal to some tangent ray (tolerance ``1e-12``).
    """
    return float(exponential_integral(P, xi, tol=1e-12, dps=30, method=method, scale=scale))


def _perturbation(n: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    return [float(v) for v in rng.standard_normal(n)]


def brion_integral_robust(P: Polytope, xi, scale=1, eps: float = 1e-20, seed: int = 0,
                          method: str = "auto", as_mp: bool = False):
    """Brion's formula with a perturbation fallback for non-generic ``xi``.

    A generic ``xi`` is evaluated directly.  Otherwise ``xi`` is shifted by
    ``eps * eta`` and ``(eps / 2) * eta`` for a seeded random ``eta`` and the
    two values are combined by Richardson extrapolation, so the error is
    ``O(eps^2)``.  The computation runs in mpmath with enough digits to
    absorb the ``eps^{-n}`` cancellation.

    Returns
    -------
    BrionResult, or an mpmath number when ``as_mp`` is set.
    """
    n = P.dim
    dps = 40 + 25 * n
    with mp_precision(dps):
        try:
            direct = exponential_integral(P, xi, tol=1e-12, dps=dps, method=method, scale=scale)
            return direct if as_mp else BrionResult(float(direct), 0.0, False, False)
        except PerturbationRequired:
            pass
        eta = _perturbation(n, seed)
        e1 = mpmath.mpf(eps)
        tol = mpmath.mpf(10) ** (-(dps // 2))
        vals = []
        for e in (e1, e1 / 2):
            shifted = [_mpf(x) + e * mpmath.mpf(h) for x, h in zip(xi, eta)]
            vals.append(exponential_integral(P, shifted, tol=tol, dps=dps, method=method, scale=scale))
        extrapolated = 2 * vals[1] - vals[0]
        if as_mp:
            return extrapolated
        gap = float(abs(vals[1] - vals[0]) / max(abs(extrapolated), mpmath.mpf(1e-300)))
        return BrionResult(float(extrapolated), gap, True, gap > 1e-8)


def _mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def alternating_brion_sum(d: int, t, method: str = "auto", as_mp: bool = False):
    """``int_{tP} sum_w sign(w) exp(2 <w rho, X>) dx`` in the cone chart."""
    d = _check_d(d)
    P = chamber_polytope(d)
    datum = build_root_datum(d)
    rho = _rho_exact(d)
    n = d - 1
    dps = 40 + 25 * n
    t = to_fraction(t)
    with mp_precision(dps):
        total = mpmath.mpf(0)
        for perm, sign in datum.weyl:
            wr = [None] * d
            for i, p in enumerate(perm):
                wr[p] = 2 * rho[i]
            xi = covector_to_cone_chart(wr, d)
            total += sign * brion_integral_robust(P, xi, scale=t, method=method, as_mp=True)
        return +total if as_mp else float(total)


def brion_volume(d: int, t, method: str = "auto") -> float:
    """``int_{tP} J(X) dX`` in the chamber chart, from the alternating Brion sum."""
    d = _check_d(d)
    if to_fraction(t) <= 0:
        return 0.0
    cone = mu_basis(d)
    N = d * (d - 1) // 2
    with mp_precision(40 + 25 * (d - 1)):
        s = alternating_brion_sum(d, t, method=method, as_mp=True)
        return float(s * mpmath.sqrt(mpmath.mpf(cone.gram_det.numerator) / cone.gram_det.denominator) / 2**N)


# -- leading term --------------------------------------------------------------

def levi_blocks(d: int) -> tuple:
    """Maximal runs of equal coordinates of X0, as zero-based index tuples."""
    x0 = _x0_exact(_check_d(d))
    blocks, cur = [], [0]
    for i in range(1, d):
        if x0[i] == x0[i - 1]:
            cur.append(i)
        else:
            blocks.append(tuple(cur))
            cur = [i]
    blocks.append(tuple(cur))
    return tuple(blocks)


def _tangent_cone_at_x0(d: int) -> list:
    """Halfspace rows ``a . y <= 0`` of the tangent cone of P at X0 (cone chart)."""
    P = chamber_polytope(d)
    ones = tuple(Fraction(1) for _ in range(d - 1))
    return [P.A[i] for i in P.active(ones)]


def volume_leading_term(d: int) -> tuple:
    """Exponent and coefficient of ``m(E_t) ~ c exp(2 t <rho, X0>)``.

    Only the vertex ``t X0`` and the Weyl elements fixing ``<w rho, X0>`` at
    its maximum contribute to the top exponential.  For those ``w`` the
    integrand decays on the tangent cone at X0, which is cut by the
    hyperplane ``<rho, y> = -1`` and triangulated into simplicial cones.

    Returns
    -------
    exponent : float
        ``2 <rho, X0>``.
    coefficient : float
        Strictly positive.
    """
    d = _check_d(d, 3, 5)
    cone = mu_basis(d)
    datum = build_root_datum(d)
    rho = _rho_exact(d)
    x0 = _x0_exact(d)
    top = sum(r * x for r, x in zip(rho, x0))
    n = d - 1
    rows = _tangent_cone_at_x0(d)
    m = [Fraction(c) for c in cone.rho_coefficients]
    section = Polytope([(r, 0) for r in rows] + [([-c for c in m], 1)])
    origin = tuple(Fraction(0) for _ in range(n))
    first = section.vertices.index(origin)
    simplices = section.triangulate("pulling", first=first)
    total = mpmath.mpf(0)
    with mp_precision(50):
        for perm, sign in datum.weyl:
            wr = [None] * d
            for i, p in enumerate(perm):
                wr[p] = rho[i]
            if sum(a * b for a, b in zip(wr, x0)) != top:
                continue
            xi = covector_to_cone_chart([2 * v for v in wr], d)
            for simplex in simplices:
                rays = [q for q in simplex if q != origin]
                det = _det([list(q) for q in rays])
                denom = mpmath.mpf(1)
                for q in rays:
                    val = -sum(a * b for a, b in zip(xi, q))
                    if val <= 0:
                        raise OracleFailure("integrand does not decay on the tangent cone")
                    denom *= mpmath.mpf(val.numerator) / val.denominator
                total += sign * (mpmath.mpf(abs(det).numerator) / abs(det).denominator) / denom
        coeff = float(total * cone.gram_det_sqrt / 2 ** (d * (d - 1) // 2))
    if coeff <= 0:
        raise OracleFailure("leading coefficient is not positive", coefficient=coeff)
    return float(2 * top), coeff


# -- shrink parameters ------------------------------------------------------------

@dataclass(frozen=True)
class ShrinkParams:
    eta: float
    delta: float
    c_min: float


def shrink_parameters(d: int, eta: float) -> ShrinkParams:
    """The gap ``delta`` and the wall distance ``c_min`` of the shrunken box.

    ``delta`` is ``<rho, X0>`` minus the largest value of ``<rho, .>`` on the
    pieces ``P cap {mu_i <= 1 - eta}``; ``c_min`` is the smallest value of a
    simple root outside the Levi block roots on ``X0 - sum_i [0, eta] beta_i``.
    Both are exact linear programs over vertex sets.
    """
    d = _check_d(d)
    if not 0 < eta < 1:
        raise OutOfRange(f"eta must lie in (0, 1), got {eta}")
    e = to_fraction(eta)
    P = chamber_polytope(d)
    cone = mu_basis(d)
    m = [Fraction(c) for c in cone.rho_coefficients]
    n = d - 1
    top = sum(m)
    best = None
    for i in range(n):
        row = [Fraction(int(i == j)) for j in range(n)]
        piece = Polytope(list(P.halfspaces) + [(row, 1 - e)])
        val = max(sum(a * b for a, b in zip(m, v)) for v in piece.vertices)
        best = val if best is None else max(best, val)
    delta = top - best
    blocks = levi_blocks(d)
    inner = {(b[k], b[k + 1]) for b in blocks for k in range(len(b) - 1)}
    outer_roots = [k for k in range(d - 1) if (k, k + 1) not in inner]
    c_min = None
    for corner in product((1 - e, Fraction(1)), repeat=n):
        X = [sum(corner[i] * cone.beta_exact[i][c] for i in range(n)) for c in range(d)]
        for k in outer_roots:
            val = X[k] - X[k + 1]
            c_min = val if c_min is None else min(c_min, val)
    if delta <= 0 or c_min <= 0:
        raise OutOfRange("eta is too large: the shrunken box leaves the chamber",
                         delta=float(delta), c_min=float(c_min))
    return ShrinkParams(float(eta), float(delta), float(c_min))


# -- angles and linear forms --------------------------------------------------------

@dataclass(frozen=True)
class AppendixBConstants:
    """Angle and linear-form constants.

    Attributes
    ----------
    gamma : float
        ``pi/2`` minus the largest angle between X0 and a ray of the
        trace-zero slice of the orthant union.
    gamma_c0 : float
        The same angle margin over the rays ``beta_i`` of ``-C0``.
    C1, C2 : float
        Maxima over the rays ``u = -beta_i`` of ``C0`` and all ``w`` of
        ``|<w rho, u_M>| / (-<rho, u>)`` and ``|<w rho, u_M>| / (-<rho, u_M>)``.
    cones_agree : bool
        Whether the orthant slice and ``-C0`` have the same rays.
    """

    gamma: float
    gamma_c0: float
    C1: float
    C2: float
    rays_slice: tuple
    rays_c0: tuple
    cones_agree: bool
    projection: str


def _orthant_generators(d: int) -> list:
    """Sign patterns of the orthant(s) whose union meets the trace-zero plane in ``-C0``."""
    if d % 2 == 0:
        h = d // 2
        return [[1] * h + [-1] * h]
    s = (d + 1) // 2
    base = [1] * (s - 1)
    tail = [-1] * (d - s)
    return [base + [1] + tail, base + [-1] + tail]


def _extreme_rays_c2(d: int) -> np.ndarray:
    cands = set()
    for signs in _orthant_generators(d):
        pos = [i for i, sgn in enumerate(signs) if sgn > 0]
        neg = [i for i, sgn in enumerate(signs) if sgn < 0]
        for i in pos:
            for j in neg:
                v = [0] * d
                v[i], v[j] = 1, -1
                cands.add(tuple(v))
    cands = sorted(cands)
    arr = np.array(cands, dtype=float)
    keep = []
    for k in range(len(arr)):
        others = np.delete(arr, k, axis=0)
        _, resid = nnls(others.T, arr[k])
        if resid > 1e-10:
            keep.append(arr[k])
    return np.array(keep)


def _levi_projector(d: int, projection: str) -> np.ndarray:
    x0 = compute_x0(d).array
    if projection == "x0-line":
        return np.outer(x0, x0) / np.dot(x0, x0)
    # centre of the Levi: trace-zero vectors constant on every block
    cols = []
    for b in levi_blocks(d):
        v = np.zeros(d)
        v[list(b)] = 1.0
        cols.append(v)
    B = np.array(cols).T
    B = B - B.mean(axis=0)
    Q, R = np.linalg.qr(B)
    keep = np.abs(np.diag(R)) > 1e-12
    Q = Q[:, keep]
    return Q @ Q.T


def _angle_margin(rays: np.ndarray, x0: np.ndarray) -> float:
    cosines = rays @ x0 / (np.linalg.norm(rays, axis=1) * np.linalg.norm(x0))
    return math.pi / 2 - float(np.max(np.arccos(np.clip(cosines, -1, 1))))


def appendix_b_constants(d: int, projection: str = "x0-line") -> AppendixBConstants:
    """Angle margin ``gamma`` and the linear-form constants ``C1``, ``C2``.

    Parameters
    ----------
    d : int
        ``3 <= d <= 6``.
    projection : {"x0-line", "levi"}
        How ``Y_M`` is formed from ``Y``: orthogonal projection onto the line
        through X0, or onto the full centre of the Levi subalgebra (constant
        on the blocks of X0).  The two agree for even ``d``.

    Notes
    -----
    The extreme rays of the trace-zero slice of the orthant union are found
    from the candidate differences ``e_i - e_j`` by a non-negative least
    squares test.  For odd ``d`` they coincide with the ``beta_i``; for even
    ``d`` the slice is strictly smaller than ``-C0`` because the orthant also
    constrains the coordinate that the ``mu`` basis skips.  A ray with
    ``u_M = 0`` contributes nothing to ``C2``.
    """
    d = _check_d(d, 3, 6)
    if projection not in ("x0-line", "levi"):
        raise OutOfRange(f"unknown projection {projection!r}")
    rays = _extreme_rays_c2(d)
    beta = np.array(mu_basis(d).beta_dual)
    agree = rays.shape == beta.shape and (
        {tuple(np.round(r, 12)) for r in rays} == {tuple(np.round(b, 12)) for b in beta})
    x0 = compute_x0(d).array
    gamma = _angle_margin(rays, x0)
    gamma_c0 = _angle_margin(beta, x0)
    datum = build_root_datum(d)
    rho = datum.rho
    proj = _levi_projector(d, projection)
    orbit = np.array([weyl_apply(p, rho) for p, _ in datum.weyl])
    C1, C2 = 0.0, 0.0
    for b in beta:
        u = -b
        uM = proj @ u
        num = float(np.max(np.abs(orbit @ uM)))
        C1 = max(C1, num / (-float(rho @ u)))
        den = -float(rho @ uM)
        if num > 1e-12:
            C2 = max(C2, num / den)
    return AppendixBConstants(gamma, gamma_c0, float(C1), float(C2),
                              tuple(map(tuple, rays.tolist())), tuple(map(tuple, beta.tolist())),
                              bool(agree), projection)
