"""Matrix factorizations, the sets E_t, Haar sampling and volume integrals.

Measure convention: Haar measure is normalized so that the Cartan density
is ``J(X) dX`` on the closed chamber, with probability Haar measure on each
``SO(d)`` factor.  Every volume reported here is in these units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.linalg import rq

from .chamber_geometry import (
    brion_volume,
    chamber_polytope,
    compute_x0,
    middle_index,
    mu_basis,
)
from .errors import (
    AccuracyFailure,
    DecompositionFailure,
    InvalidArgument,
    InvalidDimension,
    OutOfRange,
    SamplerFailure,
)
from .polytope import mp_precision
from .quadrature import legendre_rule, map_simplex, simplex_rule
from .root_algebra import ChamberVector, build_root_datum

__all__ = [
    "MEASURE_CONVENTION",
    "GroupElement",
    "CartanCoords",
    "IwasawaCoords",
    "QuadratureSpec",
    "SampleBatch",
    "IntersectionEstimate",
    "SupportReport",
    "I2Result",
    "cartan_decompose",
    "cartan_norm",
    "iwasawa_h0",
    "iwasawa_diagonal",
    "membership",
    "membership_batch",
    "jacobian",
    "jacobian_product",
    "jacobian_alternating",
    "volume_e_t",
    "haar_orthogonal",
    "make_rng",
    "spawn_seeds",
    "sample_radial",
    "sample_e_t",
    "sample_e_t_batch",
    "intersection_ratio",
    "support_bound_scan",
    "i2_integral",
]

MEASURE_CONVENTION = (
    "c_C = c_I = 1: dg = J(X) dk1 dX dk2 with probability Haar measure on SO(d)"
)
DET_TOL = 1e-9


# -- group elements and factorizations ----------------------------------------

@dataclass(frozen=True, eq=False)
class GroupElement:
    """A matrix of determinant one (up to ``1e-9``)."""

    matrix: np.ndarray

    def __post_init__(self):
        g = np.array(self.matrix, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise InvalidArgument("a group element must be a square matrix")
        if not np.all(np.isfinite(g)):
            raise InvalidArgument("matrix entries must be finite")
        det = np.linalg.det(g)
        # rounding in det grows with the condition number
        if abs(det - 1) > max(DET_TOL, 1e-14 * np.linalg.cond(g)):
            raise InvalidArgument("determinant must be 1", det=float(det))
        g.setflags(write=False)
        object.__setattr__(self, "matrix", g)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    def inverse(self) -> "GroupElement":
        return GroupElement(np.linalg.inv(self.matrix))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.matrix @ other.matrix)


@dataclass(frozen=True, eq=False)
class CartanCoords:
    k1: np.ndarray
    X: ChamberVector
    k2: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.k1 * np.exp(self.X.array)) @ self.k2

    @property
    def norm(self) -> float:
        return self.X.norm_inf()


@dataclass(frozen=True, eq=False)
class IwasawaCoords:
    n: np.ndarray
    H0: ChamberVector
    k: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.n * np.exp(self.H0.array)) @ self.k


def _as_matrix(g) -> np.ndarray:
    return g.matrix if isinstance(g, GroupElement) else np.asarray(g, dtype=float)


def cartan_decompose(g) -> CartanCoords:
    """``g = k1 exp(X) k2`` with ``k1, k2`` in ``SO(d)`` and ``X`` decreasing.

    Singular values come from the SVD in descending order; when the unitary
    factors have determinant ``-1`` the last column of ``k1`` and the last row
    of ``k2`` are flipped together, which leaves the product unchanged.
    """
    m = _as_matrix(g)
    try:
        u, s, vt = np.linalg.svd(m)
    except np.linalg.LinAlgError as exc:
        raise DecompositionFailure("singular value decomposition failed") from exc
    if s[-1] <= 0 or not np.isfinite(s).all() or s[0] / s[-1] > 1e15:
        raise DecompositionFailure("matrix is singular or too ill-conditioned")
    if np.linalg.det(u) < 0:
        u = u.copy()
        vt = vt.copy()
        u[:, -1] *= -1
        vt[-1, :] *= -1
    X = np.log(s)
    X = X - X.mean()
    return CartanCoords(u, ChamberVector(tuple(X)), vt)


def cartan_norm(g) -> float:
    """``|g| = ||X||_inf`` of the Cartan radial part, i.e. ``max(X_1, -X_d)``."""
    m = _as_matrix(g)
    if m.ndim == 3:
        s = np.linalg.svd(m, compute_uv=False)
        logs = np.log(s)
        logs -= logs.mean(axis=1, keepdims=True)
        return np.maximum(logs[:, 0], -logs[:, -1])
    return cartan_decompose(m).norm


def iwasawa_h0(g) -> IwasawaCoords:
    """``g = n exp(H0) k`` with ``n`` unit upper triangular and ``k`` orthogonal.

    The triangular-times-orthogonal factorization ``g = R Q`` is computed
    with positive diagonal; then ``H0 = log diag(R)``.
    """
    m = _as_matrix(g)
    R, Q = rq(m)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    R = R * signs
    Q = signs[:, None] * Q
    diag = np.diag(R)
    if np.any(diag <= 0):
        raise DecompositionFailure("triangular factor has a zero diagonal entry")
    n = R / diag
    H = np.log(diag)
    H = H - H.mean()
    return IwasawaCoords(n, ChamberVector(tuple(H)), Q)


def iwasawa_diagonal(g) -> np.ndarray:
    """``H0(g)`` for a stack of matrices, shape ``(..., d)``.

    Uses ``g = J R1^T Q1^T`` from the QR factorization of the row-reversed
    transpose ``g^T J``, so ``diag(R)`` is ``diag(R1)`` read backwards.
    """
    g = np.asarray(g, dtype=float)
    r = np.linalg.qr(np.swapaxes(g[..., ::-1, :], -1, -2), mode="r")
    diag = np.abs(np.diagonal(r, axis1=-2, axis2=-1))[..., ::-1]
    return np.log(diag)


def membership(g, t: float, tol: float = 1e-12) -> tuple:
    """``(g in E_t, g in Frobenius ball)``.

    The Frobenius ball is ``max(||g||_F, ||g^{-1}||_F) <= e^t``.
    """
    if t < 0:
        raise OutOfRange("t must be non-negative")
    X = cartan_decompose(g).X.array
    frob = math.sqrt(float(np.sum(np.exp(2 * X))))
    frob_inv = math.sqrt(float(np.sum(np.exp(-2 * X))))
    in_et = max(X[0], -X[-1]) <= t + tol
    in_ball = max(frob, frob_inv) <= math.exp(t) * (1 + tol)
    return bool(in_et), bool(in_ball)


def membership_batch(g, t: float, tol: float = 1e-12) -> tuple:
    """Vectorized ``membership`` for a stack of matrices, shape ``(n, d, d)``."""
    if t < 0:
        raise OutOfRange("t must be non-negative")
    g = np.asarray(g, dtype=float)
    s = np.linalg.svd(g, compute_uv=False)
    logs = np.log(s)
    logs -= logs.mean(axis=1, keepdims=True)
    norm = np.maximum(logs[:, 0], -logs[:, -1])
    frob = np.sqrt(np.sum(s ** 2, axis=1))
    frob_inv = np.sqrt(np.sum(s ** -2.0, axis=1))
    in_et = norm <= t + tol
    in_ball = np.maximum(frob, frob_inv) <= math.exp(t) * (1 + tol)
    return in_et, in_ball


# -- Jacobian --------------------------------------------------------------------

def _chamber_array(X) -> np.ndarray:
    return X.array if isinstance(X, ChamberVector) else np.asarray(X, dtype=float)


def jacobian_product(X) -> np.ndarray:
    """``prod_{i<j} sinh(X_i - X_j)``, vectorized over leading axes."""
    X = _chamber_array(X)
    d = X.shape[-1]
    iu, ju = np.triu_indices(d, 1)
    return np.prod(np.sinh(X[..., iu] - X[..., ju]), axis=-1)


def jacobian_alternating(X, dps: int = 40) -> float:
    """``2^{-N} sum_w sign(w) exp(2 <w rho, X>)`` evaluated in mpmath.

    The alternating sum cancels heavily near the walls, so it is summed with
    ``dps`` digits before rounding back to a float.
    """
    X = _chamber_array(X)
    datum = build_root_datum(X.shape[-1])
    rho2 = [int(round(2 * r)) for r in datum.rho]
    with mp_precision(dps):
        xs = [mpmath.mpf(float(x)) for x in X]
        total = mpmath.mpf(0)
        for perm, sign in datum.weyl:
            # <w rho, X> = sum_i rho_i X_{w(i)}
            total += sign * mpmath.exp(mpmath.fsum(rho2[i] * xs[perm[i]] for i in range(len(xs))))
        return float(total / 2 ** datum.n_positive)


def jacobian(X, tol: float = 1e-9) -> float:
    """Cartan density ``J(X)`` on the closed chamber.

    Both the sinh product and the alternating exponential sum are evaluated;
    their relative disagreement beyond ``tol`` raises ``AccuracyFailure``.
    """
    arr = _chamber_array(X)
    if np.any(arr[:-1] - arr[1:] < -1e-12):
        raise InvalidArgument("J is evaluated on the closed positive chamber only")
    prod = float(jacobian_product(arr))
    alt = jacobian_alternating(arr)
    scale = max(abs(prod), abs(alt))
    if scale > 0 and abs(prod - alt) > tol * scale:
        raise AccuracyFailure("Jacobian forms disagree", product=prod, alternating=alt)
    return prod


# -- volumes ---------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    """Resolution of the polytope quadrature.

    ``points`` is the minimum number of Gauss nodes per collapsed simplex
    axis; the rule grows with the exponential rate of the integrand, up to
    ``max_points``.
    """

    points: int = 16
    max_points: int = 96
    check: bool = True


def _nodes_for_rate(rate: float, spec: QuadratureSpec) -> int:
    return int(min(spec.max_points, max(spec.points, math.ceil(10 + 0.75 * rate))))


@lru_cache(maxsize=None)
def _unit_simplices(d: int) -> tuple:
    P = chamber_polytope(d)
    return tuple(np.array([[float(c) for c in v] for v in s]) for s in P.triangulate("pulling"))


def volume_e_t(d: int, t: float, quad: QuadratureSpec | None = None) -> float:
    """``m(E_t) = int_{tP} J(X) dX`` by Gauss rules on a triangulation of ``tP``.

    The polytope is mapped to the cone chart, triangulated, and each simplex
    gets a collapsed Gauss-Jacobi product rule whose size grows with ``t``.

    Raises
    ------
    AccuracyFailure
        If the result differs from the Brion value by more than ``1e-3``
        relative (only when ``quad.check`` is set).
    """
    if not isinstance(d, (int, np.integer)) or not 3 <= d <= 5:
        raise InvalidDimension("volume quadrature supports 3 <= d <= 5")
    if not 0 < t <= 8:
        raise OutOfRange(f"t must lie in (0, 8], got {t}")
    quad = quad or QuadratureSpec()
    if quad.points < 16:
        raise InvalidArgument("at least 16 points per axis are required")
    cone = mu_basis(d)
    rate = 2 * float(np.dot(build_root_datum(d).rho, compute_x0(d).array)) * t
    m = _nodes_for_rate(rate, quad)
    total = 0.0
    for simplex in _unit_simplices(d):
        nodes, weights = map_simplex(t * simplex, m)
        X = nodes @ cone.beta_dual
        total += float(np.dot(weights, jacobian_product(X)))
    value = total * cone.gram_det_sqrt
    if quad.check:
        exact = brion_volume(d, t)
        if abs(value - exact) > 1e-3 * abs(exact):
            raise AccuracyFailure("volume quadrature is unresolved", quadrature=value, brion=exact, nodes=m)
    return value


# -- randomness --------------------------------------------------------------------

def make_rng(seed) -> np.random.Generator:
    """PCG64 generator from an integer seed or a ``SeedSequence``."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def spawn_seeds(seed: int, count: int) -> list:
    """Disjoint child streams: the ``SeedSequence(seed).spawn(count)`` children."""
    return np.random.SeedSequence(int(seed)).spawn(int(count))


def haar_orthogonal(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-distributed matrices in ``SO(d)``.

    A Gaussian matrix is orthogonalized, the columns are multiplied by the
    signs of the triangular diagonal, and the first column is negated when
    the determinant is ``-1``.
    """
    shape = (1 if size is None else size, d, d)
    Z = rng.standard_normal(shape)
    Q, R = np.linalg.qr(Z)
    signs = np.sign(np.diagonal(R, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    Q = Q * signs[:, None, :]
    det = np.linalg.det(Q)
    Q[det < 0, :, 0] *= -1
    return Q[0] if size is None else Q


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Samples ``g = k1 exp(X) k2`` from the normalized Haar measure on ``E_t``."""

    d: int
    t: float
    X: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    efficiency: float
    proposals: int

    @property
    def matrices(self) -> np.ndarray:
        return (self.k1 * np.exp(self.X)[:, None, :]) @ self.k2

    def __len__(self) -> int:
        return self.X.shape[0]


@lru_cache(maxsize=None)
def _box_corner(d: int) -> np.ndarray:
    """Coordinatewise minima of the unit polytope's vertices in the cone chart."""
    return chamber_polytope(d).vertex_array().min(axis=0)


def _truncated_exponential(rng, rate, lo, hi, size):
    """Density ``∝ exp(rate * x)`` on ``[lo, hi]`` by inversion, stable for large rates."""
    u = rng.random((size, rate.size))
    span = hi - lo
    return hi + np.log1p(-u * -np.expm1(-rate * span)) / rate


def sample_radial(d: int, t: float, n: int, rng: np.random.Generator, max_proposals: int = 10**8):
    """Draw ``n`` points of ``tP`` with density proportional to ``J``.

    Proposals are independent truncated exponentials in the cone chart, so
    their joint density is ``exp(2 <rho, X>)``; a proposal inside the
    polytope is kept with probability ``prod_alpha (1 - exp(-2 alpha(X)))``,
    which is ``J`` divided by the envelope ``2^{-N} exp(2 <rho, X>)``.

    Returns
    -------
    X : ndarray, shape (n, d)
    efficiency : float
    proposals : int
    """
    cone = mu_basis(d)
    rate = 2.0 * np.array(cone.rho_coefficients, dtype=float)
    lo = t * _box_corner(d)
    hi = np.full(d - 1, float(t))
    iu, ju = np.triu_indices(d, 1)
    out, kept, proposals = [], 0, 0
    batch = max(1024, 2 * n)
    while kept < n:
        x = _truncated_exponential(rng, rate, lo, hi, batch)
        proposals += batch
        X = x @ cone.beta_dual
        gaps = X[:, iu] - X[:, ju]
        inside = np.all(X[:, :-1] - X[:, 1:] >= 0, axis=1)
        accept_p = np.prod(-np.expm1(-2 * np.clip(gaps, 0, None)), axis=1)
        take = inside & (rng.random(batch) < accept_p)
        out.append(X[take])
        kept += int(take.sum())
        eff = kept / proposals
        if proposals >= 10**6 and eff < 1e-6:
            raise SamplerFailure("rejection efficiency below 1e-6", efficiency=eff, proposals=proposals)
        if proposals > max_proposals:
            raise SamplerFailure("proposal budget exhausted", efficiency=eff, proposals=proposals)
    X = np.concatenate(out)[:n]
    return X - X.mean(axis=1, keepdims=True), kept / proposals, proposals


def sample_e_t_batch(d: int, t: float, n: int, seed) -> SampleBatch:
    """``n`` independent Haar samples from ``E_t``, reproducible per seed.

    The seed is split into three child streams: radial part, ``k1``, ``k2``.
    """
    if not isinstance(d, (int, np.integer)) or not 3 <= d <= 8:
        raise InvalidDimension("sampling supports 3 <= d <= 8")
    if not 0 < t <= 6:
        raise OutOfRange(f"sampling needs 0 < t <= 6, got {t}")
    radial_seed, left_seed, right_seed = spawn_seeds(seed, 3) if not isinstance(
        seed, np.random.SeedSequence) else seed.spawn(3)
    X, eff, props = sample_radial(d, t, n, make_rng(radial_seed))
    k1 = haar_orthogonal(d, make_rng(left_seed), n)
    k2 = haar_orthogonal(d, make_rng(right_seed), n)
    return SampleBatch(d, float(t), X, k1, k2, eff, props)


def sample_e_t(d: int, t: float, seed) -> GroupElement:
    """A single Haar sample from ``E_t``."""
    batch = sample_e_t_batch(d, t, 1, seed)
    return GroupElement(batch.matrices[0])


# -- intersections and supports ----------------------------------------------------------

@dataclass(frozen=True)
class IntersectionEstimate:
    ratio: float
    stderr: float
    n: int
    hits: int


def intersection_ratio(d: int, t: float, Y, n: int, seed, batch: SampleBatch | None = None,
                       tol: float = 1e-9) -> IntersectionEstimate:
    """Monte Carlo estimate of ``m(e^Y E_t cap E_t) / m(E_t)``.

    It is the fraction of Haar samples ``g`` of ``E_t`` with ``|e^{-Y} g| <= t``;
    the standard error is binomial.  Passing ``batch`` reuses samples across
    several ``Y`` (common random numbers).
    """
    Y = _chamber_array(Y)
    if Y.shape != (d,) or abs(Y.sum()) > 1e-9:
        raise InvalidArgument("Y must be a trace-zero vector of length d")
    if np.any(Y[:-1] - Y[1:] < -1e-12):
        raise InvalidArgument("Y must lie in the closed positive chamber")
    if n < 1000:
        raise InvalidArgument("intersection estimates need n >= 1000")
    batch = batch if batch is not None else sample_e_t_batch(d, t, n, seed)
    if len(batch) < n:
        raise InvalidArgument("sample batch is smaller than n")
    # |e^{-Y} k1 e^X k2| only depends on e^{-Y} k1 e^X
    k1 = batch.k1[:n]
    core = (np.exp(-Y)[None, :, None] * k1) * np.exp(batch.X[:n])[:, None, :]
    norms = cartan_norm(core)
    hits = int(np.count_nonzero(norms <= t + tol))
    p = hits / n
    return IntersectionEstimate(p, math.sqrt(p * (1 - p) / n), n, hits)


@dataclass(frozen=True)
class SupportReport:
    t: float
    b_emp: float
    max_entry_excess: float
    c_emp: float
    n: int


def support_bound_scan(d: int, t: float, n: int, seed) -> SupportReport:
    """Empirical support and entry statistics for products of ``E_t`` samples.

    Attributes of the result
    ------------------------
    b_emp : ``max |g x| - 2t`` over sampled pairs.
    max_entry_excess : ``max (max_ij |x_ij| - e^{|x|})``; non-positive when the
        entry bound holds.
    c_emp : ``min_x min_i max_j |x_ij| e^{|x|}``.
    """
    if n < 1000:
        raise InvalidArgument("support scans need n >= 1000")
    left, right = spawn_seeds(seed, 2) if not isinstance(seed, np.random.SeedSequence) else seed.spawn(2)
    g = sample_e_t_batch(d, t, n, left).matrices
    x_batch = sample_e_t_batch(d, t, n, right)
    x = x_batch.matrices
    prod_norm = cartan_norm(g @ x)
    x_norm = np.max(np.abs(x_batch.X), axis=1)
    entries = np.abs(x)
    excess = np.max(entries.reshape(n, -1), axis=1) - np.exp(x_norm)
    row_max = entries.max(axis=2).min(axis=1)
    return SupportReport(
        float(t),
        float(np.max(prod_norm) - 2 * t),
        float(np.max(excess)),
        float(np.min(row_max * np.exp(x_norm))),
        int(n),
    )


# -- the I2 integrals ------------------------------------------------------------------

@dataclass(frozen=True)
class I2Result:
    numeric: float
    reduced_closed_form: float
    tau_prime: float
    constant: float
    decay: float


def _i2_layout(d: int):
    """Outer and inner exponent coefficients of the two variable chains.

    Returns ``(A_out, B_out, inner_a, inner_b, peak, rate)`` where the exponent
    is ``2 theta (A_out a_1 + B_out b_1 + sum inner . chain - peak max(a_1, b_1))``
    and ``2 theta rate`` bounds the decay in ``|a_1 - b_1|`` after the chains are
    integrated out.
    """
    s = middle_index(d)
    if d % 2 == 1:
        coeff = [s - i for i in range(1, s)]  # a_1 .. a_{s-1}
        A = sum(coeff)
        return coeff[0], coeff[0], coeff[1:], coeff[1:], 2 * A, A
    a_coeff = [s - i + 1 for i in range(1, s + 1)]  # a_1 .. a_s
    b_coeff = [s - i for i in range(1, s)]  # b_1 .. b_{s-1}
    A = sum(a_coeff)
    B = sum(s - i for i in range(1, s + 1))
    return a_coeff[0], b_coeff[0], a_coeff[1:], b_coeff[1:], A + B, B


def _chain_integral(values: np.ndarray, coeffs, theta: float, m: int = 24) -> np.ndarray:
    """``int_{v >= c_2 >= ... >= c_k >= 0} exp(2 theta sum_j coeffs_j c_j)`` for each ``v``."""
    k = len(coeffs)
    if k == 0:
        return np.ones_like(values)
    y, w = simplex_rule(k, m)
    # ordered chain 1 >= c_2 >= ... >= 0 from the unit simplex: c_j = 1 - (y_1 + ... + y_{j-1})
    chain = 1.0 - np.cumsum(y, axis=1)
    lin = chain @ np.asarray(coeffs, dtype=float)
    expo = 2 * theta * np.outer(values, lin)
    return values**k * (np.exp(expo) @ w)


def _chain_constant(coeffs, theta: float) -> float:
    const, acc = 1.0, 0.0
    for c in reversed(coeffs):
        acc += c
        const /= 2 * theta * acc
    return const


def _geometric_panels(length: float, first: float = 0.5):
    edges = [0.0]
    step = first
    while edges[-1] < length:
        edges.append(min(length, edges[-1] + step))
        step *= 1.5
    return edges


def i2_integral(d: int, theta: float, tau: float, b: float = 0.0, nodes: int = 16) -> I2Result:
    """Iterated exponential integral over the ordered chains and its 2-D bound.

    With ``tau' = 2 tau + b`` the chains are ``tau' >= a_1 >= ... >= 0`` and
    ``tau' >= b_1 >= ... >= 0``.  For odd ``d`` both chains have ``s - 1``
    variables (so that the vector has ``d`` entries); for even ``d`` the
    ``a`` chain has ``s`` variables and the ``b`` chain ``s - 1``.

    The inner chain variables are integrated by a collapsed Gauss rule, the
    outer pair ``(a_1, b_1)`` split along the diagonal, with geometric panels
    in ``|a_1 - b_1|`` to follow the exponential decay.

    Returns
    -------
    I2Result
        ``reduced_closed_form = K * 2 tau' (1 - exp(-c tau')) / c`` where ``c``
        is the decay rate of ``|a_1 - b_1|`` and ``K`` collects the inner
        integrations ``prod_j 1 / (2 theta W_j)``.
    """
    if not isinstance(d, (int, np.integer)) or not 3 <= d <= 8:
        raise InvalidDimension("I2 integrals are defined for 3 <= d <= 8")
    if not 0 < theta < 1:
        raise OutOfRange(f"theta must lie in (0, 1), got {theta}")
    if tau < 0 or b < 0:
        raise OutOfRange("tau and b must be non-negative")
    tp = 2 * tau + b
    A_out, B_out, inner_a, inner_b, peak, rate_coeff = _i2_layout(d)
    K = _chain_constant(inner_a, theta) * _chain_constant(inner_b, theta)
    c = 2 * theta * rate_coeff
    reduced = K * 2 * tp * (-math.expm1(-c * tp)) / c if tp > 0 else 0.0
    if tp == 0:
        return I2Result(0.0, 0.0, 0.0, K, c)
    total = 0.0
    gx, gw = legendre_rule(nodes)
    m_edges = np.linspace(0.0, tp, max(2, int(math.ceil(tp / 2.0)) + 1))
    for lead_is_a in (True, False):
        for m0, m1 in zip(m_edges[:-1], m_edges[1:]):
            big = m0 + (m1 - m0) * gx
            wbig = (m1 - m0) * gw
            for big_v, big_w in zip(big, wbig):
                edges = _geometric_panels(big_v)
                for x0, x1 in zip(edges[:-1], edges[1:]):
                    x = x0 + (x1 - x0) * gx
                    wx = (x1 - x0) * gw
                    small = big_v - x
                    a1 = np.full_like(x, big_v) if lead_is_a else small
                    b1 = small if lead_is_a else np.full_like(x, big_v)
                    expo = 2 * theta * (A_out * a1 + B_out * b1 - peak * big_v)
                    f = np.exp(expo) * _chain_integral(a1, inner_a, theta) * _chain_integral(b1, inner_b, theta)
                    total += big_w * float(np.dot(wx, f))
    return I2Result(total, reduced, tp, K, c)
