"""Spherical functions, the c-function, Levi data and the main term.

The spherical function is ``phi_lam(g) = int_K exp(<lam + rho, H0(kg)>) dk``
with ``H0`` the diagonal logarithm of the Iwasawa decomposition
``g = n exp(H0) k``.

For ``d = 3`` two deterministic quadratures are available:

``flag``
    The K-average written over the flag variety.  A unit vector ``u`` and a
    second unit vector ``v`` orthogonal to it parametrize
    ``K / M``, the integrand depends on ``v`` only through a positive
    definite binary form, and the resulting inner average is a rank-one
    integral.  Both levels use the trapezoid rule in logarithmic charts,
    which converges geometrically for these analytic integrands.  Weights
    are normalized against the constant integrand, so ``phi(e) = 1`` and
    ``phi_{rho} = 1`` hold to rounding.
``euler``
    Gauss-Legendre product rule in ZYZ Euler angles with Haar weight
    ``sin(beta) / (8 pi^2)``.

For ``d = 4, 5`` the K-integral is a Monte Carlo average over Haar samples
with a batch-means standard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations

import numpy as np
from scipy.special import logsumexp, loggamma

from .chamber_geometry import compute_x0, levi_blocks
from .errors import (
    AccuracyFailure,
    InvalidArgument,
    InvalidDimension,
    InvalidSpectralParameter,
    UnsupportedDimension,
)
from .group_numerics import haar_orthogonal, iwasawa_diagonal, make_rng
from .root_algebra import (
    ChamberVector,
    SpectralParameter,
    _as_complex,
    _as_real,
    beta_tilde,
    build_root_datum,
    is_regular,
    weyl_apply,
)

__all__ = [
    "SphericalQuadrature",
    "SphericalEval",
    "CFunctionValue",
    "LeviData",
    "ExpansionReport",
    "spherical_phi",
    "rank_one_phi",
    "c_alpha",
    "c_function",
    "c_levi",
    "plancherel_density",
    "plancherel_ratio_scan",
    "levi_data",
    "f_levi",
    "f_normalized",
    "coset_representatives",
    "main_term_phi",
    "expansion_error_scan",
]

POLE_TOL = 1e-12


@dataclass(frozen=True)
class SphericalQuadrature:
    """Resolution settings for ``spherical_phi``.

    Parameters
    ----------
    tol : float
        Requested absolute error.  For the deterministic rules this is
        compared against the Cauchy difference between two resolutions.
    rule : {"flag", "euler"}
        Deterministic rule for ``d = 3``.
    step : float
        Initial trapezoid step of the flag rule.
    tails : float
        Half-width added to the logarithmic charts beyond the bulk.
    euler_points : int
        Initial Gauss-Legendre points per Euler angle.
    max_refinements : int
        How many times the resolution may be doubled.
    samples, batches, seed
        Monte Carlo settings for ``d >= 4``.
    """

    tol: float = 1e-3
    rule: str = "flag"
    step: float = 0.4
    tails: float = 20.0
    euler_points: int = 32
    max_refinements: int = 3
    samples: int = 200_000
    batches: int = 20
    seed: int = 0


@dataclass(frozen=True)
class SphericalEval:
    """A spherical function value with its error estimate.

    ``method`` is ``"tensor-quadrature"`` or ``"monte-carlo"``; ``rule``
    names the concrete quadrature.
    """

    value: complex
    abs_error: float
    method: str
    rule: str = ""

    def as_dict(self) -> dict:
        return {
            "value_re": float(np.real(self.value)),
            "value_im": float(np.imag(self.value)),
            "abs_error": float(self.abs_error),
            "method": self.method,
            "rule": self.rule,
        }


@dataclass(frozen=True)
class CFunctionValue:
    """``value`` is ``None`` when ``pole_flag`` is set."""

    value: complex | None
    pole_flag: bool


def _lam(lam) -> np.ndarray:
    return _as_complex(lam).ravel()


def _vec(X) -> np.ndarray:
    return _as_real(X).ravel()


# -- d = 3 flag rule ----------------------------------------------------------------

def _grid(lo: float, hi: float, h: float) -> np.ndarray:
    # even number of intervals so that every other node is the 2h grid
    n = 2 * max(2, math.ceil((hi - lo) / (2 * h)))
    return np.linspace(lo, hi, n + 1)


def _flag_sums(lam: np.ndarray, X: np.ndarray, h: float, tails: float):
    """Flag-rule values at steps ``h`` and ``2h`` (the second on subsampled nodes)."""
    a = 1 + lam[0] - lam[1]
    s = (1 + lam[1] - lam[2]) / 2
    spread = X[0] - X[2]
    p = _grid(-spread - tails, spread + tails, h)
    P, Q = np.meshgrid(p, p, indexing="ij")
    # u = (1, e^P, e^Q) / norm, one octant; the others follow by symmetry
    lu = np.stack([np.zeros_like(P), 2 * P, 2 * Q])
    log_n2 = logsumexp(lu, axis=0)
    lu = lu - log_n2
    log_g = logsumexp(lu - 2 * X[:, None, None], axis=0)
    cross = [2 * X[j] + lu[k] for j in range(3) for k in range(3) if k != j]
    log_t = logsumexp(np.stack(cross), axis=0)
    # eigenvalues of the binary form on u-perp, via trace and determinant
    disc = np.maximum(1 - 4 * np.exp(log_g - 2 * log_t), 0.0)
    log_a = log_t + np.log((1 + np.sqrt(disc)) / 2)
    log_b = log_g - log_a
    outer_density = P + Q - 1.5 * log_n2
    outer_log = -(a / 2) * log_g + outer_density
    # nodes whose outer weight is below e^-32 of the largest one are dropped
    keep = outer_log.real > outer_log.real.max() - 32.0
    rows, cols = np.nonzero(keep)
    log_a, log_b, outer = log_a[keep], log_b[keep], np.exp(outer_log[keep])
    wmax = float(0.5 * np.max(log_a - log_b))
    w = _grid(-tails + 4, wmax + tails - 4, h)
    lw = w[None, :]
    inner_log = (-s * np.logaddexp(log_a[:, None], log_b[:, None] + 2 * lw)
                 + (s - 1) * np.logaddexp(0.0, 2 * lw) + lw)
    f = np.exp(inner_log)
    base = np.exp(-np.logaddexp(0.0, 2 * w) + w)
    plain = np.exp(outer_density)
    even = (rows % 2 == 0) & (cols % 2 == 0)

    def total(stride: int) -> complex:
        sel = slice(None) if stride == 1 else even
        inner = f[sel, ::stride].sum(axis=-1) / base[::stride].sum()
        return complex((outer[sel] * inner).sum() / plain[::stride, ::stride].sum())

    return total(1), total(2)


def _flag_phi(lam, X, quad: SphericalQuadrature) -> SphericalEval:
    h = quad.step
    for _ in range(quad.max_refinements + 1):
        fine, coarse = _flag_sums(lam, X, h, quad.tails)
        err = abs(fine - coarse)
        if err <= quad.tol:
            return SphericalEval(fine, err, "tensor-quadrature", "flag")
        h /= 2
    raise AccuracyFailure("flag rule did not reach the requested accuracy", abs_error=err, tol=quad.tol)


# -- d = 3 Euler-angle rule ----------------------------------------------------------

def _rot_z(t):
    c, s = np.cos(t), np.sin(t)
    z, o = np.zeros_like(t), np.ones_like(t)
    return np.stack([np.stack([c, -s, z], -1), np.stack([s, c, z], -1), np.stack([z, z, o], -1)], -2)


def _rot_y(t):
    c, s = np.cos(t), np.sin(t)
    z, o = np.zeros_like(t), np.ones_like(t)
    return np.stack([np.stack([c, z, s], -1), np.stack([z, o, z], -1), np.stack([-s, z, c], -1)], -2)


@lru_cache(maxsize=8)
def _euler_rule(n: int):
    x, wts = np.polynomial.legendre.leggauss(n)
    alpha, w_alpha = np.pi * (x + 1), np.pi * wts
    beta, w_beta = np.pi / 2 * (x + 1), np.pi / 2 * wts
    A, B, C = np.meshgrid(alpha, beta, alpha, indexing="ij")
    weight = (w_alpha[:, None, None] * w_beta[None, :, None] * w_alpha[None, None, :]) * np.sin(B) / (8 * np.pi ** 2)
    K = _rot_z(A) @ _rot_y(B) @ _rot_z(C)
    K = K.reshape(-1, 3, 3)
    weight = weight.ravel()
    K.setflags(write=False)
    weight.setflags(write=False)
    return K, weight


def _euler_sum(lam: np.ndarray, X: np.ndarray, n: int) -> complex:
    K, weight = _euler_rule(n)
    H = iwasawa_diagonal(K * np.exp(X)[None, None, :])
    nu = lam + build_root_datum(3).rho
    return complex(np.dot(weight, np.exp(H @ nu)))


def _euler_phi(lam, X, quad: SphericalQuadrature) -> SphericalEval:
    n = quad.euler_points
    prev = _euler_sum(lam, X, n)
    for _ in range(quad.max_refinements):
        n *= 2
        cur = _euler_sum(lam, X, n)
        err = abs(cur - prev)
        if err <= quad.tol:
            return SphericalEval(cur, err, "tensor-quadrature", "euler")
        prev = cur
    raise AccuracyFailure("Euler-angle rule did not reach the requested accuracy", abs_error=err, tol=quad.tol)


# -- d >= 4 Monte Carlo ----------------------------------------------------------------

@lru_cache(maxsize=4)
def _haar_samples(d: int, n: int, seed: int) -> np.ndarray:
    k = haar_orthogonal(d, make_rng(seed), size=n)
    k.setflags(write=False)
    return k


def _monte_carlo_phi(lam, X, quad: SphericalQuadrature) -> SphericalEval:
    d = lam.size
    if quad.samples < 10 * quad.batches:
        raise InvalidArgument("too few samples for the requested number of batches")
    k = _haar_samples(d, int(quad.samples), int(quad.seed))
    H = iwasawa_diagonal(k * np.exp(X)[None, None, :])
    vals = np.exp(H @ (lam + build_root_datum(d).rho))
    means = np.array([b.mean() for b in np.array_split(vals, quad.batches)])
    value = complex(vals.mean())
    stderr = float(np.std(means, ddof=1) / math.sqrt(quad.batches))
    return SphericalEval(value, stderr, "monte-carlo", "haar-qr")


def spherical_phi(lam, X, quad: SphericalQuadrature | None = None) -> SphericalEval:
    """``phi_lam(exp X)``.

    Parameters
    ----------
    lam : SpectralParameter or array of complex
    X : ChamberVector or array of float
    quad : SphericalQuadrature, optional

    Returns
    -------
    SphericalEval
        Exactly ``1`` at ``X = 0``.  For ``d = 3`` the error is the Cauchy
        difference of the last refinement; for ``d >= 4`` it is one standard
        error of the Monte Carlo mean.

    Raises
    ------
    AccuracyFailure
        If the tolerance is not met after ``quad.max_refinements`` doublings.
    """
    lam_v, X_v = _lam(lam), _vec(X)
    d = lam_v.size
    if X_v.size != d:
        raise InvalidArgument("lambda and X have different lengths")
    if not 3 <= d <= 5:
        raise InvalidDimension("spherical functions are evaluated for 3 <= d <= 5")
    if abs(X_v.sum()) > 1e-12 * max(1.0, np.abs(X_v).max()) * d:
        raise InvalidArgument("X must have trace zero")
    quad = quad or SphericalQuadrature()
    if not np.any(X_v):
        method = "tensor-quadrature" if d == 3 else "monte-carlo"
        return SphericalEval(1.0 + 0j, 0.0, method, "identity")
    # phi is W-invariant in X, so sort into the chamber
    X_v = np.sort(X_v)[::-1]
    if d == 3:
        if quad.rule == "flag":
            return _flag_phi(lam_v, X_v, quad)
        if quad.rule == "euler":
            return _euler_phi(lam_v, X_v, quad)
        raise InvalidArgument(f"unknown rule {quad.rule!r}")
    return _monte_carlo_phi(lam_v, X_v, quad)


# -- rank one ----------------------------------------------------------------------

def rank_one_phi(z, y, h: float = 0.05, width: float = 40.0) -> complex:
    """Spherical function of ``SL_2(R)`` at ``diag(e^y, e^{-y})``.

    ``z = <lam, alpha^vee>``.  With ``s = (1 + z)/2`` the value is the
    normalized average of ``(e^{2y} + e^{-2y} e^{2w})^{-s} (1 + e^{2w})^{s-1}
    e^w`` over ``w`` in ``R``, computed by the trapezoid rule.
    """
    s = (1 + complex(z)) / 2
    y = abs(float(y))
    if y == 0:
        return 1.0 + 0j
    w = np.arange(-width, width + 2 * y, h)
    base = np.exp(-np.logaddexp(0.0, 2 * w) + w)
    vals = np.exp(-s * np.logaddexp(2 * y, -2 * y + 2 * w) + (s - 1) * np.logaddexp(0.0, 2 * w) + w)
    return complex(vals.sum() / base.sum())


# -- c-function --------------------------------------------------------------------

def _is_pole(z: complex) -> bool:
    # Gamma(z/2) has poles at z = 0, -2, -4, ...
    half = z / 2
    return abs(half.imag) < POLE_TOL and half.real < POLE_TOL and abs(half.real - round(half.real)) < POLE_TOL


def c_alpha(z) -> complex:
    """Rank-one factor ``Gamma(z/2) / (sqrt(pi) Gamma((z+1)/2))`` for multiplicity one."""
    z = complex(z)
    return complex(np.exp(loggamma(z / 2) - loggamma((z + 1) / 2) - 0.5 * math.log(math.pi)))


@lru_cache(maxsize=1)
def _c_alpha_one() -> complex:
    return c_alpha(1.0)


def _pairings(lam: np.ndarray, pairs) -> list:
    return [complex(lam[i] - lam[j]) for i, j in pairs]


def _c_product(lam: np.ndarray, pairs) -> CFunctionValue:
    d = lam.size
    rho = build_root_datum(d).rho
    value = 1.0 + 0j
    for (i, j), z in zip(pairs, _pairings(lam, pairs)):
        if _is_pole(z):
            return CFunctionValue(None, True)
        value *= c_alpha(z) / c_alpha(rho[i] - rho[j])
    return CFunctionValue(value, False)


def c_function(lam) -> CFunctionValue:
    """Harish-Chandra c-function as a product of rank-one factors over positive roots.

    Normalized by ``c(rho) = 1``.
    """
    lam = _lam(lam)
    return _c_product(lam, build_root_datum(lam.size).root_pairs)


def c_levi(lam) -> CFunctionValue:
    """The c-function of the Levi subgroup attached to ``X0``."""
    lam = _lam(lam)
    return _c_product(lam, levi_data(lam.size).root_pairs)


def plancherel_density(lam) -> float:
    """``|c(lam)|^{-2}`` for tempered ``lam``."""
    c = c_function(lam)
    if c.pole_flag:
        raise InvalidSpectralParameter("c-function has a pole at this parameter")
    return float(1.0 / abs(c.value) ** 2)


def plancherel_ratio_scan(d: int, grid) -> dict:
    """Extremes of ``|c(i y)|^{-2} / beta_tilde(1, i y)`` over a list of ``y``."""
    ratios = []
    for y in grid:
        lam = 1j * np.asarray(y, dtype=float)
        ratios.append(plancherel_density(lam) / beta_tilde(1.0, lam))
    ratios = np.asarray(ratios)
    C = float(max(ratios.max(), 1.0 / ratios.min()))
    return {"min": float(ratios.min()), "max": float(ratios.max()), "C": C, "points": int(ratios.size)}


# -- Levi data ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LeviData:
    """Centralizer of ``X0``: coordinate blocks, block roots and projectors.

    ``proj_center`` maps onto block-constant trace-zero vectors (the split
    center), ``proj_levi`` onto vectors summing to zero on every block.
    """

    d: int
    blocks: tuple
    delta_M: tuple
    root_pairs: tuple
    proj_center: np.ndarray = field(repr=False)
    proj_levi: np.ndarray = field(repr=False)
    rho_M: np.ndarray = field(repr=False)


@lru_cache(maxsize=None)
def levi_data(d: int) -> LeviData:
    """Blocks of equal coordinates of ``X0`` and the attached Levi data (``3 <= d <= 6``)."""
    if not isinstance(d, (int, np.integer)) or not 3 <= d <= 6:
        raise InvalidDimension("Levi data is tabulated for 3 <= d <= 6")
    blocks = levi_blocks(d)
    avg = np.zeros((d, d))
    rho_M = np.zeros(d)
    pairs = []
    for b in blocks:
        avg[np.ix_(b, b)] = 1.0 / len(b)
        n = len(b)
        for k, i in enumerate(b):
            rho_M[i] = (n - 1 - 2 * k) / 2
        pairs.extend((i, j) for k, i in enumerate(b) for j in b[k + 1:])
    simple = tuple((i, i + 1) for b in blocks for i in b[:-1])
    center = avg - np.full((d, d), 1.0 / d)
    levi = np.eye(d) - avg
    for a in (center, levi, rho_M):
        a.setflags(write=False)
    return LeviData(d, blocks, simple, tuple(pairs), center, levi, rho_M)


def f_levi(lam, Y, h: float = 0.05) -> SphericalEval:
    """``exp(<rho_M, Y>) phi^M_lam(exp Y)`` for the Levi subgroup of ``X0``.

    Each block of size two contributes a rank-one spherical function, each
    singleton an exponential, and the block means carry ``exp(<lam, Y_M>)``.
    """
    lam_v, Y_v = _lam(lam), _vec(Y)
    d = lam_v.size
    if Y_v.size != d:
        raise InvalidArgument("lambda and Y have different lengths")
    data = levi_data(d) if d <= 6 else None
    if data is None or any(len(b) > 2 for b in data.blocks):
        raise UnsupportedDimension("f_levi handles Levi blocks of size at most two")
    if d >= 6:
        raise UnsupportedDimension("f_levi is implemented for 3 <= d <= 5")
    log_value = 0j
    factor = 1.0 + 0j
    for b in data.blocks:
        if len(b) == 1:
            log_value += lam_v[b[0]] * Y_v[b[0]]
            continue
        i, j = b
        mean_l, mean_y = (lam_v[i] + lam_v[j]) / 2, (Y_v[i] + Y_v[j]) / 2
        y = (Y_v[i] - Y_v[j]) / 2
        log_value += 2 * mean_l * mean_y + y
        factor *= rank_one_phi(lam_v[i] - lam_v[j], y, h=h)
    value = complex(np.exp(log_value) * factor)
    err = 0.0 if d == 3 else 1e-12 * abs(value)
    return SphericalEval(value, err, "tensor-quadrature", "exact" if d == 3 else "rank-one")


def f_normalized(lam, X, quad: SphericalQuadrature | None = None) -> SphericalEval:
    """``f_lam(X) = exp(<rho, X>) phi_lam(exp X)``."""
    X_v = _vec(X)
    phi = spherical_phi(lam, X_v, quad)
    scale = math.exp(float(np.dot(build_root_datum(X_v.size).rho, np.sort(X_v)[::-1])))
    return SphericalEval(phi.value * scale, phi.abs_error * scale, phi.method, phi.rule)


# -- main term ---------------------------------------------------------------------

def _block_key(v: np.ndarray, blocks, decimals: int = 10) -> tuple:
    key = []
    for b in blocks:
        entries = sorted((round(float(v[i].real), decimals), round(float(v[i].imag), decimals)) for i in b)
        key.append(tuple(entries))
    return tuple(key)


def coset_representatives(lam) -> list:
    """Permutations ``w`` giving the distinct classes of ``w lam`` modulo the block Weyl group.

    Representatives are the permutations whose images are increasing on each
    block, which are the minimal-length ones.
    """
    lam_v = _lam(lam)
    d = lam_v.size
    data = levi_data(d)
    datum = build_root_datum(d)
    reps, seen = [], set()
    for perm, _ in datum.weyl:
        inv = np.argsort(perm)
        if any(np.any(np.diff(inv[list(b)]) < 0) for b in data.blocks):
            continue
        image = weyl_apply(perm, lam_v)
        key = _block_key(image, data.blocks)
        if key in seen:
            continue
        seen.add(key)
        reps.append(tuple(perm))
    return reps


def _check_main_term(lam_v: np.ndarray) -> None:
    if not is_regular(lam_v, 1e-9):
        raise InvalidSpectralParameter("lambda must be regular")


def main_term_coefficients(lam) -> list:
    """``(w, w lam, c(w lam) / c^M(w lam))`` over coset representatives."""
    lam_v = _lam(lam)
    _check_main_term(lam_v)
    out = []
    for perm in coset_representatives(lam_v):
        image = weyl_apply(perm, lam_v)
        c, cm = c_function(image), c_levi(image)
        if c.pole_flag or cm.pole_flag:
            raise InvalidSpectralParameter("c-function pole at a Weyl image of lambda", w=list(perm))
        out.append((perm, image, c.value / cm.value))
    return out


def main_term_phi(lam, X) -> complex:
    """``Phi_lam(X) = sum_w c(w lam) / c^M(w lam) f^M_{w lam}(X)`` over ``W^M \\ W``."""
    X_v = _vec(X)
    total = 0j
    for _, image, coeff in main_term_coefficients(lam):
        total += coeff * f_levi(image, X_v).value
    return complex(total)


@dataclass(frozen=True)
class ExpansionReport:
    """Residual ``|f_lam(H) - Phi_lam(H)|`` along ``H(t) = Y + t X0``."""

    t: tuple
    residual: tuple
    abs_error: tuple
    rate: float | None
    expected_rate: float
    inconclusive: bool

    @property
    def decreasing(self) -> bool:
        r = self.residual
        return all(b < a for a, b in zip(r, r[1:]))


def expansion_error_scan(lam, Y, t_grid, quad: SphericalQuadrature | None = None) -> ExpansionReport:
    """Tabulate the main-term residual and fit its exponential decay rate.

    The rate is a least-squares slope of ``log residual`` against ``t`` over
    points where the residual exceeds ten times the quadrature error.  The
    expected rate is ``-2`` times the smallest growth ``alpha(X0)`` over simple
    roots outside the Levi subgroup.
    """
    lam_v, Y_v = _lam(lam), _vec(Y)
    _check_main_term(lam_v)
    d = lam_v.size
    x0 = compute_x0(d).array
    data = levi_data(d)
    outside = [(i, i + 1) for i in range(d - 1) if (i, i + 1) not in data.delta_M]
    expected = -2 * min(x0[i] - x0[j] for i, j in outside)
    quad = quad or SphericalQuadrature(tol=1e-3, step=0.3)
    ts, res, errs = [], [], []
    for t in t_grid:
        H = Y_v + float(t) * x0
        if np.any(np.diff(H) > 0):
            raise InvalidArgument("H(t) leaves the closed chamber", t=float(t))
        f = f_normalized(lam_v, H, quad)
        ts.append(float(t))
        res.append(abs(f.value - main_term_phi(lam_v, H)))
        errs.append(f.abs_error)
    ts_a, res_a, err_a = map(np.asarray, (ts, res, errs))
    usable = res_a > 10 * err_a
    rate = None
    if usable.sum() >= 2:
        rate = float(np.polyfit(ts_a[usable], np.log(res_a[usable]), 1)[0])
    inconclusive = bool(usable.sum() < max(2, len(ts) // 2))
    return ExpansionReport(tuple(ts), tuple(res), tuple(errs), rate, float(expected), inconclusive)
