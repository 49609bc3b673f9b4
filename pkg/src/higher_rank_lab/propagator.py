"""The transform h_t, cone integrals, periodicity and time averages.

``h_t(lam) = m(E_t)^{-1/2} int_{tP} phi_lam(exp X) J(X) dX`` is computed from
the profile ``F(t) = int_{tP} phi_lam J dX``.  In the cone chart the gauge of
``P`` is ``max_i x_i``, so

    F(t) = sqrt(G) int_0^t s^{n-1} sum_i int_{face_i} (phi_lam J)(s z) dz ds

where ``face_i`` is the facet ``x_i = 1`` of the unit polytope.  The outer
``s`` integral uses Gauss-Legendre panels; inside one panel the integrand is
replaced by its interpolating polynomial, so ``F`` is available at every
``t`` up to the profile length at no extra cost.

The main-term proxy is

    I(t, lam) = sum_w c(w lam) / c^M(w lam) J(w lam) exp(t <w lam, X0>)

over ``W^M \\ W``, with ``J(lam) = int_{-C0} exp(<lam + rho, Y>) dY``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as leg

from .chamber_geometry import chamber_polytope, compute_x0, mu_basis, volume_leading_term
from .errors import (
    Divergence,
    Inconclusive,
    InvalidArgument,
    InvalidDimension,
    NotRational,
    OutOfRange,
)
from .group_numerics import jacobian_product, volume_e_t
from .polytope import Polytope
from .quadrature import map_simplex, simplex_rule
from .root_algebra import SpectralParameter, _as_complex, build_root_datum
from .spherical_analysis import (
    SphericalQuadrature,
    main_term_coefficients,
    spherical_phi,
)

__all__ = [
    "PropagatorValue",
    "RationalSpectral",
    "TimeAverageReport",
    "ReplacementReport",
    "HtProfile",
    "ht_profile",
    "h_t",
    "j_cone",
    "j_cone_quadrature",
    "i_of_t",
    "proxy_terms",
    "phases",
    "phase_collision",
    "tau1",
    "replacement_check",
    "asymptotic_constant",
    "time_average",
]


def _lam(lam) -> np.ndarray:
    return _as_complex(lam).ravel()


def _spectral(lam) -> SpectralParameter:
    return lam if isinstance(lam, SpectralParameter) else SpectralParameter.from_complex(_lam(lam))


@dataclass(frozen=True)
class PropagatorValue:
    t: float
    lam: SpectralParameter
    value: complex
    abs_error: float

    def as_dict(self) -> dict:
        return {
            "t": self.t,
            "h_re": float(self.value.real),
            "h_im": float(self.value.imag),
            "abs_err": float(self.abs_error),
        }


@dataclass(frozen=True)
class RationalSpectral:
    lam: SpectralParameter
    tau1: float
    phases: tuple


@dataclass(frozen=True)
class TimeAverageReport:
    tau: float
    average: float
    parseval_target: float
    relative_gap: float
    route: str = "proxy"
    points: int = 0


# -- the h_t profile -----------------------------------------------------------------

@lru_cache(maxsize=None)
def _outer_faces(d: int) -> tuple:
    """For each coordinate ``i``, simplices of the facet ``x_i = 1`` of the unit polytope.

    Each simplex is returned in the remaining ``n - 1`` coordinates.
    """
    P = chamber_polytope(d)
    n = P.dim
    faces = []
    for i in range(n):
        rows = []
        for a, b in zip(P.A, P.b):
            if all(a[k] == (1 if k == i else 0) for k in range(n)) and b == 1:
                continue
            rest = tuple(a[k] for k in range(n) if k != i)
            rows.append((rest, b - a[i]))
        face = Polytope(rows)
        simplices = [np.array([[float(c) for c in v] for v in s]) for s in face.triangulate("pulling")]
        faces.append((i, tuple(simplices)))
    return tuple(faces)


def _face_rule(d: int, m: int):
    """Nodes ``z`` on the outer boundary of the unit polytope and their weights."""
    nodes, weights = [], []
    for i, simplices in _outer_faces(d):
        for simplex in simplices:
            pts, wts = map_simplex(simplex, m)
            z = np.insert(pts, i, 1.0, axis=1)
            nodes.append(z)
            weights.append(wts)
    return np.vstack(nodes), np.concatenate(weights)


@dataclass(frozen=True, eq=False)
class HtProfile:
    """Cumulative profile ``F(t)`` on ``[0, length]`` for one spectral parameter."""

    lam: SpectralParameter
    length: float
    edges: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    derivative: np.ndarray = field(repr=False)
    derivative_error: np.ndarray = field(repr=False)
    panel_totals: np.ndarray = field(repr=False)
    panel_errors: np.ndarray = field(repr=False)
    evaluations: int = 0

    def _panel_coeffs(self, k: int):
        lo, hi = self.edges[k], self.edges[k + 1]
        u = 2 * (self.nodes[k] - lo) / (hi - lo) - 1
        deg = len(u) - 1
        re = leg.legfit(u, self.derivative[k].real, deg)
        im = leg.legfit(u, self.derivative[k].imag, deg)
        return lo, hi, re, im

    def integral(self, t: float) -> tuple:
        """``(F(t), error bound)`` for ``0 <= t <= length``."""
        if t < 0 or t > self.length * (1 + 1e-12):
            raise OutOfRange(f"t={t} lies outside the profile [0, {self.length}]")
        t = min(float(t), self.length)
        k = int(np.searchsorted(self.edges, t, side="right") - 1)
        k = min(k, len(self.edges) - 2)
        total = complex(self.panel_totals[:k].sum())
        err = float(self.panel_errors[:k].sum())
        lo, hi, re, im = self._panel_coeffs(k)
        u = 2 * (t - lo) / (hi - lo) - 1
        half = (hi - lo) / 2
        part = half * (leg.legval(u, leg.legint(re, lbnd=-1)) + 1j * leg.legval(u, leg.legint(im, lbnd=-1)))
        total += complex(part)
        err += self.panel_errors[k] * (t - lo) / (hi - lo)
        return total, err


def ht_profile(lam, length: float, quad: SphericalQuadrature | None = None,
               panel: float = 0.5, panel_nodes: int = 8, face_nodes: int = 16) -> HtProfile:
    """Build the profile ``F`` of ``int_{tP} phi_lam J dX`` for ``0 <= t <= length`` (``d = 3``).

    Parameters
    ----------
    lam : SpectralParameter or array
    length : float
        Largest ``t`` needed, at most 4.
    quad : SphericalQuadrature, optional
        Inner spherical-function settings.
    panel, panel_nodes : float, int
        Width and Gauss-Legendre size of the radial panels.
    face_nodes : int
        Gauss points per facet simplex axis.
    """
    lam_v = _lam(lam)
    d = lam_v.size
    if d != 3:
        raise InvalidDimension("h_t is evaluated for d = 3")
    if not 0 < length <= 4:
        raise OutOfRange("t must lie in (0, 4]")
    if np.linalg.norm(lam_v) > 5 + 1e-12:
        raise InvalidArgument("h_t requires ||lambda|| <= 5")
    quad = quad or SphericalQuadrature()
    cone = mu_basis(d)
    n = d - 1
    z, wz = _face_rule(d, face_nodes)
    Z = z @ cone.beta_dual
    count = max(1, math.ceil(length / panel - 1e-9))
    edges = np.linspace(0.0, length, count + 1)
    gl_x, gl_w = leg.leggauss(panel_nodes)
    nodes, deriv, deriv_err, totals, errors = [], [], [], [], []
    evaluations = 0
    for k in range(count):
        lo, hi = edges[k], edges[k + 1]
        s_nodes = lo + (hi - lo) * (gl_x + 1) / 2
        s_w = (hi - lo) / 2 * gl_w
        row, row_err = [], []
        for s in s_nodes:
            X = s * Z
            jac = jacobian_product(X)
            vals, errs = np.empty(len(X), complex), np.empty(len(X))
            for j, x in enumerate(X):
                ev = spherical_phi(lam_v, x, quad)
                vals[j], errs[j] = ev.value, ev.abs_error
            evaluations += len(X)
            scale = cone.gram_det_sqrt * s ** (n - 1)
            row.append(scale * np.dot(wz, vals * jac))
            row_err.append(scale * np.dot(wz, errs * np.abs(jac)))
        row, row_err = np.asarray(row), np.asarray(row_err)
        nodes.append(s_nodes)
        deriv.append(row)
        deriv_err.append(row_err)
        totals.append(np.dot(s_w, row))
        errors.append(np.dot(s_w, row_err))
    return HtProfile(
        lam=_spectral(lam_v),
        length=float(length),
        edges=edges,
        nodes=np.asarray(nodes),
        derivative=np.asarray(deriv),
        derivative_error=np.asarray(deriv_err),
        panel_totals=np.asarray(totals),
        panel_errors=np.asarray(errors),
        evaluations=evaluations,
    )


@lru_cache(maxsize=4096)
def _volume3(t: float) -> float:
    return volume_e_t(3, t)


def _normalized(profile: HtProfile, t: float) -> PropagatorValue:
    F, err = profile.integral(t)
    root = math.sqrt(_volume3(float(t)))
    return PropagatorValue(float(t), profile.lam, F / root, err / root)


def h_t(lam, t: float, quad: SphericalQuadrature | None = None,
        profile: HtProfile | None = None) -> PropagatorValue:
    """``h_t(lam) = m(E_t)^{-1/2} int_{tP} phi_lam(exp X) J(X) dX`` for ``d = 3``.

    A precomputed ``profile`` of sufficient length is reused when given.
    """
    if not 0 < t <= 4:
        raise OutOfRange("t must lie in (0, 4]")
    if profile is None or profile.length < t:
        profile = ht_profile(lam, t, quad)
    return _normalized(profile, t)


# -- cone integrals -----------------------------------------------------------------

def _cone_rates(lam_v: np.ndarray) -> np.ndarray:
    d = lam_v.size
    cone = mu_basis(d)
    rho = build_root_datum(d).rho
    return cone.beta_dual @ (lam_v + rho)


def j_cone(lam) -> complex:
    """``J(lam) = int_{-C0} exp(<lam + rho, Y>) dY`` in closed form.

    The cone is spanned by ``-beta_i^vee``, so ``J = sqrt(G) prod_i 1 / <lam + rho, beta_i^vee>``.

    Raises
    ------
    Divergence
        If some ``Re <lam + rho, beta_i^vee> <= 0``.
    """
    lam_v = _lam(lam)
    if not 3 <= lam_v.size <= 5:
        raise InvalidDimension("cone integrals are evaluated for 3 <= d <= 5")
    rates = _cone_rates(lam_v)
    if np.any(rates.real <= 0):
        raise Divergence("the cone integral diverges", rates=[complex(r) for r in rates])
    return complex(mu_basis(lam_v.size).gram_det_sqrt / np.prod(rates))


def j_cone_quadrature(lam, m: int = 48) -> complex:
    """``J(lam)`` by polar coordinates on the cone.

    With ``Y = -r sum_i u_i beta_i^vee`` and ``u`` on the unit simplex the
    radial integral is ``Gamma(n) / <c, u>^n``; the simplex integral is left
    to a collapsed Gauss-Jacobi rule.
    """
    lam_v = _lam(lam)
    if not 3 <= lam_v.size <= 5:
        raise InvalidDimension("cone integrals are evaluated for 3 <= d <= 5")
    rates = _cone_rates(lam_v)
    if np.any(rates.real <= 0):
        raise Divergence("the cone integral diverges")
    n = rates.size
    y, w = simplex_rule(n - 1, m)
    u = np.column_stack([y, 1 - y.sum(axis=1)])
    dots = u @ rates
    # v = -x = r u with sum(u) = 1 gives dv = r^{n-1} dr du_1 ... du_{n-1}
    value = math.gamma(n) * np.dot(w, dots ** (-n))
    return complex(mu_basis(lam_v.size).gram_det_sqrt * value)


# -- the main-term proxy -----------------------------------------------------------------

def proxy_terms(lam) -> list:
    """``(phase, amplitude)`` per coset: ``amplitude = c(w lam) J(w lam) / c^M(w lam)``.

    The phase is ``<w lam, X0>``, so the term is ``amplitude * exp(t * phase)``.
    """
    lam_v = _lam(lam)
    x0 = compute_x0(lam_v.size).array
    out = []
    for _, image, coeff in main_term_coefficients(lam_v):
        out.append((complex(np.dot(image, x0)), coeff * j_cone(image)))
    return out


def i_of_t(lam, t) -> np.ndarray | complex:
    """``I(t, lam)``; ``t`` may be a scalar or an array."""
    terms = proxy_terms(lam)
    t_arr = np.asarray(t, dtype=float)
    total = np.zeros(t_arr.shape, dtype=complex)
    for phase, amp in terms:
        total = total + amp * np.exp(t_arr * phase)
    return complex(total) if total.ndim == 0 else total


def phases(lam) -> tuple:
    """``<w lam, X0> / i`` per coset, in coset order."""
    lam_v = _lam(lam)
    x0 = compute_x0(lam_v.size).array
    return tuple(float((np.dot(image, x0) / 1j).real) for _, image, _ in main_term_coefficients(lam_v))


def phase_collision(lam, tol: float = 1e-9) -> bool:
    """True when two cosets share a phase, or some ``J(w lam)`` vanishes.

    Either case removes ``lam`` from the generic set where the Parseval
    identity for ``|I|^2`` holds term by term.
    """
    lam_v = _lam(lam)
    terms = proxy_terms(lam_v)
    vals = np.array([p for p, _ in terms])
    diffs = np.abs(vals[:, None] - vals[None, :])
    np.fill_diagonal(diffs, np.inf)
    if np.any(diffs < tol):
        return True
    return any(abs(a) < 1e-12 for _, a in terms)


def tau1(lam, max_denominator: int = 10**6) -> RationalSpectral:
    """Smallest ``tau > 0`` with ``tau * phase`` in ``2 pi Z`` for every phase.

    Raises
    ------
    NotRational
        If some phase is not within ``1e-9`` of a fraction with denominator
        at most ``max_denominator``, or ``lam`` is not tempered.

    Notes
    -----
    Every float is close to some fraction with a large denominator, so the
    best approximant ``a/q`` must also beat the continued-fraction scale:
    ``|p - a/q| q^2 <= 1e-3``.  Irrational phases such as ``sqrt(2)`` fail
    this test because their convergents only reach ``~1/q^2``.
    """
    lam_v = _lam(lam)
    if np.max(np.abs(lam_v.real)) > 1e-12:
        raise NotRational("periodicity needs a tempered parameter")
    ph = phases(lam_v)
    fracs = []
    for p in ph:
        f = Fraction(p).limit_denominator(max_denominator)
        gap = abs(float(f) - p)
        if gap > 1e-9 * max(1.0, abs(p)) or gap * f.denominator ** 2 > 1e-3:
            raise NotRational("phase is not rational", phase=p)
        if f != 0:
            fracs.append(abs(f))
    if not fracs:
        raise NotRational("all phases vanish")
    num = 0
    den = 1
    for f in fracs:
        num = math.gcd(num, f.numerator)
        den = den * f.denominator // math.gcd(den, f.denominator)
    # gcd of the phases is num/den; tau1 = 2 pi / gcd
    return RationalSpectral(_spectral(lam_v), 2 * math.pi * den / num, ph)


# -- replacement and time averages ---------------------------------------------------------

@dataclass(frozen=True)
class ReplacementReport:
    """Comparison of ``h_t`` with multiples of ``I(t, lam)`` on a grid.

    ``constant`` is the least-squares fit over the whole grid.
    ``asymptotic_constant`` is ``2^{-N} / sqrt(c_vol)``, where ``m(E_t) ~
    c_vol exp(2 <rho, X0> t)``; it is the limit of ``h_t / I`` implied by the
    normalizations used here.  ``residual`` is measured against it.
    """

    t: tuple
    h: tuple
    proxy: tuple
    constant: complex
    asymptotic_constant: float
    residual: tuple
    fit_residual: tuple
    abs_error: tuple
    window_max: tuple
    subgrid_constants: tuple
    tail_constant: complex

    @property
    def decreasing(self) -> bool:
        r = self.window_max
        return all(b < a for a, b in zip(r, r[1:]))

    @property
    def constant_spread(self) -> float:
        c = np.abs(np.asarray(self.subgrid_constants))
        return float((c.max() - c.min()) / abs(self.constant))


def _fit_constant(h: np.ndarray, proxy: np.ndarray) -> complex:
    return complex(np.vdot(proxy, h) / np.vdot(proxy, proxy))


def asymptotic_constant(d: int = 3) -> float:
    """Limit of ``h_t / I(t, lam)`` as ``t`` grows, in the present normalizations."""
    _, coeff = volume_leading_term(d)
    return float(2.0 ** -build_root_datum(d).n_positive / math.sqrt(coeff))


def replacement_check(lam, t_grid, quad: SphericalQuadrature | None = None,
                      profile: HtProfile | None = None, windows: int = 4) -> ReplacementReport:
    """Compare ``h_t`` with ``C I(t, lam)`` on ``t_grid``.

    A single constant is fitted by least squares and reported together with
    fits on interleaved sub-grids and on the last window.  The residual
    ``|h_t - C I|`` with the asymptotic constant oscillates with the phases
    of ``I``, so its decay is judged on maxima over ``windows`` consecutive
    sub-intervals of the grid.

    Raises
    ------
    Inconclusive
        If ``I`` vanishes on the grid.
    """
    lam_v = _lam(lam)
    if lam_v.size != 3:
        raise InvalidDimension("replacement_check is evaluated for d = 3")
    ts = np.asarray(sorted(float(t) for t in t_grid))
    if ts.size < 2 * windows or ts[0] < 1.5 - 1e-12 or ts[-1] > 3.5 + 1e-12:
        raise InvalidArgument("t_grid must hold at least two points per window inside [1.5, 3.5]")
    proxy = i_of_t(lam_v, ts)
    if np.max(np.abs(proxy)) < 1e-12:
        raise Inconclusive("I(t, lambda) vanishes on the grid")
    if profile is None or profile.length < ts[-1]:
        profile = ht_profile(lam_v, float(ts[-1]), quad)
    vals = [_normalized(profile, t) for t in ts]
    h = np.array([v.value for v in vals])
    errs = np.array([v.abs_error for v in vals])
    C = _fit_constant(h, proxy)
    C_inf = asymptotic_constant(3)
    residual = np.abs(h - C_inf * proxy)
    chunks = np.array_split(np.arange(ts.size), windows)
    window_max = tuple(float(residual[c].max()) for c in chunks)
    sub_c = (_fit_constant(h[0::2], proxy[0::2]), _fit_constant(h[1::2], proxy[1::2]))
    tail = chunks[-1]
    return ReplacementReport(
        t=tuple(ts.tolist()),
        h=tuple(h.tolist()),
        proxy=tuple(proxy.tolist()),
        constant=C,
        asymptotic_constant=C_inf,
        residual=tuple(residual.tolist()),
        fit_residual=tuple(np.abs(h - C * proxy).tolist()),
        abs_error=tuple(errs.tolist()),
        window_max=window_max,
        subgrid_constants=sub_c,
        tail_constant=_fit_constant(h[tail], proxy[tail]),
    )


def _trapezoid_average(f, tau: float, per_unit: int, tol: float, max_doublings: int = 6):
    """Trapezoid average of ``f`` over ``[0, tau]`` with doubling until the change is below ``tol``."""
    n = max(2, int(math.ceil(per_unit * tau)))
    prev = None
    for _ in range(max_doublings + 1):
        t = np.linspace(0.0, tau, n + 1)
        y = f(t)
        avg = float(np.trapezoid(y, t) / tau)
        if prev is not None and abs(avg - prev) <= tol * max(abs(avg), 1e-300):
            return avg, n + 1
        prev = avg
        n *= 2
    return avg, n // 2 + 1


def time_average(lam, tau: float, quad: SphericalQuadrature | None = None, route: str = "proxy",
                 constant: complex = 1.0, per_unit: int = 64, tol: float = 1e-4,
                 profile: HtProfile | None = None) -> TimeAverageReport:
    """``(1/tau) int_0^tau |h_t|^2 dt`` (direct) or ``|C I(t)|^2`` (proxy).

    The Parseval target is ``sum_w |C c(w lam) J(w lam) / c^M(w lam)|^2``,
    which the proxy average approaches as ``tau`` grows when all phases are
    distinct.  The direct route is restricted to ``d = 3`` and ``tau <= 3.5``.
    """
    lam_v = _lam(lam)
    if tau <= 0:
        raise OutOfRange("tau must be positive")
    terms = proxy_terms(lam_v)
    target = float(sum(abs(constant * a) ** 2 for _, a in terms))
    if route == "proxy":
        avg, npts = _trapezoid_average(lambda t: np.abs(constant * i_of_t(lam_v, t)) ** 2, tau, per_unit, tol)
    elif route == "direct":
        if lam_v.size != 3 or tau > 3.5:
            raise OutOfRange("the direct average needs d = 3 and tau <= 3.5")
        if profile is None or profile.length < tau:
            profile = ht_profile(lam_v, tau, quad)

        def sq(ts):
            out = np.empty(ts.size)
            for k, t in enumerate(ts):
                # h_0 = 0: E_0 is K, a null set for the Cartan density
                out[k] = 0.0 if t == 0 else abs(_normalized(profile, t).value) ** 2
            return out

        avg, npts = _trapezoid_average(sq, tau, per_unit, tol, max_doublings=2)
    else:
        raise InvalidArgument(f"unknown route {route!r}")
    gap = (avg - target) / target if target > 0 else float("nan")
    return TimeAverageReport(float(tau), avg, target, float(gap), route, int(npts))
