"""The acceptance suite: one function per criterion.

Each ``criterion_N`` returns a ``CriterionResult`` with the measured
quantities in ``details``.  Expensive shared objects, such as the ``h_t``
profiles, are cached for the lifetime of the process so that the test suite
and the command line runner can call criteria in any order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import chamber_geometry as cg
from . import group_numerics as gn
from . import propagator as pr
from . import spherical_analysis as sa
from .root_algebra import build_root_datum, weyl_apply

__all__ = ["CriterionResult", "CRITERIA", "run_criterion", "run_all", "format_table"]


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:2d} {status}  {self.title}  ({self.seconds:.1f} s)"


def _rel(a, b) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


# -- 1 ----------------------------------------------------------------------------------

RHO_X0 = {3: 2, 4: 4, 5: 6, 6: 9, 7: 12, 8: 16}


def criterion_1(quick: bool = False) -> CriterionResult:
    """X0 matches the independent vertex oracle and <rho, X0> matches its table."""
    rows = {}
    ok = True
    for d in range(3, 9):
        x0 = cg.compute_x0(d)
        oracle = cg.x0_oracle(d)
        exact = x0.coords == oracle.coords
        pairing = sum(Fraction(r) * Fraction(x) for r, x in zip(cg._rho_exact(d), cg._x0_exact(d)))
        rows[d] = {"x0": list(x0.coords), "oracle_match": exact, "rho_x0": float(pairing)}
        ok &= exact and pairing == RHO_X0[d]
    return CriterionResult(1, "X0 identity", ok, rows)


# -- 2 ----------------------------------------------------------------------------------

def criterion_2(quick: bool = False, samples: int = 100_000, seed: int = 2) -> CriterionResult:
    """mu/beta duality and membership equivalence of the two polytope descriptions."""
    out = {}
    ok = True
    rng = gn.make_rng(seed)
    for d in range(3, 7):
        cone = cg.mu_basis(d)
        x0 = cg.compute_x0(d).array
        mu_x0 = float(np.max(np.abs(cone.mu @ x0 - 1)))
        duality = float(np.max(np.abs(cone.mu @ cone.beta_dual.T - np.eye(d - 1))))
        span = float(np.max(np.abs(cone.beta_dual.sum(axis=0) - x0)))
        coeffs = cone.rho_coefficients
        integral = all(isinstance(c, int) and c > 0 for c in coeffs)
        # half the samples inside a sorted box, half unsorted, scale around the unit polytope
        raw = rng.uniform(-1.6, 1.6, size=(samples, d))
        raw[: samples // 2] = -np.sort(-raw[: samples // 2], axis=1)
        X = raw - raw.mean(axis=1, keepdims=True)
        a = cg.in_p_plus(X, 1e-9)
        b = cg.in_cone_description(X, 1e-9)
        mismatches = int(np.count_nonzero(a != b))
        out[d] = {
            "mu_x0_err": mu_x0, "duality_err": duality, "sum_beta_err": span,
            "rho_coefficients": list(coeffs), "mismatches": mismatches, "inside": int(a.sum()),
        }
        ok &= mu_x0 <= 1e-12 and duality <= 1e-12 and span <= 1e-12 and integral and mismatches == 0
    return CriterionResult(2, "cone structure", ok, out)


# -- 3 ----------------------------------------------------------------------------------

def criterion_3(quick: bool = False) -> CriterionResult:
    """Brion volumes against polytope quadrature; positivity of the alternating sum."""
    out = {"relative_error": {}, "alternating_min": {}}
    ok = True
    for d in (3, 4):
        for t in (1, 2):
            exact = cg.brion_volume(d, t)
            quad = gn.volume_e_t(d, t, gn.QuadratureSpec(check=False))
            err = _rel(quad, exact)
            out["relative_error"][f"d={d},t={t}"] = err
            ok &= err < 1e-6
        values = [float(cg.alternating_brion_sum(d, t)) for t in np.arange(1.0, 6.01, 0.5)]
        out["alternating_min"][d] = min(values)
        ok &= min(values) > 0
    return CriterionResult(3, "Brion vs quadrature", ok, out)


# -- 4 ----------------------------------------------------------------------------------

def criterion_4(quick: bool = False) -> CriterionResult:
    """Slope of log m(E_t) on [3, 8] against 2 <rho, X0>."""
    out = {}
    ok = True
    ts = np.linspace(3.0, 8.0, 11)
    for d in (3, 4):
        logs = [math.log(gn.volume_e_t(d, float(t))) for t in ts]
        slope = float(np.polyfit(ts, logs, 1)[0])
        target = 2 * RHO_X0[d]
        out[d] = {"slope": slope, "target": target, "relative_gap": _rel(slope, target)}
        ok &= _rel(slope, target) <= 0.02
    return CriterionResult(4, "volume growth", ok, out)


# -- 5 ----------------------------------------------------------------------------------

def _chamber_points(d: int, n: int, rng) -> np.ndarray:
    X = -np.sort(-rng.uniform(-2.5, 2.5, size=(n, d)), axis=1)
    return X - X.mean(axis=1, keepdims=True)


def criterion_5(quick: bool = False, points: int = 1000, seed: int = 5) -> CriterionResult:
    """Product and alternating forms of J agree; spot value at (1, 0, -1)."""
    out = {}
    ok = True
    rng = gn.make_rng(seed)
    for d in (3, 4, 5):
        X = _chamber_points(d, points, rng)
        prod = gn.jacobian_product(X)
        worst = 0.0
        for x, p in zip(X, prod):
            alt = gn.jacobian_alternating(x)
            worst = max(worst, abs(p - alt) / max(abs(p), abs(alt), 1e-300))
        out[d] = worst
        ok &= worst <= 1e-9
    spot = gn.jacobian(np.array([1.0, 0.0, -1.0]))
    out["spot"] = spot
    ok &= abs(spot - 5.0090) <= 1e-3
    return CriterionResult(5, "Jacobian consistency", ok, out)


# -- 6 ----------------------------------------------------------------------------------

def criterion_6(quick: bool = False, seed: int = 6) -> CriterionResult:
    """Decomposition round trips, norm symmetry, triangle inequality, Frobenius sandwich."""
    out = {}
    rng = gn.make_rng(seed)
    recon = 0.0
    for d in (3, 4, 5):
        batch = gn.sample_e_t_batch(d, 2.0, 200, rng.integers(2**31))
        for g in batch.matrices:
            c = gn.cartan_decompose(g)
            iw = gn.iwasawa_h0(g)
            scale = np.linalg.norm(g)
            recon = max(recon, np.linalg.norm(c.reconstruct() - g) / scale,
                        np.linalg.norm(iw.reconstruct() - g) / scale)
    out["reconstruction"] = float(recon)
    d = 3
    n_pairs = 10_000
    a = gn.sample_e_t_batch(d, 2.0, n_pairs, rng.integers(2**31)).matrices
    b = gn.sample_e_t_batch(d, 1.5, n_pairs, rng.integers(2**31)).matrices
    na, nb, nab = gn.cartan_norm(a), gn.cartan_norm(b), gn.cartan_norm(a @ b)
    inv = gn.cartan_norm(np.linalg.inv(a))
    out["inverse_gap"] = float(np.max(np.abs(inv - na)))
    out["triangle_violations"] = int(np.count_nonzero(nab > na + nb + 1e-9))
    violations = 0
    n_sand = 100_000
    for d in (3, 4):
        t = 1.5
        wide = t + math.log(math.sqrt(d))
        g = gn.sample_e_t_batch(d, t, n_sand, rng.integers(2**31)).matrices
        _, in_ball = gn.membership_batch(g, wide)
        in_wide, _ = gn.membership_batch(g, wide)
        violations += int(np.count_nonzero(~in_ball)) + int(np.count_nonzero(~in_wide))
        # the second inclusion, on samples spread over a larger set
        h = gn.sample_e_t_batch(d, wide + 1.0, n_sand, rng.integers(2**31)).matrices
        et, ball = gn.membership_batch(h, wide)
        violations += int(np.count_nonzero(ball & ~et))
    out["sandwich_violations"] = violations
    ok = recon <= 1e-8 and out["inverse_gap"] <= 1e-9 and out["triangle_violations"] == 0 and violations == 0
    return CriterionResult(6, "norm and decompositions", ok, out)


# -- 7 ----------------------------------------------------------------------------------

def intersection_slope(d: int = 3, t: float = 3.0, n: int = 20_000, steps: int = 6,
                       reach: float = 5.0, seed: int = 0) -> dict:
    """Regression of ``log(ratio)`` on ``<rho, Y>`` along the rho-ray."""
    rho = build_root_datum(d).rho
    batch = gn.sample_e_t_batch(d, t, n, seed)
    levels = np.linspace(0.0, reach, steps)
    ratios, errs = [], []
    for r in levels:
        Y = r * rho / float(np.dot(rho, rho))
        est = gn.intersection_ratio(d, t, Y, n, seed, batch=batch)
        ratios.append(est.ratio)
        errs.append(est.stderr)
    ratios = np.asarray(ratios)
    good = ratios > 0
    slope = float(np.polyfit(levels[good], np.log(ratios[good]), 1)[0]) if good.sum() >= 2 else float("nan")
    return {"levels": levels.tolist(), "ratios": ratios.tolist(), "stderr": errs, "slope": slope,
            "bound_constant": float(np.max(ratios * np.exp(levels)))}


def criterion_7(quick: bool = False) -> CriterionResult:
    """Intersection ratios decay at least like exp(-0.9 <rho, Y>) on the measured range."""
    out = intersection_slope()
    return CriterionResult(7, "intersection bound", bool(out["slope"] <= -0.9), out)


# -- 8 ----------------------------------------------------------------------------------

def criterion_8(quick: bool = False, n: int = 200_000, seed: int = 8) -> CriterionResult:
    """Support and entry bounds hold on all samples; the lower entry constant is stable."""
    out = {}
    ok = True
    cs = []
    for t in (1.0, 2.0, 3.0):
        rep = gn.support_bound_scan(3, t, n, seed)
        out[t] = {"b_emp": rep.b_emp, "max_entry_excess": rep.max_entry_excess, "c_emp": rep.c_emp}
        ok &= rep.b_emp <= 1e-9 and rep.max_entry_excess <= 1e-12 and rep.c_emp > 0
        cs.append(rep.c_emp)
    mean = float(np.mean(cs))
    spread = float(max(abs(c - mean) for c in cs) / mean)
    out["c_spread"] = spread
    ok &= spread <= 0.2
    return CriterionResult(8, "support and entry bounds", ok, out)


# -- 9 ----------------------------------------------------------------------------------

def criterion_9(quick: bool = False) -> CriterionResult:
    """I2 is below its reduced form and grows at most linearly."""
    out = {}
    ok = True
    taus = (5.0, 10.0, 20.0)
    for d in (3, 4):
        rows = {}
        for tau in taus:
            r1 = gn.i2_integral(d, 0.5, tau)
            r2 = gn.i2_integral(d, 0.5, 2 * tau)
            ratio = r2.numeric / r1.numeric
            rows[tau] = {"numeric": r1.numeric, "reduced": r1.reduced_closed_form, "growth": ratio}
            ok &= r1.numeric <= r1.reduced_closed_form and r2.numeric <= r2.reduced_closed_form and ratio <= 2.5
        out[d] = rows
    spot = gn.i2_integral(3, 0.5, 5.0).reduced_closed_form
    out["spot"] = spot
    ok &= abs(spot - 20.0) <= 1e-3
    return CriterionResult(9, "I2 growth", ok, out)


# -- 10 ----------------------------------------------------------------------------------

def _regular_grid(radius: float) -> list:
    pts = []
    for a in np.arange(-radius, radius + 1e-9, 1.0):
        for b in np.arange(-radius, radius + 1e-9, 1.0):
            y = np.array([a, b, -a - b]) + np.array([0.31, -0.17, -0.14])
            diffs = np.abs(y[:, None] - y[None, :])[np.triu_indices(3, 1)]
            if diffs.min() >= 1.0:
                pts.append(y)
    return pts


def criterion_10(quick: bool = False) -> CriterionResult:
    """Spherical function identities, Plancherel symmetry and the beta-tilde comparison."""
    out = {}
    ok = True
    lams3 = [1j * np.array([1.0, 0.0, -1.0]), 1j * np.array([2.1, -0.4, -1.7]),
             np.array([0.3 + 1.2j, -0.1 - 0.5j, -0.2 - 0.7j])]
    identity = all(sa.spherical_phi(l, np.zeros(3)).value == 1 for l in lams3)
    identity &= sa.spherical_phi(1j * np.array([1.5, 0.5, -0.5, -1.5]), np.zeros(4)).value == 1
    out["identity_exact"] = identity
    ok &= identity
    # |phi| <= 1 for tempered lambda
    worst_bound = -np.inf
    Xs = [np.array([0.4, 0.1, -0.5]), np.array([1.5, 0.0, -1.5]), np.array([2.5, -0.5, -2.0]),
          np.array([3.0, 1.0, -4.0])]
    tempered = [1j * np.array([1.0, 0.0, -1.0]), 1j * np.array([2.1, -0.4, -1.7]),
                1j * np.array([0.2, 0.1, -0.3]), 1j * np.array([3.0, -1.0, -2.0])]
    for lam in tempered:
        for X in Xs:
            ev = sa.spherical_phi(lam, X)
            worst_bound = max(worst_bound, abs(ev.value) - 1 - 3 * ev.abs_error)
    out["bound_excess"] = float(worst_bound)
    ok &= worst_bound <= 0
    # Weyl symmetry in lambda
    datum = build_root_datum(3)
    worst_sym = 0.0
    lam = np.array([0.3 + 1.2j, -0.1 - 0.5j, -0.2 - 0.7j])
    for X in Xs[:3]:
        base = sa.spherical_phi(lam, X)
        for perm, _ in datum.weyl:
            ev = sa.spherical_phi(weyl_apply(perm, lam), X)
            sigma = math.hypot(base.abs_error, ev.abs_error)
            worst_sym = max(worst_sym, abs(ev.value - base.value) / (3 * sigma))
    lam4 = 1j * np.array([1.5, 0.4, -0.6, -1.3])
    X4 = np.array([1.0, 0.5, -0.5, -1.0])
    base = sa.spherical_phi(lam4, X4)
    for perm, _ in build_root_datum(4).weyl[:: 5 if quick else 1]:
        ev = sa.spherical_phi(weyl_apply(perm, lam4), X4)
        worst_sym = max(worst_sym, abs(ev.value - base.value) / (3 * math.hypot(base.abs_error, ev.abs_error)))
    out["symmetry_in_3sigma_units"] = float(worst_sym)
    ok &= worst_sym <= 1
    # Plancherel density on Weyl orbits
    worst_pl = 0.0
    for y in ([1.3, 0.2, -1.5], [2.0, -0.7, -1.3], [0.4, 0.3, -0.7]):
        lam = 1j * np.asarray(y)
        ref = sa.plancherel_density(lam)
        for perm, _ in datum.weyl:
            worst_pl = max(worst_pl, _rel(sa.plancherel_density(weyl_apply(perm, lam)), ref))
    out["plancherel_invariance"] = worst_pl
    ok &= worst_pl <= 1e-10
    inner = sa.plancherel_ratio_scan(3, _regular_grid(6.0))
    outer = sa.plancherel_ratio_scan(3, _regular_grid(12.0))
    out["ratio_C_radius6"] = inner["C"]
    out["ratio_C_radius12"] = outer["C"]
    ok &= math.isfinite(outer["C"]) and outer["C"] <= 1.5 * inner["C"]
    return CriterionResult(10, "spherical identities", ok, out)


# -- 11 ----------------------------------------------------------------------------------

@lru_cache(maxsize=None)
def rho_profile() -> pr.HtProfile:
    return pr.ht_profile(build_root_datum(3).rho.astype(complex), 3.0)


def criterion_11(quick: bool = False) -> CriterionResult:
    """h_t(rho) from the spherical quadrature equals sqrt(m(E_t)) from the volume quadrature."""
    out = {}
    ok = True
    prof = rho_profile()
    for t in (1.0, 2.0, 3.0):
        h = pr.h_t(build_root_datum(3).rho, t, profile=prof)
        root = math.sqrt(gn.volume_e_t(3, t))
        out[t] = {"h": h.value.real, "sqrt_volume": root, "relative_gap": _rel(h.value.real, root)}
        ok &= _rel(h.value, root) <= 0.02
    return CriterionResult(11, "propagator identity", ok, out)


# -- 12 ----------------------------------------------------------------------------------

PERIODIC_LAMBDA = 1j * np.array([1.0, 0.0, -1.0])
GENERIC_LAMBDA = 1j * np.array([1.5, 0.5, -2.0])


@lru_cache(maxsize=None)
def main_profile() -> pr.HtProfile:
    return pr.ht_profile(PERIODIC_LAMBDA, 3.5)


def criterion_12(quick: bool = False) -> CriterionResult:
    """Cone integrals, periodicity, Parseval proxy, replacement decay, direct positivity."""
    out = {}
    ok = True
    worst_j = 0.0
    for lam in (np.zeros(3), PERIODIC_LAMBDA, GENERIC_LAMBDA, np.array([0.2 + 0.7j, 0.1 - 1.1j, -0.3 + 0.4j])):
        worst_j = max(worst_j, abs(pr.j_cone(lam) - pr.j_cone_quadrature(lam)))
    j0 = pr.j_cone(np.zeros(3))
    out["j_cone_gap"] = float(worst_j)
    out["J0"] = j0.real
    ok &= worst_j <= 1e-4 and abs(j0 - math.sqrt(3)) <= 1e-12
    rs = pr.tau1(PERIODIC_LAMBDA)
    ts = np.linspace(0.0, 10.0, 41)
    period_gap = float(np.max(np.abs(pr.i_of_t(PERIODIC_LAMBDA, ts + rs.tau1) - pr.i_of_t(PERIODIC_LAMBDA, ts))))
    out["tau1"] = rs.tau1
    out["period_gap"] = period_gap
    ok &= abs(rs.tau1 - 2 * math.pi) <= 1e-12 and period_gap <= 1e-10
    avg = pr.time_average(GENERIC_LAMBDA, 200.0)
    out["parseval_gap"] = avg.relative_gap
    ok &= abs(avg.relative_gap) <= 0.05
    prof = main_profile()
    rep = pr.replacement_check(PERIODIC_LAMBDA, np.linspace(1.5, 3.5, 17), profile=prof)
    out["replacement_window_max"] = list(rep.window_max)
    out["fitted_constant"] = rep.constant.real
    out["asymptotic_constant"] = rep.asymptotic_constant
    ok &= rep.decreasing
    direct = pr.time_average(PERIODIC_LAMBDA, 3.0, route="direct", profile=prof)
    out["direct_average"] = direct.average
    ok &= direct.average > 0
    return CriterionResult(12, "main-term machinery", ok, out)


# -- 13 ----------------------------------------------------------------------------------

def criterion_13(quick: bool = False) -> CriterionResult:
    """Angle and linear-form constants are positive; C1 = 1 for d = 3."""
    out = {}
    ok = True
    for d in range(3, 7):
        c = cg.appendix_b_constants(d)
        out[d] = {"gamma": c.gamma, "C1": c.C1, "C2": c.C2, "cones_agree": c.cones_agree}
        ok &= c.gamma > 0 and c.C1 > 0 and c.C2 > 0
    ok &= abs(out[3]["C1"] - 1) <= 1e-9
    return CriterionResult(13, "angle and linear-form constants", ok, out)


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
    11: criterion_11, 12: criterion_12, 13: criterion_13,
}


def run_criterion(number: int, quick: bool = False) -> CriterionResult:
    start = time.perf_counter()
    result = CRITERIA[number](quick=quick)
    result.seconds = time.perf_counter() - start
    return result


def run_all(quick: bool = False, only=None, report=None) -> list:
    """Run the selected criteria in order; ``report`` is called with each result."""
    results = []
    for number in sorted(only or CRITERIA):
        res = run_criterion(number, quick)
        results.append(res)
        if report is not None:
            report(res)
    return results


def format_table(results) -> str:
    lines = [r.line() for r in results]
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} criteria passed")
    return "\n".join(lines)
