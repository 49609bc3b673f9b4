"""Command line entry point ``higher-rank-lab``.

Every subcommand calls one library operation and writes a JSON or CSV
report.  Exit codes: 0 on success, 1 on a numerical failure (with a JSON
diagnostic on stderr) or a failed verification, 2 on usage errors.

Vectors are comma-separated coordinates in the trace-zero chart.  Complex
entries use Python syntax, e.g. ``1j,0,-1j`` or ``0.3+1.2j,-0.1-0.5j,-0.2-0.7j``.
``RANKLAB_THREADS`` caps the worker threads used for grid scans.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from . import acceptance
from . import chamber_geometry as cg
from . import group_numerics as gn
from . import propagator as pr
from . import spherical_analysis as sa
from .errors import InvalidArgument, InvalidDimension, LabError
from .root_algebra import SpectralParameter, build_root_datum

SCHEMA = "rank-lab/1"


# -- parsing helpers --------------------------------------------------------------------

def _real_vector(text: str) -> np.ndarray:
    try:
        vals = np.array([float(tok) for tok in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a real vector: {text!r}") from None
    return vals


def _complex_vector(text: str) -> np.ndarray:
    try:
        vals = np.array([complex(tok.strip().replace("i", "j")) for tok in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex vector: {text!r}") from None
    return vals


def _real_list(text: str) -> list:
    return [float(v) for v in _real_vector(text)]


def _matrix(text: str) -> np.ndarray:
    rows = [r for r in text.split(";") if r.strip()]
    try:
        return np.array([[float(v) for v in r.split(",")] for r in rows])
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a matrix: {text!r}") from None


def _check_trace_zero(vec: np.ndarray, name: str) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(vec))))
    if abs(complex(vec.sum())) > 1e-9 * scale:
        raise InvalidArgument(f"{name} must have coordinates summing to zero")
    return vec


def _check_d(d: int, hi: int = 8) -> int:
    if not 3 <= d <= hi:
        raise InvalidDimension(f"--d must lie in [3, {hi}] for this command")
    return d


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("RANKLAB_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items) -> list:
    """Ordered parallel map, capped by ``RANKLAB_THREADS``."""
    items = list(items)
    n = min(_threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, SpectralParameter):
        return _jsonable(obj.value)
    if isinstance(obj, complex) or isinstance(obj, np.complexfloating):
        return {"re": float(obj.real), "im": float(obj.imag)}
    return obj


class Report:
    """Result of one subcommand: a JSON payload and optional CSV rows."""

    def __init__(self, command: str, params: dict, result: dict, header=None, rows=None):
        self.command = command
        self.params = params
        self.result = result
        self.header = header
        self.rows = rows

    def to_json(self) -> str:
        payload = {"schema": SCHEMA, "command": self.command, "params": self.params, "result": self.result}
        return json.dumps(_jsonable(payload), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        if self.header is None:
            writer.writerow(["key", "value"])
            for k, v in _flatten(_jsonable(self.result)):
                writer.writerow([k, v])
        else:
            writer.writerow(self.header)
            for row in self.rows:
                writer.writerow([_csv_cell(v) for v in row])
        return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _flatten(obj, prefix: str = ""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, _csv_cell(obj)


def _lam_cols(lam: np.ndarray) -> list:
    cols = []
    for i in range(lam.size):
        cols += [f"lambda{i + 1}_re", f"lambda{i + 1}_im"]
    return cols


def _lam_vals(lam: np.ndarray) -> list:
    vals = []
    for v in lam:
        vals += [float(v.real), float(v.imag)]
    return vals


def _figure(args, x, series, xlabel, ylabel, logy=False, title=""):
    if getattr(args, "figure", None):
        from .plotting import save_series

        save_series(args.figure, x, series, xlabel, ylabel, logy=logy, title=title)


# -- subcommands ------------------------------------------------------------------------

def cmd_x0(args):
    d = _check_d(args.d)
    x0 = cg.compute_x0(d)
    oracle = cg.x0_oracle(d)
    rho = build_root_datum(d).rho
    return Report("x0", {"d": d}, {"x0": list(x0.coords), "oracle_match": x0.coords == oracle.coords,
                                    "rho_x0": float(np.dot(rho, x0.array))})


def cmd_cone(args):
    d = _check_d(args.d)
    cone = cg.mu_basis(d)
    return Report("cone", {"d": d}, {
        "mu": cone.mu, "beta_dual": cone.beta_dual, "gram_det": float(cone.gram_det),
        "gram_det_sqrt": cone.gram_det_sqrt, "rho_coefficients": list(cone.rho_coefficients),
        "vertices_cone_chart": cg.chamber_polytope(d).vertex_array(),
    })


def cmd_brion(args):
    d = _check_d(args.d, 6)
    rows = []
    for t in args.t:
        rows.append([t, cg.brion_volume(d, t), float(cg.alternating_brion_sum(d, t))])
    return Report("brion", {"d": d, "t": args.t},
                  {"t": args.t, "volume": [r[1] for r in rows], "alternating_sum": [r[2] for r in rows]},
                  ["t", "volume", "alternating_sum"], rows)


def cmd_volume(args):
    d = _check_d(args.d, 5)
    quad = gn.QuadratureSpec(points=args.points)
    vals = _map(lambda t: gn.volume_e_t(d, t, quad), args.t)
    exact = _map(lambda t: cg.brion_volume(d, t), args.t)
    rows = [[t, v, e, abs(v - e) / abs(e)] for t, v, e in zip(args.t, vals, exact)]
    result = {"t": args.t, "quadrature": vals, "brion": exact}
    if len(args.t) >= 2:
        result["log_slope"] = float(np.polyfit(args.t, np.log(vals), 1)[0])
        result["target_slope"] = 2 * float(np.dot(build_root_datum(d).rho, cg.compute_x0(d).array))
    _figure(args, args.t, {"quadrature": vals}, "t", "m(E_t)", logy=True)
    return Report("volume", {"d": d, "t": args.t, "points": args.points}, result,
                  ["t", "quadrature", "brion", "relative_gap"], rows)


def cmd_shrink(args):
    d = _check_d(args.d)
    p = cg.shrink_parameters(d, args.eta)
    return Report("shrink", {"d": d, "eta": args.eta}, p.__dict__)


def cmd_appendix_b(args):
    d = _check_d(args.d, 6)
    c = cg.appendix_b_constants(d, args.projection)
    return Report("appendixB", {"d": d, "projection": args.projection}, c.__dict__)


def cmd_cartan(args):
    if args.matrix is not None:
        g = args.matrix
    else:
        d = _check_d(args.d)
        g = gn.sample_e_t(d, args.t, args.seed).matrix
    c = gn.cartan_decompose(g)
    iw = gn.iwasawa_h0(g)
    return Report("cartan", {"d": int(g.shape[0]), "t": args.t, "seed": args.seed}, {
        "matrix": g, "X": list(c.X.coords), "norm": c.norm, "k1": c.k1, "k2": c.k2,
        "H0": list(iw.H0.coords), "n": iw.n, "k": iw.k,
        "cartan_reconstruction_error": float(np.linalg.norm(c.reconstruct() - g)),
        "iwasawa_reconstruction_error": float(np.linalg.norm(iw.reconstruct() - g)),
    })


def cmd_sample(args):
    d = _check_d(args.d)
    batch = gn.sample_e_t_batch(d, args.t, args.n, args.seed)
    header = [f"X{i + 1}" for i in range(d)]
    rows = [list(map(float, x)) for x in batch.X]
    return Report("sample", {"d": d, "t": args.t, "n": args.n, "seed": args.seed},
                  {"efficiency": batch.efficiency, "proposals": batch.proposals, "X": batch.X}, header, rows)


def cmd_intersect(args):
    d = _check_d(args.d)
    ray = _check_trace_zero(args.ray, "--ray")
    if ray.size != d:
        raise InvalidArgument("--ray must have d coordinates")
    rho = build_root_datum(d).rho
    scale = float(np.dot(rho, ray))
    if scale <= 0:
        raise InvalidArgument("--ray must pair positively with rho")
    batch = gn.sample_e_t_batch(d, args.t, args.n, args.seed)
    levels = np.linspace(0.0, args.reach, args.steps)
    ests = _map(lambda r: gn.intersection_ratio(d, args.t, r * ray / scale, args.n, args.seed, batch=batch), levels)
    ratios = np.array([e.ratio for e in ests])
    good = ratios > 0
    slope = float(np.polyfit(levels[good], np.log(ratios[good]), 1)[0]) if good.sum() >= 2 else float("nan")
    rows = [[float(r), e.ratio, e.stderr, e.hits] for r, e in zip(levels, ests)]
    _figure(args, levels, {"ratio": ratios}, "<rho, Y>", "intersection ratio", logy=True)
    return Report("intersect", {"d": d, "t": args.t, "ray": args.ray, "steps": args.steps, "n": args.n,
                                "seed": args.seed, "reach": args.reach},
                  {"levels": levels, "ratios": ratios, "slope": slope},
                  ["rho_Y", "ratio", "stderr", "hits"], rows + [["slope", slope, "", ""]])


def cmd_support(args):
    d = _check_d(args.d)
    reps = [gn.support_bound_scan(d, t, args.n, args.seed) for t in args.t]
    rows = [[r.t, r.b_emp, r.max_entry_excess, r.c_emp, r.n] for r in reps]
    return Report("support", {"d": d, "t": args.t, "n": args.n, "seed": args.seed},
                  {"reports": [r.__dict__ for r in reps]},
                  ["t", "b_emp", "max_entry_excess", "c_emp", "n"], rows)


def cmd_i2(args):
    d = _check_d(args.d)
    rows = []
    for tau in args.tau:
        r = gn.i2_integral(d, args.theta, tau, args.b)
        rows.append([tau, r.tau_prime, r.numeric, r.reduced_closed_form, r.constant, r.decay])
    return Report("i2", {"d": d, "theta": args.theta, "tau": args.tau, "b": args.b},
                  {"rows": rows}, ["tau", "tau_prime", "numeric", "reduced_closed_form", "constant", "decay"], rows)


def _spherical_quad(args) -> sa.SphericalQuadrature:
    return sa.SphericalQuadrature(tol=args.tol, rule=args.rule, samples=args.samples, seed=args.seed)


def cmd_phi(args):
    lam = _check_trace_zero(args.lam, "--lambda")
    d = _check_d(lam.size, 5)
    points = [_check_trace_zero(x, "--X") for x in args.X]
    if any(x.size != d for x in points):
        raise InvalidArgument("--X and --lambda have different lengths")
    quad = _spherical_quad(args)
    evals = _map(lambda x: sa.spherical_phi(lam, x, quad), points)
    rows = [_lam_vals(lam) + list(map(float, x)) + [e.value.real, e.value.imag, e.abs_error, e.method]
            for x, e in zip(points, evals)]
    header = _lam_cols(lam) + [f"X{i + 1}" for i in range(d)] + ["value_re", "value_im", "abs_error", "method"]
    records = [{"lambda": lam, "X": x, **e.as_dict()} for x, e in zip(points, evals)]
    return Report("phi", {"lambda": lam, "X": points, "tol": args.tol, "rule": args.rule}, {"evaluations": records},
                  header, rows)


def cmd_cfun(args):
    lam = _check_trace_zero(args.lam, "--lambda")
    _check_d(lam.size, 5)
    c = sa.c_function(lam)
    result = {"value": c.value, "pole_flag": c.pole_flag}
    if not c.pole_flag and np.max(np.abs(lam.real)) < 1e-12:
        result["plancherel_density"] = sa.plancherel_density(lam)
    return Report("cfun", {"lambda": lam}, result)


def cmd_mainterm(args):
    lam = _check_trace_zero(args.lam, "--lambda")
    d = _check_d(lam.size, 5)
    if args.X is not None:
        X = _check_trace_zero(args.X, "--X")
        value = sa.main_term_phi(lam, X)
        return Report("mainterm", {"lambda": lam, "X": X}, {
            "value": value, "cosets": len(sa.coset_representatives(lam))})
    Y = _check_trace_zero(args.Y, "--Y") if args.Y is not None else np.zeros(d)
    quad = sa.SphericalQuadrature(tol=args.tol, step=0.3)
    rep = sa.expansion_error_scan(lam, Y, args.t, quad)
    rows = [[t, r, e] for t, r, e in zip(rep.t, rep.residual, rep.abs_error)]
    _figure(args, rep.t, {"residual": rep.residual}, "t", "|f - Phi|", logy=True)
    return Report("mainterm", {"lambda": lam, "Y": Y, "t": args.t}, {
        "t": rep.t, "residual": rep.residual, "abs_error": rep.abs_error, "rate": rep.rate,
        "expected_rate": rep.expected_rate, "inconclusive": rep.inconclusive, "decreasing": rep.decreasing,
    }, ["t", "residual", "abs_error"], rows)


def cmd_jcone(args):
    lam = _check_trace_zero(args.lam, "--lambda")
    _check_d(lam.size, 5)
    result = {"closed_form": pr.j_cone(lam), "quadrature": pr.j_cone_quadrature(lam)}
    result["gap"] = abs(result["closed_form"] - result["quadrature"])
    return Report("jcone", {"lambda": lam}, result)


def cmd_ht(args):
    lam = _check_trace_zero(args.lam, "--lambda")
    if lam.size != 3:
        raise InvalidDimension("ht is evaluated for d = 3")
    quad = sa.SphericalQuadrature(tol=args.tol)
    profile = pr.ht_profile(lam, max(args.t), quad)
    vals = [pr.h_t(lam, t, profile=profile) for t in args.t]
    rows = [_lam_vals(lam) + [v.t, v.value.real, v.value.imag, v.abs_error] for v in vals]
    _figure(args, args.t, {"h_t": [v.value.real for v in vals]}, "t", "h_t")
    return Report("ht", {"lambda": lam, "t": args.t, "tol": args.tol},
                  {"values": [v.as_dict() for v in vals], "phi_evaluations": profile.evaluations},
                  _lam_cols(lam) + ["t", "h_re", "h_im", "abs_err"], rows)


def cmd_average(args):
    lam = _check_trace_zero(args.lam, "--lambda")
    _check_d(lam.size, 5)
    reps = [pr.time_average(lam, tau, route=args.route) for tau in args.tau]
    rows = [_lam_vals(lam) + [r.tau, r.average, r.parseval_target, r.relative_gap] for r in reps]
    result = {"reports": [r.__dict__ for r in reps], "phase_collision": pr.phase_collision(lam)}
    try:
        result["tau1"] = pr.tau1(lam).tau1
    except LabError:
        result["tau1"] = None
    return Report("average", {"lambda": lam, "tau": args.tau, "route": args.route}, result,
                  _lam_cols(lam) + ["tau", "average", "parseval_target", "relative_gap"], rows)


def cmd_verify(args):
    def show(res):
        print(res.line(), file=sys.stderr, flush=True)

    only = [int(v) for v in args.only.split(",")] if args.only else None
    results = acceptance.run_all(quick=args.quick, only=only, report=show)
    table = acceptance.format_table(results)
    print(table, file=sys.stderr)
    report = Report("verify", {"quick": args.quick, "only": only}, {
        "criteria": [{"number": r.number, "title": r.title, "passed": r.passed, "seconds": round(r.seconds, 1),
                      "details": r.details} for r in results],
        "all_passed": all(r.passed for r in results),
    }, ["criterion", "title", "passed"], [[r.number, r.title, r.passed] for r in results])
    report.exit_code = 0 if all(r.passed for r in results) else 1
    return report


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="higher-rank-lab", allow_abbrev=False,
                                     description="Numerical checks for polytopal balls on SL_d(R)/SO(d).")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, d=True, figure=False):
        p = sub.add_parser(name, help=help_text, allow_abbrev=False)
        if d:
            p.add_argument("--d", type=int, default=3)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out", default=None, help="report path (default: stdout)")
        if figure:
            p.add_argument("--figure", default=None, help="optional figure path (needs matplotlib)")
        p.set_defaults(func=fn)
        return p

    add("x0", cmd_x0, "the vertex X0 and <rho, X0>")
    add("cone", cmd_cone, "mu and beta bases of the cone at X0")
    p = add("brion", cmd_brion, "exact volumes from Brion's formula")
    p.add_argument("--t", type=_real_list, default=[1.0])
    p = add("volume", cmd_volume, "m(E_t) by polytope quadrature", figure=True)
    p.add_argument("--t", type=_real_list, default=[1.0])
    p.add_argument("--points", type=int, default=16)
    p = add("shrink", cmd_shrink, "shrinking parameters of the polytope")
    p.add_argument("--eta", type=float, default=0.1)
    p = add("appendixB", cmd_appendix_b, "angle and linear-form constants")
    p.add_argument("--projection", choices=("x0-line", "levi"), default="x0-line")
    p = add("cartan", cmd_cartan, "Cartan and Iwasawa decompositions")
    p.add_argument("--matrix", type=_matrix, default=None, help="rows separated by ';'")
    p.add_argument("--t", type=float, default=1.0)
    p = add("sample", cmd_sample, "Haar samples of E_t")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--n", type=int, default=1000)
    p = add("intersect", cmd_intersect, "intersection ratios along a ray", figure=True)
    p.add_argument("--t", type=float, default=3.0)
    p.add_argument("--ray", type=_real_vector, default=None, required=True)
    p.add_argument("--steps", type=int, default=6)
    p.add_argument("--n", type=int, default=20000)
    p.add_argument("--reach", type=float, default=5.0)
    p = add("support", cmd_support, "support and entry bounds")
    p.add_argument("--t", type=_real_list, default=[1.0, 2.0, 3.0])
    p.add_argument("--n", type=int, default=20000)
    p = add("i2", cmd_i2, "iterated exponential integrals")
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--tau", type=_real_list, default=[5.0])
    p.add_argument("--b", type=float, default=0.0)
    p = add("phi", cmd_phi, "spherical function values", d=False)
    p.add_argument("--lambda", dest="lam", type=_complex_vector, required=True)
    p.add_argument("--X", type=_real_vector, action="append", required=True)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--rule", choices=("flag", "euler"), default="flag")
    p.add_argument("--samples", type=int, default=200_000)
    p = add("cfun", cmd_cfun, "c-function and Plancherel density", d=False)
    p.add_argument("--lambda", dest="lam", type=_complex_vector, required=True)
    p = add("mainterm", cmd_mainterm, "main term and expansion residual scan", d=False, figure=True)
    p.add_argument("--lambda", dest="lam", type=_complex_vector, required=True)
    p.add_argument("--X", type=_real_vector, default=None)
    p.add_argument("--Y", type=_real_vector, default=None)
    p.add_argument("--t", type=_real_list, default=[1.0, 1.5, 2.0, 2.5, 3.0])
    p.add_argument("--tol", type=float, default=1e-3)
    p = add("jcone", cmd_jcone, "cone integral J(lambda)", d=False)
    p.add_argument("--lambda", dest="lam", type=_complex_vector, required=True)
    p = add("ht", cmd_ht, "the transform h_t(lambda), d = 3", d=False, figure=True)
    p.add_argument("--lambda", dest="lam", type=_complex_vector, required=True)
    p.add_argument("--t", type=_real_list, default=[1.0])
    p.add_argument("--tol", type=float, default=1e-3)
    p = add("average", cmd_average, "time averages of |h_t|^2 or its proxy", d=False)
    p.add_argument("--lambda", dest="lam", type=_complex_vector, required=True)
    p.add_argument("--tau", type=_real_list, default=[200.0])
    p.add_argument("--route", choices=("proxy", "direct"), default="proxy")
    p = add("verify", cmd_verify, "run the acceptance suite", d=False)
    p.add_argument("--quick", action="store_true")
    p.add_argument("--only", default=None, help="comma-separated criterion numbers")
    return parser


def _emit(report: Report, args) -> None:
    text = report.to_csv() if args.format == "csv" else report.to_json()
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.func(args)
    except LabError as exc:
        print(json.dumps({"schema": SCHEMA, "command": args.command, **_jsonable(exc.as_dict())}), file=sys.stderr)
        return 1
    except (ValueError, FloatingPointError, ArithmeticError) as exc:
        print(json.dumps({"schema": SCHEMA, "command": args.command, "error": "numeric-failure",
                          "message": str(exc)}), file=sys.stderr)
        return 1
    _emit(report, args)
    return getattr(report, "exit_code", 0)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
