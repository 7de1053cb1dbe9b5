"""Command-line front end.

Exit codes: 0 when every check is within tolerance, 1 when a residual
exceeds it, 2 for malformed input.  With ``--json`` the report goes to
standard output; diagnostics and timing always go to standard error so the
report itself stays byte-for-byte reproducible.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .battery import CriterionResult, run_battery
from .expr import DomainError, ParseError, UnboundSymbolError, UnknownFunctionError, compile_exprs
from .geometry import (FlavorError, SingularMetricError, VectorFieldExpr, _to_expr,
                       conformal_killing_residual, evaluate_array,
                       g_killing_residual, killing_residual, kosmann_coeffs,
                       lie_derivative_metric, lie_derivative_tensor_density, LiftCoefficients)
from .liealg import (SignatureMetric, check_ad_invariance, decompose_reductive, eta_transpose,
                     reductive_projectors, verify_projector_family)
from .oracle import FlowConfig, FlowDomainError, FlowProbe, field_function
from .scene import Scene, SceneError, load_scene, bundled_scene_path
from .spinor import (ExperimentalWarning, KosmannMismatchError, build_gamma,
                     lie_spinor_general, lie_spinor_kosmann, lie_spinor_penrose)

TOOL = "liespin"


class InputError(ValueError):
    """Malformed command-line input (exit code 2)."""


# ---------------------------------------------------------------------------
# deterministic JSON


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0:
        return "0.0"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with fixed key order (insertion order) and 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating, bool, str)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def _complex_pairs(arr: np.ndarray) -> list:
    """Complex array -> nested lists of [re, im]."""
    arr = np.asarray(arr)
    if arr.ndim == 0:
        return [float(arr.real), float(arr.imag)]
    return [_complex_pairs(a) for a in arr]


# ---------------------------------------------------------------------------
# report


class Report:
    def __init__(self, command: list[str], seed: int):
        self.data = {"tool": TOOL, "version": __version__, "command": list(command), "seed": seed}
        self.checks: list[dict] = []

    def scene(self, sc: Scene):
        self.data["scene"] = {"file": Path(sc.source).name, "sha256": sc.digest}

    def check(self, name: str, residual: float, tol: float, **extra) -> bool:
        ok = bool(residual <= tol)
        entry = {"name": name, "residual": float(residual), "tol": float(tol), "ok": ok}
        entry.update(extra)
        self.checks.append(entry)
        return ok

    @property
    def ok(self) -> bool:
        return all(c["ok"] for c in self.checks)

    def finish(self) -> dict:
        out = dict(self.data)
        out["checks"] = self.checks
        out["ok"] = self.ok
        return out


def _emit(report: Report, args, summary_lines: list[str]) -> int:
    doc = report.finish()
    if args.json:
        sys.stdout.write(dumps(doc) + "\n")
    else:
        for line in summary_lines:
            print(line)
        for c in report.checks:
            status = "PASS" if c["ok"] else "FAIL"
            print(f"{status}  {c['name']}: residual {c['residual']:.3e} (tol {c['tol']:.1e})")
    return 0 if report.ok else 1


# ---------------------------------------------------------------------------
# commands


def _signature(text: str) -> SignatureMetric:
    try:
        return SignatureMetric.parse(text)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _read_json(path: str, what: str):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"{what} file not found: {path}") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InputError(f"{what} file {path}: invalid JSON ({exc})") from None


def _max_abs(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.max(np.abs(a))) if a.size else 0.0


def cmd_check_killing(args, report: Report) -> int:
    sc = load_scene(args.scene)
    report.scene(sc)
    xi = sc.field(args.field)
    tol = sc.tol("killing", args.tol)
    sc.metric.check(sc.points)
    res = killing_residual(xi, sc.metric, sc.points, tol)
    g_norm = _max_abs(sc.metric.values(sc.points))
    ratio = res.max_norm / g_norm if g_norm else 0.0
    report.check("killing", res.max_norm, tol, metric_norm=g_norm, ratio_to_metric_norm=ratio,
                 residual_at_points=evaluate_array(res.matrix, sc.chart.coords, sc.points))
    return _emit(report, args, [f"field {args.field}: max |L_xi g| = {res.max_norm:.6g} "
                                f"({ratio:.6g} x max |g|)"])


def cmd_check_conformal(args, report: Report) -> int:
    sc = load_scene(args.scene)
    report.scene(sc)
    xi = sc.field(args.field)
    tol = sc.tol("conformal", args.tol)
    sc.metric.check(sc.points)
    res = conformal_killing_residual(xi, sc.metric, sc.points, tol)
    report.check("conformal_killing", res.max_norm, tol,
                 residual_at_points=evaluate_array(res.matrix, sc.chart.coords, sc.points))
    return _emit(report, args, [f"field {args.field}: conformal Killing residual {res.max_norm:.6g}"])


def cmd_check_gkilling(args, report: Report) -> int:
    sc = load_scene(args.scene)
    report.scene(sc)
    xi = sc.field(args.field)
    tol = sc.tol("gkilling", args.tol)
    F = sc.frame_field()
    res = g_killing_residual(xi, F, args.group, sc.points, tol=tol)
    report.check(f"g_killing_{args.group}", res.max_norm, tol,
                 residual_at_points=evaluate_array(res.matrix, sc.chart.coords, sc.points))
    return _emit(report, args, [f"field {args.field}, group {args.group}: residual {res.max_norm:.6g}"])


def _tensor_target(sc: Scene, target: str):
    """(components, upper, lower, weight) for a --target value."""
    m = sc.m
    if target == "metric":
        return sc.metric.g, 0, 2, 0.0
    p = Path(target)
    if p.suffix == ".json" or p.is_file():
        spec = _read_json(target, "tensor")
    elif target.lstrip().startswith("{"):
        try:
            spec = json.loads(target)
        except json.JSONDecodeError as exc:
            raise InputError(f"tensor spec: invalid JSON ({exc})") from None
    else:
        spec = {"components": target}
    if not isinstance(spec, dict) or "components" not in spec:
        raise InputError("tensor spec needs a 'components' entry")
    upper, lower = spec.get("upper", 0), spec.get("lower", 0)
    weight = spec.get("weight", 0)
    if not (isinstance(upper, int) and isinstance(lower, int) and upper >= 0 and lower >= 0):
        raise InputError("tensor spec: 'upper' and 'lower' must be non-negative integers")
    if not isinstance(weight, (int, float)):
        raise InputError("tensor spec: 'weight' must be a number")
    comps = np.array(spec["components"], dtype=object)
    rank = upper + lower
    if comps.shape != (m,) * rank:
        raise InputError(f"tensor spec: components must have shape {(m,) * rank}, got {comps.shape}")
    out = np.empty(comps.shape, dtype=object)
    for idx in np.ndindex(comps.shape):
        try:
            out[idx] = _to_expr(str(comps[idx]))
        except (ParseError, UnknownFunctionError) as exc:
            raise InputError(f"tensor component {idx}: {exc}") from None
    return out, upper, lower, float(weight)


def cmd_lie_tensor(args, report: Report) -> int:
    sc = load_scene(args.scene)
    report.scene(sc)
    xi = sc.field(args.field)
    T, upper, lower, weight = _tensor_target(sc, args.target)
    c = sc.chart.coords
    rank = upper + lower
    symbolic = None
    if rank <= 2:
        if args.target == "metric":
            L = lie_derivative_metric(xi, sc.metric)
        else:
            src = T if rank else T.reshape(()).item()
            L = lie_derivative_tensor_density(xi, src, sc.chart, upper, lower, weight)
        symbolic = evaluate_array(np.asarray(L, dtype=object), c, sc.points)
    elif not args.oracle:
        raise InputError("tensors with more than two indices are only supported with --oracle")
    report.data["target"] = {"name": args.target if args.target == "metric" else "tensor",
                             "upper": upper, "lower": lower, "weight": weight}
    lines = [f"field {args.field}: Lie derivative of {args.target if args.target == 'metric' else 'tensor'}"
             f" (valence ({upper},{lower}), weight {weight:g}) at {len(sc.points)} points"]
    if symbolic is not None:
        report.data["symbolic"] = symbolic
    if args.oracle:
        tol = sc.tol("oracle", args.tol)
        flat = compile_exprs(list(T.reshape(-1)), c)
        shape = T.shape
        flow = field_function(xi, c)
        numeric = []
        for x in sc.points:
            probe = FlowProbe(flow, sc.chart, x, FlowConfig())
            numeric.append(probe.lie_tensor(lambda y: np.array(flat(tuple(y))).reshape(shape),
                                            upper, lower, weight))
        numeric = np.array(numeric)
        report.data["oracle"] = numeric
        if symbolic is not None:
            report.check("oracle_agreement", _max_abs(numeric - symbolic), tol)
    if not args.json:
        shown = report.data.get("symbolic", report.data.get("oracle"))
        for x, v in zip(sc.points, shown):
            lines.append(f"  at {np.array2string(np.asarray(x), precision=4)}: "
                         f"{np.array2string(np.asarray(v), precision=6)}")
    return _emit(report, args, lines)


def _general_lift(args, sc: Scene, xi: VectorFieldExpr, F) -> LiftCoefficients:
    if not args.coeffs:
        return kosmann_coeffs(xi, F)
    spec = _read_json(args.coeffs, "coefficients")
    m = sc.m
    if not isinstance(spec, dict) or "Xi" not in spec:
        raise InputError("coefficients file needs an 'Xi' matrix (and optionally 'xi')")
    try:
        Xi = np.array([[_to_expr(str(v)) for v in row] for row in spec["Xi"]], dtype=object)
        vec = tuple(_to_expr(str(v)) for v in spec["xi"]) if "xi" in spec else kosmann_coeffs(xi, F).xi
    except (ParseError, UnknownFunctionError) as exc:
        raise InputError(f"coefficients file: {exc}") from None
    except TypeError:
        raise InputError("coefficients file: 'Xi' must be a matrix of expressions") from None
    if Xi.shape != (m, m) or len(vec) != m:
        raise InputError(f"coefficients file: need 'Xi' of shape ({m}, {m}) and 'xi' of length {m}")
    return LiftCoefficients(vec, Xi, "custom", frame=F)


def cmd_lie_spinor(args, report: Report) -> int:
    sc = load_scene(args.scene)
    report.scene(sc)
    if sc.spinor is None:
        raise SceneError("scene has no spinor field")
    xi = sc.field(args.field)
    F = sc.frame_field()
    sig = sc.signature
    try:
        R = build_gamma(sig.p, sig.q)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    c = sc.chart.coords
    report.data["lift"] = args.lift
    if args.lift == "kosmann":
        tol = sc.tol("kosmann", args.tol)
        res = lie_spinor_kosmann(xi, sc.spinor, sc.metric, F, R, sc.points, tol=math.inf)
        out = res.values(c, sc.points)
        report.check("kosmann_forms_agree", res.discrepancy, tol)
    elif args.lift == "penrose":
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ExperimentalWarning)
            out = lie_spinor_penrose(xi, sc.spinor, sc.metric, F, R).values(c, sc.points)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        report.data["experimental"] = bool(caught)
    else:
        lift = _general_lift(args, sc, xi, F)
        out = lie_spinor_general(lift, sc.spinor, R, F, sc.points).values(c, sc.points)
    report.data["spinor"] = _complex_pairs(out)
    lines = [f"field {args.field}: {args.lift} Lie derivative of the scene spinor"]
    if not args.json:
        for x, v in zip(sc.points, out):
            lines.append(f"  at {np.array2string(np.asarray(x), precision=4)}: "
                         f"{np.array2string(v, precision=6)}")
    return _emit(report, args, lines)


def cmd_decompose_matrix(args, report: Report) -> int:
    eta = _signature(args.signature)
    M = _read_json(args.matrix, "matrix")
    try:
        M = np.array(M, dtype=float)
        split = decompose_reductive(M, eta)
    except (TypeError, ValueError) as exc:
        raise InputError(f"matrix: {exc}") from None
    tol = args.tol if args.tol is not None else 1e-12
    scale = max(1.0, _max_abs(M))
    report.data["signature"] = [eta.p, eta.q]
    report.data["decomposition"] = split.to_json()
    report.check("recomposition", _max_abs(split.recompose() - M) / scale, tol)
    report.check("antisym_in_so", _max_abs(split.antisym + eta_transpose(split.antisym, eta)) / scale, tol)
    report.check("sym_part_eta_symmetric",
                 _max_abs(split.sym_traceless - eta_transpose(split.sym_traceless, eta)) / scale, tol)
    report.check("sym_part_traceless", abs(float(np.trace(split.sym_traceless))) / scale, tol)
    lines = [f"so(p,q) part:\n{split.antisym}", f"symmetric traceless part:\n{split.sym_traceless}",
             f"trace scalar: {split.trace_scalar:.17g}"]
    return _emit(report, args, lines)


def cmd_verify_clifford(args, report: Report) -> int:
    eta = _signature(args.signature)
    try:
        R = build_gamma(eta.p, eta.q)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    tol = args.tol if args.tol is not None else 1e-12
    report.data["signature"] = [eta.p, eta.q]
    report.data["spinor_dimension"] = R.N
    report.data["gammas"] = R.to_json()
    report.check("clifford_relation", R.clifford_residual(), tol)
    return _emit(report, args, [f"signature ({eta.p},{eta.q}): {R.m} gamma matrices of size {R.N}"])


def cmd_verify_projectors(args, report: Report) -> int:
    eta = _signature(args.signature)
    tol = args.tol if args.tol is not None else 1e-12
    rep = verify_projector_family(reductive_projectors(eta), tol)
    inv = check_ad_invariance(eta, args.samples, seed=args.seed)
    report.data["signature"] = [eta.p, eta.q]
    report.check("projector_products", rep.product_residual, tol)
    report.check("projector_sum", rep.sum_residual, tol)
    report.check("ad_invariance", max(inv.so_part_of_ad_v, inv.trace_part_of_ad_v,
                                      inv.projector_commutation, inv.so_closure), 1e-9,
                 samples=args.samples, detail=inv.to_json())
    return _emit(report, args, [f"signature ({eta.p},{eta.q}): so + V + trace projectors on gl({eta.m})"])


def cmd_selftest(args, report: Report) -> int:
    timings: dict[int, float] = {}
    results = run_battery(args.seed, timings=timings)
    scenes = {}
    for name in ("minkowski.json", "sphere.json", "polar.json"):
        path = bundled_scene_path(name)
        scenes[name] = load_scene(path).digest
    report.data["scenes"] = scenes
    # determinism: rerun the cheaper seeded criteria and compare serialized output
    first = {r.number: dumps(r.to_json()) for r in results}
    again = run_battery(args.seed, only={1, 4, 9})
    same = all(first.get(r.number) == dumps(r.to_json()) for r in again)
    results.append(CriterionResult(10, "Determinism of seeded reruns", same,
                                   {"rerun_criteria": [r.number for r in again], "identical": same}))
    timings[10] = 0.0
    report.data["criteria"] = [r.to_json() for r in results]
    for r in results:
        report.checks.append({"name": f"criterion_{r.number}", "ok": bool(r.ok)})
        print(f"criterion {r.number} ({r.title}): {'pass' if r.ok else 'FAIL'} in {timings[r.number]:.2f} s",
              file=sys.stderr)
    lines = [f"{'PASS' if r.ok else 'FAIL'}  {r.number}. {r.title}" for r in results]
    doc = report.finish()
    if args.json:
        sys.stdout.write(dumps(doc) + "\n")
    else:
        print("\n".join(lines))
    return 0 if report.ok else 1


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print the report as JSON on stdout")
    common.add_argument("--seed", type=int, default=42, help="seed for random batteries (default 42)")
    common.add_argument("--tol", type=float, default=None, help="override the tolerance")
    common.add_argument("--oracle", action="store_true", help="also compare with the flow oracle")

    parser = argparse.ArgumentParser(prog=TOOL, description="Lie derivatives of tensors and spinors on charts.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def scene_cmd(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("scene", help="scene file (bundled scene names also work)")
        p.add_argument("--field", required=True, help="name of a vector field in the scene")
        p.set_defaults(func=fn)
        return p

    scene_cmd("check-killing", cmd_check_killing, "Killing equation residual")
    scene_cmd("check-conformal", cmd_check_conformal, "conformal Killing equation residual")
    p = scene_cmd("check-gkilling", cmd_check_gkilling, "G-Killing residual of the natural lift")
    p.add_argument("--group", choices=["so", "cso", "gl"], required=True)
    p = scene_cmd("lie-tensor", cmd_lie_tensor, "Lie derivative of the metric or a tensor density")
    p.add_argument("--target", default="metric",
                   help="'metric', a JSON tensor spec (file or inline), or a scalar expression")
    p = scene_cmd("lie-spinor", cmd_lie_spinor, "Lie derivative of the scene spinor")
    p.add_argument("--lift", choices=["kosmann", "penrose", "general"], required=True)
    p.add_argument("--coeffs", help="JSON file with lift coefficients for --lift general")

    p = sub.add_parser("decompose-matrix", parents=[common], help="split a matrix into so + V + trace")
    p.add_argument("--matrix", required=True, help="JSON file holding a square matrix")
    p.add_argument("--signature", required=True, help="p,q")
    p.set_defaults(func=cmd_decompose_matrix)

    p = sub.add_parser("verify-clifford", parents=[common], help="check the Clifford relation")
    p.add_argument("--signature", required=True, help="p,q")
    p.set_defaults(func=cmd_verify_clifford)

    p = sub.add_parser("verify-projectors", parents=[common], help="check the reductive projector family")
    p.add_argument("--signature", required=True, help="p,q")
    p.add_argument("--samples", type=int, default=100, help="random group elements for Ad-invariance")
    p.set_defaults(func=cmd_verify_projectors)

    p = sub.add_parser("selftest", parents=[common], help="run the full invariant battery")
    p.set_defaults(func=cmd_selftest)
    return parser


MALFORMED = (InputError, SceneError, ParseError, UnknownFunctionError, UnboundSymbolError,
             FlavorError, SingularMetricError, DomainError, FlowDomainError, KeyError, ValueError)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    report = Report(argv, args.seed)
    t0 = time.perf_counter()
    try:
        code = args.func(args, report)
    except KosmannMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except MALFORMED as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2
    print(f"elapsed {time.perf_counter() - t0:.3f} s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
