"""The invariant battery behind ``liespin selftest`` and the acceptance tests.

Each ``criterion_*`` function runs one group of checks and returns a
:class:`CriterionResult` whose metrics are plain floats and ints, so a report
built from them is reproducible for a fixed seed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import expr as ex
from .expr import Binary, Const, DomainError, Sym, Unary, compile_exprs, differentiate, parse, simplify, to_str
from .geometry import (VectorFieldExpr, conformal_killing_residual, default_points, divergence,
                       evaluate_array, frame_gradient, g_killing_residual, killing_residual,
                       kosmann_coeffs, lie_derivative_metric, lie_derivative_tensor_density,
                       reductive_metric_lie, christoffel)
from .liealg import (SignatureMetric, check_ad_invariance, decompose_reductive, eta_transpose,
                     reductive_projectors, verify_projector_family)
from .oracle import FlowConfig, FlowProbe, field_function, frame_functions
from .scene import Scene, load_scene
from .spinor import (ExperimentalWarning, SpinorFieldExpr, build_gamma, lie_spinor_kosmann,
                     lie_spinor_penrose)

__all__ = [
    "CriterionResult", "random_polynomial_field", "random_ast", "fd_derivative",
    "run_battery", "CRITERIA", "SCENE_BOXES",
]

# Boxes the random batteries sample from; they avoid the coordinate singularities.
SCENE_BOXES = {
    "minkowski.json": ([-1.0] * 4, [1.0] * 4),
    "sphere.json": ([0.2, 0.0], [math.pi - 0.2, 2 * math.pi]),
    "polar.json": ([0.5, 0.0], [2.0, 2 * math.pi]),
}

KILLING_GENERATORS = {
    "minkowski.json": ["trans0", "trans1", "trans2", "trans3", "rot12", "rot13", "rot23",
                       "boost01", "boost02", "boost03"],
    "sphere.json": ["rotz", "rotx", "roty"],
}
CONFORMAL_GENERATORS = {"minkowski.json": ["dilation", "sct0"]}

# Scalar test functions for the density part of the oracle comparison.
TEST_SCALARS = {4: "x0*x1 + exp(x2/2) - x3^2", 2: "x0^2*cos(x1) + 1"}


@dataclass
class CriterionResult:
    number: int
    title: str
    ok: bool
    metrics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"criterion": self.number, "title": self.title, "ok": bool(self.ok),
                "metrics": self.metrics}


# ---------------------------------------------------------------------------
# random generators


def random_polynomial_field(rng: np.random.Generator, coords, max_degree: int = 2,
                            max_terms: int = 3, name: str = "") -> VectorFieldExpr:
    """A vector field whose components are small integer-coefficient polynomials."""
    m = len(coords)
    comps = []
    for _ in range(m):
        e = ex.ZERO
        for _ in range(int(rng.integers(1, max_terms + 1))):
            coef = int(rng.integers(1, 4)) * (1 if rng.random() < 0.5 else -1)
            term = Const(coef)
            for _ in range(int(rng.integers(0, max_degree + 1))):
                term = term * Sym(coords[int(rng.integers(0, m))])
            e = e + term
        comps.append(simplify(e))
    return VectorFieldExpr(tuple(comps), name)


_UNARY = ("sin", "cos", "tan", "sinh", "cosh", "exp", "ln", "sqrt", "neg")
_OPS = ("+", "-", "*", "/", "^")


def _random_const(rng: np.random.Generator) -> Const:
    kind = rng.random()
    if kind < 0.5:
        return Const(int(rng.integers(-5, 6)))
    if kind < 0.8:
        return Const(Fraction(int(rng.integers(-7, 8)), int(rng.integers(2, 6))))
    return Const(float(np.round(rng.uniform(-3, 3), 3)))


def random_ast(rng: np.random.Generator, depth: int = 4, coords=("x0", "x1", "x2")):
    """A raw (unsimplified) expression tree built straight from node classes."""
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.6:
            return Sym(coords[int(rng.integers(0, len(coords)))])
        return _random_const(rng)
    if rng.random() < 0.35:
        fn = _UNARY[int(rng.integers(0, len(_UNARY)))]
        return Unary(fn, random_ast(rng, depth - 1, coords))
    op = _OPS[int(rng.integers(0, len(_OPS)))]
    left = random_ast(rng, depth - 1, coords)
    if op == "^":
        right = Const([2, 3, -1, Fraction(1, 2), Fraction(3, 2)][int(rng.integers(0, 5))]) \
            if rng.random() < 0.8 else random_ast(rng, depth - 1, coords)
    else:
        right = random_ast(rng, depth - 1, coords)
    return Binary(op, left, right)


def fd_derivative(fn, x: np.ndarray, k: int, h1: float = 1e-3, h2: float = 1e-4) -> float:
    """Central differences at h1 and h2 = h1/10, Richardson-combined."""
    def central(h):
        dx = np.zeros_like(x)
        dx[k] = h
        return (fn(x + dx) - fn(x - dx)) / (2 * h)
    r = (h1 / h2) ** 2
    return (r * central(h2) - central(h1)) / (r - 1)


# ---------------------------------------------------------------------------
# shared helpers


def _scene(name: str, cache: dict) -> Scene:
    if name not in cache:
        cache[name] = load_scene(name)
    return cache[name]


def _box_points(name: str, n: int) -> np.ndarray:
    lo, hi = SCENE_BOXES[name]
    return default_points(lo, hi, n)


def _max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


# ---------------------------------------------------------------------------
# criteria


def criterion_clifford(seed: int, cache: dict) -> CriterionResult:
    sigs = [(1, 1), (2, 0), (0, 2), (1, 3), (2, 2), (0, 4)]
    metrics = {}
    for p, q in sigs:
        metrics[f"residual_{p}_{q}"] = build_gamma(p, q).clifford_residual()
    ok = all(v <= 1e-12 for v in metrics.values())
    return CriterionResult(1, "Clifford relation", ok, metrics)


def criterion_reductive(seed: int, cache: dict, matrices: int = 500, ad_samples: int = 100) -> CriterionResult:
    rng = np.random.default_rng(seed)
    recompose = parts = proj = 0.0
    ad = 0.0
    count = 0
    for m in range(1, 7):
        for p in range(m + 1):
            eta = SignatureMetric(p, m - p)
            count += 1
            for _ in range(matrices):
                M = rng.normal(size=(m, m))
                s = decompose_reductive(M, eta)
                recompose = max(recompose, _max_abs(s.recompose() - M))
                parts = max(parts,
                            _max_abs(s.antisym + eta_transpose(s.antisym, eta)),
                            _max_abs(s.sym_traceless - eta_transpose(s.sym_traceless, eta)),
                            abs(float(np.trace(s.sym_traceless))))
            rep = verify_projector_family(reductive_projectors(eta))
            proj = max(proj, rep.product_residual, rep.sum_residual)
            inv = check_ad_invariance(eta, ad_samples, seed=seed + 1000 * m + p)
            ad = max(ad, inv.so_part_of_ad_v, inv.trace_part_of_ad_v,
                     inv.projector_commutation, inv.so_closure)
    metrics = {"signatures": count, "matrices_per_signature": matrices,
               "recomposition": recompose, "part_invariants": parts,
               "projector_axioms": proj, "ad_invariance": ad}
    ok = max(recompose, parts, proj) <= 1e-12 and ad <= 1e-9
    return CriterionResult(2, "Reductive decomposition", ok, metrics)


def criterion_kosmann(seed: int, cache: dict, fields: int = 50) -> CriterionResult:
    rng = np.random.default_rng(seed)
    metrics = {}
    ok = True
    for name in ("minkowski.json", "sphere.json"):
        sc = _scene(name, cache)
        F = sc.frame_field()
        R = build_gamma(sc.signature.p, sc.signature.q)
        conn = christoffel(sc.metric)
        worst = 0.0
        for _ in range(fields):
            xi = random_polynomial_field(rng, sc.chart.coords)
            res = lie_spinor_kosmann(xi, sc.spinor, sc.metric, F, R, sc.points, tol=math.inf, conn=conn)
            worst = max(worst, res.discrepancy)
        key = name.split(".")[0]
        metrics[f"{key}_max_gap"] = worst
        ok = ok and worst <= 1e-9
    metrics["fields_per_scene"] = fields
    return CriterionResult(3, "Kosmann identity (lift form vs covariant form)", ok, metrics)


def criterion_killing(seed: int, cache: dict) -> CriterionResult:
    metrics = {}
    killing = 0.0
    for name, names in KILLING_GENERATORS.items():
        sc = _scene(name, cache)
        for f in names:
            killing = max(killing, killing_residual(sc.field(f), sc.metric, sc.points).max_norm)
    conformal = 0.0
    nonkilling = math.inf
    for name, names in CONFORMAL_GENERATORS.items():
        sc = _scene(name, cache)
        for f in names:
            conformal = max(conformal, conformal_killing_residual(sc.field(f), sc.metric, sc.points).max_norm)
            nonkilling = min(nonkilling, killing_residual(sc.field(f), sc.metric, sc.points).max_norm)
    metrics["killing_generators"] = sum(len(v) for v in KILLING_GENERATORS.values())
    metrics["killing_max"] = killing
    metrics["conformal_max"] = conformal
    metrics["conformal_fields_min_killing"] = nonkilling
    ok = killing <= 1e-12 and conformal <= 1e-9 and nonkilling > 1e-6
    return CriterionResult(4, "Killing battery", ok, metrics)


def criterion_gkilling(seed: int, cache: dict, fields: int = 50) -> CriterionResult:
    zero, clear = 1e-9, 1e-6
    mismatches = ambiguous = checked = 0
    for name in ("minkowski.json", "sphere.json", "polar.json"):
        sc = _scene(name, cache)
        F = sc.frame_field()
        for f, xi in sc.fields.items():
            pairs = [
                (killing_residual(xi, sc.metric, sc.points).max_norm,
                 g_killing_residual(xi, F, "so", sc.points).max_norm),
                (conformal_killing_residual(xi, sc.metric, sc.points).max_norm,
                 g_killing_residual(xi, F, "cso", sc.points).max_norm),
            ]
            for a, b in pairs:
                checked += 1
                if any(zero < v <= clear for v in (a, b)):
                    ambiguous += 1
                if (a <= zero) != (b <= zero):
                    mismatches += 1
    rng = np.random.default_rng(seed)
    gl_symbolic = gl_numeric = 0.0
    for name in ("minkowski.json", "sphere.json"):
        sc = _scene(name, cache)
        F = sc.frame_field()
        eta = sc.signature
        for _ in range(fields):
            xi = random_polynomial_field(rng, sc.chart.coords)
            gl_symbolic = max(gl_symbolic, g_killing_residual(xi, F, "gl", sc.points).max_norm)
            # what survives after projecting the natural lift onto all of gl
            L = evaluate_array(frame_gradient(xi, F), sc.chart.coords, sc.points)
            for Lx in L:
                gl_numeric = max(gl_numeric, _max_abs(Lx - decompose_reductive(Lx, eta).recompose()))
    metrics = {"equivalence_pairs": checked, "mismatches": mismatches, "ambiguous": ambiguous,
               "gl_fields": 2 * fields, "gl_symbolic_max": gl_symbolic, "gl_numeric_max": gl_numeric}
    ok = mismatches == 0 and ambiguous == 0 and gl_symbolic == 0.0 and gl_numeric <= 1e-12
    return CriterionResult(5, "G-Killing equivalences", ok, metrics)


def criterion_reductive_lie(seed: int, cache: dict, fields: int = 50, points: int = 50) -> CriterionResult:
    rng = np.random.default_rng(seed)
    metrics = {}
    ok = True
    for name in ("minkowski.json", "sphere.json"):
        sc = _scene(name, cache)
        F = sc.frame_field()
        pts = _box_points(name, points)
        worst = 0.0
        for _ in range(fields):
            xi = random_polynomial_field(rng, sc.chart.coords)
            out = reductive_metric_lie(kosmann_coeffs(xi, F), sc.metric, F)
            worst = max(worst, _max_abs(evaluate_array(out, sc.chart.coords, pts)))
        metrics[f"{name.split('.')[0]}_max"] = worst
        ok = ok and worst <= 1e-9
    metrics["fields_per_scene"] = fields
    metrics["points"] = points
    return CriterionResult(6, "Reductive metric Lie derivative vanishes", ok, metrics)


def criterion_oracle(seed: int, cache: dict, config: FlowConfig = FlowConfig()) -> CriterionResult:
    metric_gap = density_gap = lift_gap = 0.0
    probes = 0
    for name in ("minkowski.json", "sphere.json", "polar.json"):
        sc = _scene(name, cache)
        c = sc.chart.coords
        F = sc.frame_field()
        frame_fn, coframe_fn = frame_functions(F)
        g_fn = compile_exprs(list(sc.metric.g.reshape(-1)), c)
        m = sc.m
        f = parse(TEST_SCALARS[m])
        f_fn = compile_exprs([f], c)
        for xi in sc.fields.values():
            lg = evaluate_array(lie_derivative_metric(xi, sc.metric), c, sc.points)
            dens = {w: evaluate_array(np.array(lie_derivative_tensor_density(xi, f, sc.chart, weight=w)),
                                      c, sc.points) for w in (0, 1)}
            lift = evaluate_array(frame_gradient(xi, F), c, sc.points)
            flow = field_function(xi, c)
            for k, x in enumerate(sc.points):
                probe = FlowProbe(flow, sc.chart, x, config)
                probes += 1
                num_g = probe.lie_tensor(lambda y: np.array(g_fn(tuple(y))).reshape(m, m), lower=2)
                metric_gap = max(metric_gap, _max_abs(num_g - lg[k]))
                for w in (0, 1):
                    num_f = probe.lie_tensor(lambda y: np.array(f_fn(tuple(y))[0]), weight=w)
                    density_gap = max(density_gap, abs(float(num_f) - float(dens[w][k])))
                num_l = probe.natural_lift(frame_fn, coframe_fn)
                lift_gap = max(lift_gap, _max_abs(num_l - lift[k]))
    metrics = {"probes": probes, "metric_max_gap": metric_gap, "density_max_gap": density_gap,
               "natural_lift_max_gap": lift_gap}
    ok = max(metric_gap, density_gap, lift_gap) <= 1e-6
    return CriterionResult(7, "Flow oracle concordance", ok, metrics)


def criterion_penrose(seed: int, cache: dict, fields: int = 20) -> CriterionResult:
    rng = np.random.default_rng(seed)
    sc = _scene("minkowski.json", cache)
    c = sc.chart.coords
    F = sc.frame_field()
    R = build_gamma(sc.signature.p, sc.signature.q)
    conn = christoffel(sc.metric)
    battery = list(sc.fields.values()) + [random_polynomial_field(rng, c) for _ in range(fields)]
    psi_vals = sc.spinor.values(c, sc.points)
    gap = 0.0
    for xi in battery:
        pen = lie_spinor_penrose(xi, sc.spinor, sc.metric, F, R, conn).values(c, sc.points)
        kos = lie_spinor_kosmann(xi, sc.spinor, sc.metric, F, R, sc.points, tol=math.inf, conn=conn)
        div = evaluate_array(np.array(divergence(xi, sc.metric, conn)), c, sc.points)
        expected = -0.25 * div[:, None] * psi_vals
        gap = max(gap, _max_abs(pen - kos.values(c, sc.points) - expected))
    const = SpinorFieldExpr(("1", "2", "0", "-1"), ("0", "1", "3", "0"))
    out = lie_spinor_penrose(sc.field("dilation"), const, sc.metric, F, R, conn).values(c, sc.points)
    dil = _max_abs(out + const.values(c, sc.points))
    metrics = {"fields": len(battery), "trace_term_max_gap": gap, "dilation_constant_gap": dil}
    return CriterionResult(8, "Penrose reduction", gap <= 1e-10 and dil <= 1e-10, metrics)


def _safe_points(fn, rng: np.random.Generator, k: int, want: int, tries: int = 60):
    """Points where fn is finite nearby and the difference quotients are self-consistent."""
    found = []
    for _ in range(tries):
        x = rng.uniform(-2.0, 2.0, size=3)
        try:
            if abs(fn(x)) > 1e6:
                continue
            a = fd_derivative(fn, x, k, 1e-3, 1e-4)
            b = fd_derivative(fn, x, k, 2e-3, 2e-4)
        except (DomainError, OverflowError, ZeroDivisionError, ValueError):
            continue
        if not (math.isfinite(a) and math.isfinite(b)):
            continue
        if abs(a - b) > 1e-8 * max(1.0, abs(a)) or abs(a) > 1e6:
            continue
        found.append((x, a))
        if len(found) == want:
            break
    return found


def criterion_parser(seed: int, cache: dict, trees: int = 1000, points: int = 5) -> CriterionResult:
    rng = np.random.default_rng(seed)
    coords = ("x0", "x1", "x2")
    raw_fail = simp_fail = deriv_fail = 0
    worst = 0.0
    discarded = 0
    done = 0
    while done < trees:
        e = random_ast(rng, int(rng.integers(1, 9)), coords)
        if parse(to_str(e)) != e:
            raw_fail += 1
        s = simplify(e)
        if parse(to_str(s)) != s:
            simp_fail += 1
        k = int(rng.integers(0, 3))
        run = compile_exprs([e], coords)

        def fn(x, run=run):
            return run(tuple(x))[0]

        safe = _safe_points(fn, rng, k, points)
        if len(safe) < points:
            discarded += 1
            continue
        de = compile_exprs([differentiate(e, coords[k])], coords)
        for x, fd in safe:
            try:
                sym_val = de(tuple(x))[0]
            except DomainError:
                deriv_fail += 1
                continue
            err = abs(sym_val - fd) / max(1.0, abs(fd))
            worst = max(worst, err)
            if err > 1e-6:
                deriv_fail += 1
        done += 1
    metrics = {"trees": done, "discarded_without_safe_points": discarded,
               "roundtrip_failures_raw": raw_fail, "roundtrip_failures_simplified": simp_fail,
               "derivative_failures": deriv_fail, "derivative_max_rel_error": float(worst)}
    ok = raw_fail == 0 and simp_fail == 0 and deriv_fail == 0
    return CriterionResult(9, "Parser round trip and derivatives", ok, metrics)


CRITERIA = [
    criterion_clifford, criterion_reductive, criterion_kosmann, criterion_killing,
    criterion_gkilling, criterion_reductive_lie, criterion_oracle, criterion_penrose,
    criterion_parser,
]


def run_battery(seed: int = 42, only=None, timings: dict | None = None) -> list[CriterionResult]:
    """Run the criteria (all, or the numbers in ``only``) in order."""
    import time

    cache: dict = {}
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExperimentalWarning)
        for i, fn in enumerate(CRITERIA, start=1):
            if only and i not in only:
                continue
            t0 = time.perf_counter()
            out.append(fn(seed, cache))
            if timings is not None:
                timings[i] = time.perf_counter() - t0
    return out
