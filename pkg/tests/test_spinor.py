import math
import warnings

import numpy as np
import pytest

from liespin.battery import random_polynomial_field
from liespin.expr import differentiate, parse
from liespin.geometry import (Chart, FlavorError, FrameField, LiftCoefficients, MetricField, VectorFieldExpr,
                              christoffel, default_points, divergence, evaluate_array,
                              kosmann_coeffs, orthonormal_frame, zeros)
from liespin.liealg import SignatureMetric
from liespin.oracle import parallel_transport_spinor
from liespin.scene import load_scene
from liespin.spinor import (ExperimentalWarning, KosmannMismatchError, SpinorFieldExpr, build_gamma,
                            lie_spinor_general, lie_spinor_kosmann, lie_spinor_penrose,
                            spin_connection, spinor_cov_derivative)

MINK = load_scene("minkowski.json")
S2 = load_scene("sphere.json")
POLAR = load_scene("polar.json")

CONST4 = SpinorFieldExpr(("1", "2", "0", "-1"), ("0", "1", "3", "0"))
CONST2 = SpinorFieldExpr(("1", "0.5"), ("-2", "1"))


def vals(psi, scene, points=None):
    return psi.values(scene.chart.coords, scene.points if points is None else points)


# -- gamma matrices ----------------------------------------------------------

@pytest.mark.parametrize("p,q", [(1, 1), (2, 0), (0, 2), (1, 3), (3, 1), (2, 2), (0, 4), (4, 0),
                                 (3, 3), (6, 0), (1, 5)])
def test_clifford_relation(p, q):
    R = build_gamma(p, q)
    assert R.N == 2 ** ((p + q) // 2)
    assert R.clifford_residual() <= 1e-12


def test_minkowski_gammas_square_to_signature():
    R = build_gamma(1, 3)
    I = np.eye(4)
    assert np.array_equal(R.gammas[0] @ R.gammas[0], I)
    for k in (1, 2, 3):
        assert np.array_equal(R.gammas[k] @ R.gammas[k], -I)
    # chiral basis: gamma^5 = i g0 g1 g2 g3 is block diagonal
    g5 = 1j * R.gammas[0] @ R.gammas[1] @ R.gammas[2] @ R.gammas[3]
    assert np.allclose(g5, np.diag([-1, -1, 1, 1])) or np.allclose(g5, np.diag([1, 1, -1, -1]))


def test_two_dimensional_examples():
    R = build_gamma(2, 0)
    g1, g2 = R.gammas
    assert np.array_equal(g1 @ g2 + g2 @ g1, np.zeros((2, 2)))
    assert np.array_equal(g1 @ g1, np.eye(2)) and np.array_equal(g2 @ g2, np.eye(2))
    R = build_gamma(1, 1)
    eta = np.diag([1, -1])
    for a in range(2):
        for b in range(2):
            anti = R.product(a, b) + R.product(b, a)
            assert np.array_equal(anti, 2 * eta[a, b] * np.eye(2))


@pytest.mark.parametrize("p,q", [(1, 2), (3, 0), (4, 3), (8, 0)])
def test_odd_or_large_dimension_rejected(p, q):
    with pytest.raises(ValueError):
        build_gamma(p, q)


def test_gamma_json_export():
    js = build_gamma(1, 1).to_json()
    assert len(js) == 2 and len(js[0]) == 2 and js[0][0][0] == [0.0, 0.0]


def test_spinor_component_count_checked():
    with pytest.raises(ValueError):
        lie_spinor_penrose(MINK.field("trans0"), CONST2, MINK.metric, MINK.frame_field(), build_gamma(1, 3))


# -- spin connection -----------------------------------------------------------

def test_flat_identity_frame_has_no_connection():
    omega = spin_connection(MINK.frame_field(), christoffel(MINK.metric))
    assert all(e.is_zero for e in omega.omega.reshape(-1))


def test_sphere_spin_connection():
    omega = spin_connection(S2.frame_field(), christoffel(S2.metric))
    W = evaluate_array(omega.omega, S2.chart.coords, S2.points)
    th = S2.points[:, 0]
    assert np.allclose(np.abs(W[:, 1, 0, 1]), np.abs(np.cos(th)), atol=1e-14)
    assert np.max(np.abs(W[:, 0])) <= 1e-14
    assert omega.max_asymmetry(S2.points) <= 1e-12


def test_polar_spin_connection_is_constant():
    omega = spin_connection(POLAR.frame_field(), christoffel(POLAR.metric))
    W = evaluate_array(omega.omega, POLAR.chart.coords, POLAR.points)
    assert np.allclose(np.abs(W[:, 1, 0, 1]), 1.0, atol=1e-14)
    assert omega.max_asymmetry(POLAR.points) <= 1e-12


def test_rotated_flat_frame_connection_is_antisymmetric():
    e = [["1", "0", "0", "0"], ["0", "cos(x3)", "sin(x3)", "0"],
         ["0", "-sin(x3)", "cos(x3)", "0"], ["0", "0", "0", "1"]]
    F = FrameField.from_frame(MINK.chart, e)
    omega = spin_connection(F, christoffel(MINK.metric))
    assert omega.max_asymmetry(MINK.points) <= 1e-12
    W = evaluate_array(omega.omega, MINK.chart.coords, MINK.points)
    assert np.allclose(np.abs(W[:, 3, 1, 2]), 1.0, atol=1e-14)


# -- covariant derivative -----------------------------------------------------

def test_constant_spinor_is_parallel_in_flat_space():
    F = MINK.frame_field()
    omega = spin_connection(F, christoffel(MINK.metric))
    for comp in spinor_cov_derivative(CONST4, omega, build_gamma(1, 3), F):
        assert np.max(np.abs(vals(comp, MINK))) == 0.0


def test_linear_spinor_in_flat_space():
    F = MINK.frame_field()
    omega = spin_connection(F, christoffel(MINK.metric))
    psi = SpinorFieldExpr(("x0", "0", "0", "0"), ("0", "0", "0", "0"))
    nab = spinor_cov_derivative(psi, omega, build_gamma(1, 3), F)
    assert np.allclose(vals(nab[0], MINK), [[1, 0, 0, 0]] * len(MINK.points), atol=0)
    for a in (1, 2, 3):
        assert np.max(np.abs(vals(nab[a], MINK))) == 0.0


@pytest.mark.parametrize("name", ["rotz", "dtheta", "rotx"])
def test_sphere_covariant_derivative_matches_parallel_transport(name):
    # central difference of transported values: d/dt P_t(psi0) = -xi^mu nabla_mu psi for constant psi
    F = S2.frame_field()
    omega = spin_connection(F, christoffel(S2.metric))
    R = build_gamma(2, 0)
    xi = S2.field(name)
    nab = spinor_cov_derivative(CONST2, omega, R, F)
    psi0 = vals(CONST2, S2)[0]
    c = S2.chart.coords
    theta = evaluate_array(F.coframe, c, S2.points)
    xi_v = evaluate_array(np.array(xi.components, dtype=object), c, S2.points)
    nab_v = np.array([vals(n, S2) for n in nab])  # (a, point, N)
    def rate(x0, t):
        _, fwd = parallel_transport_spinor(psi0, xi, omega, R, S2.chart, x0, t, 8)
        _, back = parallel_transport_spinor(psi0, xi, omega, R, S2.chart, x0, -t, 8)
        return (fwd - back) / (2 * t)

    for k, x0 in enumerate(S2.points[:8]):
        r = (4 * rate(x0, 1e-3) - rate(x0, 2e-3)) / 3
        xi_frame = theta[k] @ xi_v[k]
        along = np.tensordot(xi_frame, nab_v[:, k], axes=1)
        assert np.max(np.abs(r + along)) <= 1e-6


# -- general lift --------------------------------------------------------------

def _lift(xi, Xi):
    m = len(xi)
    arr = zeros((m, m))
    for (a, b), v in Xi.items():
        arr[a, b] = parse(v)
    return LiftCoefficients(tuple(parse(v) for v in xi), arr, "custom")


def test_general_lift_with_zero_algebra_part_and_constant_spinor():
    F = S2.frame_field()
    out = lie_spinor_general(_lift(["1", "x0"], {}), CONST2, build_gamma(2, 0), F)
    assert np.max(np.abs(vals(out, S2))) == 0.0


def test_general_lift_pure_rotation():
    F = S2.frame_field()
    R = build_gamma(2, 0)
    s = 0.75
    out = lie_spinor_general(_lift(["0", "0"], {(0, 1): str(s), (1, 0): str(-s)}), CONST2, R, F)
    want = (s / 2) * R.product(0, 1) @ vals(CONST2, S2)[0]
    assert np.max(np.abs(vals(out, S2) - want)) <= 1e-15


def test_general_translation_lift_transports_scalar():
    F = MINK.frame_field()
    R = build_gamma(1, 3)
    f = "sin(x0)*x2 + x3^2"
    psi = SpinorFieldExpr(tuple(f"({c})*({f})" for c in CONST4.re), tuple(f"({c})*({f})" for c in CONST4.im))
    out = lie_spinor_general(_lift(["2", "0", "-1", "0.5"], {}), psi, R, F)
    df = evaluate_array(np.array([parse("2*cos(x0)*x2 - sin(x0) + x3")], dtype=object),
                        MINK.chart.coords, MINK.points)[:, 0]
    want = df[:, None] * vals(CONST4, MINK)[0]
    assert np.max(np.abs(vals(out, MINK) - want)) <= 1e-13


def test_general_lift_rejects_non_antisymmetric():
    F = S2.frame_field()
    bad = _lift(["0", "0"], {(0, 1): "1", (1, 0): "1"})
    with pytest.raises(FlavorError):
        lie_spinor_general(bad, CONST2, build_gamma(2, 0), F)
    with pytest.raises(FlavorError):
        lie_spinor_general(bad, CONST2, build_gamma(2, 0), F, points=S2.points)
    sym_looking = _lift(["0", "0"], {(0, 1): "x0", (1, 0): "-x0"})
    lie_spinor_general(sym_looking, CONST2, build_gamma(2, 0), F)


def test_general_with_kosmann_coefficients_is_kosmann():
    rng = np.random.default_rng(4)
    for sc in (MINK, S2):
        F = sc.frame_field()
        R = build_gamma(sc.signature.p, sc.signature.q)
        for _ in range(5):
            xi = random_polynomial_field(rng, sc.chart.coords)
            a = lie_spinor_general(kosmann_coeffs(xi, F), sc.spinor, R, F)
            b = lie_spinor_kosmann(xi, sc.spinor, sc.metric, F, R, sc.points).value
            assert a.simplified() == b.simplified()
            assert np.max(np.abs(vals(a, sc) - vals(b, sc))) <= 1e-12


# -- Kosmann and Penrose ---------------------------------------------------

def test_kosmann_translation_on_constant_spinor():
    F = MINK.frame_field()
    res = lie_spinor_kosmann(MINK.field("trans0"), CONST4, MINK.metric, F, build_gamma(1, 3), MINK.points)
    assert np.max(np.abs(vals(res.value, MINK))) == 0.0


def test_kosmann_rotation_on_constant_spinor():
    F = MINK.frame_field()
    R = build_gamma(1, 3)
    res = lie_spinor_kosmann(MINK.field("rot12"), CONST4, MINK.metric, F, R, MINK.points)
    want = 0.5 * R.product(1, 2) @ vals(CONST4, MINK)[0]
    assert np.max(np.abs(vals(res.value, MINK) - want)) <= 1e-14
    assert np.max(np.abs(vals(res.covariant, MINK) - want)) <= 1e-14


def test_kosmann_sphere_rotation_forms_agree():
    F = S2.frame_field()
    res = lie_spinor_kosmann(S2.field("rotz"), CONST2, S2.metric, F, build_gamma(2, 0), S2.points)
    assert res.discrepancy <= 1e-9


def test_kosmann_mismatch_is_loud():
    F = S2.frame_field()
    with pytest.raises(KosmannMismatchError):
        lie_spinor_kosmann(S2.field("dtheta"), S2.spinor, S2.metric, F, build_gamma(2, 0), S2.points, tol=-1.0)


def test_kosmann_identity_on_product_scene():
    # S^2 x R^{1,1}: curved Riemannian block plus flat Lorentzian block
    chart = Chart(("x0", "x1", "x2", "x3"), SignatureMetric(3, 1))
    g = MetricField(chart, [["1", 0, 0, 0], [0, "sin(x0)^2", 0, 0], [0, 0, "1", 0], [0, 0, 0, "-1"]])
    pts = default_points([0.3, 0.0, -1.0, -1.0], [math.pi - 0.3, 2 * math.pi, 1.0, 1.0], 20)
    F = orthonormal_frame(g, pts)
    R = build_gamma(3, 1)
    conn = christoffel(g)
    psi = SpinorFieldExpr(("1 + x2", "cos(x1)", "x3", "0.5"), ("x0*x3", "1", "0", "sin(x0)"))
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(50):
        xi = random_polynomial_field(rng, chart.coords)
        worst = max(worst, lie_spinor_kosmann(xi, psi, g, F, R, pts, tol=math.inf, conn=conn).discrepancy)
    assert worst <= 1e-9


@pytest.mark.parametrize("scene", [MINK, S2], ids=["minkowski", "sphere"])
def test_kosmann_leibniz_rule(scene):
    F = scene.frame_field()
    R = build_gamma(scene.signature.p, scene.signature.q)
    c = scene.chart.coords
    f = parse("x0^2 - 3*x1 + 1") if scene is MINK else parse("cos(x0) + x1")
    fpsi = scene.spinor.scaled(f)
    rng = np.random.default_rng(8)
    fv = evaluate_array(np.array([f], dtype=object), c, scene.points)[:, 0]
    for _ in range(5):
        xi = random_polynomial_field(rng, c)
        df = sum((xi[mu] * differentiate(f, c[mu]) for mu in range(len(c))), parse("0"))
        dfv = evaluate_array(np.array([df], dtype=object), c, scene.points)[:, 0]
        lhs = vals(lie_spinor_kosmann(xi, fpsi, scene.metric, F, R, scene.points).value, scene)
        rhs = dfv[:, None] * vals(scene.spinor, scene) + fv[:, None] * vals(
            lie_spinor_kosmann(xi, scene.spinor, scene.metric, F, R, scene.points).value, scene)
        assert np.max(np.abs(lhs - rhs)) <= 1e-9


def test_penrose_dilation_on_constant_spinor():
    F = MINK.frame_field()
    out = lie_spinor_penrose(MINK.field("dilation"), CONST4, MINK.metric, F, build_gamma(1, 3))
    assert np.max(np.abs(vals(out, MINK) + vals(CONST4, MINK))) <= 1e-15


def test_penrose_minus_kosmann_is_trace_term():
    F = MINK.frame_field()
    R = build_gamma(1, 3)
    c = MINK.chart.coords
    rng = np.random.default_rng(1)
    fields = list(MINK.fields.values()) + [random_polynomial_field(rng, c) for _ in range(10)]
    for xi in fields:
        pen = vals(lie_spinor_penrose(xi, MINK.spinor, MINK.metric, F, R), MINK)
        kos = vals(lie_spinor_kosmann(xi, MINK.spinor, MINK.metric, F, R, MINK.points).value, MINK)
        div = evaluate_array(np.array([divergence(xi, MINK.metric)], dtype=object), c, MINK.points)[:, 0]
        assert np.max(np.abs(pen - kos + 0.25 * div[:, None] * vals(MINK.spinor, MINK))) <= 1e-10


def test_penrose_equals_kosmann_for_killing_fields():
    F = MINK.frame_field()
    R = build_gamma(1, 3)
    for name in ("rot12", "boost03", "trans2"):
        xi = MINK.field(name)
        pen = vals(lie_spinor_penrose(xi, MINK.spinor, MINK.metric, F, R), MINK)
        kos = vals(lie_spinor_kosmann(xi, MINK.spinor, MINK.metric, F, R, MINK.points).value, MINK)
        assert np.max(np.abs(pen - kos)) <= 1e-12


def test_penrose_zero_field():
    F = MINK.frame_field()
    out = lie_spinor_penrose(VectorFieldExpr(("0",) * 4), MINK.spinor, MINK.metric, F, build_gamma(1, 3))
    assert np.max(np.abs(vals(out, MINK))) == 0.0


def test_penrose_outside_four_dimensions_warns():
    F = S2.frame_field()
    with pytest.warns(ExperimentalWarning):
        lie_spinor_penrose(S2.field("rotz"), CONST2, S2.metric, F, build_gamma(2, 0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        lie_spinor_penrose(MINK.field("rot12"), CONST4, MINK.metric, MINK.frame_field(), build_gamma(1, 3))
