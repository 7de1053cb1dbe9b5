import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from liespin.battery import fd_derivative
from liespin.expr import (Binary, Const, DomainError, ParseError, Sym, UnboundSymbolError, Unary,
                          UnknownFunctionError, compile_exprs, differentiate, evaluate, parse,
                          simplify, to_str)

COORDS = ("x0", "x1", "x2")


def ev(text, **point):
    return evaluate(parse(text), point)


# -- examples ---------------------------------------------------------------

def test_polynomial_value():
    assert ev("x0^2 + 3*x1", x0=2, x1=1) == 7


def test_sin_differentiates_to_cos():
    assert simplify(differentiate(parse("sin(x0)"), "x0")) == parse("cos(x0)")


def test_incomplete_input_offset():
    with pytest.raises(ParseError) as info:
        parse("x0 + ")
    assert info.value.offset == 5


def test_product_rule_example():
    assert simplify(differentiate(parse("x0*x1"), "x0")) == Sym("x1")


def test_exp_square_derivative_matches_fd():
    d = differentiate(parse("exp(x0^2)"), "x0")
    val = evaluate(d, {"x0": 1.0})
    fn = compile_exprs([parse("exp(x0^2)")], ["x0"])
    fd = fd_derivative(lambda x: fn(tuple(x))[0], np.array([1.0]), 0)
    assert val == pytest.approx(2 * math.e, rel=1e-12)
    assert abs(fd - val) / val <= 1e-7


def test_no_dependence_gives_zero():
    assert simplify(differentiate(parse("sin(x0)"), "x1")).is_zero


def test_evaluate_examples():
    assert ev("sqrt(x0)", x0=4) == 2
    assert ev("(x0^2+x1^2)", x0=3, x1=4) == 25
    with pytest.raises(DomainError) as info:
        ev("ln(x0)", x0=-1)
    assert "ln" in str(info.value)


def test_simplify_examples():
    assert simplify(parse("0*sin(x0)+x1")) == Sym("x1")
    assert simplify(parse("x0^1")) == Sym("x0")
    assert simplify(parse("(2+3)*x0")) == parse("5*x0")
    assert simplify(parse("-(-x0)")) == Sym("x0")


def test_unknown_function_and_unbound_symbol():
    with pytest.raises(UnknownFunctionError):
        parse("foo(x0)")
    with pytest.raises(UnboundSymbolError):
        evaluate(parse("x0 + x1"), {"x0": 1.0})


def test_parse_errors_report_expected_tokens():
    with pytest.raises(ParseError) as info:
        parse("(x0 + 1")
    assert info.value.offset == 7
    assert info.value.expected
    with pytest.raises(ParseError):
        parse("x0 $ 1")
    with pytest.raises(ParseError):
        parse("")


def test_unary_minus_binds_tighter_than_power():
    # base := '-' base, so the minus belongs to the base of the power
    assert ev("-2^2") == 4
    assert ev("-x0^2", x0=3) == 9
    assert ev("0-x0^2", x0=3) == -9


def test_exact_rationals_stay_exact():
    e = simplify(parse("1/3 + 1/6"))
    assert isinstance(e, Const) and e.value == Fraction(1, 2)


def test_non_ascii_rejected_with_offset():
    with pytest.raises(ParseError) as info:
        parse("x0 + ²")
    assert info.value.offset == 5


def test_compiled_matches_tree_evaluator_and_reports_domain():
    exprs = [parse("sin(x0)*x1 + x0^2"), parse("sqrt(x1)/x0")]
    fn = compile_exprs(exprs, ["x0", "x1"])
    got = fn((0.5, 2.0))
    want = [evaluate(e, {"x0": 0.5, "x1": 2.0}) for e in exprs]
    assert got == pytest.approx(want, rel=1e-15)
    with pytest.raises(DomainError):
        fn((0.5, -1.0))
    with pytest.raises(DomainError):
        fn(np.array([0.0, 1.0]))


def test_derivative_is_linear():
    f, g = parse("sin(x0)*x1"), parse("exp(x0)/(1 + x1^2)")
    lhs = differentiate(parse("3*(sin(x0)*x1) - 2*(exp(x0)/(1 + x1^2))"), "x0")
    rhs = 3 * differentiate(f, "x0") - 2 * differentiate(g, "x0")
    for x in [(0.1, 0.2), (1.3, -0.7), (-2.0, 1.5)]:
        p = dict(zip(["x0", "x1"], x))
        assert evaluate(lhs, p) == pytest.approx(evaluate(rhs, p), rel=1e-12)


def test_general_power_uses_exp_log_form():
    d = differentiate(parse("x0^x1"), "x0")
    p = {"x0": 1.7, "x1": 2.3}
    assert evaluate(d, p) == pytest.approx(2.3 * 1.7 ** 1.3, rel=1e-12)


# -- property tests ----------------------------------------------------------

leaves = st.one_of(
    st.sampled_from(COORDS).map(Sym),
    st.integers(-9, 9).map(Const),
    st.builds(lambda n, d: Const(Fraction(n, d)), st.integers(-9, 9), st.integers(1, 7)),
    st.floats(-50, 50, allow_nan=False, allow_infinity=False).map(lambda v: Const(round(v, 4))),
)


def _extend(children):
    return st.one_of(
        st.builds(Unary, st.sampled_from(["neg", "sin", "cos", "tan", "sinh", "cosh", "exp", "ln", "sqrt"]),
                  children),
        st.builds(Binary, st.sampled_from(["+", "-", "*", "/", "^"]), children, children),
    )


asts = st.recursive(leaves, _extend, max_leaves=24)


@settings(max_examples=400, deadline=None)
@given(asts)
def test_print_parse_round_trip(e):
    assert parse(to_str(e)) == e
    s = simplify(e)
    assert parse(to_str(s)) == s


@settings(max_examples=300, deadline=None)
@given(asts)
def test_simplify_is_idempotent(e):
    s = simplify(e)
    assert simplify(s) == s


def _try_eval(e, point):
    try:
        v = evaluate(e, point)
    except (DomainError, OverflowError, ZeroDivisionError):
        return None
    return v if math.isfinite(v) else None


@settings(max_examples=300, deadline=None)
@given(asts, st.tuples(*[st.floats(-3, 3, allow_nan=False)] * 3))
def test_simplify_preserves_values(e, x):
    point = dict(zip(COORDS, x))
    before = _try_eval(e, point)
    assume(before is not None and abs(before) < 1e12)
    after = _try_eval(simplify(e), point)
    # folding may remove a domain failure (0*ln(-1)) but never adds one
    assert after is not None
    assert after == pytest.approx(before, rel=1e-12, abs=1e-12 * max(1.0, abs(before)))


smooth_leaves = st.one_of(st.sampled_from(COORDS).map(Sym), st.integers(-4, 4).map(Const))


def _smooth(children):
    return st.one_of(
        st.builds(Unary, st.sampled_from(["sin", "cos", "exp", "neg"]), children),
        st.builds(Binary, st.sampled_from(["+", "-", "*"]), children, children),
        st.builds(lambda a: Binary("^", a, Const(2)), children),
    )


smooth_asts = st.recursive(smooth_leaves, _smooth, max_leaves=10)


@settings(max_examples=200, deadline=None)
@given(smooth_asts, st.sampled_from(range(3)), st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3))
def test_derivative_matches_finite_differences(e, k, x):
    fn = compile_exprs([e], COORDS)
    x = np.array(x)
    try:
        f0 = fn(tuple(x))[0]
        fd = fd_derivative(lambda y: fn(tuple(y))[0], x, k)
    except DomainError:
        assume(False)
    assume(abs(f0) < 1e6 and math.isfinite(fd))
    # the finite-difference estimate must itself be stable before it can judge
    fd2 = fd_derivative(lambda y: fn(tuple(y))[0], x, k, 2e-3, 2e-4)
    assume(abs(fd - fd2) <= 1e-8 * max(1.0, abs(fd)))
    sym_val = evaluate(differentiate(e, COORDS[k]), dict(zip(COORDS, x)))
    assert abs(sym_val - fd) <= 1e-6 * max(1.0, abs(fd))
