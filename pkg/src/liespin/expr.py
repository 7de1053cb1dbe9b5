"""Symbolic expressions over chart coordinates.

Expressions are immutable trees built from constants, coordinate symbols,
unary function applications and binary operators.  Constants are exact
rationals (``fractions.Fraction``) and fall back to ``float`` when an exact
value is unavailable or grows too large.

The arithmetic operators on :class:`Expr` go through the simplifying
constructors, so expressions assembled in code stay small.  :func:`parse`
builds the raw tree exactly as written.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence, Union

__all__ = [
    "Expr", "Const", "Sym", "Unary", "Binary",
    "FUNCTIONS", "ParseError", "UnknownFunctionError", "UnboundSymbolError",
    "DomainError", "const", "sym", "parse", "to_str", "differentiate",
    "simplify", "evaluate", "compile_exprs", "free_symbols",
    "add", "sub", "mul", "div", "neg", "power", "apply",
]

FUNCTIONS = ("sin", "cos", "tan", "sinh", "cosh", "exp", "ln", "sqrt")
BINARY_OPS = ("+", "-", "*", "/", "^")

# exact constants whose numerator or denominator exceeds this fall back to float
_EXACT_LIMIT = 10**60

Number = Union[int, float, Fraction]


class Expr:
    """Base class of all expression nodes."""

    __slots__ = ("_hash",)

    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __pow__(self, other):
        return power(self, _coerce(other))

    def __rpow__(self, other):
        return power(_coerce(other), self)

    def __neg__(self):
        return neg(self)

    def __hash__(self):
        return self._hash

    def __str__(self):
        return to_str(self)

    @property
    def is_zero(self) -> bool:
        return isinstance(self, Const) and self.value == 0

    @property
    def is_one(self) -> bool:
        return isinstance(self, Const) and self.value == 1


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: Number):
        if isinstance(value, bool):
            value = int(value)
        if isinstance(value, int):
            value = Fraction(value)
        elif isinstance(value, Fraction):
            if abs(value.numerator) > _EXACT_LIMIT or value.denominator > _EXACT_LIMIT:
                value = float(value)
        elif isinstance(value, float):
            if not math.isfinite(value):
                raise ValueError(f"non-finite constant {value!r}")
        else:
            raise TypeError(f"unsupported constant type {type(value).__name__}")
        self.value = value
        self._hash = hash(("const", float(value)))

    @property
    def exact(self) -> bool:
        return isinstance(self.value, Fraction)

    def __eq__(self, other):
        if not isinstance(other, Const):
            return False
        if self.exact and other.exact:
            return self.value == other.value
        return float(self.value) == float(other.value)

    __hash__ = Expr.__hash__

    def __repr__(self):
        return f"Const({self.value!s})"


class Sym(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("sym", name))

    def __eq__(self, other):
        return isinstance(other, Sym) and other.name == self.name

    __hash__ = Expr.__hash__

    def __repr__(self):
        return f"Sym({self.name})"


class Unary(Expr):
    """Function application or negation (``fn == "neg"``)."""

    __slots__ = ("fn", "arg")

    def __init__(self, fn: str, arg: Expr):
        if fn != "neg" and fn not in FUNCTIONS:
            raise UnknownFunctionError(fn)
        self.fn = fn
        self.arg = arg
        self._hash = hash((fn, arg._hash))

    def __eq__(self, other):
        if self is other:
            return True
        return (isinstance(other, Unary) and other._hash == self._hash
                and other.fn == self.fn and other.arg == self.arg)

    __hash__ = Expr.__hash__

    def __repr__(self):
        return f"Unary({self.fn}, {self.arg!r})"


class Binary(Expr):
    __slots__ = ("op", "left", "right")

    def __init__(self, op: str, left: Expr, right: Expr):
        if op not in BINARY_OPS:
            raise ValueError(f"unknown operator {op!r}")
        self.op = op
        self.left = left
        self.right = right
        self._hash = hash((op, left._hash, right._hash))

    def __eq__(self, other):
        if self is other:
            return True
        return (isinstance(other, Binary) and other._hash == self._hash
                and other.op == self.op and other.left == self.left
                and other.right == self.right)

    __hash__ = Expr.__hash__

    def __repr__(self):
        return f"Binary({self.op!r}, {self.left!r}, {self.right!r})"


class ParseError(ValueError):
    """Syntax error; ``offset`` is a byte offset into the UTF-8 input."""

    def __init__(self, message: str, offset: int, expected: Iterable[str] = ()):
        self.offset = offset
        self.expected = tuple(sorted(set(expected)))
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class UnknownFunctionError(ValueError):
    def __init__(self, name: str, offset: int | None = None):
        self.name = name
        self.offset = offset
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"unknown function {name!r}{where}")


class UnboundSymbolError(KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound symbol {name!r}")

    def __str__(self):
        return self.args[0]


class DomainError(ValueError):
    def __init__(self, message: str, subexpr: Expr):
        self.subexpr = subexpr
        super().__init__(f"{message}: {to_str(subexpr)}")


ZERO = Const(0)
ONE = Const(1)
TWO = Const(2)
HALF = Const(Fraction(1, 2))


def const(value: Number) -> Const:
    return Const(value)


def sym(name: str) -> Sym:
    return Sym(name)


def _coerce(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float, Fraction)):
        return Const(value)
    raise TypeError(f"cannot use {type(value).__name__} in an expression")


# ---------------------------------------------------------------------------
# simplifying constructors


def _fold(op: str, a: Number, b: Number) -> Number | None:
    """Exact-when-possible arithmetic on constant values; None when not foldable."""
    try:
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0:
                return None
            return a / b
        if op == "^":
            return _fold_pow(a, b)
    except (OverflowError, ZeroDivisionError):
        return None
    raise ValueError(op)


def _fold_pow(a: Number, b: Number) -> Number | None:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        if b.denominator == 1:
            n = b.numerator
            if a == 0 and n < 0:
                return None
            if abs(n) > 256:
                return float(a) ** n if a != 0 else Fraction(0)
            return a**n
        if b.denominator == 2 and a >= 0:
            root = _exact_sqrt(a)
            if root is not None:
                return _fold_pow(root, Fraction(b.numerator))
        return None
    fa, fb = float(a), float(b)
    if fa < 0 and not fb.is_integer():
        return None
    if fa == 0 and fb < 0:
        return None
    return fa**fb


def _finite(v: Number | None) -> bool:
    return v is not None and (not isinstance(v, float) or math.isfinite(v))


def _exact_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    rn, rd = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Fraction(rn, rd)
    return None


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        folded = _fold("+", a.value, b.value)
        if _finite(folded):
            return Const(folded)
        return Binary("+", a, b)
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    if isinstance(b, Const) and b.value < 0:
        return sub(a, Const(-b.value))
    if isinstance(b, Unary) and b.fn == "neg":
        return sub(a, b.arg)
    if isinstance(a, Unary) and a.fn == "neg":
        return sub(b, a.arg)
    return Binary("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        folded = _fold("-", a.value, b.value)
        if _finite(folded):
            return Const(folded)
        return Binary("-", a, b)
    if b.is_zero:
        return a
    if a.is_zero:
        return neg(b)
    if a == b:
        return ZERO
    if isinstance(b, Const) and b.value < 0:
        return add(a, Const(-b.value))
    if isinstance(b, Unary) and b.fn == "neg":
        return add(a, b.arg)
    return Binary("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        folded = _fold("*", a.value, b.value)
        if _finite(folded):
            return Const(folded)
        return Binary("*", a, b)
    if a.is_zero or b.is_zero:
        return ZERO
    if a.is_one:
        return b
    if b.is_one:
        return a
    if isinstance(b, Const):
        a, b = b, a
    if isinstance(a, Const):
        if a.value == -1:
            return neg(b)
        if a.value < 0:
            return neg(mul(Const(-a.value), b))
        # c1 * (c2 * x) -> (c1 c2) * x
        if isinstance(b, Binary) and b.op == "*" and isinstance(b.left, Const):
            folded = _fold("*", a.value, b.left.value)
            if _finite(folded):
                return mul(Const(folded), b.right)
        if isinstance(b, Unary) and b.fn == "neg":
            return neg(mul(a, b.arg))
        return Binary("*", a, b)
    if isinstance(a, Unary) and a.fn == "neg":
        return neg(mul(a.arg, b))
    if isinstance(b, Unary) and b.fn == "neg":
        return neg(mul(a, b.arg))
    return Binary("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        folded = _fold("/", a.value, b.value)
        if _finite(folded):
            return Const(folded)
        return Binary("/", a, b)
    if a.is_zero and not b.is_zero:
        return ZERO
    if b.is_one:
        return a
    if isinstance(b, Const) and b.value == -1:
        return neg(a)
    if isinstance(a, Unary) and a.fn == "neg":
        return neg(div(a.arg, b))
    if isinstance(b, Unary) and b.fn == "neg":
        return neg(div(a, b.arg))
    return Binary("/", a, b)


def power(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        folded = _fold_pow(a.value, b.value)
        if folded is not None and isinstance(folded, Fraction):
            return Const(folded)
        return Binary("^", a, b)
    if b.is_one:
        return a
    if b.is_zero:
        return ONE
    if a.is_one:
        return ONE
    return Binary("^", a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.fn == "neg":
        return a.arg
    return Unary("neg", a)


_EXACT_FUNCTION_VALUES = {
    ("sin", 0): 0, ("tan", 0): 0, ("sinh", 0): 0,
    ("cos", 0): 1, ("cosh", 0): 1, ("exp", 0): 1, ("ln", 1): 0,
}


def apply(fn: str, a: Expr) -> Expr:
    if fn == "neg":
        return neg(a)
    if fn not in FUNCTIONS:
        raise UnknownFunctionError(fn)
    if isinstance(a, Const) and a.exact:
        exact = _EXACT_FUNCTION_VALUES.get((fn, a.value))
        if exact is not None:
            return Const(exact)
        if fn == "sqrt":
            root = _exact_sqrt(a.value)
            if root is not None:
                return Const(root)
    return Unary(fn, a)


_BUILDERS: dict[str, Callable[[Expr, Expr], Expr]] = {
    "+": add, "-": sub, "*": mul, "/": div, "^": power,
}


def simplify(e: Expr) -> Expr:
    """Constant folding, 0/1 identities and sign normalization, bottom-up.

    Value preserving and idempotent.  No trigonometric identities or
    polynomial normal form.
    """
    memo: dict[int, Expr] = {}

    def rec(node: Expr) -> Expr:
        key = id(node)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(node, Binary):
            out = _BUILDERS[node.op](rec(node.left), rec(node.right))
        elif isinstance(node, Unary):
            out = apply(node.fn, rec(node.arg))
        else:
            out = node
        memo[key] = out
        return out

    return rec(e)


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def _const_str(c: Const) -> str:
    v = c.value
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        return f"({v.numerator}/{v.denominator})"
    return repr(v)


def _is_base(e: Expr) -> bool:
    if isinstance(e, (Sym, Const)):
        return True
    return isinstance(e, Unary)


def to_str(e: Expr) -> str:
    """Render ``e`` in the input grammar; ``parse(to_str(e))`` rebuilds ``e``."""
    cache: dict[int, str] = {}

    def base(node: Expr) -> str:
        s = rec(node)
        return s if _is_base(node) else f"({s})"

    def rec(node: Expr) -> str:
        hit = cache.get(id(node))
        if hit is not None:
            return hit
        if isinstance(node, Const):
            s = _const_str(node)
        elif isinstance(node, Sym):
            s = node.name
        elif isinstance(node, Unary):
            if node.fn == "neg":
                # "-3" would reparse as a negative literal
                inner = f"({rec(node.arg)})" if isinstance(node.arg, Const) else base(node.arg)
                s = "-" + inner
            else:
                s = f"{node.fn}({rec(node.arg)})"
        else:
            op = node.op
            if op == "^":
                right = node.right
                rs = rec(right) if (_is_base(right) or (isinstance(right, Binary) and right.op == "^")) else f"({rec(right)})"
                s = f"{base(node.left)}^{rs}"
            else:
                p = _PREC[op]
                left, right = node.left, node.right
                ls = rec(left)
                if isinstance(left, Binary) and _PREC[left.op] < p:
                    ls = f"({ls})"
                elif op == "/" and isinstance(left, Const) and isinstance(right, Const):
                    # keep "c1/c2" from reparsing as a single rational literal
                    ls = f"({ls})"
                rs = rec(right)
                if isinstance(right, Binary) and _PREC[right.op] <= p:
                    rs = f"({rs})"
                s = f"{ls} {op} {rs}" if p == 1 else f"{ls}{op}{rs}"
        cache[id(node)] = s
        return s

    return rec(e)


# ---------------------------------------------------------------------------
# parsing


def _digit(b: int) -> bool:
    return 48 <= b <= 57


class _Parser:
    """Recursive descent over the grammar

        expr   := term (('+'|'-') term)*
        term   := factor (('*'|'/') factor)*
        factor := base ('^' factor)?
        base   := NUMBER | SYMBOL | FUNC '(' expr ')' | '(' expr ')' | '-' base
    """

    def __init__(self, text: str):
        self.text = text
        self.data = text.encode("utf-8")
        self.pos = 0

    def error(self, message: str, expected: Iterable[str] = ()):
        raise ParseError(message, self.pos, expected)

    def skip(self):
        data = self.data
        while self.pos < len(data) and data[self.pos] in b" \t\r\n":
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        if self.pos >= len(self.data):
            return ""
        return chr(self.data[self.pos])

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek() != "":
            self.error("unexpected input", ("+", "-", "*", "/", "^", "end of input"))
        return e

    def expr(self) -> Expr:
        e, _ = self.term()
        while self.peek() in ("+", "-"):
            op = self.peek()
            self.pos += 1
            right, _ = self.term()
            e = Binary(op, e, right)
        return e

    def term(self) -> tuple[Expr, bool]:
        e, literal = self.factor()
        while self.peek() in ("*", "/"):
            op = self.peek()
            self.pos += 1
            right, right_literal = self.factor()
            if op == "/" and literal and right_literal and right.value != 0:
                # integer/integer literals read as one exact rational constant
                e = Const(e.value / right.value)
            else:
                e = Binary(op, e, right)
            literal = False
        return e, literal

    def factor(self) -> tuple[Expr, bool]:
        b, literal = self.base()
        if self.peek() == "^":
            self.pos += 1
            exponent, _ = self.factor()
            return Binary("^", b, exponent), False
        return b, literal

    _EXPECT_BASE = ("NUMBER", "SYMBOL", "FUNC", "(", "-")

    def base(self) -> tuple[Expr, bool]:
        c = self.peek()
        if c == "":
            self.error("unexpected end of input", self._EXPECT_BASE)
        if c == "-":
            self.pos += 1
            inner_start = self.peek()
            inner, literal = self.base()
            if isinstance(inner, Const) and inner_start.isascii() and (inner_start.isdigit() or inner_start == "."):
                return Const(-inner.value), literal
            return Unary("neg", inner), False
        if c == "(":
            self.pos += 1
            e = self.expr()
            if self.peek() != ")":
                self.error("unbalanced parenthesis", (")",))
            self.pos += 1
            return e, False
        if c.isascii() and (c.isdigit() or c == "."):
            return self.number()
        if c.isascii() and (c.isalpha() or c == "_"):
            return self.name()
        self.error(f"unexpected character {c!r}", self._EXPECT_BASE)

    def number(self) -> tuple[Expr, bool]:
        data, start = self.data, self.pos
        i = start
        while i < len(data) and _digit(data[i]):
            i += 1
        integer = True
        if i < len(data) and data[i:i + 1] == b".":
            integer = False
            i += 1
            while i < len(data) and _digit(data[i]):
                i += 1
        if i < len(data) and data[i:i + 1] in (b"e", b"E"):
            j = i + 1
            if j < len(data) and data[j:j + 1] in (b"+", b"-"):
                j += 1
            if j < len(data) and _digit(data[j]):
                integer = False
                i = j
                while i < len(data) and _digit(data[i]):
                    i += 1
        text = data[start:i].decode("ascii")
        if text == ".":
            self.error("malformed number", ("NUMBER",))
        self.pos = i
        return Const(Fraction(text)), integer

    def name(self) -> tuple[Expr, bool]:
        data, start = self.data, self.pos
        i = start
        while i < len(data) and data[i] < 128 and (chr(data[i]).isalnum() or data[i] == 95):
            i += 1
        ident = data[start:i].decode("ascii")
        self.pos = i
        if self.peek() == "(":
            if ident not in FUNCTIONS:
                raise UnknownFunctionError(ident, start)
            self.pos += 1
            arg = self.expr()
            if self.peek() != ")":
                self.error("unbalanced parenthesis", (")",))
            self.pos += 1
            return Unary(ident, arg), False
        if ident in FUNCTIONS:
            self.error(f"function {ident!r} needs an argument", ("(",))
        return Sym(ident), False


def parse(text: str) -> Expr:
    """Parse ``text`` into a raw (unsimplified) expression tree."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# differentiation


def _d_unary(fn: str, u: Expr) -> Expr:
    """Derivative of fn at u (to be multiplied by du)."""
    if fn == "sin":
        return apply("cos", u)
    if fn == "cos":
        return neg(apply("sin", u))
    if fn == "tan":
        return div(ONE, power(apply("cos", u), TWO))
    if fn == "sinh":
        return apply("cosh", u)
    if fn == "cosh":
        return apply("sinh", u)
    if fn == "exp":
        return apply("exp", u)
    if fn == "ln":
        return div(ONE, u)
    if fn == "sqrt":
        return div(ONE, mul(TWO, apply("sqrt", u)))
    raise UnknownFunctionError(fn)


def differentiate(e: Expr, s: str | Sym) -> Expr:
    """Exact partial derivative of ``e`` with respect to coordinate ``s``."""
    name = s.name if isinstance(s, Sym) else s
    memo: dict[int, Expr] = {}

    def d(node: Expr) -> Expr:
        hit = memo.get(id(node))
        if hit is not None:
            return hit
        if isinstance(node, Const):
            out = ZERO
        elif isinstance(node, Sym):
            out = ONE if node.name == name else ZERO
        elif isinstance(node, Unary):
            du = d(node.arg)
            if node.fn == "neg":
                out = neg(du)
            elif du.is_zero:
                out = ZERO
            else:
                out = mul(_d_unary(node.fn, simplify(node.arg)), du)
        else:
            a, b = node.left, node.right
            da, db = d(a), d(b)
            op = node.op
            if op == "+":
                out = add(da, db)
            elif op == "-":
                out = sub(da, db)
            elif op == "*":
                out = add(mul(da, simplify(b)), mul(simplify(a), db))
            elif op == "/":
                sa, sb = simplify(a), simplify(b)
                if db.is_zero:
                    out = div(da, sb)
                else:
                    out = div(sub(mul(da, sb), mul(sa, db)), power(sb, TWO))
            else:
                sa, sb = simplify(a), simplify(b)
                if db.is_zero:
                    if da.is_zero:
                        out = ZERO
                    else:
                        # constant exponent: power rule
                        out = mul(mul(sb, power(sa, sub(sb, ONE))), da)
                elif sa.is_zero:
                    # 0^g is constant wherever it is defined
                    out = ZERO
                else:
                    # f^g = exp(g ln f); valid where f > 0
                    out = mul(power(sa, sb),
                              add(mul(db, apply("ln", sa)), div(mul(sb, da), sa)))
        memo[id(node)] = out
        return out

    return d(e)


# ---------------------------------------------------------------------------
# evaluation


def free_symbols(e: Expr) -> set[str]:
    out: set[str] = set()
    seen: set[int] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Sym):
            out.add(node.name)
        elif isinstance(node, Unary):
            stack.append(node.arg)
        elif isinstance(node, Binary):
            stack.extend((node.left, node.right))
    return out


def _eval_unary(fn: str, x: float, node: Expr) -> float:
    if fn == "neg":
        return -x
    if fn == "ln":
        if x <= 0:
            raise DomainError("logarithm of non-positive value", node)
        return math.log(x)
    if fn == "sqrt":
        if x < 0:
            raise DomainError("square root of negative value", node)
        return math.sqrt(x)
    try:
        return getattr(math, fn)(x)
    except OverflowError:
        raise DomainError("overflow", node) from None


def _eval_binary(op: str, a: float, b: float, node: Expr) -> float:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise DomainError("division by zero", node)
        return a / b
    if a < 0 and not float(b).is_integer():
        raise DomainError("non-integer power of negative value", node)
    if a == 0 and b < 0:
        raise DomainError("negative power of zero", node)
    try:
        return a**b
    except OverflowError:
        raise DomainError("overflow", node) from None


def evaluate(e: Expr, point: Mapping[str, float]) -> float:
    """Evaluate ``e`` in double precision with every symbol bound by ``point``."""
    memo: dict[int, float] = {}

    def rec(node: Expr) -> float:
        hit = memo.get(id(node))
        if hit is not None:
            return hit
        if isinstance(node, Const):
            out = float(node.value)
        elif isinstance(node, Sym):
            try:
                out = float(point[node.name])
            except KeyError:
                raise UnboundSymbolError(node.name) from None
        elif isinstance(node, Unary):
            out = _eval_unary(node.fn, rec(node.arg), node)
        else:
            out = _eval_binary(node.op, rec(node.left), rec(node.right), node)
        memo[id(node)] = out
        return out

    return rec(e)


_PY_FUNCS = {
    "sin": "_m.sin", "cos": "_m.cos", "tan": "_m.tan", "sinh": "_m.sinh",
    "cosh": "_m.cosh", "exp": "_m.exp", "ln": "_m.log", "sqrt": "_m.sqrt",
}


def compile_exprs(exprs: Sequence[Expr], coords: Sequence[str]) -> Callable[[Sequence[float]], list[float]]:
    """Compile expressions into one Python function of a coordinate tuple.

    Shared subtrees are computed once.  Domain failures are re-raised as
    :class:`DomainError` by re-running the tree evaluator on the failing point.
    """
    exprs = list(exprs)
    bound = set(coords)
    for e in exprs:
        missing = free_symbols(e) - bound
        if missing:
            raise UnboundSymbolError(sorted(missing)[0])

    lines: list[str] = []
    names: dict[Expr, str] = {}
    consts: dict[str, float] = {}

    def emit(node: Expr) -> str:
        hit = names.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Const):
            name = f"_c{len(consts)}"
            consts[name] = float(node.value)
            names[node] = name
            return name
        if isinstance(node, Sym):
            return f"_x[{coords.index(node.name)}]"
        if isinstance(node, Unary):
            a = emit(node.arg)
            code = f"-{a}" if node.fn == "neg" else f"{_PY_FUNCS[node.fn]}({a})"
        else:
            a, b = emit(node.left), emit(node.right)
            op = "**" if node.op == "^" else node.op
            code = f"{a} {op} {b}"
        name = f"_t{len(lines)}"
        lines.append(f"    {name} = {code}")
        names[node] = name
        return name

    results = [emit(e) for e in exprs]
    src = "def _f(_x):\n" + "\n".join(lines) + f"\n    return [{', '.join(results)}]\n"
    namespace: dict = {"_m": math, **consts}
    exec(compile(src, "<liespin.expr>", "exec"), namespace)
    fast = namespace["_f"]

    def run(x: Sequence[float]) -> list[float]:
        # plain floats, so domain errors raise instead of turning into nan
        x = tuple(float(v) for v in x)
        try:
            out = fast(x)
        except (ValueError, ZeroDivisionError, OverflowError, TypeError):
            out = None
        if out is None or any(isinstance(v, complex) or v != v for v in out):
            point = dict(zip(coords, x))
            return [evaluate(e, point) for e in exprs]
        return out

    return run
