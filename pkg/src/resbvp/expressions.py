"""Parsing and evaluation of user-supplied scalar nonlinearities g(t, x).

Grammar (whitespace insensitive)::

    comparison : additive (('<'|'<='|'>'|'>='|'=='|'!=') additive)?
    additive   : term (('+'|'-') term)*
    term       : unary (('*'|'/') unary)*
    unary      : '-' unary | power
    power      : atom ('^' unary)?          # right associative
    atom       : NUMBER | 't' | 'x' | FUNC '(' args ')' | '(' comparison ')'

Functions: abs, exp, ln, sin, cos, tanh, atan, sqrt, sign (one argument),
min, max (two arguments), and the ternary if(cond, a, b).  Comparisons
evaluate to 1.0 or 0.0; `if` evaluates only the taken branch, with a zero
condition selecting the false branch.  `sign(0)` is 0.  `ln`/`sqrt` of
arguments outside their domain, division by zero, and `^` with a negative
base and non-integer exponent raise :class:`ExprDomainError` instead of
producing NaNs.

Interval bounds and Lipschitz constants computed here are sampling-based
estimates, not certified enclosures; callers label results accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ExprDomainError, ExprSyntaxError

__all__ = [
    "Expr",
    "parse",
    "to_text",
    "bound_on_box",
    "lipschitz_estimate",
]

_UNARY_FUNCTIONS = {
    "abs": abs,
    "exp": None,  # handled explicitly for overflow mapping
    "ln": None,
    "sin": math.sin,
    "cos": math.cos,
    "tanh": math.tanh,
    "atan": math.atan,
    "sqrt": None,
    "sign": None,
}
_BINARY_FUNCTIONS = ("min", "max")


class Expr:
    """Abstract syntax tree node; immutable and safe to share."""

    __slots__ = ()

    def eval(self, t: float, x: float) -> float:
        raise NotImplementedError

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, slots=True)
class Num(Expr):
    value: float

    def eval(self, t, x):
        return self.value


@dataclass(frozen=True, slots=True)
class Var(Expr):
    name: str

    def eval(self, t, x):
        return t if self.name == "t" else x


@dataclass(frozen=True, slots=True)
class Neg(Expr):
    arg: Expr

    def eval(self, t, x):
        return -self.arg.eval(t, x)


@dataclass(frozen=True, slots=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def eval(self, t, x):
        a = self.left.eval(t, x)
        b = self.right.eval(t, x)
        op = self.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0.0:
                raise ExprDomainError("division by zero", to_text(self))
            return a / b
        # power
        if a < 0.0 and b != math.floor(b):
            raise ExprDomainError(
                "negative base with non-integer exponent", to_text(self)
            )
        if a == 0.0 and b < 0.0:
            raise ExprDomainError("zero base with negative exponent", to_text(self))
        try:
            return float(a**b)
        except OverflowError:
            raise ExprDomainError("overflow in power", to_text(self)) from None


@dataclass(frozen=True, slots=True)
class Cmp(Expr):
    op: str
    left: Expr
    right: Expr

    def eval(self, t, x):
        a = self.left.eval(t, x)
        b = self.right.eval(t, x)
        op = self.op
        if op == "<":
            r = a < b
        elif op == "<=":
            r = a <= b
        elif op == ">":
            r = a > b
        elif op == ">=":
            r = a >= b
        elif op == "==":
            r = a == b
        else:
            r = a != b
        return 1.0 if r else 0.0


@dataclass(frozen=True, slots=True)
class Call(Expr):
    name: str
    args: tuple[Expr, ...]

    def eval(self, t, x):
        name = self.name
        if name == "if":
            cond = self.args[0].eval(t, x)
            branch = self.args[1] if cond != 0.0 else self.args[2]
            return branch.eval(t, x)
        if name in _BINARY_FUNCTIONS:
            a = self.args[0].eval(t, x)
            b = self.args[1].eval(t, x)
            return min(a, b) if name == "min" else max(a, b)
        a = self.args[0].eval(t, x)
        if name == "ln":
            if a <= 0.0:
                raise ExprDomainError("log of non-positive value", to_text(self))
            return math.log(a)
        if name == "sqrt":
            if a < 0.0:
                raise ExprDomainError("sqrt of negative value", to_text(self))
            return math.sqrt(a)
        if name == "sign":
            return 0.0 if a == 0.0 else math.copysign(1.0, a)
        if name == "exp":
            try:
                return math.exp(a)
            except OverflowError:
                raise ExprDomainError("overflow in exp", to_text(self)) from None
        return _UNARY_FUNCTIONS[name](a)


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_TWO_CHAR_OPS = ("<=", ">=", "==", "!=")
_ONE_CHAR_OPS = "+-*/^(),<>"


def _tokenize(text):
    """Yield (kind, value, offset) triples; kinds: num, ident, op, end."""
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if text[i : i + 2] in _TWO_CHAR_OPS:
            tokens.append(("op", text[i : i + 2], i))
            i += 2
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            lit = text[i:j]
            try:
                value = float(lit)
            except ValueError:
                raise ExprSyntaxError(f"bad numeric literal '{lit}'", i) from None
            tokens.append(("num", value, i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], i))
            i = j
            continue
        if ch in _ONE_CHAR_OPS or ch in "=!":
            if ch in "=!":
                raise ExprSyntaxError(f"unexpected character '{ch}'", i)
            tokens.append(("op", ch, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character '{ch}'", i)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, value, offset = self.peek()
        if kind != "op" or value != op:
            raise ExprSyntaxError(
                f"expected '{op}', found '{value or 'end of input'}'",
                offset,
                expected=[op],
            )
        return self.advance()

    def parse(self):
        expr = self.comparison()
        kind, value, offset = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected trailing input '{value}'", offset)
        return expr

    def comparison(self):
        left = self.additive()
        kind, value, _ = self.peek()
        if kind == "op" and value in ("<", "<=", ">", ">=", "==", "!="):
            self.advance()
            right = self.additive()
            return Cmp(value, left, right)
        return left

    def additive(self):
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in ("+", "-"):
                self.advance()
                node = BinOp(value, node, self.term())
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in ("*", "/"):
                self.advance()
                node = BinOp(value, node, self.unary())
            else:
                return node

    def unary(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, value, offset = self.advance()
        if kind == "num":
            return Num(value)
        if kind == "ident":
            if value in ("t", "x"):
                return Var(value)
            if value in _UNARY_FUNCTIONS or value in _BINARY_FUNCTIONS or value == "if":
                return self.call(value, offset)
            raise ExprSyntaxError(f"unknown identifier '{value}'", offset)
        if kind == "op" and value == "(":
            inner = self.comparison()
            self.expect_op(")")
            return inner
        raise ExprSyntaxError(
            f"expected expression, found '{value or 'end of input'}'",
            offset,
            expected=["number", "t", "x", "function", "("],
        )

    def call(self, name, offset):
        arity = 1 if name in _UNARY_FUNCTIONS else (3 if name == "if" else 2)
        self.expect_op("(")
        args = [self.comparison()]
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value == ",":
                self.advance()
                args.append(self.comparison())
            else:
                break
        self.expect_op(")")
        if len(args) != arity:
            raise ExprSyntaxError(
                f"'{name}' takes {arity} argument(s), got {len(args)}", offset
            )
        return Call(name, tuple(args))


def parse(text: str) -> Expr:
    """Parse expression text into an AST, or raise :class:`ExprSyntaxError`."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC = {"cmp": 0, "+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(node):
    if isinstance(node, (Num, Var, Call)):
        return _PREC["atom"]
    if isinstance(node, Neg):
        return _PREC["neg"]
    if isinstance(node, Cmp):
        return _PREC["cmp"]
    return _PREC[node.op]


def to_text(node: Expr) -> str:
    """Pretty-print an AST so that parsing the result reproduces it."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_text(a) for a in node.args)})"
    if isinstance(node, Neg):
        inner = to_text(node.arg)
        if _prec(node.arg) <= _PREC["neg"] and not isinstance(node.arg, Neg):
            inner = f"({inner})"
        elif isinstance(node.arg, Neg):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Cmp):
        return f"{to_text(node.left)} {node.op} {to_text(node.right)}"
    # BinOp; parenthesize children whose precedence would change the parse
    lp, rp = _prec(node.left), _prec(node.right)
    p = _PREC[node.op]
    left = to_text(node.left)
    right = to_text(node.right)
    if node.op == "^":
        # right associative: the left child needs parens at equal precedence
        if lp <= p:
            left = f"({left})"
        if rp < _PREC["neg"]:
            right = f"({right})"
    else:
        if lp < p:
            left = f"({left})"
        if rp < p or (rp == p and node.op in ("-", "/")):
            right = f"({right})"
    return f"{left} {node.op} {right}"


# ---------------------------------------------------------------------------
# Sampling-based estimators
# ---------------------------------------------------------------------------

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_section(f, a, b, maximize, iters=80):
    """Golden-section search for an interior extremum of f on [a, b]."""
    if b <= a:
        return f(a), a
    sign = -1.0 if maximize else 1.0
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1 = sign * f(x1)
    f2 = sign * f(x2)
    for _ in range(iters):
        if b - a < 1e-13 * (1.0 + abs(a) + abs(b)):
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = sign * f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = sign * f(x2)
    best = min((f1, x1), (f2, x2))
    return sign * best[0], best[1]


def _chebyshev_points(lo, hi, samples):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    pts = [mid - half * math.cos(math.pi * k / (samples - 1)) for k in range(samples)]
    pts[0], pts[-1] = lo, hi  # pin endpoints exactly
    return pts


def bound_on_box(
    e: Expr, t_set, x_lo: float, x_hi: float, samples: int = 512
) -> tuple[float, float]:
    """Sampled inf/sup of e over t_set x [x_lo, x_hi].

    Uses Chebyshev-spaced points per t followed by a golden-section polish
    around the best sample.  The result is an estimate: it brackets every
    evaluation actually performed but is not a certified enclosure.
    """
    if x_lo > x_hi:
        raise ValueError("x_lo must not exceed x_hi")
    if samples < 2:
        raise ValueError("need at least two samples")
    t_list = sorted(t_set)
    if not t_list:
        raise ValueError("t_set must be non-empty")
    lo_best = math.inf
    hi_best = -math.inf
    for t in t_list:
        tf = float(t)
        pts = _chebyshev_points(x_lo, x_hi, samples)
        vals = [e.eval(tf, x) for x in pts]
        i_min = min(range(len(vals)), key=vals.__getitem__)
        i_max = max(range(len(vals)), key=vals.__getitem__)
        lo_best = min(lo_best, vals[i_min])
        hi_best = max(hi_best, vals[i_max])
        if x_hi > x_lo:
            f = lambda x: e.eval(tf, x)  # noqa: E731
            a = pts[max(i_min - 1, 0)]
            b = pts[min(i_min + 1, len(pts) - 1)]
            val, _ = _golden_section(f, a, b, maximize=False)
            lo_best = min(lo_best, val)
            a = pts[max(i_max - 1, 0)]
            b = pts[min(i_max + 1, len(pts) - 1)]
            val, _ = _golden_section(f, a, b, maximize=True)
            hi_best = max(hi_best, val)
    return lo_best, hi_best


def lipschitz_estimate(
    e: Expr, t_set, x_lo: float, x_hi: float, samples: int = 512
) -> float:
    """Estimated Lipschitz constant of e in x on [x_lo, x_hi] over t_set.

    Max of consecutive-sample secant slopes and central finite-difference
    slopes on a uniform grid; one-sided differences at the endpoints keep
    evaluations inside the box.
    """
    if x_lo > x_hi:
        raise ValueError("x_lo must not exceed x_hi")
    if samples < 2:
        raise ValueError("need at least two samples")
    t_list = sorted(t_set)
    if not t_list:
        raise ValueError("t_set must be non-empty")
    width = x_hi - x_lo
    if width == 0.0:
        return 0.0
    step = width / (samples - 1)
    h = max(1e-7 * width, 1e-12)
    best = 0.0
    for t in t_list:
        tf = float(t)
        xs = [x_lo + k * step for k in range(samples)]
        xs[-1] = x_hi
        vals = [e.eval(tf, x) for x in xs]
        for k in range(samples - 1):
            dx = xs[k + 1] - xs[k]
            if dx > 0.0:
                best = max(best, abs(vals[k + 1] - vals[k]) / dx)
        for x in xs:
            a = max(x - h, x_lo)
            b = min(x + h, x_hi)
            if b > a:
                best = max(best, abs(e.eval(tf, b) - e.eval(tf, a)) / (b - a))
    return best
