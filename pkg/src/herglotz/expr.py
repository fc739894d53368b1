"""Expression trees for Lagrangians and transformation maps.

Scalar formulas over the fixed alphabet ``t``, ``x1..xn``, ``dx1..dxn``,
``z``, ``s`` are parsed into immutable trees that support exact evaluation
and exact symbolic partial derivatives.  Only light algebraic
simplification is performed when building derivatives (constant folding,
``0*e -> 0``, ``e+0 -> e``, ``1*e -> e``, ``0/e -> 0``, ``e^1 -> e``);
correctness of derivatives is semantic, not syntactic.

Grammar (whitespace insignificant, identifiers case-sensitive)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' factor)? | '-' factor
    atom   := number | ident | func '(' expr ')' | '(' expr ')'
    func   := 'sin'|'cos'|'exp'|'log'|'sqrt'
    ident  := 't' | 'z' | 's' | 'x'digits | 'dx'digits

``^`` is right-associative and binds tighter than unary minus; its
exponent must contain no free variables and is folded to a constant at
parse time.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping

from .errors import ToolkitError

__all__ = [
    "Expression",
    "Const",
    "Var",
    "Unary",
    "Binary",
    "ExprError",
    "ParseError",
    "UnknownIdentifierError",
    "UnboundVariableError",
    "DomainError",
    "parse",
    "evaluate",
    "differentiate",
    "free_variables",
    "compiled",
    "to_source",
]


class ExprError(ToolkitError):
    pass


class ParseError(ExprError):
    """Syntax error; ``offset`` is the byte offset into the source text."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownIdentifierError(ParseError):
    pass


class UnboundVariableError(ExprError):
    def __init__(self, name: str):
        super().__init__(f"variable {name!r} is not bound in the environment")
        self.name = name


class DomainError(ExprError):
    """Evaluation left the real domain (or overflowed) in a sub-expression."""

    def __init__(self, message: str, subexpression: "Expression"):
        super().__init__(f"{message} in {to_source(subexpression)!r}")
        self.subexpression = subexpression


FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
UNARY_OPS = ("neg",) + FUNCTIONS
BINARY_OPS = ("+", "-", "*", "/", "^")

_VARIABLE_RE = re.compile(r"t|z|s|x(?:0|[1-9][0-9]*)|dx(?:0|[1-9][0-9]*)")


class Expression:
    """Base class of all expression nodes.  Instances are immutable."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_source(self)


@dataclass(frozen=True)
class Const(Expression):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class Var(Expression):
    name: str

    def __post_init__(self):
        if not _VARIABLE_RE.fullmatch(self.name):
            raise ValueError(f"{self.name!r} is not a canonical variable name")


@dataclass(frozen=True)
class Unary(Expression):
    op: str
    arg: Expression

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ValueError(f"unknown unary operator {self.op!r}")


@dataclass(frozen=True)
class Binary(Expression):
    op: str
    left: Expression
    right: Expression

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary operator {self.op!r}")
        if self.op == "^" and not isinstance(self.right, Const):
            raise ValueError("exponent of '^' must be a constant")


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"(?P<num>(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(source):
        if source[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, text, offset = self.peek()
        if kind != "op" or text != op:
            raise ParseError(f"expected {op!r}", offset)
        self.advance()

    def expr(self) -> Expression:
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = Binary(text, node, self.term())
            else:
                return node

    def term(self) -> Expression:
        node = self.factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = Binary(text, node, self.factor())
            else:
                return node

    def factor(self) -> Expression:
        kind, text, offset = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Unary("neg", self.factor())
        base = self.atom()
        kind, text, offset = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            exponent = self.factor()
            if free_variables(exponent):
                raise ParseError("exponent of '^' must be constant", offset)
            return Binary("^", base, Const(evaluate(exponent, {})))
        return base

    def atom(self) -> Expression:
        kind, text, offset = self.advance()
        if kind == "num":
            return Const(float(text))
        if kind == "ident":
            if text in FUNCTIONS:
                self.expect_op("(")
                inner = self.expr()
                self.expect_op(")")
                return Unary(text, inner)
            if _VARIABLE_RE.fullmatch(text):
                return Var(text)
            raise UnknownIdentifierError(f"unknown identifier {text!r}", offset)
        if kind == "op" and text == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise ParseError(f"expected a value, found {text!r}" if text else "unexpected end of input", offset)


def parse(source: str) -> Expression:
    """Parse ``source`` into an expression tree."""
    parser = _Parser(source)
    node = parser.expr()
    kind, text, offset = parser.peek()
    if kind != "eof":
        raise ParseError(f"unexpected trailing input {text!r}", offset)
    return node


# ---------------------------------------------------------------------------
# Evaluation

def free_variables(e: Expression) -> frozenset[str]:
    """Set of variable names occurring in ``e``."""
    match e:
        case Const():
            return frozenset()
        case Var(name):
            return frozenset((name,))
        case Unary(_, arg):
            return free_variables(arg)
        case Binary(_, left, right):
            return free_variables(left) | free_variables(right)
    raise TypeError(f"not an Expression: {e!r}")


def evaluate(e: Expression, env: Mapping[str, float]) -> float:
    """Evaluate ``e`` with every free variable bound in ``env``.

    Deterministic: the same tree and environment always produce the same
    bits.  Leaving the real domain (log of a non-positive value, division
    by zero, negative radicand, overflow) raises :class:`DomainError`
    naming the offending sub-expression; NaN or infinity is never
    returned.
    """
    match e:
        case Const(value):
            return value
        case Var(name):
            try:
                return env[name]
            except KeyError:
                raise UnboundVariableError(name) from None
        case Unary(op, arg):
            v = evaluate(arg, env)
            if op == "neg":
                return -v
            if op == "log" and v <= 0.0:
                raise DomainError(f"log of non-positive value {v!r}", e)
            if op == "sqrt" and v < 0.0:
                raise DomainError(f"square root of negative value {v!r}", e)
            try:
                result = getattr(math, op)(v)
            except (ValueError, OverflowError) as exc:
                raise DomainError(str(exc), e) from None
            return _checked(result, e)
        case Binary(op, left, right):
            lv = evaluate(left, env)
            rv = evaluate(right, env)
            if op == "+":
                result = lv + rv
            elif op == "-":
                result = lv - rv
            elif op == "*":
                result = lv * rv
            elif op == "/":
                if rv == 0.0:
                    raise DomainError("division by zero", e)
                result = lv / rv
            else:
                if lv < 0.0 and not rv.is_integer():
                    raise DomainError(f"negative base {lv!r} with non-integer exponent", e)
                if lv == 0.0 and rv < 0.0:
                    raise DomainError("zero base with negative exponent", e)
                try:
                    result = math.pow(lv, rv)
                except (ValueError, OverflowError) as exc:
                    raise DomainError(str(exc), e) from None
            return _checked(result, e)
    raise TypeError(f"not an Expression: {e!r}")


def _checked(result: float, e: Expression) -> float:
    if not math.isfinite(result):
        raise DomainError(f"non-finite result {result!r}", e)
    return result


@lru_cache(maxsize=None)
def compiled(e: Expression) -> Callable[[Mapping[str, float]], float]:
    """Compile ``e`` into a fast closure ``env -> float``.

    The compiled form skips the per-node domain checks of
    :func:`evaluate`; math errors surface as the underlying
    ``ValueError``/``OverflowError``/``ZeroDivisionError``.  Use it in
    numeric inner loops and fall back to :func:`evaluate` for a precise
    diagnostic.
    """
    match e:
        case Const(value):
            return lambda env: value
        case Var(name):
            return lambda env: env[name]
        case Unary("neg", arg):
            f = compiled(arg)
            return lambda env: -f(env)
        case Unary(op, arg):
            f = compiled(arg)
            fn = getattr(math, op)
            return lambda env: fn(f(env))
        case Binary("+", left, right):
            f, g = compiled(left), compiled(right)
            return lambda env: f(env) + g(env)
        case Binary("-", left, right):
            f, g = compiled(left), compiled(right)
            return lambda env: f(env) - g(env)
        case Binary("*", left, right):
            f, g = compiled(left), compiled(right)
            return lambda env: f(env) * g(env)
        case Binary("/", left, right):
            f, g = compiled(left), compiled(right)
            return lambda env: f(env) / g(env)
        case Binary("^", left, Const(c)):
            f = compiled(left)
            return lambda env: math.pow(f(env), c)
    raise TypeError(f"not an Expression: {e!r}")


# ---------------------------------------------------------------------------
# Differentiation

def differentiate(e: Expression, var: str) -> Expression:
    """Exact symbolic partial derivative of ``e`` with respect to ``var``."""
    if not _VARIABLE_RE.fullmatch(var):
        raise ValueError(f"{var!r} is not a canonical variable name")
    return _diff(e, var)


def _diff(e: Expression, var: str) -> Expression:
    match e:
        case Const():
            return Const(0.0)
        case Var(name):
            return Const(1.0) if name == var else Const(0.0)
        case Unary("neg", arg):
            return _neg(_diff(arg, var))
        case Unary("sin", arg):
            return _mul(Unary("cos", arg), _diff(arg, var))
        case Unary("cos", arg):
            return _neg(_mul(Unary("sin", arg), _diff(arg, var)))
        case Unary("exp", arg):
            return _mul(e, _diff(arg, var))
        case Unary("log", arg):
            return _div(_diff(arg, var), arg)
        case Unary("sqrt", arg):
            return _div(_diff(arg, var), _mul(Const(2.0), e))
        case Binary("+", left, right):
            return _add(_diff(left, var), _diff(right, var))
        case Binary("-", left, right):
            return _sub(_diff(left, var), _diff(right, var))
        case Binary("*", left, right):
            return _add(_mul(_diff(left, var), right), _mul(left, _diff(right, var)))
        case Binary("/", left, right):
            if isinstance(right, Const):
                return _div(_diff(left, var), right)
            num = _sub(_mul(_diff(left, var), right), _mul(left, _diff(right, var)))
            return _div(num, _pow(right, Const(2.0)))
        case Binary("^", base, Const(c)):
            inner = _mul(Const(c), _pow(base, Const(c - 1.0)))
            return _mul(inner, _diff(base, var))
    raise TypeError(f"not an Expression: {e!r}")


def _is_const(e: Expression, value: float) -> bool:
    return isinstance(e, Const) and e.value == value


def _add(a: Expression, b: Expression) -> Expression:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Binary("+", a, b)


def _sub(a: Expression, b: Expression) -> Expression:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return _neg(b)
    return Binary("-", a, b)


def _mul(a: Expression, b: Expression) -> Expression:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return Binary("*", a, b)


def _div(a: Expression, b: Expression) -> Expression:
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return Const(a.value / b.value)
    if _is_const(a, 0.0):
        return Const(0.0)
    if _is_const(b, 1.0):
        return a
    return Binary("/", a, b)


def _pow(base: Expression, exponent: Const) -> Expression:
    if exponent.value == 1.0:
        return base
    if exponent.value == 0.0:
        return Const(1.0)
    if isinstance(base, Const):
        try:
            return Const(math.pow(base.value, exponent.value))
        except (ValueError, OverflowError):
            pass
    return Binary("^", base, exponent)


def _neg(e: Expression) -> Expression:
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Unary) and e.op == "neg":
        return e.arg
    return Unary("neg", e)


# ---------------------------------------------------------------------------
# Printing

_PREC_ADD = 1
_PREC_MUL = 2
_PREC_NEG = 3
_PREC_POW = 4
_PREC_ATOM = 5


def _prec(e: Expression) -> int:
    match e:
        case Const(value):
            # A negative literal prints with a leading minus, so it binds
            # like unary minus for parenthesization purposes.
            return _PREC_NEG if math.copysign(1.0, value) < 0 else _PREC_ATOM
        case Var():
            return _PREC_ATOM
        case Unary("neg", _):
            return _PREC_NEG
        case Unary():
            return _PREC_ATOM
        case Binary("^", _, _):
            return _PREC_POW
        case Binary(op, _, _) if op in "*/":
            return _PREC_MUL
        case _:
            return _PREC_ADD


def _wrap(e: Expression, needs_parens: bool) -> str:
    text = to_source(e)
    return f"({text})" if needs_parens else text


def to_source(e: Expression) -> str:
    """Render ``e`` as text that re-parses to an equivalent expression."""
    match e:
        case Const(value):
            return repr(value)
        case Var(name):
            return name
        case Unary("neg", arg):
            return "-" + _wrap(arg, _prec(arg) < _PREC_NEG)
        case Unary(op, arg):
            return f"{op}({to_source(arg)})"
        case Binary(op, left, right) if op in "+-":
            lhs = _wrap(left, _prec(left) < _PREC_ADD)
            rhs = _wrap(right, _prec(right) <= _PREC_ADD)
            return f"{lhs} {op} {rhs}"
        case Binary(op, left, right) if op in "*/":
            lhs = _wrap(left, _prec(left) < _PREC_MUL)
            rhs = _wrap(right, _prec(right) <= _PREC_MUL)
            return f"{lhs}{op}{rhs}"
        case Binary("^", left, right):
            lhs = _wrap(left, _prec(left) <= _PREC_POW)
            rhs = _wrap(right, _prec(right) < _PREC_NEG)
            return f"{lhs}^{rhs}"
    raise TypeError(f"not an Expression: {e!r}")
