"""Coordinate expressions for Lagrangians and vector fields.

Grammar (whitespace is insignificant)::

    expr     := term (('+' | '-') term)*
    term     := factor (('*' | '/') factor)*
    factor   := base ('^' exponent)?
    base     := number | 'x'digits | 'y'digits | func '(' expr ')'
              | '(' expr ')' | '-' base
    exponent := integer | '(' expr ')'

Note that ``-y0^2`` parses as ``(-y0)^2``; write ``-(y0^2)`` for the negated
square.  Expressions evaluate over plain floats, numpy arrays, or nested
:class:`~finsleravg.dual.Dual` values.
"""

import re
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import dual
from .dual import Dual, DomainError


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message, source, pos):
        self.source = source
        self.pos = pos
        caret = " " * pos + "^"
        super().__init__(f"{message} at position {pos}\n  {source}\n  {caret}")


class UnknownFunctionError(ExprSyntaxError):
    pass


class VariableIndexError(ExprSyntaxError):
    pass


class EvaluationError(ExprError):
    """Domain error during evaluation, annotated with the offending node."""

    def __init__(self, message, node):
        self.node = node
        super().__init__(f"{message} in '{to_string(node)}'")


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str  # 'x' or 'y'
    index: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: object


FUNCTION_NAMES = frozenset(dual.FUNCTIONS)

# ---------------------------------------------------------------------------
# Parsing

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


def _tokenize(source):
    tokens = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            start = pos + len(source[pos:]) - len(source[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {source[start]!r}", source, start)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source, n):
        self.source = source
        self.n = n
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None, cls=ExprSyntaxError):
        tok = tok or self.peek()
        return cls(message, self.source, tok[2])

    def expect(self, text):
        tok = self.peek()
        if tok[0] != "op" or tok[1] != text:
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(f"expected {text!r}, found {found}")
        return self.take()

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        node = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            tok = self.peek()
            if tok[0] == "num" and tok[1].isdigit():
                self.take()
                exponent = Num(float(tok[1]))
            elif tok[0] == "op" and tok[1] == "(":
                self.take()
                exponent = self.expr()
                self.expect(")")
            else:
                raise self.error("exponent must be an integer literal or a parenthesized expression")
            node = Pow(node, exponent)
        return node

    def base(self):
        tok = self.peek()
        kind, text, _ = tok
        if kind == "num":
            self.take()
            return Num(float(text))
        if kind == "name":
            self.take()
            m = re.fullmatch(r"([xy])(\d+)", text)
            if m:
                index = int(m.group(2))
                if index >= self.n:
                    raise self.error(
                        f"variable {text} out of range for dimension {self.n}", tok, VariableIndexError
                    )
                return Var(m.group(1), index)
            if text not in FUNCTION_NAMES:
                raise self.error(f"unknown function {text!r}", tok, UnknownFunctionError)
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Call(text, arg)
        if kind == "op" and text == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.base())
        found = "end of input" if kind == "end" else repr(text)
        raise self.error(f"unexpected {found}")


def parse(source, n):
    """Parse ``source`` into an AST whose variables are all below ``n``."""
    if not isinstance(source, str) or not source.strip():
        raise ExprSyntaxError("empty expression", source or "", 0)
    return _Parser(source, n).parse()


# ---------------------------------------------------------------------------
# Printing


def _atom(node):
    return isinstance(node, (Num, Var, Call))


def _num(value):
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def to_string(node):
    """Render ``node`` so that ``parse(to_string(e)) == e``."""
    if isinstance(node, Num):
        text = _num(node.value)
        return f"({text})" if node.value < 0 else text
    if isinstance(node, Var):
        return f"{node.kind}{node.index}"
    if isinstance(node, Call):
        return f"{node.func}({to_string(node.arg)})"
    if isinstance(node, Neg):
        inner = to_string(node.arg)
        if not (_atom(node.arg) or isinstance(node.arg, Neg)):
            inner = f"({inner})"
        return "-" + inner
    if isinstance(node, Pow):
        base = to_string(node.base)
        if not _atom(node.base) or (isinstance(node.base, Num) and node.base.value < 0):
            base = f"({base})"
        e = node.exponent
        if isinstance(e, Num) and e.value >= 0 and float(e.value).is_integer():
            return f"{base}^{_num(e.value)}"
        return f"{base}^({to_string(e)})"
    if isinstance(node, BinOp):
        parts = []
        for child in (node.left, node.right):
            text = to_string(child)
            parts.append(f"({text})" if isinstance(child, BinOp) else text)
        return f"{parts[0]} {node.op} {parts[1]}"
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# Evaluation


def variables(node):
    """Set of ``(kind, index)`` pairs referenced by ``node``."""
    if isinstance(node, Var):
        return {(node.kind, node.index)}
    if isinstance(node, (Num,)):
        return set()
    if isinstance(node, (Call, Neg)):
        return variables(node.arg)
    if isinstance(node, Pow):
        return variables(node.base) | variables(node.exponent)
    return variables(node.left) | variables(node.right)


def _eval(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[node.kind][node.index]
    try:
        if isinstance(node, BinOp):
            a = _eval(node.left, env)
            b = _eval(node.right, env)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            return a * dual.reciprocal(b)
        if isinstance(node, Neg):
            return -_eval(node.arg, env)
        if isinstance(node, Call):
            return dual.FUNCTIONS[node.func](_eval(node.arg, env))
        if isinstance(node, Pow):
            base = _eval(node.base, env)
            exponent = _eval(node.exponent, env)
            if not isinstance(exponent, Dual):
                exponent = np.asarray(exponent, dtype=float)
                if exponent.ndim == 0:
                    return dual.power(base, float(exponent))
            return dual.exp(exponent * dual.log(base))
    except DomainError as exc:
        raise EvaluationError(str(exc), node) from None
    except EvaluationError:
        raise
    raise TypeError(f"not an expression node: {node!r}")


def _parse_seed(entry):
    if isinstance(entry, str):
        m = re.fullmatch(r"([xy])(\d+)", entry)
        if not m:
            raise ValueError(f"bad seed variable {entry!r}")
        return m.group(1), int(m.group(2))
    kind, index = entry
    return kind, int(index)


def evaluate(e, x, y, seed=()):
    """Evaluate ``e`` at base point ``x`` and fiber coordinates ``y``.

    ``y`` may carry a leading batch axis (shape ``(m, n)``).  ``seed`` lists
    variables such as ``"y0"`` or ``("x", 1)``; one infinitesimal level is
    created per entry (outermost first), so the result is a nested
    :class:`Dual` of that depth.  Use :func:`dual.component` or
    :func:`derivative` to read partials.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    levels = [_parse_seed(s) for s in seed]
    env = {"x": [x[..., i] for i in range(x.shape[-1])], "y": [y[..., i] for i in range(y.shape[-1])]}
    for kind in env:
        for i in range(len(env[kind])):
            flags = [lvl == (kind, i) for lvl in levels]
            if any(flags):
                env[kind][i] = dual.seed(env[kind][i], flags)
    return _eval(e, env)


def derivative(e, x, y, wrt):
    """Mixed partial of ``e`` with respect to every variable in ``wrt``."""
    z = evaluate(e, x, y, seed=wrt)
    return dual.component(z, [1] * len(wrt))


def all_partials(e, x, y, wrt):
    """All mixed partials along the seeded levels, keyed by bit tuples."""
    z = evaluate(e, x, y, seed=wrt)
    return {bits: dual.component(z, bits) for bits in product((0, 1), repeat=len(wrt))}


def is_homogeneous(e, x, y, degree=2, factors=(0.5, 2.0, 7.0), tol=1e-12):
    """True when ``e(x, k*y) == k**degree * e(x, y)`` to relative ``tol``."""
    base = np.asarray(evaluate(e, x, y), dtype=float)
    y = np.asarray(y, dtype=float)
    for k in factors:
        scaled = np.asarray(evaluate(e, x, k * y), dtype=float)
        ref = k**degree * base
        if np.any(np.abs(scaled - ref) > tol * np.maximum(1.0, np.abs(ref))):
            return False
    return True
