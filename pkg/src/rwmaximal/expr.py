"""Warping-function expressions: parsing, serialization and 2-jet evaluation.

Grammar (loosest to tightest binding)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Names that are not functions or variables are scalar parameters, bound at
evaluation time.  Evaluation propagates value, first and second derivative
together (truncated Taylor arithmetic), so ``f``, ``f'`` and ``f''`` are exact
to rounding.  Jets accept numpy arrays as well as floats.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

__all__ = [
    "FUNCTIONS",
    "Num",
    "Var",
    "Param",
    "Neg",
    "BinOp",
    "Call",
    "WarpExpr",
    "Jet2",
    "ParseError",
    "EvalError",
    "UnboundParameterError",
    "DomainError",
    "parse",
    "serialize",
    "eval_jet2",
    "evaluate",
]

# name -> arity
FUNCTIONS = {
    "exp": 1,
    "log": 1,
    "sqrt": 1,
    "sin": 1,
    "cos": 1,
    "sinh": 1,
    "cosh": 1,
    "pow": 2,
}


# --------------------------------------------------------------------------
# Tree
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Node = Union[Num, Var, Param, Neg, BinOp, Call]


def _children(node):
    if isinstance(node, Neg):
        return (node.arg,)
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, Call):
        return node.args
    return ()


def _walk(node):
    stack = [node]
    while stack:
        cur = stack.pop()
        yield cur
        stack.extend(_children(cur))


@dataclass(frozen=True)
class WarpExpr:
    """A parsed expression together with the parameter names it uses."""

    root: Node
    params: frozenset
    variables: tuple = ("t",)

    def __str__(self) -> str:
        return serialize(self)

    def free_variables(self) -> frozenset:
        return frozenset(n.name for n in _walk(self.root) if isinstance(n, Var))


# --------------------------------------------------------------------------
# Errors
# --------------------------------------------------------------------------


class ParseError(ValueError):
    """Malformed expression.  ``position`` indexes into the source string."""

    KINDS = (
        "unexpected token",
        "unknown identifier",
        "unknown function",
        "arity mismatch",
        "empty input",
    )

    def __init__(self, kind: str, position: int, source: str, detail: str = ""):
        self.kind = kind
        self.position = position
        self.source = source
        self.detail = detail
        msg = f"{kind} at index {position}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class EvalError(ArithmeticError):
    """Base class for evaluation failures."""


class UnboundParameterError(EvalError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"parameter {name!r} is not bound")


class DomainError(EvalError):
    """Argument outside a function's analytic domain (or division by zero)."""

    def __init__(self, subexpr: str, reason: str, at=None):
        self.subexpr = subexpr
        self.reason = reason
        self.at = at
        msg = f"{reason} in {subexpr!r}"
        if at is not None:
            msg += f" (at {at})"
        super().__init__(msg)


# --------------------------------------------------------------------------
# Tokenizer / parser
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num | name | op | end
    text: str
    pos: int


def _tokenize(source: str) -> list:
    toks = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError("unexpected token", pos, source, repr(source[pos]))
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(source)))
    return toks


class _Parser:
    def __init__(self, source, variables, allowed_params):
        self.source = source
        self.toks = _tokenize(source)
        self.i = 0
        self.variables = set(variables)
        self.allowed = None if allowed_params is None else set(allowed_params)

    @property
    def cur(self) -> _Tok:
        return self.toks[self.i]

    def _error(self, kind, tok=None, detail=""):
        tok = tok or self.cur
        # keep the reported position inside the source
        pos = min(tok.pos, max(len(self.source) - 1, 0))
        if tok.kind == "end" and not detail:
            detail = "end of input"
        elif not detail:
            detail = repr(tok.text)
        return ParseError(kind, pos, self.source, detail)

    def expect(self, text):
        if self.cur.text != text or self.cur.kind == "end":
            raise self._error("unexpected token", detail=f"expected {text!r}, got {self.cur.text or 'end of input'!r}")
        self.i += 1

    def parse(self):
        if self.cur.kind == "end":
            raise ParseError("empty input", 0, self.source)
        node = self.expr()
        if self.cur.kind != "end":
            raise self._error("unexpected token")
        return node

    def expr(self):
        node = self.term()
        while self.cur.text in ("+", "-") and self.cur.kind == "op":
            op = self.cur.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.cur.text in ("*", "/") and self.cur.kind == "op":
            op = self.cur.text
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.cur.kind == "op" and self.cur.text == "-":
            self.i += 1
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.cur.kind == "op" and self.cur.text == "^":
            self.i += 1
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.cur
        if tok.kind == "num":
            value = float(tok.text)
            if not math.isfinite(value):
                raise self._error("unexpected token", tok, detail="numeric literal out of range")
            self.i += 1
            return Num(value)
        if tok.kind == "name":
            self.i += 1
            if self.cur.kind == "op" and self.cur.text == "(":
                return self.call(tok)
            if tok.text in FUNCTIONS:
                raise self._error("unexpected token", detail=f"function {tok.text!r} needs arguments")
            if tok.text in self.variables:
                return Var(tok.text)
            if self.allowed is not None and tok.text not in self.allowed:
                raise self._error("unknown identifier", tok)
            return Param(tok.text)
        if tok.kind == "op" and tok.text == "(":
            self.i += 1
            node = self.expr()
            self.expect(")")
            return node
        raise self._error("unexpected token")

    def call(self, name_tok):
        if name_tok.text not in FUNCTIONS:
            raise self._error("unknown function", name_tok)
        self.expect("(")
        args = [self.expr()]
        while self.cur.kind == "op" and self.cur.text == ",":
            self.i += 1
            args.append(self.expr())
        self.expect(")")
        arity = FUNCTIONS[name_tok.text]
        if len(args) != arity:
            raise self._error(
                "arity mismatch", name_tok,
                f"{name_tok.text} takes {arity} argument(s), got {len(args)}",
            )
        return Call(name_tok.text, tuple(args))


def parse(source: str, variables=("t",), params=None) -> WarpExpr:
    """Parse ``source`` into a :class:`WarpExpr`.

    ``variables`` are the names treated as independent variables; every other
    non-function identifier becomes a parameter.  When ``params`` is given,
    identifiers outside it raise ``ParseError(kind="unknown identifier")``.
    """
    root = _Parser(source, variables, params).parse()
    names = frozenset(n.name for n in _walk(root) if isinstance(n, Param))
    return WarpExpr(root, names, tuple(variables))


# --------------------------------------------------------------------------
# Serialization (minimal parentheses)
# --------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}
_ATOM = 5


def _prec(node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    return _ATOM


def _fmt_num(v: float) -> str:
    s = repr(float(v))
    if s.endswith(".0"):
        s = s[:-2]
    return s


def _ser(node) -> str:
    if isinstance(node, Num):
        if node.value < 0 or not math.isfinite(node.value):
            raise ValueError(f"literal {node.value!r} has no source form")
        return _fmt_num(node.value)
    if isinstance(node, (Var, Param)):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}(" + ",".join(_ser(a) for a in node.args) + ")"
    if isinstance(node, Neg):
        inner = _ser(node.arg)
        if _prec(node.arg) < _PREC["neg"]:
            inner = f"({inner})"
        return "-" + inner
    p = _PREC[node.op]
    left, right = _ser(node.left), _ser(node.right)
    if node.op == "^":
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) < _PREC["neg"]:
            right = f"({right})"
    else:
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
    return f"{left}{node.op}{right}"


def serialize(expr) -> str:
    """Render an expression (or bare node) back into the input grammar."""
    root = expr.root if isinstance(expr, WarpExpr) else expr
    return _ser(root)


# --------------------------------------------------------------------------
# 2-jets
# --------------------------------------------------------------------------


def _lift(x) -> "Jet2":
    return x if isinstance(x, Jet2) else Jet2(x, 0.0, 0.0)


@dataclass(frozen=True)
class Jet2:
    """Value and first two derivatives of a scalar function at a point."""

    v: object
    d1: object = 0.0
    d2: object = 0.0

    def __add__(self, other):
        o = _lift(other)
        return Jet2(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.v, -self.d1, -self.d2)

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        o = _lift(other)
        return Jet2(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _lift(other)
        if np.any(o.v == 0):
            raise ZeroDivisionError("jet division by zero value")
        q = self.v / o.v
        q1 = (self.d1 - q * o.d1) / o.v
        q2 = (self.d2 - 2.0 * q1 * o.d1 - q * o.d2) / o.v
        return Jet2(q, q1, q2)

    def __rtruediv__(self, other):
        return _lift(other) / self

    def compose(self, g0, g1, g2) -> "Jet2":
        """Chain rule: jet of g(self) given g, g', g'' evaluated at self.v."""
        return Jet2(g0, g1 * self.d1, g2 * self.d1 * self.d1 + g1 * self.d2)


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------


def _first_bad(x, mask):
    if x is None:
        return None
    arr = np.asarray(x)
    if arr.ndim == 0:
        return float(arr)
    return float(arr[np.asarray(mask)][0]) if np.any(mask) else None


class _Evaluator:
    def __init__(self, expr: WarpExpr, bindings, wrt, at, jets: bool):
        self.expr = expr
        self.bindings = bindings
        self.wrt = wrt
        self.at = at
        self.jets = jets

    def _lookup(self, name):
        try:
            return self.bindings[name]
        except KeyError:
            raise UnboundParameterError(name) from None

    def _domain(self, node, reason, mask, arg):
        raise DomainError(serialize(node), reason, _first_bad(arg, mask))

    def run(self):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            out = self.visit(self.expr.root)
        parts = (out.v, out.d1, out.d2) if isinstance(out, Jet2) else (out,)
        for part in parts:
            bad = ~np.isfinite(np.asarray(part, dtype=float))
            if np.any(bad):
                at = self.at if self.jets else None
                raise DomainError(serialize(self.expr), "non-finite result (overflow)",
                                  _first_bad(at, bad) if at is not None else None)
        return out

    def is_constant(self, node) -> bool:
        # jets: constant w.r.t. the differentiation variable; values: no variables at all
        return not any(
            isinstance(n, Var) and (not self.jets or n.name == self.wrt)
            for n in _walk(node)
        )

    def visit(self, node):
        if isinstance(node, Num):
            return Jet2(node.value) if self.jets else node.value
        if isinstance(node, Param):
            val = self._lookup(node.name)
            return Jet2(val) if self.jets else val
        if isinstance(node, Var):
            if self.jets and node.name == self.wrt:
                return Jet2(self.at, 1.0, 0.0)
            val = self.at if (not self.jets and node.name == self.wrt) else self._lookup(node.name)
            return Jet2(val) if self.jets else val
        if isinstance(node, Neg):
            return -self.visit(node.arg)
        if isinstance(node, BinOp):
            if node.op == "^":
                return self.power(node, node.left, node.right)
            a, b = self.visit(node.left), self.visit(node.right)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            bv = b.v if self.jets else b
            if np.any(np.asarray(bv) == 0):
                self._domain(node, "division by zero", np.asarray(bv) == 0, self.at)
            return a / b
        if isinstance(node, Call):
            if node.func == "pow":
                return self.power(node, *node.args)
            return self.call(node, self.visit(node.args[0]))
        raise TypeError(f"unknown node {node!r}")

    def call(self, node, a):
        x = a.v if self.jets else a
        name = node.func
        if name == "exp":
            e = np.exp(x)
            return a.compose(e, e, e) if self.jets else e
        if name == "log":
            bad = np.asarray(x) <= 0
            if np.any(bad):
                self._domain(node, "log of non-positive argument", bad, self.at)
            if not self.jets:
                return np.log(x)
            return a.compose(np.log(x), 1.0 / x, -1.0 / (x * x))
        if name == "sqrt":
            bad = np.asarray(x) <= 0 if self.jets else np.asarray(x) < 0
            if np.any(bad):
                self._domain(node, "sqrt of non-positive argument" if self.jets
                             else "sqrt of negative argument", bad, self.at)
            s = np.sqrt(x)
            if not self.jets:
                return s
            return a.compose(s, 0.5 / s, -0.25 / (s * x))
        if name == "sin":
            s, c = np.sin(x), np.cos(x)
            return a.compose(s, c, -s) if self.jets else s
        if name == "cos":
            s, c = np.sin(x), np.cos(x)
            return a.compose(c, -s, -c) if self.jets else c
        if name == "sinh":
            s, c = np.sinh(x), np.cosh(x)
            return a.compose(s, c, s) if self.jets else s
        if name == "cosh":
            s, c = np.sinh(x), np.cosh(x)
            return a.compose(c, s, c) if self.jets else c
        raise TypeError(f"unknown function {name!r}")

    def power(self, node, base_node, exp_node):
        base = self.visit(base_node)
        expo = self.visit(exp_node)
        b = base.v if self.jets else base
        b_arr = np.asarray(b)
        if not self.is_constant(exp_node):
            # variable exponent: exp(g log f), requires f > 0
            bad = b_arr <= 0
            if np.any(bad):
                self._domain(node, "non-positive base with variable exponent", bad, self.at)
            return self.call(Call("exp", (node,)), expo * self.call(Call("log", (node,)), base))

        c = expo.v if self.jets else expo
        c_arr = np.asarray(c)
        integral = np.all(c_arr == np.round(c_arr))
        if not integral and np.any(b_arr < 0):
            self._domain(node, "negative base with non-integer exponent", b_arr < 0, self.at)
        if not self.jets:
            if np.any((b_arr == 0) & (c_arr < 0)):
                self._domain(node, "zero base with negative exponent", b_arr == 0, self.at)
            return np.power(np.asarray(b, dtype=float), c)

        def term(coef, k):
            # coef * b ** (c - k), treating a vanishing coefficient as exact zero
            coef = np.asarray(coef, dtype=float)
            e = c_arr - k
            zero = b_arr == 0
            if np.any(zero & (e < 0) & (coef != 0)):
                self._domain(node, "derivative undefined at zero base", zero, self.at)
            with np.errstate(divide="ignore", invalid="ignore"):
                val = coef * np.power(np.asarray(b, dtype=float), e)
            return np.where(coef == 0, 0.0, val)

        p0 = term(1.0, 0)
        p1 = term(c_arr, 1)
        p2 = term(c_arr * (c_arr - 1.0), 2)
        return base.compose(p0, p1, p2)


def _normalize(value):
    arr = np.asarray(value, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


def eval_jet2(expr: WarpExpr, t, bindings: Mapping | None = None, wrt: str = "t") -> Jet2:
    """Evaluate ``expr`` and its first two derivatives with respect to ``wrt``.

    ``t`` may be a float or an ndarray.  Other variables and all parameters
    must appear in ``bindings``.  Raises :class:`DomainError` or
    :class:`UnboundParameterError`; never returns NaN for a domain violation.
    """
    ev = _Evaluator(expr, dict(bindings or {}), wrt, np.asarray(t, dtype=float)
                    if np.ndim(t) else float(t), jets=True)
    try:
        jet = ev.run()
    except ZeroDivisionError as exc:
        raise DomainError(serialize(expr), str(exc)) from None
    if not isinstance(jet, Jet2):
        jet = Jet2(jet)
    shape = np.shape(t)
    return Jet2(*(_normalize(np.broadcast_to(x, shape)) for x in (jet.v, jet.d1, jet.d2)))


def evaluate(expr: WarpExpr, env: Mapping) -> object:
    """Plain value of ``expr`` with every variable and parameter taken from ``env``."""
    ev = _Evaluator(expr, dict(env), None, None, jets=False)
    out = ev.run()
    shapes = [np.shape(v) for v in env.values()]
    shape = np.broadcast_shapes(*shapes) if shapes else ()
    return _normalize(np.broadcast_to(out, shape))
