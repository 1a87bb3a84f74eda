"""Expression trees for DDE right-hand sides.

Grammar (usual precedence, ^ binds tightest and is right-associative):

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := ('-'|'+') unary | power
    power  := atom (('^'|'**') unary)?
    atom   := NUMBER | x<i>@<k> | NAME '(' expr ')' | NAME | '(' expr ')'

x<i>@<k> is component i of the state evaluated at the k-th delay; every other
NAME is a parameter. The function catalog is fixed (exp, log, sin, cos) so
that third-order differentiation stays total on the evaluation domain.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

from ._jets import Jet3, jet_cos, jet_exp, jet_log, jet_sin
from .errors import EvalDomainError, ExprSyntaxError, UnknownSymbolError

Expr = Union["Num", "Param", "State", "Neg", "BinOp", "Call"]

FUNCTION_CATALOG = ("exp", "log", "sin", "cos")

_NUM_FUNCS = {"exp": math.exp, "log": math.log, "sin": math.sin, "cos": math.cos}
_JET_FUNCS = {"exp": jet_exp, "log": jet_log, "sin": jet_sin, "cos": jet_cos}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class State:
    comp: int
    lag: int


@dataclass(frozen=True)
class Neg:
    arg: Expr


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call:
    fn: str
    arg: Expr


_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<state>x\d+@\d+)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()])"
    r")"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == m.start():
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad_at = len(text) - len(stripped)
            raise ExprSyntaxError(f"unexpected character {stripped[0]!r}", bad_at)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, off = self.peek()
        if kind != "op" or val != op:
            raise ExprSyntaxError(f"expected {op!r}", off)
        self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected trailing input {val!r}", off)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                node = BinOp(val, node, self.term())
            else:
                return node

    def term(self) -> Expr:
        node = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                node = BinOp(val, node, self.unary())
            else:
                return node

    def unary(self) -> Expr:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return Neg(self.unary())
        if kind == "op" and val == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        node = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val in ("^", "**"):
            self.advance()
            return BinOp("^", node, self.unary())
        return node

    def atom(self) -> Expr:
        kind, val, off = self.advance()
        if kind == "num":
            return Num(float(val))
        if kind == "state":
            comp, lag = val[1:].split("@")
            return State(int(comp), int(lag))
        if kind == "name":
            nk, nv, _ = self.peek()
            if nk == "op" and nv == "(":
                if val not in FUNCTION_CATALOG:
                    raise ExprSyntaxError(f"unknown function {val!r}", off)
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return Call(val, arg)
            return Param(val)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExprSyntaxError(
            "expected a number, name or parenthesized expression", off
        )


def parse_expr(text: str) -> Expr:
    """Parse expression text into an immutable tree."""
    return _Parser(text).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def to_text(node: Expr) -> str:
    """Canonical printer; parse(to_text(e)) reproduces e structurally."""
    if isinstance(node, Num):
        v = node.value
        if v == int(v) and abs(v) < 1e16:
            return str(int(v))
        return repr(v)
    if isinstance(node, Param):
        return node.name
    if isinstance(node, State):
        return f"x{node.comp}@{node.lag}"
    if isinstance(node, Neg):
        inner = to_text(node.arg)
        if _prec(node.arg) < 3:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Call):
        return f"{node.fn}({to_text(node.arg)})"
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        left = to_text(node.left)
        right = to_text(node.right)
        # left-assoc ops parenthesize an equal-precedence right child;
        # right-assoc ^ does the opposite
        if node.op == "^":
            if _prec(node.left) <= p:
                left = f"({left})"
            if _prec(node.right) < p:
                right = f"({right})"
        else:
            if _prec(node.left) < p:
                left = f"({left})"
            if _prec(node.right) <= p:
                right = f"({right})"
        if node.op in "+-":
            return f"{left} {node.op} {right}"
        return f"{left}{node.op}{right}"
    raise TypeError(f"not an expression node: {node!r}")


def state_symbols(node: Expr) -> set:
    """All (comp, lag) pairs referenced by the tree."""
    out = set()
    stack = [node]
    while stack:
        e = stack.pop()
        if isinstance(e, State):
            out.add((e.comp, e.lag))
        elif isinstance(e, Neg):
            stack.append(e.arg)
        elif isinstance(e, BinOp):
            stack.append(e.left)
            stack.append(e.right)
        elif isinstance(e, Call):
            stack.append(e.arg)
    return out


def param_names(node: Expr) -> set:
    out = set()
    stack = [node]
    while stack:
        e = stack.pop()
        if isinstance(e, Param):
            out.add(e.name)
        elif isinstance(e, Neg):
            stack.append(e.arg)
        elif isinstance(e, BinOp):
            stack.append(e.left)
            stack.append(e.right)
        elif isinstance(e, Call):
            stack.append(e.arg)
    return out


def evaluate(node: Expr, state, params, funcs=None):
    """Evaluate the tree.

    state maps (comp, lag) to a value; values may be floats, complex numbers
    or Jet3 instances (pass funcs accordingly: default real-math catalog,
    jet catalog when state values are jets).
    """
    if funcs is None:
        funcs = _NUM_FUNCS
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Param):
        try:
            return params[node.name]
        except KeyError:
            raise UnknownSymbolError(f"unknown parameter {node.name!r}") from None
    if isinstance(node, State):
        try:
            return state[(node.comp, node.lag)]
        except KeyError:
            raise UnknownSymbolError(
                f"unbound state symbol x{node.comp}@{node.lag}"
            ) from None
    if isinstance(node, Neg):
        return -evaluate(node.arg, state, params, funcs)
    if isinstance(node, BinOp):
        a = evaluate(node.left, state, params, funcs)
        b = evaluate(node.right, state, params, funcs)
        try:
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if node.op == "/":
                return a / b
            return a**b
        except (ZeroDivisionError, ValueError) as exc:
            raise EvalDomainError(str(exc), to_text(node)) from None
    if isinstance(node, Call):
        arg = evaluate(node.arg, state, params, funcs)
        try:
            return funcs[node.fn](arg)
        except (ZeroDivisionError, ValueError) as exc:
            raise EvalDomainError(str(exc), to_text(node)) from None
    raise TypeError(f"not an expression node: {node!r}")


def eval_jet3(node: Expr, base, directions, params=None):
    """Directional Taylor data of the tree at `base`.

    base maps (comp, lag) to a complex value; directions is a sequence of one
    to three such maps. One direction returns the full Jet3 along it; two or
    three return the complex-bilinear/trilinear derivative value recovered by
    polarization (conjugate arguments must be passed explicitly).
    """
    params = params or {}
    dirs = list(directions)
    if not 1 <= len(dirs) <= 3:
        raise ValueError("eval_jet3 takes one to three directions")

    def jet_along(direction):
        env = {
            key: Jet3(val, direction.get(key, 0.0)) for key, val in base.items()
        }
        out = evaluate(node, env, params, _JET_FUNCS)
        # constant subtrees evaluate to plain scalars
        return out if isinstance(out, Jet3) else Jet3(out)

    def combine(*ds):
        keys = set()
        for d in ds:
            keys.update(d)
        return {k: sum(d.get(k, 0.0) for d in ds) for k in keys}

    if len(dirs) == 1:
        return jet_along(dirs[0])
    if len(dirs) == 2:
        u, v = dirs
        plus = jet_along(combine(u, v)).c[2]
        minus = jet_along(combine(u, {k: -x for k, x in v.items()})).c[2]
        # c2 carries f''/2; B(w) := D^2 f(w, w) = 2 c2
        return 2.0 * (plus - minus) / 4.0
    u, v, w = dirs
    t = (
        jet_along(combine(u, v, w)).c[3]
        - jet_along(combine(u, v)).c[3]
        - jet_along(combine(u, w)).c[3]
        - jet_along(combine(v, w)).c[3]
        + jet_along(u).c[3]
        + jet_along(v).c[3]
        + jet_along(w).c[3]
    )
    # c3 carries f'''/6; T(z) := D^3 f(z, z, z) = 6 c3
    return t


def compile_rhs(exprs, params, n_lags: int):
    """Compile expression trees into one fast callable for time stepping.

    Parameter values are baked in as literals. The result takes an array of
    lag values indexed [lag, comp] and returns a list of floats.
    """

    def gen(node: Expr) -> str:
        if isinstance(node, Num):
            return repr(node.value)
        if isinstance(node, Param):
            try:
                return repr(float(params[node.name]))
            except KeyError:
                raise UnknownSymbolError(
                    f"unknown parameter {node.name!r}"
                ) from None
        if isinstance(node, State):
            if node.lag >= n_lags:
                raise UnknownSymbolError(
                    f"delay index {node.lag} out of range"
                )
            return f"v[{node.lag},{node.comp}]"
        if isinstance(node, Neg):
            return f"(-{gen(node.arg)})"
        if isinstance(node, BinOp):
            op = "**" if node.op == "^" else node.op
            return f"({gen(node.left)}{op}{gen(node.right)})"
        if isinstance(node, Call):
            return f"{node.fn}({gen(node.arg)})"
        raise TypeError(f"not an expression node: {node!r}")

    body = "[" + ", ".join(gen(e) for e in exprs) + "]"
    code = compile(f"lambda v: {body}", "<rhs>", "eval")
    return eval(code, dict(_NUM_FUNCS))
