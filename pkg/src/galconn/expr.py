"""Symbolic scalar fields over a coordinate chart.

Expressions are immutable, hash-consed trees: structurally identical
subtrees are the same Python object, so evaluation and differentiation
can memoise on node identity and large tensor formulas share work.
Simplification is limited to constant folding and 0/1 absorption.
"""

from __future__ import annotations

import math
import re
import weakref
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Expr",
    "ExprError",
    "ParseError",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "ArityError",
    "EvaluationError",
    "PoleError",
    "DomainError",
    "const",
    "coord",
    "add",
    "mul",
    "div",
    "power",
    "func",
    "as_expr",
    "is_zero",
    "ZERO",
    "ONE",
    "FUNCTIONS",
    "parse_expression",
    "evaluate",
    "differentiate",
    "Evaluator",
    "count_nodes",
]

CONST, COORD, ADD, MUL, DIV, POW, FUNC = range(7)

FUNCTIONS = ("sin", "cos", "exp", "sqrt")


class ExprError(Exception):
    pass


class ParseError(ExprError, ValueError):
    """Raised for malformed expression text; ``offset`` is a byte offset."""

    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class ExprSyntaxError(ParseError):
    pass


class UnknownIdentifierError(ParseError):
    pass


class ArityError(ParseError):
    pass


class EvaluationError(ExprError, ArithmeticError):
    pass


class PoleError(EvaluationError, ZeroDivisionError):
    pass


class DomainError(EvaluationError):
    pass


_INTERN: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()


class Expr:
    """A node of a scalar expression tree.

    Do not instantiate directly; use the constructor functions
    (:func:`const`, :func:`coord`, :func:`add`, ...) or the arithmetic
    operators, which fold constants and intern the result.
    """

    __slots__ = ("kind", "args", "value", "_dcache", "__weakref__")

    kind: int
    args: tuple["Expr", ...]
    value: object

    def __init__(self, kind, args, value):
        self.kind = kind
        self.args = args
        self.value = value
        self._dcache: dict[int, Expr] = {}

    # identity equality is structural equality thanks to interning
    __eq__ = object.__eq__
    __hash__ = object.__hash__

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, mul(-1.0, other))

    def __rsub__(self, other):
        return add(other, mul(-1.0, self))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(-1.0, self)

    def __pow__(self, n):
        if isinstance(n, Expr) and n.kind == CONST:
            n = n.value
        if not float(n).is_integer():
            raise TypeError("only integer powers are supported")
        return power(self, int(n))

    def __repr__(self):
        return f"Expr({to_infix(self)})"

    def __str__(self):
        return to_infix(self)

    @property
    def is_const(self) -> bool:
        return self.kind == CONST


def _make(kind: int, args: tuple, value) -> Expr:
    key = (kind, value, tuple(id(a) for a in args))
    node = _INTERN.get(key)
    if node is None:
        node = Expr(kind, args, value)
        _INTERN[key] = node
    return node


def const(value: float) -> Expr:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"non-finite constant {value!r}")
    if value == 0.0:
        value = 0.0  # normalise -0.0
    return _make(CONST, (), value)


def coord(index: int) -> Expr:
    if index < 0:
        raise ValueError("coordinate index must be non-negative")
    return _make(COORD, (), int(index))


ZERO = const(0.0)
ONE = const(1.0)
# interned constants live as long as referenced; pin the common ones
_PINNED = (ZERO, ONE, const(-1.0), const(2.0), const(0.5))


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, np.integer, np.floating)):
        return const(float(x))
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def is_zero(e) -> bool:
    return isinstance(e, Expr) and e.kind == CONST and e.value == 0.0


def add(*terms) -> Expr:
    flat: list[Expr] = []
    total = 0.0
    for t in terms:
        t = as_expr(t)
        if t.kind == CONST:
            total += t.value
        elif t.kind == ADD:
            for s in t.args:
                if s.kind == CONST:
                    total += s.value
                else:
                    flat.append(s)
        else:
            flat.append(t)
    if total != 0.0:
        flat.insert(0, const(total))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return _make(ADD, tuple(flat), None)


def mul(*factors) -> Expr:
    flat: list[Expr] = []
    coeff = 1.0
    for f in factors:
        f = as_expr(f)
        if f.kind == CONST:
            coeff *= f.value
        elif f.kind == MUL:
            for s in f.args:
                if s.kind == CONST:
                    coeff *= s.value
                else:
                    flat.append(s)
        else:
            flat.append(f)
        if coeff == 0.0:
            return ZERO
    if coeff != 1.0:
        flat.insert(0, const(coeff))
    if not flat:
        return ONE
    if len(flat) == 1:
        return flat[0]
    return _make(MUL, tuple(flat), None)


def div(num, den) -> Expr:
    num, den = as_expr(num), as_expr(den)
    if is_zero(num):
        return ZERO
    if den.kind == CONST:
        if den.value == 0.0:
            # kept as a node so evaluation reports the pole
            return _make(DIV, (num, den), None)
        return mul(1.0 / den.value, num)
    return _make(DIV, (num, den), None)


def power(base, n: int) -> Expr:
    base = as_expr(base)
    n = int(n)
    if n == 0:
        return ONE
    if n == 1:
        return base
    if base.kind == CONST and not (base.value == 0.0 and n < 0):
        return const(base.value**n)
    if base.kind == POW:
        return power(base.args[0], base.value * n)
    return _make(POW, (base,), n)


def func(name: str, arg) -> Expr:
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    arg = as_expr(arg)
    if arg.kind == CONST:
        x = arg.value
        if name != "sqrt" or x >= 0.0:
            return const(getattr(math, name)(x))
    return _make(FUNC, (arg,), name)


# ---------------------------------------------------------------------------
# differentiation


def _postorder(root: Expr, skip) -> list[Expr]:
    """Nodes reachable from ``root`` in post-order, pruning where ``skip`` holds."""
    out: list[Expr] = []
    seen: set[int] = set()
    stack: list[tuple[Expr, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            out.append(node)
            continue
        if id(node) in seen or skip(node):
            continue
        seen.add(id(node))
        stack.append((node, True))
        for a in node.args:
            if id(a) not in seen and not skip(a):
                stack.append((a, False))
    return out


def _derivative_step(node: Expr, i: int) -> Expr:
    k = node.kind
    if k == CONST:
        return ZERO
    if k == COORD:
        return ONE if node.value == i else ZERO
    d = [a._dcache[i] for a in node.args]
    if k == ADD:
        return add(*d)
    if k == MUL:
        terms = []
        for j, dj in enumerate(d):
            if is_zero(dj):
                continue
            others = node.args[:j] + node.args[j + 1 :]
            terms.append(mul(dj, *others))
        return add(*terms)
    if k == DIV:
        a, b = node.args
        da, db = d
        return add(div(da, b), mul(-1.0, a, db, power(b, -2)))
    if k == POW:
        (b,), n = node.args, node.value
        return mul(float(n), power(b, n - 1), d[0])
    if k == FUNC:
        (a,), name = node.args, node.value
        if is_zero(d[0]):
            return ZERO
        if name == "sin":
            return mul(func("cos", a), d[0])
        if name == "cos":
            return mul(-1.0, func("sin", a), d[0])
        if name == "exp":
            return mul(node, d[0])
        return div(d[0], mul(2.0, node))
    raise AssertionError(k)


def differentiate(e: Expr, coord_index: int) -> Expr:
    """Exact partial derivative of ``e`` with respect to coordinate ``coord_index``."""
    e = as_expr(e)
    i = int(coord_index)
    if i < 0:
        raise ValueError("coordinate index must be non-negative")
    for node in _postorder(e, lambda n: i in n._dcache):
        node._dcache[i] = _derivative_step(node, i)
    return e._dcache[i]


# ---------------------------------------------------------------------------
# evaluation


class Evaluator:
    """Vectorised evaluation of expressions over a fixed batch of points.

    Values are memoised per node, so evaluating many expressions that
    share subtrees costs one pass over the union of their DAGs. Each
    node also carries a mask of points where a pole or domain error
    occurred somewhere in its subtree (``None`` when there are none).
    """

    def __init__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        self.points = pts
        self.n = pts.shape[0]
        self._memo: dict[int, tuple[Expr, np.ndarray, np.ndarray | None]] = {}

    def _compute(self, node: Expr):
        k = node.kind
        n = self.n
        if k == CONST:
            return np.full(n, node.value), None
        if k == COORD:
            if node.value >= self.points.shape[1]:
                raise IndexError(
                    f"coordinate x{node.value} outside chart of dimension {self.points.shape[1]}"
                )
            return self.points[:, node.value].copy(), None
        child = [self._memo[id(a)] for a in node.args]
        bad = None
        for _, _, b in child:
            if b is not None:
                bad = b if bad is None else (bad | b)
        vals = [c[1] for c in child]
        with np.errstate(all="ignore"):
            if k == ADD:
                out = vals[0].copy()
                for v in vals[1:]:
                    out += v
            elif k == MUL:
                out = vals[0].copy()
                for v in vals[1:]:
                    out *= v
            elif k == DIV:
                pole = vals[1] == 0.0
                out = vals[0] / vals[1]
                if pole.any():
                    bad = pole if bad is None else (bad | pole)
            elif k == POW:
                p = node.value
                if p < 0:
                    pole = vals[0] == 0.0
                    if pole.any():
                        bad = pole if bad is None else (bad | pole)
                out = vals[0] ** float(p) if p < 0 else vals[0] ** p
            else:
                name = node.value
                x = vals[0]
                if name == "sqrt":
                    dom = x < 0.0
                    if dom.any():
                        bad = dom if bad is None else (bad | dom)
                    out = np.sqrt(x)
                else:
                    out = getattr(np, name)(x)
        if bad is not None:
            out = np.where(bad, np.nan, out)
        return out, bad

    def _ensure(self, e: Expr):
        memo = self._memo
        if id(e) in memo:
            return memo[id(e)]
        for node in _postorder(e, lambda m: id(m) in memo):
            vals, bad = self._compute(node)
            memo[id(node)] = (node, vals, bad)
        return memo[id(e)]

    def values(self, e) -> np.ndarray:
        """Values of ``e`` at every point (NaN where the expression is undefined)."""
        return self._ensure(as_expr(e))[1]

    def bad_mask(self, e) -> np.ndarray:
        """Boolean mask of points where ``e`` hits a pole or domain error."""
        b = self._ensure(as_expr(e))[2]
        return np.zeros(self.n, dtype=bool) if b is None else b.copy()

    def array(self, exprs) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate an object array of expressions.

        Returns ``(values, bad)`` with ``values`` of shape
        ``(npoints, *exprs.shape)`` and ``bad`` the union of bad masks.
        """
        exprs = np.asarray(exprs, dtype=object)
        flat = exprs.reshape(-1)
        out = np.empty((self.n, flat.size))
        bad = np.zeros(self.n, dtype=bool)
        for j, e in enumerate(flat):
            _, vals, b = self._ensure(as_expr(e))
            out[:, j] = vals
            if b is not None:
                bad |= b
        return out.reshape((self.n,) + exprs.shape), bad


def evaluate(e, point: Sequence[float]) -> float:
    """Evaluate ``e`` at a single point, raising on poles and domain errors."""
    e = as_expr(e)
    ev = Evaluator([list(point)])
    node, vals, bad = ev._ensure(e)
    if bad is not None and bad[0]:
        _raise_for(e, ev)
    return float(vals[0])


def _raise_for(e: Expr, ev: Evaluator):
    # find the innermost failing node to give a specific error
    for node in _postorder(e, lambda m: False):
        _, _, b = ev._memo[id(node)]
        if b is None or not b[0]:
            continue
        if all(ev._memo[id(a)][2] is None or not ev._memo[id(a)][2][0] for a in node.args):
            if node.kind == FUNC:
                raise DomainError(f"sqrt of negative value in {to_infix(node)}")
            raise PoleError(f"division by zero in {to_infix(node)}")
    raise EvaluationError(f"cannot evaluate {to_infix(e)}")


def count_nodes(exprs: Iterable) -> int:
    """Number of distinct nodes in the DAG spanned by ``exprs``."""
    seen: set[int] = set()
    for e in exprs:
        for node in _postorder(as_expr(e), lambda m: id(m) in seen):
            seen.add(id(node))
    return len(seen)


# ---------------------------------------------------------------------------
# printing


_PREC = {ADD: 1, MUL: 2, DIV: 2, POW: 4, FUNC: 5, CONST: 5, COORD: 5}


def _fmt_num(x: float) -> str:
    return str(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)


def to_infix(e: Expr, names: Sequence[str] | None = None) -> str:
    def name(i):
        return names[i] if names is not None else f"x{i}"

    def go(n: Expr, parent: int) -> str:
        k = n.kind
        if k == CONST:
            s = _fmt_num(n.value)
            return f"({s})" if n.value < 0 and parent > 1 else s
        if k == COORD:
            return name(n.value)
        if k == ADD:
            parts = [go(n.args[0], 1)]
            for a in n.args[1:]:
                s = go(a, 1)
                parts.append(f"- {s[1:]}" if s.startswith("-") else f"+ {s}")
            s = " ".join(parts)
        elif k == MUL:
            args = n.args
            if args[0].kind == CONST and args[0].value == -1.0:
                s = "-" + go(mul(*args[1:]), 3)
            else:
                s = "*".join(go(a, 2) for a in args)
        elif k == DIV:
            s = f"{go(n.args[0], 2)}/{go(n.args[1], 3)}"
        elif k == POW:
            p = n.value
            s = f"{go(n.args[0], 5)}^{p}"
        else:
            return f"{n.value}({go(n.args[0], 0)})"
        return f"({s})" if _PREC[k] < parent or (k == MUL and parent == 3) else s

    return go(as_expr(e), 0)


def to_sexpr(e: Expr, names: Sequence[str] | None = None) -> str:
    """Prefix rendering, e.g. ``(+ (^ x 2) (sin t))``; handy for shape checks."""

    def go(n: Expr) -> str:
        k = n.kind
        if k == CONST:
            return _fmt_num(n.value)
        if k == COORD:
            return names[n.value] if names is not None else f"x{n.value}"
        if k == POW:
            return f"(^ {go(n.args[0])} {n.value})"
        if k == FUNC:
            return f"({n.value} {go(n.args[0])})"
        op = {ADD: "+", MUL: "*", DIV: "/"}[k]
        return f"({op} {' '.join(go(a) for a in n.args)})"

    return go(as_expr(e))


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    raw = text.encode()
    # byte offsets differ from str offsets only for non-ASCII input
    def boff(i):
        return len(text[:i].encode()) if len(raw) != len(text) else i

    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            stripped = len(text) - len(text[pos:].lstrip())
            if stripped >= len(text):
                break
            raise ExprSyntaxError(f"unexpected character {text[stripped]!r}", boff(stripped), text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), boff(start)))
        pos = m.end()
    tokens.append(("end", "", boff(len(text))))
    return tokens


class _Parser:
    def __init__(self, text: str, coord_names: Sequence[str]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.names = {n: k for k, n in enumerate(coord_names)}

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, off = self.take()
        if val != value or kind == "end":
            what = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", off, self.text)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", off, self.text)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else add(e, mul(-1.0, rhs))
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.factor()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def factor(self) -> Expr:
        neg = False
        if self.peek()[:2] == ("op", "-"):
            self.take()
            neg = True
        e = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            sign = 1
            if self.peek()[:2] == ("op", "-"):
                self.take()
                sign = -1
            kind, val, off = self.take()
            if kind != "num" or not val.isdigit():
                raise ExprSyntaxError("exponent must be an integer", off, self.text)
            e = power(e, sign * int(val))
        return mul(-1.0, e) if neg else e

    def atom(self) -> Expr:
        kind, val, off = self.take()
        if kind == "num":
            return const(float(val))
        if kind == "ident":
            if val in FUNCTIONS:
                self.expect("(")
                args = [self.expr()]
                while self.peek()[:2] == ("op", ","):
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != 1:
                    raise ArityError(f"{val} takes 1 argument, got {len(args)}", off, self.text)
                return func(val, args[0])
            if val not in self.names:
                raise UnknownIdentifierError(f"unknown identifier {val!r}", off, self.text)
            return coord(self.names[val])
        if (kind, val) == ("op", "("):
            e = self.expr()
            self.expect(")")
            return e
        what = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {what}", off, self.text)


def parse_expression(text: str, dim: int, coord_names: Sequence[str] | None = None) -> Expr:
    """Parse ``text`` into an expression over a chart of dimension ``dim``.

    Precedence is ``^`` over unary minus over ``* /`` over ``+ -``, all
    binary operators left-associative. Identifiers must be declared
    coordinate names (default ``x0 .. x{dim-1}``) or one of
    ``sin cos exp sqrt``.
    """
    if coord_names is None:
        coord_names = [f"x{i}" for i in range(dim)]
    if len(coord_names) != dim:
        raise ValueError(f"expected {dim} coordinate names, got {len(coord_names)}")
    return _Parser(text, coord_names).parse()
