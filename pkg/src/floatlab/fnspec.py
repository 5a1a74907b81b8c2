"""Parser for the one-line function mini-language.

    quad(a11[,a12,a22])[+c]        <Ax,x> + c
    halfsq-ellipse(rx[,ry])        |x|_K^2/2, K the axis ellipse (interval in 1D)
    pownorm(p,s)                   s*|x|^p, p >= 1
    lqsq(q,s)                      s*|x|_q^2 in 2D (q >= 2)
    huber(w)                       x^2/2 on [-w,w], affine outside (1D)
    max(spec,...) | sum(spec,...)
    affine(spec; m11,m12,m21,m22; t1,t2)   psi(Ax+t); 1D form affine(spec; m; t)

Any term may carry a ``+c`` suffix. Whitespace is ignored. The dimension
comes from the innermost atom that fixes it (pownorm does not), falling
back to the ``dim`` argument.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

import numpy as np

from .convexfn import (ConvexFunction, Ellipse, gauge_square_half, huber, lq_norm_square, max_of,
                       power_norm, precompose_affine, quadratic_form, sum_of)

__all__ = ["SpecError", "parse_function"]


class SpecError(ValueError):
    pass


_TOKEN = re.compile(r"\s*(?:(?P<num>-?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
                    r"|(?P<name>[A-Za-z]+(?:-[A-Za-z]+)*)|(?P<punct>[(),;+]))")


def _tokenize(text: str) -> list[tuple[str, str]]:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise SpecError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


@dataclass
class _Node:
    op: str
    args: list
    children: list
    shift: float = 0.0


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok[0] is None or (kind and tok[0] != kind) or (value and tok[1] != value):
            raise SpecError(f"expected {value or kind}, got {tok[1]!r}")
        self.i += 1
        return tok[1]

    def numbers(self, stop=(")",)):
        vals = [float(self.take("num"))]
        while self.peek() == ("punct", ","):
            self.take()
            vals.append(float(self.take("num")))
        if self.peek()[1] not in stop:
            raise SpecError(f"expected one of {stop}, got {self.peek()[1]!r}")
        return vals

    def term(self) -> _Node:
        name = self.take("name").lower()
        self.take("punct", "(")
        if name in ("max", "sum"):
            kids = [self.term()]
            while self.peek() == ("punct", ","):
                self.take()
                kids.append(self.term())
            node = _Node(name, [], kids)
        elif name == "affine":
            inner = self.term()
            self.take("punct", ";")
            m = self.numbers(stop=(";",))
            self.take("punct", ";")
            t = self.numbers()
            node = _Node(name, [m, t], [inner])
        elif name in ("quad", "halfsq-ellipse", "pownorm", "lqsq", "huber"):
            node = _Node(name, self.numbers(), [])
        else:
            raise SpecError(f"unknown atom {name!r}")
        self.take("punct", ")")
        if self.peek() == ("punct", "+"):
            self.take()
            node.shift = float(self.take("num"))
        return node


def _dim_of(node: _Node) -> int | None:
    a = node.args
    fixed = {"quad": {1: 1, 3: 2}, "halfsq-ellipse": {1: 1, 2: 2}}
    if node.op in fixed:
        if len(a) not in fixed[node.op]:
            raise SpecError(f"{node.op} takes {sorted(fixed[node.op])} parameters")
        return fixed[node.op][len(a)]
    if node.op == "lqsq":
        return 2
    if node.op == "huber":
        return 1
    if node.op == "affine":
        m, t = a
        d = {1: 1, 4: 2}.get(len(m))
        if d is None or len(t) != d:
            raise SpecError("affine needs 1 or 4 matrix entries and a matching shift")
        return d
    dims = {d for d in (_dim_of(c) for c in node.children) if d is not None}
    if len(dims) > 1:
        raise SpecError("mixed dimensions in one expression")
    return dims.pop() if dims else None


def _shifted(psi: ConvexFunction, c: float) -> ConvexFunction:
    if c == 0.0:
        return psi
    f = psi.value_fn
    return replace(psi, value_fn=lambda X: f(X) + c, minorant=None, name=f"{psi.name}+{c}")


def _build(node: _Node, dim: int) -> ConvexFunction:
    a = node.args
    if node.op == "quad":
        A = [[a[0]]] if len(a) == 1 else [[a[0], a[1]], [a[1], a[2]]]
        return quadratic_form(A, node.shift)
    if node.op == "halfsq-ellipse":
        psi = gauge_square_half(Ellipse(a[0], a[1] if len(a) == 2 else None))
    elif node.op == "pownorm":
        if len(a) != 2:
            raise SpecError("pownorm takes (p, s)")
        psi = power_norm(a[0], a[1], dim)
    elif node.op == "lqsq":
        if len(a) != 2:
            raise SpecError("lqsq takes (q, s)")
        psi = lq_norm_square(a[0], a[1])
    elif node.op == "huber":
        if len(a) != 1:
            raise SpecError("huber takes (w)")
        psi = huber(a[0])
    elif node.op == "affine":
        m, t = a
        psi = precompose_affine(_build(node.children[0], dim), np.reshape(m, (dim, dim)), t)
    else:
        kids = [_build(c, dim) for c in node.children]
        psi = max_of(kids) if node.op == "max" else sum_of(kids)
    return _shifted(psi, node.shift)


def parse_function(text: str, dim: int | None = None) -> ConvexFunction:
    """Build a :class:`ConvexFunction` from a mini-language string."""
    p = _Parser(_tokenize(text))
    node = p.term()
    if p.peek()[0] is not None:
        raise SpecError(f"trailing input at token {p.peek()[1]!r}")
    inferred = _dim_of(node)
    if inferred is not None and dim is not None and inferred != dim:
        raise SpecError(f"expression is {inferred}D but dim={dim} requested")
    d = inferred or dim or 1
    psi = _build(node, d)
    return replace(psi, name=text.replace(" ", ""))
