"""Tiny recursive-descent parser for affine expressions in x, y, z.

Accepted: numbers, the variables x, y, z, ``+ - *``, unary signs and
parentheses, as long as the result stays affine (no product of two
variable terms). ``"0.2*x + 0.1*z"`` parses to ``LinearPhi(0, (0.2, 0, 0.1))``.
"""

import re
from dataclasses import dataclass

import numpy as np

from .errors import ParseError

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)|([xyz])|(.))")


@dataclass(frozen=True)
class LinearPhi:
    """``phi(p) = const + coef . p`` evaluated on points of the sphere."""

    const: float = 0.0
    coef: tuple = (0.0, 0.0, 0.0)

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return self.const + p @ np.asarray(self.coef, dtype=float)

    @property
    def amplitude(self):
        """max |phi| over the unit sphere."""
        return abs(self.const) + float(np.linalg.norm(self.coef))

    @property
    def is_constant(self):
        return not any(self.coef)

    def __str__(self):
        parts = [f"{self.const:g}"] if self.const or self.is_constant else []
        parts += [f"{c:g}*{v}" for c, v in zip(self.coef, "xyz") if c]
        return " + ".join(parts)


def _tokenize(text):
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        num, var, other = m.groups()
        if num is not None:
            tokens.append(("num", float(num)))
        elif var is not None:
            tokens.append(("var", var))
        elif other.strip():
            tokens.append(("op", other))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def fail(self, msg):
        raise ParseError(f"{msg} in phi expression {self.text!r}")

    def parse(self):
        if not self.tokens:
            self.fail("empty expression")
        val = self.expr()
        if self.i != len(self.tokens):
            self.fail(f"unexpected token {self.peek()[1]!r}")
        return val

    # values are numpy vectors (const, cx, cy, cz)
    def expr(self):
        val = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            _, op = self.take()
            rhs = self.term()
            val = val + rhs if op == "+" else val - rhs
        return val

    def term(self):
        val = self.factor()
        while self.peek() == ("op", "*"):
            self.take()
            rhs = self.factor()
            if np.any(val[1:]) and np.any(rhs[1:]):
                self.fail("product of two variable terms")
            val = val * rhs[0] if np.any(val[1:]) else val[0] * rhs
        return val

    def factor(self):
        kind, tok = self.take()
        if kind == "num":
            return np.array([tok, 0.0, 0.0, 0.0])
        if kind == "var":
            v = np.zeros(4)
            v[1 + "xyz".index(tok)] = 1.0
            return v
        if (kind, tok) == ("op", "-"):
            return -self.factor()
        if (kind, tok) == ("op", "+"):
            return self.factor()
        if (kind, tok) == ("op", "("):
            val = self.expr()
            if self.take() != ("op", ")"):
                self.fail("missing ')'")
            return val
        self.fail(f"unexpected token {tok!r}")


def parse_phi(text):
    v = _Parser(str(text)).parse()
    return LinearPhi(float(v[0]), (float(v[1]), float(v[2]), float(v[3])))
