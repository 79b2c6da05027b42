"""A small expression language for F(p) and f(t).

Grammar (EBNF)::

    expr          := term (('+' | '-') term)*
    term          := factor (('*' | '/') factor)*
    factor        := '-' factor | base ('^' signed_number)?
    base          := number | variable | '(' expr ')' | 'exp' '(' expr ')'
    signed_number := ('+' | '-')? number

Binary operators are left-associative and '^' binds tighter than '*'.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import TailBound, TransformFunction, gamma, principal_power


class ParseError(ValueError):
    def __init__(self, offset: int, expected: set[str], found: str):
        self.offset = offset
        self.expected = frozenset(expected)
        self.found = found
        exp = ", ".join(sorted(f"'{e}'" if len(e) == 1 else e for e in self.expected))
        super().__init__(f"syntax error at offset {offset}: expected {exp}; found {found}")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: float


@dataclass(frozen=True)
class Exp:
    arg: "Node"


Node = Union[Const, Var, BinOp, Neg, Pow, Exp]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


@dataclass
class _Tok:
    kind: str  # "num", "name", "op", "end"
    text: str
    offset: int


def _byte_offset(text: str, idx: int) -> int:
    return len(text[:idx].encode("utf-8"))


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    i = 0
    n = len(text)
    while True:
        while i < n and text[i].isspace():
            i += 1
        if i >= n:
            toks.append(_Tok("end", "", _byte_offset(text, n)))
            return toks
        m = _TOKEN.match(text, i)
        if m is None or m.end() == i:
            raise ParseError(_byte_offset(text, i), {"number", "variable", "'('", "exp"}, repr(text[i]))
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(_Tok(kind, m.group(kind), _byte_offset(text, start)))
        i = m.end()


class _Parser:
    def __init__(self, text: str, variable: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.variable = variable

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _fail(self, expected: set[str]):
        t = self.tok
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ParseError(t.offset, expected, found)

    def _accept(self, op: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == op:
            self.i += 1
            return True
        return False

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            self._fail({"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self._accept("-"):
            return Neg(self.factor())
        node = self.base()
        if self._accept("^"):
            node = Pow(node, self.signed_number())
        return node

    def signed_number(self) -> float:
        sign = 1.0
        if self._accept("-"):
            sign = -1.0
        elif self._accept("+"):
            pass
        if self.tok.kind != "num":
            self._fail({"number"})
        return sign * self._number()

    def _number(self) -> float:
        t = self.tok
        value = float(t.text)
        if not math.isfinite(value):
            raise ParseError(t.offset, {"finite number"}, repr(t.text))
        self.i += 1
        return value

    def base(self) -> Node:
        t = self.tok
        if t.kind == "num":
            return Const(self._number())
        if t.kind == "name":
            if t.text == "exp":
                self.i += 1
                if not self._accept("("):
                    self._fail({"("})
                arg = self.expr()
                if not self._accept(")"):
                    self._fail({")"})
                return Exp(arg)
            if t.text == self.variable:
                self.i += 1
                return Var(t.text)
            raise ParseError(t.offset, {"number", self.variable, "exp", "("}, repr(t.text))
        if self._accept("("):
            node = self.expr()
            if not self._accept(")"):
                self._fail({")"})
            return node
        self._fail({"number", self.variable, "exp", "("})


def parse_expr(text: str, variable_name: str = "p") -> Node:
    if not text or not text.strip():
        raise ParseError(0, {"number", variable_name, "exp", "("}, "end of input")
    return _Parser(text, variable_name).parse()


def to_text(node: Node) -> str:
    """Print ``node`` so that parsing the result gives back the same tree."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, Exp):
        return f"exp({to_text(node.arg)})"
    if isinstance(node, Pow):
        base = to_text(node.base)
        if isinstance(node.base, Pow) or (isinstance(node.base, Const) and "e" in base):
            base = f"({base})"
        return f"{base}^{float(node.exponent)!r}"
    raise TypeError(f"not an expression node: {node!r}")


def _power(base: np.ndarray, e: float) -> np.ndarray:
    if e == int(e) and abs(e) <= 64:
        return base ** int(e)
    zero = base == 0
    if not np.any(zero):
        return principal_power(base, e)
    out = np.empty(base.shape, dtype=complex)
    out[~zero] = principal_power(base[~zero], e)
    out[zero] = 0.0 if e > 0 else complex(math.nan, math.nan)
    return out


def evaluate(node: Node, value) -> np.ndarray:
    """Evaluate at a scalar or array of the variable (complex arithmetic)."""
    x = np.asarray(value, dtype=complex)
    with np.errstate(all="ignore"):
        out = _eval(node, x)
    return np.broadcast_to(out, x.shape).astype(complex) if np.ndim(out) < x.ndim else out


def _eval(node: Node, x: np.ndarray):
    if isinstance(node, Const):
        return np.complex128(node.value)
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_eval(node.operand, x)
    if isinstance(node, Exp):
        return np.exp(_eval(node.arg, x))
    if isinstance(node, Pow):
        return _power(np.asarray(_eval(node.base, x), dtype=complex), node.exponent)
    if isinstance(node, BinOp):
        a = _eval(node.left, x)
        b = _eval(node.right, x)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    raise TypeError(f"not an expression node: {node!r}")


def transform_function(text: str) -> TransformFunction:
    node = parse_expr(text, "p")
    return TransformFunction(lambda p: evaluate(node, p), label=text)


def time_function(text: str):
    node = parse_expr(text, "t")

    def f(t):
        return evaluate(node, np.asarray(t, dtype=float))

    f.text = text
    return f


# --- closed-form transforms of exponential polynomials -------------------
#
# A term (c, k, a) stands for c * t**k * exp(-a*t). Sums of such terms are
# closed under +, -, * and under exp() of a linear argument.

class NotQuasiPolynomial(ValueError):
    pass


_Term = tuple[complex, float, complex]


def _merge(terms: list[_Term]) -> list[_Term]:
    acc: dict[tuple[float, complex], complex] = {}
    for c, k, a in terms:
        acc[(k, a)] = acc.get((k, a), 0) + c
    return [(c, k, a) for (k, a), c in acc.items() if c != 0]


def _constant(terms: list[_Term]) -> Optional[complex]:
    if not terms:
        return 0j
    if len(terms) == 1 and terms[0][1] == 0 and terms[0][2] == 0:
        return terms[0][0]
    return None


def quasi_terms(node: Node) -> list[_Term]:
    if isinstance(node, Const):
        return _merge([(complex(node.value), 0.0, 0j)])
    if isinstance(node, Var):
        return [(1 + 0j, 1.0, 0j)]
    if isinstance(node, Neg):
        return [(-c, k, a) for c, k, a in quasi_terms(node.operand)]
    if isinstance(node, BinOp):
        L, R = quasi_terms(node.left), quasi_terms(node.right)
        if node.op == "+":
            return _merge(L + R)
        if node.op == "-":
            return _merge(L + [(-c, k, a) for c, k, a in R])
        if node.op == "*":
            return _merge([(c1 * c2, k1 + k2, a1 + a2) for c1, k1, a1 in L for c2, k2, a2 in R])
        d = _constant(R)
        if d is None or d == 0:
            raise NotQuasiPolynomial("division by a non-constant")
        return [(c / d, k, a) for c, k, a in L]
    if isinstance(node, Pow):
        B = quasi_terms(node.base)
        e = node.exponent
        if len(B) == 1:
            c, k, a = B[0]
            if e == int(e) or (c.imag == 0 and c.real > 0):
                return [(c ** e, k * e, a * e)]
        if e == int(e) and 0 <= e <= 16:
            out = [(1 + 0j, 0.0, 0j)]
            for _ in range(int(e)):
                out = _merge([(c1 * c2, k1 + k2, a1 + a2) for c1, k1, a1 in out for c2, k2, a2 in B])
            return out
        raise NotQuasiPolynomial("unsupported power")
    if isinstance(node, Exp):
        A = quasi_terms(node.arg)
        const = 0j
        rate = 0j
        for c, k, a in A:
            if a != 0 or k not in (0.0, 1.0):
                raise NotQuasiPolynomial("exp() of a non-linear argument")
            if k == 0:
                const += c
            else:
                rate += c
        return [(np.exp(const), 0.0, -rate)]
    raise TypeError(f"not an expression node: {node!r}")


def laplace_of_terms(terms: list[_Term]) -> TransformFunction:
    for _, k, _ in terms:
        if k <= -1:
            raise NotQuasiPolynomial("t**k with k <= -1 has no Laplace transform")

    def F(p):
        p = np.asarray(p, dtype=complex)
        out = np.zeros(p.shape, dtype=complex)
        for c, k, a in terms:
            z = p + a
            if k == int(k):
                out = out + c * math.factorial(int(k)) / z ** (int(k) + 1)
            else:
                out = out + c * gamma(k + 1) * _power(z, -(k + 1))
        return out

    return TransformFunction(F, label="L[f]")


def tail_of_terms(terms: list[_Term]) -> Optional[TailBound]:
    """Exponential envelope M*exp(-g*t) for a decaying exponential polynomial."""
    if not terms:
        return TailBound.exponential(0.0, 1.0)
    if any(k < 0 for _, k, _ in terms):
        return None
    rates = [a.real for _, _, a in terms]
    if min(rates) <= 0:
        return None
    g = 0.5 * min(rates)
    M = 0.0
    for c, k, a in terms:
        d = a.real - g
        M += abs(c) * ((k / (d * math.e)) ** k if k > 0 else 1.0)
    return TailBound.exponential(M, g)


def tail_from_text(text: str) -> TailBound:
    """Parse a tail declaration such as ``2*exp(-0.5*t)`` or ``3*t^-1.5``."""
    terms = quasi_terms(parse_expr(text, "t"))
    if len(terms) != 1:
        raise ValueError("tail must be a single term M*exp(-g*t) or M*t^-rho")
    c, k, a = terms[0]
    if c.imag != 0 or c.real <= 0 or a.imag != 0:
        raise ValueError("tail constant must be positive and real")
    if k == 0:
        return TailBound.exponential(c.real, a.real)
    if k < 0 and a == 0:
        return TailBound.power(c.real, -k)
    raise ValueError("tail must be M*exp(-g*t) or M*t^-rho")
