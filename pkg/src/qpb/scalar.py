"""Exact scalars: the field Q(q) of rational functions in one indeterminate.

Constants are plain ``gmpy2.mpq`` values; anything that genuinely depends on
``q`` is a :class:`RatFunc`.  Arithmetic between the two collapses back to
``mpq`` whenever the result is constant, so q-free computations never pay
for polynomial gcds.

Polynomials are tuples of ``mpq`` coefficients, lowest degree first, with no
trailing zeros.  The zero polynomial is ``()``.
"""

from __future__ import annotations

import ast
from fractions import Fraction
from typing import Union

from gmpy2 import mpq

__all__ = [
    "RatFunc",
    "Scalar",
    "PoleError",
    "q",
    "ZERO",
    "ONE",
    "as_scalar",
    "specialize_scalar",
    "scalar_to_wire",
    "scalar_from_wire",
    "format_scalar",
    "is_constant",
    "parse_scalar",
]

ZERO = mpq(0)
ONE = mpq(1)


class PoleError(ZeroDivisionError):
    """Raised when specializing a rational function at one of its poles."""


# -- dense univariate polynomial helpers ------------------------------------

def _trim(p):
    n = len(p)
    while n and not p[n - 1]:
        n -= 1
    return tuple(p[:n])


def _padd(a, b):
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] += c
    return _trim(out)


def _pneg(a):
    return tuple(-c for c in a)


def _pmul(a, b):
    if not a or not b:
        return ()
    out = [ZERO] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim(out)


def _pscale(a, c):
    if not c:
        return ()
    return tuple(x * c for x in a)


def _pdivmod(a, b):
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = list(a)
    lb = b[-1]
    db = len(b) - 1
    if len(a) - 1 < db:
        return (), _trim(a)
    quot = [ZERO] * (len(a) - db)
    for k in range(len(a) - 1, db - 1, -1):
        c = a[k]
        if c:
            f = c / lb
            quot[k - db] = f
            for i, y in enumerate(b):
                a[k - db + i] -= f * y
    return _trim(quot), _trim(a[:db])


def _pmonic(a):
    lc = a[-1]
    if lc == 1:
        return a
    return tuple(c / lc for c in a)


def _pgcd(a, b):
    while b:
        a, b = b, _pdivmod(a, b)[1]
    return _pmonic(a) if a else ()


def _peval(a, x):
    acc = ZERO
    for c in reversed(a):
        acc = acc * x + c
    return acc


_P_ONE = (ONE,)


def _make(num, den):
    """Canonical scalar from a numerator/denominator pair of polynomials."""
    if not num:
        return ZERO
    if not den:
        raise ZeroDivisionError("rational function with zero denominator")
    if len(den) > 1:
        g = _pgcd(num, den)
        if len(g) > 1:
            num = _pdivmod(num, g)[0]
            den = _pdivmod(den, g)[0]
    lc = den[-1]
    if lc != 1:
        num = tuple(c / lc for c in num)
        den = tuple(c / lc for c in den)
    if len(den) == 1 and len(num) == 1:
        return num[0]
    obj = object.__new__(RatFunc)
    obj.num = num
    obj.den = den
    return obj


def _parts(x):
    if isinstance(x, RatFunc):
        return x.num, x.den
    x = mpq(x)
    return ((x,) if x else ()), _P_ONE


class RatFunc:
    """A non-constant element of Q(q) in lowest terms with monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=(1,)):
        obj = _make(_trim(tuple(mpq(c) for c in num)), _trim(tuple(mpq(c) for c in den)))
        if not isinstance(obj, RatFunc):
            raise ValueError("constant value; use mpq instead of RatFunc")
        self.num = obj.num
        self.den = obj.den

    # arithmetic ------------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, (RatFunc, int, Fraction)) and not _is_mpq(other):
            return NotImplemented
        n2, d2 = _parts(other)
        if d2 == self.den:
            return _make(_padd(self.num, n2), self.den)
        return _make(_padd(_pmul(self.num, d2), _pmul(n2, self.den)), _pmul(self.den, d2))

    __radd__ = __add__

    def __neg__(self):
        obj = object.__new__(RatFunc)
        obj.num = _pneg(self.num)
        obj.den = self.den
        return obj

    def __pos__(self):
        return self

    def __sub__(self, other):
        if not isinstance(other, (RatFunc, int, Fraction)) and not _is_mpq(other):
            return NotImplemented
        return self + (-other if isinstance(other, RatFunc) else -mpq(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, (RatFunc, int, Fraction)) and not _is_mpq(other):
            return NotImplemented
        n2, d2 = _parts(other)
        if not n2:
            return ZERO
        return _make(_pmul(self.num, n2), _pmul(self.den, d2))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, (RatFunc, int, Fraction)) and not _is_mpq(other):
            return NotImplemented
        n2, d2 = _parts(other)
        if not n2:
            raise ZeroDivisionError("division by zero scalar")
        return _make(_pmul(self.num, d2), _pmul(self.den, n2))

    def __rtruediv__(self, other):
        n2, d2 = _parts(other)
        return _make(_pmul(n2, self.den), _pmul(d2, self.num))

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return ONE / (self ** (-k))
        out = ONE
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # comparison ------------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, RatFunc):
            return self.num == other.num and self.den == other.den
        return False

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash((self.num, self.den))

    def __bool__(self):
        return True

    def evaluate(self, value):
        value = mpq(value)
        d = _peval(self.den, value)
        if not d:
            raise PoleError(f"pole of {self} at q = {value}")
        return _peval(self.num, value) / d

    def __repr__(self):
        return f"RatFunc({format_scalar(self)})"

    __str__ = lambda self: format_scalar(self)


def _is_mpq(x):
    return type(x) is type(ONE) or type(x) is type(mpq(1).numerator)


#: The deformation parameter as an element of Q(q).
q = _make((ZERO, ONE), _P_ONE)

Scalar = Union[RatFunc, "mpq"]


def as_scalar(x) -> Scalar:
    """Coerce ints, Fractions, strings like ``"3/4"`` and scalars to a Scalar."""
    if isinstance(x, RatFunc):
        return x
    if isinstance(x, str):
        return mpq(Fraction(x))
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


def is_constant(x) -> bool:
    return not isinstance(x, RatFunc)


def specialize_scalar(x, value) -> Scalar:
    """Evaluate at ``q = value``; raises :class:`PoleError` at a pole."""
    if isinstance(x, RatFunc):
        return x.evaluate(value)
    return x


# -- wire format --------------------------------------------------------------

def _poly_to_wire(p):
    return [[int(c.numerator), int(c.denominator), k] for k, c in enumerate(p) if c]


def _poly_from_wire(items):
    if not items:
        return ()
    deg = max(k for _, _, k in items)
    out = [ZERO] * (deg + 1)
    for n, d, k in items:
        out[k] += mpq(n, d)
    return _trim(out)


def scalar_to_wire(x) -> dict:
    num, den = _parts(x)
    return {"num": _poly_to_wire(num), "den": _poly_to_wire(den)}


def scalar_from_wire(obj) -> Scalar:
    if isinstance(obj, (int, str)):
        return as_scalar(obj)
    num = _poly_from_wire(obj["num"])
    den = _poly_from_wire(obj["den"])
    if not den:
        raise ValueError("zero denominator in scalar wire data")
    return _make(num, den)


# -- printing -------------------------------------------------------------------

def _fmt_poly(p):
    terms = []
    for k in range(len(p) - 1, -1, -1):
        c = p[k]
        if not c:
            continue
        if k == 0:
            mono = str(c)
        else:
            mono = "q" if k == 1 else f"q^{k}"
            if c == -1:
                mono = "-" + mono
            elif c != 1:
                mono = f"{c}*{mono}"
        terms.append(mono)
    s = " + ".join(terms).replace("+ -", "- ")
    return s or "0"


def format_scalar(x) -> str:
    if isinstance(x, RatFunc):
        n = _fmt_poly(x.num)
        if x.den == _P_ONE:
            return n
        return f"({n})/({_fmt_poly(x.den)})"
    return str(x)


# -- parsing ----------------------------------------------------------------------

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, int):
        return mpq(node.value)
    if isinstance(node, ast.Name) and node.id == "q":
        return q
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_node(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            exp = _eval_node(node.right)
            if isinstance(exp, RatFunc) or exp.denominator != 1:
                raise ValueError("exponent must be an integer")
            base = _eval_node(node.left)
            k = int(exp)
            if isinstance(base, RatFunc):
                return base ** k
            return base ** k if k >= 0 else ONE / base ** (-k)
        op = _BINOPS.get(type(node.op))
        if op is not None:
            return op(_eval_node(node.left), _eval_node(node.right))
    raise ValueError(f"unsupported scalar expression: {ast.dump(node)}")


def parse_scalar(text) -> Scalar:
    """Parse ``"-q^2"``, ``"1/(q-1)"``, ``"3/4"`` and friends into a Scalar.

    Accepts JSON numbers and the wire-format dict as well.
    """
    if isinstance(text, dict):
        return scalar_from_wire(text)
    if not isinstance(text, str):
        return as_scalar(text)
    src = text.replace("^", "**")
    return _eval_node(ast.parse(src, mode="eval"))
