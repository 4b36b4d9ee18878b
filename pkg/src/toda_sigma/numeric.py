"""Exact rationals, dyadic interval enclosures and radical expression trees.

Values are built from rational leaves with ``+ - * /`` and square roots.
Rational inputs stay rational (``fractions.Fraction``) as long as possible;
everything else is kept as an expression DAG together with a certified
enclosure whose endpoints are dyadic rationals.  Enclosures are evaluated in
absolute fixed point: at working precision ``w`` every endpoint is an integer
multiple of ``2**-w`` and every rounding goes outward.

Comparison is certified whenever it answers LT or GT.  Deciding equality of
two different radical expressions would need algebraic-number machinery, so
:func:`real_cmp` falls back to EQ once the difference is confined to
``[-tau, tau]`` at the maximum precision without its sign being decided.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import AmbiguousSign, DivisionByZero, NegativeRadicand

Rational = Fraction

DEFAULT_PRECISION = 64
MAX_PRECISION = 256
TAU_EQ = Fraction(1, 2**80)

# extra bits carried below the requested precision
_GUARD = 16
# refine() guarantees width <= 2**(-precision + _SLACK)
_SLACK = 4
# refine() stops escalating working precision at this multiple of the request
_ESCALATION_LIMIT = 16


class _Unresolved(Exception):
    """A divisor enclosure contained zero at the current working precision."""


def as_rational(x) -> Fraction:
    """Convert ``x`` to a :class:`Fraction` without rounding.

    Accepts ints, Fractions, floats (their exact binary value) and strings
    of the form ``"p/q"`` or terminating decimals such as ``"0.3"``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        if s.lower() in {"nan", "inf", "-inf", "+inf", "infinity", "-infinity"}:
            raise ValueError(f"non-finite value {x!r}")
        try:
            return Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse {x!r} as an exact rational") from exc
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def _floor_div(a: int, b: int) -> int:
    return a // b


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _rational_bounds(q: Fraction, w: int) -> tuple[int, int]:
    num = q.numerator << w if w >= 0 else q.numerator
    den = q.denominator if w >= 0 else q.denominator << (-w)
    return _floor_div(num, den), _ceil_div(num, den)


def _is_perfect_square(q: Fraction) -> bool:
    if q < 0:
        return False
    p, d = q.numerator, q.denominator
    return math.isqrt(p) ** 2 == p and math.isqrt(d) ** 2 == d


def _rational_sqrt(q: Fraction) -> Fraction:
    return Fraction(math.isqrt(q.numerator), math.isqrt(q.denominator))


def _split_square(n: int, trial_limit: int = 1000) -> tuple[int, int]:
    """Write ``n = k**2 * m`` pulling out square factors of primes below ``trial_limit``."""
    k, m = 1, n
    p = 2
    while p < trial_limit and p * p <= m:
        while m % (p * p) == 0:
            m //= p * p
            k *= p
        p += 1 if p == 2 else 2
    r = math.isqrt(m)
    if r * r == m:
        return k * r, 1
    return k, m


@dataclass(frozen=True)
class DyadicInterval:
    """Closed interval ``[lo * 2**exp, hi * 2**exp]`` with integer mantissas."""

    lo: int
    hi: int
    exp: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("empty interval: lo > hi")

    @classmethod
    def around(cls, q: Fraction, precision: int) -> DyadicInterval:
        lo, hi = _rational_bounds(as_rational(q), precision)
        return cls(lo, hi, -precision)

    @property
    def precision(self) -> int:
        return -self.exp

    @property
    def lower(self) -> Fraction:
        return Fraction(self.lo) * Fraction(2) ** self.exp

    @property
    def upper(self) -> Fraction:
        return Fraction(self.hi) * Fraction(2) ** self.exp

    @property
    def width(self) -> Fraction:
        return Fraction(self.hi - self.lo) * Fraction(2) ** self.exp

    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, x) -> bool:
        x = as_rational(x)
        return self.lower <= x <= self.upper

    __contains__ = contains

    def issubset(self, other: DyadicInterval) -> bool:
        return other.lower <= self.lower and self.upper <= other.upper

    def sign(self) -> int | None:
        """+1 / -1 when the interval excludes zero, 0 for the point {0}, else None."""
        if self.lo > 0:
            return 1
        if self.hi < 0:
            return -1
        if self.lo == self.hi == 0:
            return 0
        return None

    def _rescaled(self, exp: int) -> tuple[int, int]:
        shift = self.exp - exp
        if shift >= 0:
            return self.lo << shift, self.hi << shift
        return self.lo >> (-shift), -((-self.hi) >> (-shift))

    def intersect(self, other: DyadicInterval) -> DyadicInterval:
        exp = min(self.exp, other.exp)
        a_lo, a_hi = self._rescaled(exp)
        b_lo, b_hi = other._rescaled(exp)
        lo, hi = max(a_lo, b_lo), min(a_hi, b_hi)
        if lo > hi:
            raise ValueError("disjoint enclosures: soundness violated")
        return DyadicInterval(lo, hi, exp)

    def midpoint(self) -> float:
        return float((self.lower + self.upper) / 2)

    def __repr__(self):
        return f"DyadicInterval([{float(self.lower)!r}, {float(self.upper)!r}], precision={self.precision})"


class Cmp(enum.IntEnum):
    LT = -1
    EQ = 0
    GT = 1


Number = Union["RealScalar", Fraction, int, float, str]


class RealScalar:
    """Exact rational or radical expression with a certified dyadic enclosure.

    Instances are immutable.  ``exact`` holds the value when it is known to
    be rational; ``enclosure`` always contains the true value.
    """

    __slots__ = ("_op", "_args", "exact", "enclosure", "_memo")

    def __init__(self, op, args, exact=None, enclosure=None, _memo=None):
        self._op = op
        self._args = args
        self.exact = exact
        self._memo = {} if _memo is None else _memo
        if enclosure is None:
            if exact is not None:
                enclosure = DyadicInterval.around(exact, DEFAULT_PRECISION)
            else:
                enclosure = _tight_enclosure(self, DEFAULT_PRECISION)
        self.enclosure = enclosure

    # -- construction -------------------------------------------------
    @classmethod
    def rational(cls, q) -> RealScalar:
        q = as_rational(q)
        return cls("q", (q,), exact=q)

    @property
    def op(self) -> str:
        return self._op

    @property
    def args(self) -> tuple:
        return self._args

    def is_rational(self) -> bool:
        return self.exact is not None

    # -- interval evaluation ------------------------------------------
    def _bounds(self, w: int) -> tuple[int, int]:
        hit = self._memo.get(w)
        if hit is not None:
            return hit
        if self.exact is not None:
            res = _rational_bounds(self.exact, w)
        else:
            res = _EVAL[self._op](self, w)
        self._memo[w] = res
        return res

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        return real_arith("add", self, other)

    def __radd__(self, other):
        return real_arith("add", other, self)

    def __sub__(self, other):
        return real_arith("sub", self, other)

    def __rsub__(self, other):
        return real_arith("sub", other, self)

    def __mul__(self, other):
        return real_arith("mul", self, other)

    def __rmul__(self, other):
        return real_arith("mul", other, self)

    def __truediv__(self, other):
        return real_arith("div", self, other)

    def __rtruediv__(self, other):
        return real_arith("div", other, self)

    def __neg__(self):
        if self.exact is not None:
            return RealScalar.rational(-self.exact)
        return RealScalar("neg", (self,))

    def __pos__(self):
        return self

    def __float__(self):
        if self.exact is not None:
            return float(self.exact)
        return self.enclosure.midpoint()

    # -- printing -----------------------------------------------------
    def __str__(self):
        return _infix(self)[0]

    def __repr__(self):
        if self.exact is not None:
            return f"RealScalar({self.exact})"
        return f"RealScalar({_infix(self)[0]!r} ~ {float(self)!r})"

    def to_prefix(self) -> str:
        """Expression in the prefix mini-language, e.g. ``(sub 5 (sqrt 13))``."""
        if self._op == "q":
            return _fmt_rational(self._args[0])
        inner = " ".join(a.to_prefix() for a in self._args)
        return f"({self._op} {inner})"

    def to_decimal(self, digits: int = 30) -> str:
        """Decimal string correct to ``digits`` significant digits (up to final rounding)."""
        if self.exact is not None:
            return _format_decimal(self.exact, digits)
        mag = max(0, math.ceil(abs(float(self))).bit_length())
        r = refine(self, int(digits * 3.33) + 24 + mag)
        return _format_decimal((r.enclosure.lower + r.enclosure.upper) / 2, digits)

    def to_json(self) -> dict:
        return {
            "expr": self.to_prefix(),
            "decimal": self.to_decimal(30),
            "exact": None if self.exact is None else _fmt_rational(self.exact),
        }

    @classmethod
    def from_json(cls, obj: dict) -> RealScalar:
        return parse_prefix(obj["expr"])


def real(x: Number) -> RealScalar:
    """Coerce ints, Fractions, floats, strings or RealScalars to a RealScalar."""
    if isinstance(x, RealScalar):
        return x
    return RealScalar.rational(x)


# -- node evaluators (fixed point, outward rounding) -----------------------

def _eval_add(node, w):
    a, b = node._args
    al, ah = a._bounds(w)
    bl, bh = b._bounds(w)
    return al + bl, ah + bh


def _eval_sub(node, w):
    a, b = node._args
    al, ah = a._bounds(w)
    bl, bh = b._bounds(w)
    return al - bh, ah - bl


def _eval_neg(node, w):
    lo, hi = node._args[0]._bounds(w)
    return -hi, -lo


def _eval_mul(node, w):
    a, b = node._args
    al, ah = a._bounds(w)
    bl, bh = b._bounds(w)
    prods = (al * bl, al * bh, ah * bl, ah * bh)
    return min(prods) >> w, -((-max(prods)) >> w)


def _eval_div(node, w):
    a, b = node._args
    al, ah = a._bounds(w)
    bl, bh = b._bounds(w)
    if bl <= 0 <= bh:
        raise _Unresolved
    cands = []
    for x in (al, ah):
        for y in (bl, bh):
            cands.append((x << w, y))
    lo = min(_floor_div(x, y) for x, y in cands)
    hi = max(_ceil_div(x, y) for x, y in cands)
    return lo, hi


def _eval_sqrt(node, w):
    lo, hi = node._args[0]._bounds(w)
    if hi < 0:
        # construction certified the radicand nonnegative
        raise AssertionError("radicand enclosure entirely negative")
    lo = max(lo, 0)
    s_lo = math.isqrt(lo << w)
    t = hi << w
    s_hi = math.isqrt(t)
    if s_hi * s_hi != t:
        s_hi += 1
    return s_lo, s_hi


_EVAL = {
    "add": _eval_add,
    "sub": _eval_sub,
    "neg": _eval_neg,
    "mul": _eval_mul,
    "div": _eval_div,
    "sqrt": _eval_sqrt,
}


def _tight_enclosure(x: RealScalar, precision: int) -> DyadicInterval:
    """Enclosure of width <= 2**(-precision + _SLACK), escalating the working precision."""
    w = precision + _GUARD
    limit = _ESCALATION_LIMIT * precision + 256
    target_shift = _SLACK - precision
    while True:
        try:
            lo, hi = x._bounds(w)
        except _Unresolved:
            lo = hi = None
        if lo is not None and (hi - lo) <= (1 << max(w + target_shift, 0)):
            return DyadicInterval(lo, hi, -w)
        if w >= limit:
            if lo is None:
                raise AmbiguousSign("divisor sign undecidable at maximum working precision")
            return DyadicInterval(lo, hi, -w)
        w = min(2 * w, limit)


def _certified_sign(x: RealScalar, max_precision: int = MAX_PRECISION) -> int | None:
    """Sign of ``x`` if it can be certified, else None."""
    if x.exact is not None:
        return (x.exact > 0) - (x.exact < 0)
    s = x.enclosure.sign()
    if s:
        return s
    p = DEFAULT_PRECISION
    while True:
        try:
            lo, hi = x._bounds(p + _GUARD)
        except _Unresolved:
            lo, hi = -1, 1
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        if p >= max_precision:
            return None
        p = min(2 * p, max_precision)


# -- public operations ------------------------------------------------------

def real_arith(op: str, a: Number, b: Number) -> RealScalar:
    """Combine two values with ``op`` in {add, sub, mul, div}.

    Two exact rationals give an exact rational.  Division requires the
    divisor to be certified nonzero.
    """
    a, b = real(a), real(b)
    if op not in ("add", "sub", "mul", "div"):
        raise ValueError(f"unknown operation {op!r}")
    if a.exact is not None and b.exact is not None:
        x, y = a.exact, b.exact
        if op == "add":
            return RealScalar.rational(x + y)
        if op == "sub":
            return RealScalar.rational(x - y)
        if op == "mul":
            return RealScalar.rational(x * y)
        if y == 0:
            raise DivisionByZero("division by exact zero")
        return RealScalar.rational(x / y)
    if op == "div":
        s = _certified_sign(b)
        if s == 0:
            raise DivisionByZero("division by exact zero")
        if s is None:
            raise AmbiguousSign(f"cannot certify divisor {b} nonzero")
    if op == "mul" and (a.exact == 0 or b.exact == 0):
        return RealScalar.rational(0)
    if (op == "mul" and b.exact == 1) or (op in ("add", "sub") and b.exact == 0) or (op == "div" and b.exact == 1):
        return a
    if (op == "mul" and a.exact == 1) or (op == "add" and a.exact == 0):
        return b
    return RealScalar(op, (a, b))


def real_sqrt(a: Number, max_precision: int = MAX_PRECISION) -> RealScalar:
    """Square root with certified enclosure; exact for rational perfect squares."""
    a = real(a)
    if a.exact is not None:
        if a.exact < 0:
            raise NegativeRadicand(f"sqrt of negative rational {a.exact}")
        if _is_perfect_square(a.exact):
            return RealScalar.rational(_rational_sqrt(a.exact))
        # sqrt(n/d) = (k/d) * sqrt(m) with n*d = k^2 m
        k, m = _split_square(a.exact.numerator * a.exact.denominator)
        root = RealScalar("sqrt", (RealScalar.rational(m),))
        coeff = Fraction(k, a.exact.denominator)
        if coeff == 1:
            return root
        return RealScalar("mul", (RealScalar.rational(coeff), root))
    s = _certified_sign(a, max_precision)
    if s is None:
        raise AmbiguousSign(f"cannot certify radicand {a} nonnegative")
    if s < 0:
        raise NegativeRadicand(f"radicand {a} is certified negative")
    return RealScalar("sqrt", (a,))


def refine(a: Number, precision: int) -> RealScalar:
    """Same value with an enclosure of width <= 2**(-precision + 4), nested in the old one."""
    a = real(a)
    if a.exact is not None:
        return a
    new = _tight_enclosure(a, precision).intersect(a.enclosure)
    return RealScalar(a._op, a._args, exact=None, enclosure=new, _memo=a._memo)


def real_cmp(a: Number, b: Number, max_precision: int = MAX_PRECISION, tau: Fraction = TAU_EQ) -> Cmp:
    """Compare two values.

    LT and GT are certified.  EQ means the difference could not be separated
    from zero up to ``max_precision`` bits; when the difference is not even
    confined to ``[-tau, tau]`` it is still reported as EQ (the fallback
    verdict), since no further information is available.
    """
    a, b = real(a), real(b)
    if a.exact is not None and b.exact is not None:
        return Cmp((a.exact > b.exact) - (a.exact < b.exact))
    # quick separation from the stored enclosures
    if a.enclosure.upper < b.enclosure.lower:
        return Cmp.LT
    if a.enclosure.lower > b.enclosure.upper:
        return Cmp.GT
    diff = RealScalar("sub", (a, b), enclosure=_WIDE)
    s = _certified_sign(diff, max_precision)
    if s is None or s == 0:
        return Cmp.EQ
    return Cmp(s)


def within_tau(a: Number, b: Number, max_precision: int = MAX_PRECISION, tau: Fraction = TAU_EQ) -> bool:
    """True when |a - b| is enclosed in [-tau, tau] at ``max_precision``."""
    a, b = real(a), real(b)
    if a.exact is not None and b.exact is not None:
        return abs(a.exact - b.exact) <= tau
    diff = RealScalar("sub", (a, b), enclosure=_WIDE)
    try:
        lo, hi = diff._bounds(max_precision + _GUARD)
    except _Unresolved:
        return False
    scale = Fraction(1, 1 << (max_precision + _GUARD))
    return -tau <= lo * scale and hi * scale <= tau


# placeholder enclosure for transient nodes whose stored enclosure is never read
_WIDE = DyadicInterval(-1, 1, 4096)


# -- printing and parsing ----------------------------------------------------

def _fmt_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3}
_SYM = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def _infix(x: RealScalar) -> tuple[str, int]:
    if x._op == "q":
        q = x._args[0]
        text = _fmt_rational(q)
        if q.denominator != 1:
            return text, 2
        return text, 3 if q < 0 else 4
    if x._op == "sqrt":
        return f"sqrt({_infix(x._args[0])[0]})", 4
    if x._op == "neg":
        s, p = _infix(x._args[0])
        return ("-" + (s if p >= 3 else f"({s})")), 3
    a, b = x._args
    prec = _PREC[x._op]
    sa, pa = _infix(a)
    sb, pb = _infix(b)
    if pa < prec:
        sa = f"({sa})"
    # right operand of a non-associative op needs parentheses at equal precedence
    if pb < prec or (pb == prec and x._op in ("sub", "div")) or pb == 3:
        sb = f"({sb})"
    sep = f" {_SYM[x._op]} " if prec == 1 else _SYM[x._op]
    return f"{sa}{sep}{sb}", prec


def _format_decimal(q: Fraction, digits: int) -> str:
    if q == 0:
        return "0"
    sign = "-" if q < 0 else ""
    q = abs(q)
    # exponent e with 10**e <= q < 10**(e+1)
    e = len(str(q.numerator)) - len(str(q.denominator))
    if Fraction(10) ** e > q:
        e -= 1
    elif Fraction(10) ** (e + 1) <= q:
        e += 1
    scaled = q * Fraction(10) ** (digits - 1 - e)
    n = math.floor(scaled + Fraction(1, 2))
    if n >= 10**digits:
        n //= 10
        e += 1
    s = str(n).rjust(digits, "0")
    if e >= 0:
        if e + 1 >= digits:
            int_part, frac_part = s + "0" * (e + 1 - digits), ""
        else:
            int_part, frac_part = s[: e + 1], s[e + 1:]
    else:
        int_part, frac_part = "0", "0" * (-e - 1) + s
    frac_part = frac_part.rstrip("0")
    return sign + int_part + ("." + frac_part if frac_part else "")


def _tokenize(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def parse_prefix(text: str) -> RealScalar:
    """Parse the prefix mini-language produced by :meth:`RealScalar.to_prefix`."""
    tokens = _tokenize(text)
    pos = 0

    def parse():
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError("unexpected end of expression")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            if pos >= len(tokens):
                raise ValueError("unexpected end of expression")
            op = tokens[pos]
            pos += 1
            args = []
            while pos < len(tokens) and tokens[pos] != ")":
                args.append(parse())
            if pos >= len(tokens):
                raise ValueError("unbalanced parentheses")
            pos += 1
            if op in ("add", "sub", "mul", "div") and len(args) == 2:
                return real_arith(op, args[0], args[1])
            if op == "sqrt" and len(args) == 1:
                return real_sqrt(args[0])
            if op == "neg" and len(args) == 1:
                return -args[0]
            raise ValueError(f"bad operator or arity: {op!r} with {len(args)} arguments")
        if tok == ")":
            raise ValueError("unexpected ')'")
        return RealScalar.rational(as_rational(tok))

    result = parse()
    if pos != len(tokens):
        raise ValueError("trailing tokens in expression")
    return result
