"""Exact rational intervals and outward-rounded transcendental enclosures.

Endpoints are ``fractions.Fraction``; ``None`` stands for an infinite
endpoint.  The whole line ``(-inf, +inf)`` is the bottom element.  Order of
information is reverse inclusion.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import isqrt
from typing import Optional, Union

Rational = Union[int, Fraction]

# Extra grid bits on top of the accuracy index for transcendental outputs.
GRID_SLACK = 8


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, float):
        return Fraction(x)
    return Fraction(x)


def parse_rational(text: str) -> Fraction:
    """Parse ``"p/q"``, an integer, or an exact decimal like ``"0.25"``."""
    return Fraction(text.strip())


def format_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True, order=False)
class RationalInterval:
    lo: Optional[Fraction]
    hi: Optional[Fraction]

    def __post_init__(self):
        if self.lo is not None and not isinstance(self.lo, Fraction):
            object.__setattr__(self, "lo", _frac(self.lo))
        if self.hi is not None and not isinstance(self.hi, Fraction):
            object.__setattr__(self, "hi", _frac(self.hi))
        if self.lo is not None and self.hi is not None and self.lo > self.hi:
            raise ValueError(f"interval endpoints out of order: [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: Rational) -> "RationalInterval":
        x = _frac(x)
        return cls(x, x)

    @property
    def is_bottom(self) -> bool:
        return self.lo is None and self.hi is None

    @property
    def is_finite(self) -> bool:
        return self.lo is not None and self.hi is not None

    @property
    def width(self) -> Optional[Fraction]:
        if not self.is_finite:
            return None
        return self.hi - self.lo

    @property
    def midpoint(self) -> Optional[Fraction]:
        if not self.is_finite:
            return None
        return (self.lo + self.hi) / 2

    def contains_point(self, x: Rational) -> bool:
        return (self.lo is None or self.lo <= x) and (self.hi is None or x <= self.hi)

    def contains(self, other: "RationalInterval") -> bool:
        """Set inclusion ``other ⊆ self``."""
        lo_ok = self.lo is None or (other.lo is not None and self.lo <= other.lo)
        hi_ok = self.hi is None or (other.hi is not None and other.hi <= self.hi)
        return lo_ok and hi_ok

    def refines(self, other: "RationalInterval") -> bool:
        """Information order: ``other ⊑ self``, i.e. self is inside other."""
        return other.contains(self)

    def sort_key(self):
        lo = (0, 0) if self.lo is None else (1, self.lo)
        hi = (1, 0) if self.hi is None else (0, self.hi)
        return (lo, hi)

    def to_json(self):
        if self.is_bottom:
            return None
        return [None if self.lo is None else format_rational(self.lo),
                None if self.hi is None else format_rational(self.hi)]

    @classmethod
    def from_json(cls, data) -> "RationalInterval":
        if data is None:
            return BOTTOM
        lo, hi = data
        return cls(None if lo is None else parse_rational(lo),
                   None if hi is None else parse_rational(hi))

    def __str__(self):
        if self.is_bottom:
            return "⊥"
        lo = "-inf" if self.lo is None else str(self.lo)
        hi = "+inf" if self.hi is None else str(self.hi)
        return f"[{lo}, {hi}]"


BOTTOM = RationalInterval(None, None)
UNIT_INTERVAL = RationalInterval(Fraction(0), Fraction(1))
PR_RANGE = RationalInterval(Fraction(-1), Fraction(1))


def interval(lo: Rational, hi: Rational) -> RationalInterval:
    return RationalInterval(_frac(lo), _frac(hi))


def _is_zero_point(a: RationalInterval) -> bool:
    return a.lo == 0 and a.hi == 0


def arith_binop(op: str, a: RationalInterval, b: RationalInterval) -> RationalInterval:
    """Exact hull of ``{x op y}`` for op in add, sub, mul."""
    if op == "mul" and (_is_zero_point(a) or _is_zero_point(b)):
        return RationalInterval(Fraction(0), Fraction(0))
    if not (a.is_finite and b.is_finite):
        return BOTTOM
    if op == "add":
        return RationalInterval(a.lo + b.lo, a.hi + b.hi)
    if op == "sub":
        return RationalInterval(a.lo - b.hi, a.hi - b.lo)
    if op == "mul":
        return _mul_finite(a.lo, a.hi, b.lo, b.hi)
    raise ValueError(f"unknown operation {op!r}")


def _mul_finite(al, ah, bl, bh) -> RationalInterval:
    # sign cases pick the two extreme endpoint products; mixed-by-mixed needs four
    if al >= 0:
        if bl >= 0:
            return RationalInterval(al * bl, ah * bh)
        if bh <= 0:
            return RationalInterval(ah * bl, al * bh)
        return RationalInterval(ah * bl, ah * bh)
    if ah <= 0:
        if bl >= 0:
            return RationalInterval(al * bh, ah * bl)
        if bh <= 0:
            return RationalInterval(ah * bh, al * bl)
        return RationalInterval(al * bh, al * bl)
    if bl >= 0:
        return RationalInterval(al * bh, ah * bh)
    if bh <= 0:
        return RationalInterval(ah * bl, al * bl)
    return RationalInterval(min(al * bh, ah * bl), max(al * bl, ah * bh))


def add(a, b):
    return arith_binop("add", a, b)


def sub(a, b):
    return arith_binop("sub", a, b)


def mul(a, b):
    return arith_binop("mul", a, b)


def sqr(a: RationalInterval) -> RationalInterval:
    """Tight square: the hull of x*x, never negative."""
    if not a.is_finite:
        return BOTTOM
    lo2, hi2 = a.lo * a.lo, a.hi * a.hi
    if a.lo <= 0 <= a.hi:
        return RationalInterval(Fraction(0), max(lo2, hi2))
    return RationalInterval(min(lo2, hi2), max(lo2, hi2))


def div(a: RationalInterval, b: RationalInterval) -> RationalInterval:
    if not (a.is_finite and b.is_finite) or b.lo <= 0 <= b.hi:
        return BOTTOM
    qs = (a.lo / b.lo, a.lo / b.hi, a.hi / b.lo, a.hi / b.hi)
    return RationalInterval(min(qs), max(qs))


def hull(a: RationalInterval, b: RationalInterval) -> RationalInterval:
    lo = None if a.lo is None or b.lo is None else min(a.lo, b.lo)
    hi = None if a.hi is None or b.hi is None else max(a.hi, b.hi)
    return RationalInterval(lo, hi)


def imin(a: RationalInterval, b: RationalInterval) -> RationalInterval:
    if not (a.is_finite and b.is_finite):
        return BOTTOM
    return RationalInterval(min(a.lo, b.lo), min(a.hi, b.hi))


def imax(a: RationalInterval, b: RationalInterval) -> RationalInterval:
    if not (a.is_finite and b.is_finite):
        return BOTTOM
    return RationalInterval(max(a.lo, b.lo), max(a.hi, b.hi))


def pr_project(n: int, a: Optional[RationalInterval] = None) -> RationalInterval:
    """Projection onto [-1, 1] at precision ``n``; ``a`` is ignored at n = 0."""
    if n <= 0:
        return PR_RANGE
    if a is None:
        raise ValueError("pr_project at positive precision needs an argument")
    if a.hi is not None and a.hi <= -1:
        return RationalInterval(Fraction(-1), Fraction(-1))
    if a.lo is not None and a.lo >= 1:
        return RationalInterval(Fraction(1), Fraction(1))
    lo = Fraction(-1) if a.lo is None else max(a.lo, Fraction(-1))
    hi = Fraction(1) if a.hi is None else min(a.hi, Fraction(1))
    return RationalInterval(lo, hi)


class Sign(Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"


def cmp_zero(a: RationalInterval) -> Sign:
    if a.lo is not None and a.lo > 0:
        return Sign.TRUE
    if a.hi is not None and a.hi < 0:
        return Sign.FALSE
    return Sign.UNKNOWN


# -- fixed-point kernels ----------------------------------------------------
#
# Each ``_fx_*`` helper returns (A, E) with the true value inside
# [(A - E) / 2**W, (A + E) / 2**W].  Errors are counted in units of 2**-W and
# bounded generously.

_PI_CACHE: dict[int, tuple[int, int]] = {}
_LN2_CACHE: dict[int, tuple[int, int]] = {}


def _fx_atan_inv(m: int, W: int) -> tuple[int, int]:
    """atan(1/m) for integer m >= 2."""
    one = 1 << W
    total = 0
    power = one // m          # 1/m^(2i+1), truncated
    m2 = m * m
    i = 0
    terms = 0
    while power:
        term = power // (2 * i + 1)
        total = total - term if i % 2 else total + term
        power //= m2
        i += 1
        terms += 1
    # each term: truncation of power (accumulated <= i) plus division;
    # alternating tail below the first dropped term (< 1 ulp)
    return total, 3 * terms + 4


def _fx_pi(W: int) -> tuple[int, int]:
    hit = _PI_CACHE.get(W)
    if hit is not None:
        return hit
    G = W + 8
    a, ea = _fx_atan_inv(5, G)
    b, eb = _fx_atan_inv(239, G)
    val = 16 * a - 4 * b
    err = 16 * ea + 4 * eb
    res = (val >> 8, (err >> 8) + 2)
    _PI_CACHE[W] = res
    return res


def _fx_atanh_series(z_num: int, z_den: int, W: int) -> tuple[int, int]:
    """2*atanh(z) for rational 0 <= z <= 1/3, via the odd power series."""
    power = (z_num << W) // z_den  # z
    z2_num, z2_den = z_num * z_num, z_den * z_den
    total = 0
    i = 0
    while power:
        total += power // (2 * i + 1)
        power = power * z2_num // z2_den
        i += 1
    # each power carries < 1.2 ulp, each term < 2.2 ulp; the tail is < 1.4 ulp
    return 2 * total, 5 * i + 8


def _fx_ln2(W: int) -> tuple[int, int]:
    hit = _LN2_CACHE.get(W)
    if hit is not None:
        return hit
    G = W + 8
    v, e = _fx_atanh_series(1, 3, G)
    res = (v >> 8, (e >> 8) + 2)
    _LN2_CACHE[W] = res
    return res


def _fx_ln(x: Fraction, W: int) -> tuple[int, int]:
    p, q = x.numerator, x.denominator
    e = p.bit_length() - q.bit_length()
    # m = x / 2**e lies in [1/2, 2); push it into [1, 2)
    if e >= 0:
        mp, mq = p, q << e
    else:
        mp, mq = p << (-e), q
    if mp < mq:
        mp <<= 1
        e -= 1
    # ln m = 2 atanh((m-1)/(m+1)), with (m-1)/(m+1) in [0, 1/3)
    G = W + 8
    v, err = _fx_atanh_series(mp - mq, mp + mq, G)
    l2, el2 = _fx_ln2(G)
    v += e * l2
    err += abs(e) * el2
    return v >> 8, (err >> 8) + 2


def _fx_exp(x: Fraction, W: int) -> tuple[int, int]:
    """exp(x); caller guarantees moderate |x|."""
    # choose q so that r = x - q ln2 is small; exactness of q is irrelevant
    q = int(x * 1000000 // 693147)
    G = W + max(q, 0) + 16
    l2, el2 = _fx_ln2(G)
    x_fx = (x.numerator << G) // x.denominator  # error < 1 ulp
    r_fx = x_fx - q * l2
    r_err = 1 + abs(q) * el2
    v, e = _fx_exp_signed(r_fx, G)
    # |d exp| <= e^1.1 < 4 on the reduced range
    e += 4 * r_err
    if q >= 0:
        v <<= q
        e <<= q
    else:
        v >>= -q
        e = (e >> -q) + 1
    shift = G - W
    return v >> shift, (e >> shift) + 2


def _fx_exp_signed(r_fx: int, W: int) -> tuple[int, int]:
    one = 1 << W
    neg = r_fx < 0
    r = -r_fx if neg else r_fx
    total = one
    term = one
    i = 1
    while term:
        term = term * r // (one * i)
        total += -term if (neg and i % 2) else term
        i += 1
    return total, 2 * i + 4


def _fx_sincos(r_fx: int, W: int) -> tuple[int, int, int]:
    """(cos r, sin r, err) for |r| <= 1 in fixed point."""
    one = 1 << W
    neg = r_fx < 0
    r = -r_fx if neg else r_fx
    c = one
    s = 0
    term = one
    i = 1
    while term:
        term = term * r // (one * i)
        k = i % 4
        if k == 1:
            s += term
        elif k == 2:
            c -= term
        elif k == 3:
            s -= term
        else:
            c += term
        i += 1
    if neg:
        s = -s
    return c, s, 2 * i + 4


def _fx_cos(x: Fraction, W: int) -> tuple[int, int]:
    G = W + 16
    approx = float(x)
    j = round(approx / 1.5707963267948966)
    G += max(abs(j).bit_length(), 1)
    pi, epi = _fx_pi(G)
    x_fx = (x.numerator << G) // x.denominator
    # r = x - j*pi/2 ; pi/2 in fixed point is pi >> 1 (error epi/2 + 1)
    half = pi >> 1
    r_fx = x_fx - j * half
    r_err = 1 + abs(j) * (epi + 2)
    c, s, e = _fx_sincos(r_fx, G)
    e += r_err
    quadrant = j % 4
    v = (c, -s, -c, s)[quadrant]
    shift = G - W
    return v >> shift, (e >> shift) + 2


def _floor_from(fx, x, W0: int, g: int) -> int:
    """Exact floor(f(x) * 2**g) via a Ziv loop; f(x) must not be a grid point."""
    W = W0
    for _ in range(40):
        A, E = fx(x, W)
        shift = W - g
        lo = (A - E) >> shift
        hi = (A + E) >> shift
        if lo == hi:
            return lo
        W = W + max(W // 2, 16)
    raise ArithmeticError("enclosure refinement did not converge")


def _grid_ln(x: Fraction, g: int) -> tuple[int, int]:
    if x == 1:
        return 0, 0
    f = _floor_from(_fx_ln, x, g + 24, g)
    return f, f + 1


def _grid_exp(x: Fraction, g: int) -> tuple[int, int]:
    if x == 0:
        return 1 << g, 1 << g
    # exp(x) < 2**-(g+1): floor is 0
    if x < -Fraction(g + 2) * Fraction(7, 10) - 1:
        return 0, 1
    f = _floor_from(_fx_exp, x, g + 24, g)
    return f, f + 1


def _grid_cos(x: Fraction, g: int) -> tuple[int, int]:
    if x == 0:
        return 1 << g, 1 << g
    f = _floor_from(_fx_cos, x, g + 24, g)
    return f, f + 1


def _grid_sqrt(x: Fraction, g: int) -> tuple[int, int]:
    # floor(sqrt(x) * 2**g) = isqrt(floor(x * 4**g))
    scaled_num = x.numerator << (2 * g)
    fl = scaled_num // x.denominator
    r = isqrt(fl)
    exact = scaled_num % x.denominator == 0 and r * r == fl
    return r, r if exact else r + 1


_EXP_LIMIT = Fraction(1 << 16)
_COS_LIMIT = Fraction(1 << 40)


def _pi_multiple_in(j: int, lo: Fraction, hi: Fraction) -> bool:
    """Decide lo <= j*pi <= hi exactly (j != 0 means j*pi is irrational)."""
    if j == 0:
        return lo <= 0 <= hi
    W = 64
    while True:
        pi, e = _fx_pi(W)
        a = Fraction(j * (pi - e), 1 << W) if j > 0 else Fraction(j * (pi + e), 1 << W)
        b = Fraction(j * (pi + e), 1 << W) if j > 0 else Fraction(j * (pi - e), 1 << W)
        # a <= j*pi <= b
        if b < lo or a > hi:
            return False
        if lo < a and b < hi:
            return True
        W *= 2


def _grid_interval(lo_int: int, hi_int: int, g: int) -> RationalInterval:
    return RationalInterval(Fraction(lo_int, 1 << g), Fraction(hi_int, 1 << g))


def transcendental(fn: str, a: RationalInterval, k: int) -> RationalInterval:
    """Outward-rounded enclosure of ``fn[a]`` on the grid 2**-(k+8).

    Endpoints are the exact floor/ceiling of the true extreme values on that
    grid, so the result contains the image, is monotone in ``a`` and has
    width at most the image width plus 2**-(k+7).
    """
    g = k + GRID_SLACK
    if fn == "cos":
        if not a.is_finite:
            return PR_RANGE
        if a.width > 7 or max(abs(a.lo), abs(a.hi)) > _COS_LIMIT:
            return PR_RANGE
        l1, h1 = _grid_cos(a.lo, g)
        l2, h2 = _grid_cos(a.hi, g)
        lo_i, hi_i = min(l1, l2), max(h1, h2)
        one = 1 << g
        j_lo = int(a.lo // Fraction(314159, 100000)) - 1
        j_hi = int(a.hi // Fraction(314159, 100000)) + 1
        for j in range(j_lo, j_hi + 1):
            if _pi_multiple_in(j, a.lo, a.hi):
                if j % 2 == 0:
                    hi_i = one
                else:
                    lo_i = -one
        return _grid_interval(lo_i, hi_i, g)
    if not a.is_finite:
        return BOTTOM
    if fn == "sqrt":
        if a.lo < 0:
            return BOTTOM
        l, _ = _grid_sqrt(a.lo, g)
        _, h = _grid_sqrt(a.hi, g)
        return _grid_interval(l, h, g)
    if fn == "ln":
        if a.lo <= 0:
            return BOTTOM
        l, _ = _grid_ln(a.lo, g)
        _, h = _grid_ln(a.hi, g)
        return _grid_interval(l, h, g)
    if fn == "exp":
        if a.hi > _EXP_LIMIT:
            return BOTTOM
        l, _ = _grid_exp(a.lo, g)
        _, h = _grid_exp(a.hi, g)
        return _grid_interval(l, h, g)
    raise ValueError(f"unknown function {fn!r}")


@functools.lru_cache(maxsize=256)
def pi_enclosure(k: int) -> RationalInterval:
    g = k + GRID_SLACK
    f = _floor_from(lambda _x, W: _fx_pi(W), None, g + 24, g)
    return _grid_interval(f, f + 1, g)
