"""Independent reference computations for test expectations.

Each oracle is written without calling the code under test (beyond plain
data constructors).  ``FROZEN`` holds the values they produced; the module
tests assert against those literals and ``test_oracles.py`` re-derives them.
"""
import itertools
import math
from fractions import Fraction as F

import mpmath

mpmath.mp.prec = 256


# -- intervals ---------------------------------------------------------------

def endpoint_hull(op, a, b):
    """Hull of op over the four endpoint pairs (valid for +, -, *, / away from 0)."""
    vals = [op(x, y) for x in a for y in b]
    return (min(vals), max(vals))


def mp_value(fn, x):
    x = mpmath.mpf(x.numerator) / x.denominator if isinstance(x, F) else mpmath.mpf(x)
    return {"ln": mpmath.log, "sqrt": mpmath.sqrt, "cos": mpmath.cos, "exp": mpmath.exp}[fn](x)


def mp(q):
    return mpmath.mpf(q.numerator) / q.denominator


def clamp_unit(a):
    lo, hi = a
    if hi <= -1:
        return (F(-1), F(-1))
    if lo >= 1:
        return (F(1), F(1))
    return (max(lo, F(-1)), min(hi, F(1)))


def cos_taylor(x, terms=30):
    """cos by its Taylor series in exact rationals plus the next-term bound."""
    s = F(0)
    for i in range(terms):
        s += F((-1) ** i) * x ** (2 * i) / math.factorial(2 * i)
    bound = abs(x) ** (2 * terms) / math.factorial(2 * terms)
    return s, bound


# -- bits --------------------------------------------------------------------

def evens_by_index(s):
    return "".join(s[2 * i] for i in range((len(s) + 1) // 2))


def odds_by_index(s):
    return "".join(s[2 * i + 1] for i in range(len(s) // 2))


def subsource_indices(k, count):
    """Positions of round k: odd-split k times then even-split, i -> 2**(k+1) i + 2**k - 1."""
    return [(1 << (k + 1)) * i + (1 << k) - 1 for i in range(count)]


def subsource_by_index(s, k):
    out = []
    for j in subsource_indices(k, len(s)):
        if j >= len(s):
            break
        out.append(s[j])
    return "".join(out)


def sample_sum(s, n):
    """The sample-rule sum with 1-based positions, o = min(|s|, n)."""
    o = min(len(s), n)
    lo = sum((F(int(s[i - 1]), 2 ** i) for i in range(1, o + 1)), F(0))
    return (lo, lo + F(1, 2 ** o))


def riemann_square(n):
    """Lower and upper Riemann sums of x**2 on [0,1] with 2**n cells."""
    c = 2 ** n
    lo = sum((F(j, c) ** 2 for j in range(c)), F(0)) / c
    hi = sum((F(j + 1, c) ** 2 for j in range(c)), F(0)) / c
    return lo, hi


# -- discrete conditioning ---------------------------------------------------

def law_of_table(bits, table):
    """Probability of each table value with all prefixes equally likely."""
    out = {}
    for p in itertools.product("01", repeat=bits):
        v = table["".join(p)]
        out[v] = out.get(v, F(0)) + F(1, 2 ** bits)
    return out


def conditional_formula(law, o1, o2):
    """nu(U & O1) / (1 - nu(O2)) on singletons U = {v}."""
    p2 = sum((m for v, m in law.items() if v in o2), F(0))
    if p2 == 1:
        return {}
    return {v: m / (1 - p2) for v, m in law.items() if v in o1}


def classical_formula(law, o1):
    """nu(U & O1) / nu(O1)."""
    p1 = sum((m for v, m in law.items() if v in o1), F(0))
    return {v: m / p1 for v, m in law.items() if v in o1}


def truncated_rejection(p_in_value, p_out, rounds):
    """Accepted mass after K rounds: p_in * sum_{k<K} p_out**k."""
    return p_in_value * sum((p_out ** k for k in range(rounds)), F(0))


def conjugate_gaussian(prior_mean, prior_var, noise_var, obs):
    """Posterior mean and variance for a normal prior and normal likelihood."""
    var = 1 / (1 / prior_var + 1 / noise_var)
    mean = var * (prior_mean / prior_var + obs / noise_var)
    return mean, var


def dyadic_mass_inside(lo, hi, n):
    """Mass of width-2**-n cells of [0,1] lying strictly inside (lo, hi)."""
    count = 0
    for j in range(2 ** n):
        if lo < F(j, 2 ** n) and F(j + 1, 2 ** n) < hi:
            count += 1
    return F(count, 2 ** n)


FROZEN = {
    # endpoint enumeration
    "mul[-1,2][3,5]": (F(-5), F(10)),
    "div[4,6][1,2]": (F(2), F(6)),
    # intersection with [-1, 1]
    "pr3[-1/2,3/2]": (F(-1, 2), F(1)),
    # positional index formula
    "split1011": ("11", "01"),
    "subsource10110100k1": "01",
    # sample-rule sum
    "uniform101n2": (F(1, 2), F(3, 4)),
    "uniform11n2": (F(3, 4), F(1)),
    # cell-wise hull sum of x**2 at 16 cells
    "int_x2_n4": (F(155, 512), F(187, 512)),
    # three rejection rounds of the 1/4 : 3/4 categorical
    "cr0_three_rounds_a": F(37, 64),
    # geometric-series limit
    "cr0_limit_a": F(1),
    # cp example
    "cp_a": F(1, 2),
    "cp_bottom": F(1, 2),
    # cv0 example
    "cv0_a": F(4, 3),
    # sample n=1, L=1
    "pushforward_sample_n1": {(F(0), F(1, 2)): F(1, 2), (F(1, 2), F(1)): F(1, 2)},
    # conjugate normal posterior, prior N(0,1), noise N(0,1), observation 1
    "posterior_mean": F(1, 2),
    "posterior_var": F(1, 2),
    # best dyadic mass strictly inside (0.4, 0.6)
    "max_dyadic_mass_0.4_0.6": F(1, 5),
    # 1/sqrt(2 pi)
    "normal_peak": 0.3989422804014327,
}
