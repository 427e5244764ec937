"""Simple valuations, event pairs and the operators built on them.

A simple valuation is a finite map from basis elements (rational intervals,
booleans, naturals, unit, or tuples of these) to nonnegative rational masses,
plus a separate mass at bottom.  Membership of an interval in an open set is
certain membership: the whole interval must lie inside the open set.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence, Union

from .bits import SampleSource, Stream, trial_seeds
from .interval import RationalInterval, format_rational, parse_rational
from .lang import PflTerm, check_program
from .machine import Outcome, explore, run_trace

ZERO = Fraction(0)
ONE = Fraction(1)

TraceSampler = Callable[[object, int], Outcome]


# -- keys and serialization -------------------------------------------------

def value_sort_key(v):
    if isinstance(v, RationalInterval):
        return (3, v.sort_key())
    if isinstance(v, bool):
        return (1, v)
    if isinstance(v, int):
        return (2, v)
    if v == ():
        return (0, 0)
    if isinstance(v, tuple):
        return (4, tuple(value_sort_key(x) for x in v))
    return (5, repr(v))


def value_to_json(v):
    if isinstance(v, RationalInterval):
        return v.to_json()
    if isinstance(v, (bool, int)):
        return v
    if v == ():
        return "()"
    if isinstance(v, tuple):
        return {"pair": [value_to_json(x) for x in v]}
    raise TypeError(f"cannot serialize {v!r}")


def value_from_json(data):
    if data is None or isinstance(data, list):
        return RationalInterval.from_json(data)
    if data == "()":
        return ()
    if isinstance(data, dict):
        return tuple(value_from_json(x) for x in data["pair"])
    return data


def value_to_text(v) -> str:
    if isinstance(v, RationalInterval):
        if v.is_bottom:
            return "bottom"
        return f"[{format_rational(v.lo)}, {format_rational(v.hi)}]"
    if isinstance(v, bool):
        return "tt" if v else "ff"
    if v == ():
        return "()"
    if isinstance(v, tuple):
        return "(" + ", ".join(value_to_text(x) for x in v) + ")"
    return str(v)


# -- simple valuations ------------------------------------------------------

@dataclass(frozen=True)
class SimpleValuation:
    support: Mapping = field(default_factory=dict)
    bottom: Fraction = ZERO

    def __post_init__(self):
        clean = {}
        for k, m in self.support.items():
            m = Fraction(m)
            if m < 0:
                raise ValueError("negative mass")
            if m:
                clean[k] = m
        object.__setattr__(self, "support", clean)
        b = Fraction(self.bottom)
        if b < 0:
            raise ValueError("negative bottom mass")
        object.__setattr__(self, "bottom", b)

    @classmethod
    def point(cls, value, mass=ONE) -> "SimpleValuation":
        return cls({value: Fraction(mass)})

    def mass(self, value) -> Fraction:
        return self.support.get(value, ZERO)

    @property
    def support_mass(self) -> Fraction:
        return sum(self.support.values(), ZERO)

    @property
    def total(self) -> Fraction:
        return self.support_mass + self.bottom

    @property
    def normalized(self) -> bool:
        return self.total == 1

    def items(self):
        """Support entries in a deterministic order."""
        return sorted(self.support.items(), key=lambda kv: value_sort_key(kv[0]))

    def measure(self, open_set) -> Fraction:
        """Mass of the points certainly inside ``open_set`` (bottom only if whole)."""
        m = sum((r for d, r in self.support.items() if open_set.contains(d)), ZERO)
        if self.bottom and open_set.contains_bottom:
            m += self.bottom
        return m

    def scale(self, c) -> "SimpleValuation":
        c = Fraction(c)
        return SimpleValuation({k: c * m for k, m in self.support.items()}, c * self.bottom)

    def __add__(self, other: "SimpleValuation") -> "SimpleValuation":
        out = dict(self.support)
        for k, m in other.support.items():
            out[k] = out.get(k, ZERO) + m
        return SimpleValuation(out, self.bottom + other.bottom)

    def map(self, f: Callable) -> "SimpleValuation":
        out = {}
        for k, m in self.support.items():
            v = f(k)
            out[v] = out.get(v, ZERO) + m
        return SimpleValuation(out, self.bottom)

    def to_json(self) -> dict:
        return {
            "support": [{"value": value_to_json(v), "mass": format_rational(m)}
                        for v, m in self.items()],
            "bottomMass": format_rational(self.bottom),
        }

    @classmethod
    def from_json(cls, data) -> "SimpleValuation":
        return cls({value_from_json(e["value"]): parse_rational(e["mass"])
                    for e in data["support"]}, parse_rational(data["bottomMass"]))

    def csv_rows(self) -> list[list[str]]:
        rows = [["value", "lo", "hi", "mass", "mass_float"]]
        for v, m in self.items():
            lo = hi = ""
            if isinstance(v, RationalInterval):
                lo = format_rational(v.lo) if v.lo is not None else "-inf"
                hi = format_rational(v.hi) if v.hi is not None else "+inf"
            rows.append([value_to_text(v), lo, hi, format_rational(m), repr(float(m))])
        rows.append(["bottom", "", "", format_rational(self.bottom), repr(float(self.bottom))])
        return rows


class ValuationBuilder:
    """Accumulates outcome masses; bottoms go to the bottom mass."""

    def __init__(self):
        self.support: dict = {}
        self.bottom = ZERO

    def add(self, outcome: Outcome, mass: Fraction) -> None:
        m = mass * outcome.weight
        if outcome.is_bottom:
            self.bottom += m
        elif m:
            self.support[outcome.value] = self.support.get(outcome.value, ZERO) + m

    def build(self) -> SimpleValuation:
        return SimpleValuation(self.support, self.bottom)


# -- open sets and event pairs ----------------------------------------------

@dataclass(frozen=True)
class RealOpen:
    """A finite union of open intervals ``(lo, hi)``; ``None`` is infinite."""
    components: tuple = ()

    def __post_init__(self):
        comps = tuple((None if lo is None else Fraction(lo), None if hi is None else Fraction(hi))
                      for lo, hi in self.components)
        for lo, hi in comps:
            if lo is not None and hi is not None and lo >= hi:
                raise ValueError(f"empty or reversed open interval ({lo}, {hi})")
        object.__setattr__(self, "components", comps)

    contains_bottom = False

    def contains(self, d) -> bool:
        if not isinstance(d, RationalInterval):
            return False
        for lo, hi in self.components:
            lo_ok = lo is None or (d.lo is not None and lo < d.lo)
            hi_ok = hi is None or (d.hi is not None and d.hi < hi)
            if lo_ok and hi_ok:
                return True
        return False

    def disjoint(self, other: "RealOpen") -> bool:
        for a_lo, a_hi in self.components:
            for b_lo, b_hi in other.components:
                # (a_lo, a_hi) and (b_lo, b_hi) meet unless one ends before the other starts
                a_before = a_hi is not None and b_lo is not None and a_hi <= b_lo
                b_before = b_hi is not None and a_lo is not None and b_hi <= a_lo
                if not (a_before or b_before):
                    return False
        return True


@dataclass(frozen=True)
class FiniteSet:
    """A finite set of discrete values (every subset of a flat domain is open)."""
    values: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "values", frozenset(self.values))

    contains_bottom = False

    def contains(self, d) -> bool:
        return d in self.values

    def disjoint(self, other: "FiniteSet") -> bool:
        return not (self.values & other.values)


@dataclass(frozen=True)
class Whole:
    """The whole domain, bottom included."""
    contains_bottom = True

    def contains(self, d) -> bool:
        return True


def _is_empty(s) -> bool:
    if isinstance(s, RealOpen):
        return not s.components
    if isinstance(s, FiniteSet):
        return not s.values
    return False


WHOLE = Whole()
EMPTY_REAL = RealOpen(())
EMPTY_SET = FiniteSet(frozenset())


def real_open(*components) -> RealOpen:
    return RealOpen(tuple(components))


def finite_set(*values) -> FiniteSet:
    return FiniteSet(frozenset(values))


@dataclass(frozen=True)
class EventPair:
    in_set: object
    out_set: object

    def __post_init__(self):
        a, b = self.in_set, self.out_set
        if isinstance(a, Whole) or isinstance(b, Whole):
            if not (_is_empty(a) or _is_empty(b)):
                raise ValueError("event sets overlap")
            return
        if type(a) is not type(b):
            raise ValueError("event sets must be of the same kind")
        if not a.disjoint(b):
            raise ValueError("event sets overlap")

    def classify(self, d) -> str:
        """'in', 'out' or 'neither' (certain membership only)."""
        if self.in_set.contains(d):
            return "in"
        if self.out_set.contains(d):
            return "out"
        return "neither"


# -- samplers ---------------------------------------------------------------

def as_sampler(program: Union[PflTerm, TraceSampler], fuel: int = 100_000) -> TraceSampler:
    """A PFL program becomes the sampler ``(src, n) -> run_trace(...)``."""
    if callable(program):
        return program
    check_program(program)

    def sampler(src, n):
        return run_trace(program, src, n, fuel, check=False)

    sampler.program = program
    return sampler


def pushforward_exhaustive(program, n: int, depth: int, fuel: int = 100_000) -> SimpleValuation:
    """Exact depth-L valuation: every prefix of length L with mass 2**-L."""
    sampler = as_sampler(program, fuel)
    mass = Fraction(1, 1 << depth)
    acc = ValuationBuilder()
    for bits in itertools.product("01", repeat=depth):
        acc.add(sampler("".join(bits), n), mass)
    return acc.build()


def pushforward_lazy(program: PflTerm, n: int, max_bits: int, fuel: int = 100_000) -> SimpleValuation:
    """Exact valuation over the bits the program actually reads (up to ``max_bits``)."""
    check_program(program)
    acc = ValuationBuilder()
    explore(program, n, max_bits, fuel, lambda out, k: acc.add(out, Fraction(1, 1 << k)))
    return acc.build()


def dyadic_bin(v: RationalInterval, k: int) -> RationalInterval:
    """The width-2**-k dyadic cell containing the midpoint of ``v``."""
    j = (v.midpoint * (1 << k)).__floor__()
    return RationalInterval(Fraction(j, 1 << k), Fraction(j + 1, 1 << k))


def monte_carlo(program, n: int, trials: int, seed: int, fuel: int = 100_000,
                bin_exp: Optional[int] = None) -> SimpleValuation:
    """Empirical weighted valuation from ``trials`` seeded traces."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    sampler = as_sampler(program, fuel)
    acc = ValuationBuilder()
    mass = Fraction(1, trials)
    for s in trial_seeds(seed, trials):
        out = sampler(Stream(SampleSource(s)), n)
        if bin_exp is not None and not out.is_bottom and isinstance(out.value, RationalInterval):
            if out.value.is_finite:
                out = Outcome(dyadic_bin(out.value, bin_exp), out.weight, None, out.steps)
        acc.add(out, mass)
    return acc.build()


def weighted_stats(v: SimpleValuation) -> tuple[float, float, float]:
    """(mean, sd, support mass) of interval midpoints, normalized over the support."""
    total = 0.0
    s1 = 0.0
    s2 = 0.0
    for d, m in v.support.items():
        if not isinstance(d, RationalInterval) or not d.is_finite:
            continue
        x = float(d.midpoint)
        w = float(m)
        total += w
        s1 += w * x
        s2 += w * x * x
    if total == 0:
        return float("nan"), float("nan"), 0.0
    mean = s1 / total
    var = max(s2 / total - mean * mean, 0.0)
    return mean, var ** 0.5, total


# -- way-below ----------------------------------------------------------------

def basis_way_below(d, e) -> bool:
    """d << e for basis elements; None stands for bottom."""
    if d is None:
        return True
    if e is None:
        return False
    if isinstance(d, RationalInterval):
        if not isinstance(e, RationalInterval):
            return False
        if d.is_bottom:
            return True
        lo_ok = d.lo is None or (e.lo is not None and d.lo < e.lo)
        hi_ok = d.hi is None or (e.hi is not None and e.hi < d.hi)
        return lo_ok and hi_ok
    if isinstance(d, tuple) and d != () and isinstance(e, tuple) and len(d) == len(e):
        return all(basis_way_below(x, y) for x, y in zip(d, e))
    return d == e


MAX_WAY_BELOW_SUPPORT = 20


def way_below(a: SimpleValuation, b) -> bool:
    """Finite test: every nonempty subset J of a's points has mass < b(up-sets of J).

    ``b`` is a SimpleValuation or a callable taking a list of basis points
    (None for bottom) and returning the mass of the union of their up-sets.
    """
    points = [(d, r) for d, r in a.items()]
    if a.bottom:
        points.append((None, a.bottom))
    if len(points) > MAX_WAY_BELOW_SUPPORT:
        raise ValueError(f"support too large for the subset scan ({len(points)} points)")
    if isinstance(b, SimpleValuation):
        oracle = _valuation_oracle(b)
    else:
        oracle = b
    for size in range(1, len(points) + 1):
        for J in itertools.combinations(points, size):
            mass = sum((r for _, r in J), ZERO)
            if not mass < oracle([d for d, _ in J]):
                return False
    return True


def _valuation_oracle(b: SimpleValuation):
    entries = list(b.support.items())

    def oracle(ds):
        m = sum((r for e, r in entries if any(basis_way_below(d, e) for d in ds)), ZERO)
        if b.bottom and any(d is None for d in ds):
            m += b.bottom
        return m
    return oracle


# -- integration, conditioning ----------------------------------------------

def step_value(g: Sequence, d) -> Fraction:
    """Value of the step function ``g`` (list of (open, coeff)) at basis point d."""
    best = ZERO
    for open_set, q in g:
        if (open_set.contains_bottom if d is None else open_set.contains(d)):
            best = max(best, Fraction(q))
    return best


def integrate_F(a: SimpleValuation, g: Sequence) -> SimpleValuation:
    """Reweight each point of ``a`` by the step function ``g``."""
    support = {d: r * step_value(g, d) for d, r in a.support.items()}
    return SimpleValuation(support, a.bottom * step_value(g, None))


def cp(sigma: SimpleValuation, ev: EventPair) -> SimpleValuation:
    """Conditional probability: keep O1-points, rescaled by 1 / (1 - sigma(O2))."""
    if not sigma.normalized:
        raise ValueError("cp expects a normalized valuation")
    out_mass = sigma.measure(ev.out_set)
    if out_mass == 1:
        return SimpleValuation({}, ONE)
    scale = 1 / (1 - out_mass)
    support = {d: r * scale for d, r in sigma.support.items() if ev.in_set.contains(d)}
    kept = sum(support.values(), ZERO)
    return SimpleValuation(support, 1 - kept)


def cv0(alpha: SimpleValuation, ev: EventPair) -> SimpleValuation:
    """Conditional valuation of a possibly unnormalized valuation."""
    total = alpha.total
    if total == 0:
        raise ValueError("cv0 needs a valuation with positive total mass")
    out_mass = alpha.measure(ev.out_set)
    if out_mass == total:
        return SimpleValuation({}, total)
    scale = 1 / (1 - out_mass / total)
    support = {d: r * scale for d, r in alpha.support.items() if ev.in_set.contains(d)}
    kept = sum(support.values(), ZERO)
    return SimpleValuation(support, max(total - kept, ZERO))


# -- operational approximation ------------------------------------------------

def refines_strictly(c, d) -> bool:
    """Outcome d determines c: strictly inside c's interior for reals, equal otherwise."""
    if isinstance(c, RationalInterval):
        if not isinstance(d, RationalInterval) or not d.is_finite:
            return False
        lo_ok = c.lo is None or c.lo < d.lo
        hi_ok = c.hi is None or d.hi < c.hi
        return lo_ok and hi_ok
    return c == d


def op_approximates(c, q, program: PflTerm, budget: int = 200_000,
                    fuel: int = 10_000) -> bool:
    """Search for finite bit sets whose outcomes refine ``c`` with mass above ``q``.

    Pairs (n, L) are tried along anti-diagonals n + L = t; each pair explores
    all assignments of at most L bits at precision n.  ``budget`` bounds the
    total number of machine steps spent.
    """
    check_program(program)
    q = Fraction(q)
    spent = 0
    t = 0
    while spent < budget:
        for n in range(t + 1):
            L = t - n
            found = [ZERO]
            steps = [0]

            def visit(out, k):
                steps[0] += out.steps
                if not out.is_bottom and refines_strictly(c, out.value):
                    found[0] += out.weight / (1 << k)

            explore(program, n, L, fuel, visit)
            spent += steps[0]
            if q < found[0]:
                return True
            if spent >= budget:
                return False
        t += 1
    return False
