"""Random discrete samplers and a literal enumerator for rejection sampling."""
import itertools
from fractions import Fraction as F

from hypothesis import strategies as st

from pfl.conditioning import TableSampler, cr0_sample
from pfl.valuation import EventPair, ValuationBuilder, finite_set

VALUES = ("a", "b", "c")


@st.composite
def tables(draw, max_bits=3):
    bits = draw(st.integers(1, max_bits))
    vals = draw(st.lists(st.sampled_from(VALUES), min_size=1, max_size=3, unique=True))
    keys = ["".join(p) for p in itertools.product("01", repeat=bits)]
    return TableSampler(bits, {k: draw(st.sampled_from(vals)) for k in keys})


@st.composite
def event_pairs(draw):
    """Disjoint (O1, O2) over VALUES; O1 is nonempty."""
    sides = draw(st.lists(st.sampled_from(("in", "out", "none")), min_size=3, max_size=3))
    o1 = {v for v, s in zip(VALUES, sides) if s == "in"} or {"a"}
    o2 = {v for v, s in zip(VALUES, sides) if s == "out"} - o1
    return EventPair(finite_set(*o1), finite_set(*o2))


def rounds_length(bits, rounds):
    """Bits of the flat source touched by ``rounds`` rounds reading ``bits`` bits each."""
    k = rounds - 1
    return 2 ** (k + 1) * (bits - 1) + 2 ** k


def literal_cr0(sampler, ev, n, rounds, **kw):
    """Run cr0_sample on every flat bit string long enough for ``rounds`` rounds."""
    length = rounds_length(sampler.bits, rounds)
    acc = ValuationBuilder()
    mass = F(1, 2 ** length)
    for p in itertools.product("01", repeat=length):
        out = cr0_sample(sampler, ev, "".join(p), n, max_rounds=rounds, **kw)
        # bottoms carry weight 0 as traces; count them as probability mass here
        if out.is_bottom:
            acc.bottom += mass
        else:
            acc.add(out, mass)
    return acc.build()
