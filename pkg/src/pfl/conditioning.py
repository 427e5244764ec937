"""Rejection conditioning, score reweighting, Box-Muller and the Bayes harness.

A trace sampler is any callable ``(src, n) -> Outcome`` where ``src`` is a bit
string or stream.  Rejection rounds run the sampler on the disjoint sub-streams
``subsource_address(src, k)`` for k = 0, 1, 2, ...
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from . import interval as iv
from .bits import SampleSource, Stream, evens, odds, subsource_address, take, trial_seeds, uniform_value
from .interval import RationalInterval
from .lang import (
    BOOL, UNIT, App, Arrow, Fix, Ite, Lam, PflTerm, PflTypeError, Unit, Var,
    typecheck,
)
from .machine import Outcome
from .valuation import (
    EventPair, SimpleValuation, TraceSampler, real_open,
    weighted_stats,
)

ZERO = Fraction(0)
ONE = Fraction(1)
DensityFn = Callable[[RationalInterval], RationalInterval]


# -- discrete samplers --------------------------------------------------------

@dataclass(frozen=True)
class TableSampler:
    """Reads ``bits`` bits and looks the prefix up in ``table``.

    Table entries are a value or a (value, weight) pair.  A short read is
    bottom with weight 1, so the mass stays accounted for.
    """
    bits: int
    table: dict

    def __call__(self, src, n: int) -> Outcome:
        s = take(src, self.bits)
        if len(s) < self.bits:
            return Outcome.bottom("precision-exhausted", ONE)
        entry = self.table[s]
        if isinstance(entry, Outcome):
            return entry
        if isinstance(entry, tuple) and len(entry) == 2 and isinstance(entry[1], Fraction):
            return Outcome(entry[0], entry[1])
        return Outcome(entry, ONE)

    def probabilities(self) -> dict:
        """Exact unweighted law of the table: value -> probability."""
        out: dict = {}
        p = Fraction(1, 1 << self.bits)
        for s in ("".join(b) for b in itertools.product("01", repeat=self.bits)):
            out_ = self(s, 0)
            key = None if out_.is_bottom else out_.value
            out[key] = out.get(key, ZERO) + p
        return out


# -- rejection ----------------------------------------------------------------

def cr0_sample(sampler: TraceSampler, ev: EventPair, src, n: int,
               max_rounds: int = 64, classify: Optional[Callable] = None,
               project: Optional[Callable] = None) -> Outcome:
    """First round whose outcome is certainly in O1; bottom (weight 0) if a round is undecided."""
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    classify = classify or ev.classify
    for k in range(max_rounds):
        out = sampler(subsource_address(src, k), n)
        if out.is_bottom:
            return Outcome.bottom(out.reason, ZERO, out.steps)
        where = classify(out.value)
        if where == "in":
            if project is not None:
                out = Outcome(project(out.value), out.weight, None, out.steps)
            return out
        if where == "neither":
            return Outcome.bottom("stuck-real", ZERO, out.steps)
    return Outcome.bottom("fuel", ZERO)


def cr0_prime_sample(pair_sampler: TraceSampler, ev: EventPair, src, n: int,
                     max_rounds: int = 64) -> Outcome:
    """Condition a pair sampler on its second component; return the first."""
    return cr0_sample(pair_sampler, ev, src, n, max_rounds,
                      classify=lambda v: ev.classify(v[1]), project=lambda v: v[0])


@dataclass(frozen=True)
class RejectionLaw:
    """Exact per-round law of a sampler against an event pair."""
    accept: dict        # value -> weighted mass accepted in one round
    reject_prob: Fraction
    neither_prob: Fraction


def rejection_law(sampler: TraceSampler, ev: EventPair, n: int, bits: int) -> RejectionLaw:
    """One round enumerated over all ``bits``-bit prefixes."""
    p = Fraction(1, 1 << bits)
    accept: dict = {}
    rej = ZERO
    neither = ZERO
    for s in ("".join(b) for b in itertools.product("01", repeat=bits)):
        out = sampler(s, n)
        where = "neither" if out.is_bottom else ev.classify(out.value)
        if where == "in":
            accept[out.value] = accept.get(out.value, ZERO) + p * out.weight
        elif where == "out":
            rej += p
        else:
            neither += p
    return RejectionLaw(accept, rej, neither)


def enumerate_cr0(sampler: TraceSampler, ev: EventPair, n: int, bits: int,
                  rounds: Optional[int] = None) -> SimpleValuation:
    """Exact valuation of rejection sampling, truncated after ``rounds`` (None: the limit).

    Rounds use disjoint sub-streams, so they are independent draws; the
    accepted mass after K rounds is accept(v) * sum_{k<K} reject**k.  The
    bottom entry is the probability that a draw ends undecided or runs out
    of rounds (those outcomes carry weight 0 as traces).
    """
    law = rejection_law(sampler, ev, n, bits)
    r = law.reject_prob
    if rounds is None:
        if r == 1:
            return SimpleValuation({}, ONE)
        factor = 1 / (1 - r)
        tail = ZERO
    else:
        factor = sum((r ** k for k in range(rounds)), ZERO)
        tail = r ** rounds
    support = {v: m * factor for v, m in law.accept.items()}
    return SimpleValuation(support, law.neither_prob * factor + tail)


def truncation_tail(reject_prob: Fraction, rounds: int) -> Fraction:
    """Probability that a conditioned draw is still searching after ``rounds`` rounds."""
    return Fraction(reject_prob) ** rounds


# -- reweighting and densities ------------------------------------------------

def score_reweight(sampler: TraceSampler, f: DensityFn) -> TraceSampler:
    """Multiply each outcome's weight by the left endpoint of f(value), clamped at 0."""

    def reweighted(src, n):
        out = sampler(src, n)
        if out.is_bottom:
            return out
        lo = f(out.value).lo
        if lo is None or lo < 0:
            lo = ZERO
        return Outcome(out.value, out.weight * lo, None, out.steps)

    return reweighted


def step_density(g: Sequence) -> DensityFn:
    """The step function g (list of (open, coeff)) as a density on basis points."""
    from .valuation import step_value

    def f(d):
        q = step_value(g, d)
        return RationalInterval(q, q)

    return f


@functools.lru_cache(maxsize=None)
def _inv_sqrt_2pi(k: int) -> RationalInterval:
    two_pi = iv.mul(iv.interval(2, 2), iv.pi_enclosure(k + 4))
    return iv.div(iv.interval(1, 1), iv.transcendental("sqrt", two_pi, k + 4))


def _accuracy_for(a: RationalInterval) -> int:
    if a.width == 0:
        return 48
    w = a.width
    bits = w.denominator.bit_length() - w.numerator.bit_length()
    return min(max(bits + 8, 16), 96)


_MINUS_HALF = iv.interval(Fraction(-1, 2), Fraction(-1, 2))


@dataclass(frozen=True)
class GaussianDensity:
    """Interval enclosure of the normal density with the given mean and SD."""
    mean: Fraction
    sd: Fraction

    def __call__(self, x: RationalInterval) -> RationalInterval:
        if not x.is_finite:
            return RationalInterval(ZERO, iv.div(_inv_sqrt_2pi(16), iv.interval(self.sd, self.sd)).hi)
        k = _accuracy_for(x)
        z = iv.sub(x, iv.interval(self.mean, self.mean)) if self.mean else x
        if self.sd != 1:
            z = iv.div(z, iv.interval(self.sd, self.sd))
        e = iv.transcendental("exp", iv.mul(iv.sqr(z), _MINUS_HALF), k)
        scale = _inv_sqrt_2pi(k)
        if self.sd != 1:
            scale = iv.div(scale, iv.interval(self.sd, self.sd))
        out = iv.mul(e, scale)
        return RationalInterval(max(out.lo, ZERO), out.hi)


def gaussian_density(mean, sd) -> GaussianDensity:
    sd = Fraction(sd)
    if sd <= 0:
        raise ValueError("sd must be positive")
    return GaussianDensity(Fraction(mean), sd)


# -- Box-Muller ---------------------------------------------------------------

_TWO = iv.interval(2, 2)
_MINUS_TWO = iv.interval(-2, -2)


def box_muller(src, n: int) -> Outcome:
    """sqrt(-2 ln u1) cos(2 pi u2), u1 from the even bits, u2 from the odd bits."""
    u1 = uniform_value(take(evens(src), n), n)
    u2 = uniform_value(take(odds(src), n), n)
    if u1.lo <= 0:
        return Outcome.bottom("stuck-real", ONE)
    k = n + 8
    radius = iv.transcendental("sqrt", iv.mul(_MINUS_TWO, iv.transcendental("ln", u1, k)), k)
    angle = iv.mul(iv.mul(_TWO, iv.pi_enclosure(k)), u2)
    z = iv.mul(radius, iv.transcendental("cos", angle, k))
    if z.is_bottom:
        return Outcome.bottom("stuck-real", ONE)
    return Outcome(z, ONE)


# -- the conditioning term ----------------------------------------------------

def pfl_conditioning_term(e_r: PflTerm, e_t: PflTerm) -> PflTerm:
    """``fix[T] (lam x:T. (lam y:T. ite (e_t y) y x) (e_r ()))``.

    ``e_r`` is a thunk of type unit -> T and ``e_t`` a test of type T -> bool.
    The thunk is placed inside the fixed point, so each unfolding evaluates
    it under a fresh sub-stream.
    """
    tr = typecheck(e_r)
    if not (isinstance(tr, Arrow) and tr.dom == UNIT):
        raise PflTypeError(f"sampler thunk must have type unit -> T, found {tr}", e_r)
    ty = tr.cod
    tt = typecheck(e_t)
    if tt != Arrow(ty, BOOL):
        raise PflTypeError(f"test must have type {Arrow(ty, BOOL)}, found {tt}", e_t)
    x, y = "rej_x", "rej_y"
    body = App(Lam(y, ty, Ite(App(e_t, Var(y, ty)), Var(y, ty), Var(x, ty))), App(e_r, Unit()))
    return App(Fix(ty), Lam(x, ty, body))


# -- Bayes consistency ----------------------------------------------------------

@dataclass(frozen=True)
class GaussianLikelihood:
    """Observation model y = x + sd * Z with Z standard normal."""
    sd: Fraction = ONE

    def density(self, e) -> DensityFn:
        # as a function of x, N(e; x, sd^2) is the N(e, sd^2) density at x
        return gaussian_density(Fraction(e), self.sd)

    def simulate(self, x: RationalInterval, src, n: int) -> Outcome:
        z = box_muller(src, n)
        if z.is_bottom:
            return z
        return Outcome(iv.add(x, iv.mul(iv.RationalInterval.point(self.sd), z.value)), z.weight)


def joint_sampler(prior: TraceSampler, likelihood) -> TraceSampler:
    """(x, y): x from the prior on the even bits, y simulated on the odd bits."""

    def joint(src, n):
        xo = prior(evens(src), n)
        if xo.is_bottom:
            return xo
        yo = likelihood.simulate(xo.value, odds(src), n)
        if yo.is_bottom:
            return Outcome.bottom(yo.reason, xo.weight * yo.weight)
        return Outcome((xo.value, yo.value), xo.weight * yo.weight)

    return joint


def window_event(e, eps) -> EventPair:
    """((e-eps, e+eps), (-inf, e-eps) u (e+eps, inf))."""
    e, eps = Fraction(e), Fraction(eps)
    return EventPair(real_open((e - eps, e + eps)),
                     real_open((None, e - eps), (e + eps, None)))


def cr0_prime_many(pair_sampler: TraceSampler, events: Sequence[EventPair], src, n: int,
                   max_rounds: int = 64) -> list[tuple[Outcome, int]]:
    """``cr0_prime_sample`` for several events on one source, sharing the rounds.

    Returns, per event, the outcome and the number of rounds it used.  Each
    result equals ``cr0_prime_sample(pair_sampler, ev, src, n, max_rounds)``.
    """
    results: list = [None] * len(events)
    pending = set(range(len(events)))
    for k in range(max_rounds):
        if not pending:
            break
        out = pair_sampler(subsource_address(src, k), n)
        for i in sorted(pending):
            if out.is_bottom:
                results[i] = (Outcome.bottom(out.reason, ZERO, out.steps), k + 1)
                pending.discard(i)
                continue
            where = events[i].classify(out.value[1])
            if where == "in":
                results[i] = (Outcome(out.value[0], out.weight, None, out.steps), k + 1)
                pending.discard(i)
            elif where == "neither":
                results[i] = (Outcome.bottom("stuck-real", ZERO, out.steps), k + 1)
                pending.discard(i)
    for i in pending:
        results[i] = (Outcome.bottom("fuel", ZERO), max_rounds)
    return results


@dataclass
class ConsistencyRow:
    epsilon: Fraction
    rej_mean: float
    rej_sd: float
    score_mean: float
    score_sd: float
    gap: float
    accepted_fraction: float
    truncation_bound: float
    gap_sigma: float = 0.0
    accepted: int = 0
    rounds: int = 0

    CSV_HEADER = ("epsilon", "rejMean", "rejSD", "scoreMean", "scoreSD", "gap",
                  "acceptedFraction", "truncationBound")

    def csv_row(self) -> list[str]:
        vals = (self.rej_mean, self.rej_sd, self.score_mean, self.score_sd, self.gap,
                self.accepted_fraction, self.truncation_bound)
        return [iv.format_rational(self.epsilon)] + [repr(float(v)) for v in vals]

    def to_json(self) -> dict:
        return {
            "epsilon": iv.format_rational(self.epsilon),
            "rejMean": self.rej_mean, "rejSD": self.rej_sd,
            "scoreMean": self.score_mean, "scoreSD": self.score_sd,
            "gap": self.gap, "gapSigma": self.gap_sigma,
            "acceptedFraction": self.accepted_fraction,
            "truncationBound": self.truncation_bound,
            "accepted": self.accepted, "rounds": self.rounds,
        }


@dataclass
class ScorePosterior:
    mean: float
    sd: float
    ess: float
    valuation: SimpleValuation = field(repr=False, default=None)


def score_posterior(prior: TraceSampler, f: DensityFn, n: int, trials: int,
                    seed: int) -> ScorePosterior:
    from .valuation import monte_carlo

    v = monte_carlo(score_reweight(prior, f), n, trials, seed)
    mean, sd, _ = weighted_stats(v)
    ws = [float(m) for m in v.support.values()]
    s1 = sum(ws)
    s2 = sum(w * w for w in ws)
    ess = s1 * s1 / s2 if s2 else 0.0
    return ScorePosterior(mean, sd, ess, v)


def bayes_consistency_report(prior: TraceSampler, likelihood, observation,
                             epsilons: Sequence, n: int = 24, trials: int = 100_000,
                             rejection_draws: int = 3000, seed: int = 0,
                             max_rounds: int = 64) -> list[ConsistencyRow]:
    """Rejection on a shrinking window versus score reweighting, per epsilon."""
    eps = [Fraction(e) for e in epsilons]
    if any(e <= 0 for e in eps) or any(a <= b for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilons must be positive and strictly decreasing")
    post = score_posterior(prior, likelihood.density(observation), n, trials, seed)
    score_se = post.sd / math.sqrt(post.ess) if post.ess else float("inf")

    events = [window_event(observation, e) for e in eps]
    joint = joint_sampler(prior, likelihood)
    accepted: list[list[float]] = [[] for _ in eps]
    rounds = [0] * len(eps)
    rej_seed = seed ^ 0x9E3779B97F4A7C15
    for s in trial_seeds(rej_seed, rejection_draws):
        src = Stream(SampleSource(s))
        for i, (out, used) in enumerate(cr0_prime_many(joint, events, src, n, max_rounds)):
            rounds[i] += used
            if not out.is_bottom and out.weight:
                accepted[i].append(float(out.value.midpoint))

    rows = []
    for i, e in enumerate(eps):
        xs = accepted[i]
        m = len(xs)
        mean = sum(xs) / m if m else float("nan")
        sd = math.sqrt(max(sum((x - mean) ** 2 for x in xs) / m, 0.0)) if m else float("nan")
        rate = m / rounds[i] if rounds[i] else 0.0
        rej_se = sd / math.sqrt(m) if m else float("inf")
        rows.append(ConsistencyRow(
            epsilon=e, rej_mean=mean, rej_sd=sd, score_mean=post.mean, score_sd=post.sd,
            gap=abs(mean - post.mean), accepted_fraction=rate,
            truncation_bound=(1.0 - rate) ** max_rounds,
            gap_sigma=math.hypot(rej_se, score_se), accepted=m, rounds=rounds[i]))
    return rows
