"""Weighted small-step reduction over annotated terms ``<e | s, n>``.

A configuration is a weight and a term.  Annotations carry a bit stream and a
precision; they are pushed inwards, splitting the stream between the function
and argument of every application (even bits left, odd bits right).  Call by
value, left to right.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, TextIO, Union

from . import interval as iv
from .bits import NeedBit, Source, Stream, as_stream, uniform_value
from .interval import RationalInterval
from .lang import (
    BINARY_REAL, REAL, App, Bool, Const, Fix, Ite, Lam, Nat, Pr, PflTerm,
    PflTypeError, Real, Unit, Var, check_program, free_vars, returns_real,
)

log = logging.getLogger(__name__)

PRECISE_CONSTS = ("ln", "sqrt", "cos", "exp", "int")
TRANSCENDENTAL = ("ln", "sqrt", "cos", "exp")
NON_VALUE_CONSTS = ("sample", "pi")

ZERO = Fraction(0)
ONE = Fraction(1)


# -- extended terms ---------------------------------------------------------

@dataclass(frozen=True)
class Annot:
    body: object
    src: Stream
    n: int

    def pretty(self, show):
        return f"<{show(self.body)} | {self.src.label()}, {self.n}>"

    def typecheck(self, check, env):
        return check(self.body, env)


@dataclass(frozen=True)
class PrAt:
    """``pr`` whose precision has been fixed by an enclosing annotation."""
    n: int
    arg: object

    def pretty(self, show):
        return f"pr@{self.n} ({show(self.arg)})"

    def typecheck(self, check, env):
        a = check(self.arg, env)
        if a != REAL:
            raise PflTypeError(f"pr expects real, found {a}")
        return REAL


@dataclass(frozen=True)
class ConstAt:
    """A precision-dependent constant (ln, sqrt, cos, exp, int) at precision n."""
    name: str
    n: int

    def pretty(self, show):
        return f"{self.name}@{self.n}"

    def typecheck(self, check, env):
        return check(Const(self.name), env)


# -- configurations and outcomes --------------------------------------------

@dataclass(frozen=True)
class WeightedConfig:
    weight: Fraction
    term: object


@dataclass(frozen=True)
class Done:
    value: object


@dataclass(frozen=True)
class Stuck:
    reason: str


BOTTOM_REASONS = ("fuel", "stuck-real", "precision-exhausted")


@dataclass(frozen=True)
class Outcome:
    """A ground value with its weight, or bottom with the halt reason."""
    value: object
    weight: Fraction = ONE
    reason: Optional[str] = None
    steps: int = 0

    @classmethod
    def bottom(cls, reason: str, weight=ZERO, steps: int = 0) -> "Outcome":
        return cls(None, Fraction(weight), reason, steps)

    @property
    def is_bottom(self) -> bool:
        return self.reason is not None


class _Halt(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass
class TraceState:
    """Per-trace bookkeeping: short bit reads and the indices each sample used."""
    short_read: bool = False
    record_indices: bool = False
    sample_indices: list = field(default_factory=list)


# -- values and substitution ------------------------------------------------

def is_value(t) -> bool:
    if isinstance(t, (Lam, Real, Nat, Bool, Unit, Fix, ConstAt)):
        return True
    if isinstance(t, Const):
        return t.name not in NON_VALUE_CONSTS
    if isinstance(t, App):
        f = t.fn
        return isinstance(f, Const) and f.name in BINARY_REAL and is_value(t.arg)
    return False


def subst(t, x: str, v):
    """Replace free ``x`` in ``t`` by the closed term ``v``."""
    if isinstance(t, Var):
        return v if t.name == x else t
    if isinstance(t, App):
        return App(subst(t.fn, x, v), subst(t.arg, x, v))
    if isinstance(t, Lam):
        return t if t.var == x else Lam(t.var, t.ty, subst(t.body, x, v))
    if isinstance(t, Ite):
        return Ite(subst(t.cond, x, v), subst(t.then, x, v), subst(t.orelse, x, v))
    if isinstance(t, Pr):
        return Pr(subst(t.arg, x, v))
    if isinstance(t, Annot):
        return Annot(subst(t.body, x, v), t.src, t.n)
    if isinstance(t, PrAt):
        return PrAt(t.n, subst(t.arg, x, v))
    return t


def ground_value(t):
    """Python value of a ground PFL value term."""
    if isinstance(t, Real):
        return t.value
    if isinstance(t, Nat):
        return t.value
    if isinstance(t, Bool):
        return t.value
    if isinstance(t, Unit):
        return ()
    return t


def value_term(v) -> PflTerm:
    """Inverse of :func:`ground_value`."""
    if isinstance(v, RationalInterval):
        return Real(v)
    if isinstance(v, bool):
        return Bool(v)
    if isinstance(v, int):
        return Nat(v)
    if v == ():
        return Unit()
    raise TypeError(f"not a ground value: {v!r}")


# -- rules ------------------------------------------------------------------
#
# Each rule is (name, matches(redex), fire(redex, weight, state)).  The redex
# is found by context decomposition; rule patterns are mutually exclusive,
# which `matching_rules` lets tests audit.

def _annot_body(kinds):
    return lambda r: isinstance(r, Annot) and isinstance(r.body, kinds)


def _annot_const(names):
    return lambda r: (isinstance(r, Annot) and isinstance(r.body, Const)
                      and r.body.name in names)


def _fire_nested(r, w, st):
    return r.body, w


def _fire_split(r, w, st):
    s = r.src
    return App(Annot(r.body.fn, s.evens(), r.n), Annot(r.body.arg, s.odds(), r.n)), w


def _fire_lam(r, w, st):
    b = r.body
    return Lam(b.var, b.ty, Annot(b.body, r.src, r.n)), w


def _fire_ite(r, w, st):
    b, s = r.body, r.src
    so = s.odds()
    return Ite(Annot(b.cond, s.evens(), r.n), Annot(b.then, so, r.n), Annot(b.orelse, so, r.n)), w


def _fire_pr(r, w, st):
    return PrAt(r.n, Annot(r.body.arg, r.src, r.n)), w


def _fire_sample(r, w, st):
    bits = r.src.take(r.n)
    if len(bits) < r.n:
        st.short_read = True
    if st.record_indices:
        st.sample_indices.append(tuple(r.src.indices(len(bits))))
    return Real(uniform_value(bits, r.n)), w


def _fire_pi(r, w, st):
    return Real(iv.pi_enclosure(r.n + 8)), w


def _fire_precise(r, w, st):
    return ConstAt(r.body.name, r.n), w


_PLAIN = (Const, Fix, Real, Nat, Bool, Unit, ConstAt, Var)


def _matches_plain(r):
    if not isinstance(r, Annot) or not isinstance(r.body, _PLAIN):
        return False
    b = r.body
    if isinstance(b, Const):
        return b.name not in NON_VALUE_CONSTS and b.name not in PRECISE_CONSTS
    return not isinstance(b, Var)


def _fire_plain(r, w, st):
    return r.body, w


def _is_app(r, fn_kind=None):
    return isinstance(r, App) and not isinstance(r, Annot) and (
        fn_kind is None or isinstance(r.fn, fn_kind))


def _matches_beta(r):
    return _is_app(r, Lam)


def _fire_beta(r, w, st):
    return subst(r.fn.body, r.fn.var, r.arg), w


def _fix_lam(r):
    return _is_app(r, Fix) and isinstance(r.arg, Lam)


def _matches_fix_real(r):
    return _fix_lam(r) and isinstance(r.arg.body, Annot) and returns_real(r.fn.ty)


def _matches_fix(r):
    return _fix_lam(r) and isinstance(r.arg.body, Annot) and not returns_real(r.fn.ty)


def _fire_fix(r, w, st):
    lam = r.arg
    inner = lam.body
    unannotated = Lam(lam.var, lam.ty, inner.body)
    n = max(inner.n - 1, 0) if returns_real(r.fn.ty) else inner.n
    return Annot(subst(inner.body, lam.var, App(r.fn, unannotated)), inner.src, n), w


def _matches_fix_bare(r):
    return _fix_lam(r) and not isinstance(r.arg.body, Annot)


def _fire_fix_bare(r, w, st):
    return subst(r.arg.body, r.arg.var, r), w


def _matches_fix_unfold(r):
    return _is_app(r, Fix) and not isinstance(r.arg, Lam)


def _fire_fix_unfold(r, w, st):
    return App(r.arg, r), w


_ARITH = {"+": iv.add, "-": iv.sub, "*": iv.mul, "/": iv.div, "min": iv.imin, "max": iv.imax}


def _matches_arith(r):
    return (_is_app(r, App) and isinstance(r.fn.fn, Const) and r.fn.fn.name in BINARY_REAL
            and isinstance(r.fn.arg, Real) and isinstance(r.arg, Real))


def _fire_arith(r, w, st):
    return Real(_ARITH[r.fn.fn.name](r.fn.arg.value, r.arg.value)), w


def _unary(name, arg_kind):
    return lambda r: (_is_app(r, Const) and r.fn.name == name and isinstance(r.arg, arg_kind))


def _matches_sign(want):
    def m(r):
        return (_is_app(r, Const) and r.fn.name == "(0<)" and isinstance(r.arg, Real)
                and iv.cmp_zero(r.arg.value) is want)
    return m


def _fire_sign_true(r, w, st):
    return Bool(True), w


def _fire_sign_false(r, w, st):
    return Bool(False), w


def _fire_score(r, w, st):
    a = r.arg.value.lo
    if a is None or a < 0:
        log.warning("score argument %s has a negative left endpoint; using 0", r.arg.value)
        a = ZERO
    return Unit(), w * a


def _matches_transcendental(r):
    return (_is_app(r, ConstAt) and r.fn.name in TRANSCENDENTAL and isinstance(r.arg, Real))


def _fire_transcendental(r, w, st):
    return Real(iv.transcendental(r.fn.name, r.arg.value, r.fn.n + 8)), w


def _matches_int(r):
    return _is_app(r, ConstAt) and r.fn.name == "int" and is_value(r.arg)


def integral_sum(f, n: int):
    """Riemann-sum term for ``int f`` at precision n: sum over 2**n cells, balanced."""
    cells = 1 << n
    width = Real(RationalInterval(Fraction(1, cells), Fraction(1, cells)))
    terms = [App(App(Const("*"), width),
                 App(f, Real(RationalInterval(Fraction(j, cells), Fraction(j + 1, cells)))))
             for j in range(cells)]
    while len(terms) > 1:
        paired = [App(App(Const("+"), terms[i]), terms[i + 1])
                  for i in range(0, len(terms) - 1, 2)]
        if len(terms) % 2:
            paired.append(terms[-1])
        terms = paired
    return terms[0]


def _fire_int(r, w, st):
    return integral_sum(r.arg, r.fn.n), w


def _fire_succ(r, w, st):
    return Nat(r.arg.value + 1), w


def _fire_pred(r, w, st):
    return Nat(max(r.arg.value - 1, 0)), w


def _fire_iszero(r, w, st):
    return Bool(r.arg.value == 0), w


def _fire_real(r, w, st):
    return Real(RationalInterval.point(r.arg.value)), w


def _matches_ite(b):
    return lambda r: isinstance(r, Ite) and isinstance(r.cond, Bool) and r.cond.value is b


def _fire_ite_true(r, w, st):
    return r.then, w


def _fire_ite_false(r, w, st):
    return r.orelse, w


def _fire_pr_zero(r, w, st):
    return Real(iv.PR_RANGE), w


def _fire_pr_clamp(r, w, st):
    return Real(iv.pr_project(r.n, r.arg.value)), w


RULES: list[tuple[str, Callable, Callable]] = [
    ("annot-nested", _annot_body((Annot, PrAt)), _fire_nested),
    ("annot-app", _annot_body(App), _fire_split),
    ("annot-lam", _annot_body(Lam), _fire_lam),
    ("annot-ite", _annot_body(Ite), _fire_ite),
    ("annot-pr", _annot_body(Pr), _fire_pr),
    ("sample", _annot_const(("sample",)), _fire_sample),
    ("pi", _annot_const(("pi",)), _fire_pi),
    ("annot-precise", _annot_const(PRECISE_CONSTS), _fire_precise),
    ("annot-const", _matches_plain, _fire_plain),
    ("beta", _matches_beta, _fire_beta),
    ("fix-real", _matches_fix_real, _fire_fix),
    ("fix", _matches_fix, _fire_fix),
    ("fix-bare", _matches_fix_bare, _fire_fix_bare),
    ("fix-unfold", _matches_fix_unfold, _fire_fix_unfold),
    ("arith", _matches_arith, _fire_arith),
    ("sign-true", _matches_sign(iv.Sign.TRUE), _fire_sign_true),
    ("sign-false", _matches_sign(iv.Sign.FALSE), _fire_sign_false),
    ("score", _unary("score", Real), _fire_score),
    ("transcendental", _matches_transcendental, _fire_transcendental),
    ("int", _matches_int, _fire_int),
    ("succ", _unary("succ", Nat), _fire_succ),
    ("pred", _unary("pred", Nat), _fire_pred),
    ("iszero", _unary("iszero", Nat), _fire_iszero),
    ("real", _unary("real", Nat), _fire_real),
    ("ite-true", _matches_ite(True), _fire_ite_true),
    ("ite-false", _matches_ite(False), _fire_ite_false),
    ("pr-zero", lambda r: isinstance(r, PrAt) and r.n == 0, _fire_pr_zero),
    ("pr-clamp", lambda r: isinstance(r, PrAt) and r.n > 0 and isinstance(r.arg, Real),
     _fire_pr_clamp),
]


# -- context decomposition --------------------------------------------------

def decompose(t, path=()):
    """(redex, path) for a non-value term; the path lists child indices."""
    while True:
        if isinstance(t, App):
            if not is_value(t.fn):
                t, path = t.fn, path + (0,)
                continue
            if not is_value(t.arg):
                t, path = t.arg, path + (1,)
                continue
            return t, path
        if isinstance(t, Ite):
            if not is_value(t.cond):
                t, path = t.cond, path + (0,)
                continue
            return t, path
        if isinstance(t, PrAt):
            if t.n > 0 and not is_value(t.arg):
                t, path = t.arg, path + (0,)
                continue
            return t, path
        return t, path


def plug(t, path, new):
    if not path:
        return new
    i, rest = path[0], path[1:]
    if isinstance(t, App):
        return App(plug(t.fn, rest, new), t.arg) if i == 0 else App(t.fn, plug(t.arg, rest, new))
    if isinstance(t, Ite):
        return Ite(plug(t.cond, rest, new), t.then, t.orelse)
    if isinstance(t, PrAt):
        return PrAt(t.n, plug(t.arg, rest, new))
    raise ValueError("bad context path")


def matching_rules(term) -> list[str]:
    """Names of all rules whose pattern matches the redex of ``term``."""
    if is_value(term):
        return []
    redex, _ = decompose(term)
    return [name for name, match, _ in RULES if match(redex)]


def _stuck_reason(redex, st: TraceState) -> str:
    if st.short_read:
        return "precision-exhausted"
    return "stuck-real"


def reduce_once(term, weight: Fraction, st: TraceState):
    """One step: (term', weight', rule, path).  Raises _Halt when stuck."""
    redex, path = decompose(term)
    for name, match, fire in RULES:
        if match(redex):
            new, w = fire(redex, weight, st)
            return plug(term, path, new), w, name, path
    raise _Halt(_stuck_reason(redex, st))


def inject(program: PflTerm, s: Source, n: int) -> WeightedConfig:
    if free_vars(program):
        raise ValueError(f"program is not closed: free {sorted(free_vars(program))}")
    if n < 0:
        raise ValueError("precision must be nonnegative")
    return WeightedConfig(ONE, Annot(program, as_stream(s), n))


def step(c: WeightedConfig, state: Optional[TraceState] = None) -> Union[WeightedConfig, Done, Stuck]:
    if is_value(c.term):
        return Done(c.term)
    try:
        t, w, _, _ = reduce_once(c.term, c.weight, state or TraceState())
    except _Halt as h:
        return Stuck(h.reason)
    return WeightedConfig(w, t)


def _final(term, weight, steps, st: TraceState) -> Outcome:
    v = ground_value(term)
    if isinstance(v, RationalInterval) and v.is_bottom:
        return Outcome.bottom(_stuck_reason(term, st), weight, steps)
    return Outcome(v, weight, None, steps)


def run_config(c: WeightedConfig, fuel: int, trace_log: Optional[TextIO] = None,
               state: Optional[TraceState] = None) -> Outcome:
    """Iterate from a configuration until a value, a stuck term or fuel runs out."""
    st = state or TraceState()
    term, weight = c.term, c.weight
    steps = 0
    while not is_value(term):
        if steps >= fuel:
            return Outcome.bottom("fuel", weight, steps)
        try:
            term, weight, rule, path = reduce_once(term, weight, st)
        except _Halt as h:
            return Outcome.bottom(h.reason, weight, steps)
        steps += 1
        if trace_log is not None:
            trace_log.write(json.dumps({
                "step": steps, "rule": rule, "weight": iv.format_rational(weight),
                "position": list(path)}) + "\n")
    return _final(term, weight, steps, st)


def run_trace(program: PflTerm, s: Source, n: int, fuel: int = 100_000,
              trace_log: Optional[TextIO] = None, check: bool = True,
              state: Optional[TraceState] = None) -> Outcome:
    if check:
        check_program(program)
    return run_config(inject(program, s, n), fuel, trace_log, state)


def explore(program: PflTerm, n: int, max_bits: int, fuel: int,
            visit: Callable[[Outcome, int], None]) -> None:
    """Run ``program`` over every assignment of the bits it actually reads.

    Bits are assigned on demand, branching on both values; ``visit`` receives
    each outcome and the number of assigned bits (its path has probability
    2**-bits).  After ``max_bits`` assignments reads are truncated, which the
    sample rule treats as a short prefix.
    """
    from .bits import Assignment

    provider = Assignment(max_bits)
    start = inject(program, Stream(provider), n)
    st = TraceState()

    def go(term, weight, steps):
        while not is_value(term):
            if steps >= fuel:
                visit(Outcome.bottom("fuel", weight, steps), len(provider.table))
                return
            try:
                term, weight, _, _ = reduce_once(term, weight, st)
            except NeedBit as need:
                for b in "01":
                    provider.table[need.index] = b
                    saved = st.short_read
                    go(term, weight, steps)
                    st.short_read = saved
                del provider.table[need.index]
                return
            except _Halt as h:
                visit(Outcome.bottom(h.reason, weight, steps), len(provider.table))
                return
            steps += 1
        visit(_final(term, weight, steps, st), len(provider.table))

    go(start.term, start.weight, 0)
