import io
import json
import logging
from fractions import Fraction as F
from importlib import resources

import pytest
from hypothesis import given, strategies as st

from pfl.bits import Prefix, SampleSource, Stream
from pfl.interval import RationalInterval, interval
from pfl.lang import REAL, UNIT, App, Const, Lam, Nat, Real, Unit, Var, parse, typecheck
from pfl.machine import (
    Annot, Done, Outcome, _Halt, Stuck, TraceState, WeightedConfig, inject, is_value,
    matching_rules, reduce_once, run_trace, step,
)

from oracles import FROZEN
from termgen import programs

bitstrings = st.text(alphabet="01", max_size=24)


def corpus(name):
    return parse((resources.files("pfl") / "examples" / f"{name}.pfl").read_text())


# -- single steps -------------------------------------------------------------

def test_inject_wraps_program():
    c = inject(Const("sample"), "101", 2)
    assert c.weight == 1
    assert c.term == Annot(Const("sample"), Stream(Prefix("101")), 2)


def test_inject_rejects_open_terms():
    with pytest.raises(ValueError, match="not closed"):
        inject(Var("x", REAL), "", 1)


def test_score_step():
    c = WeightedConfig(F(1), App(Const("score"), Real(interval(F(1, 2), F(3, 4)))))
    assert step(c) == WeightedConfig(F(1, 2), Unit())


def test_application_splits_stream():
    s = Stream(Prefix("110010"))
    t = Annot(App(Const("succ"), Nat(1)), s, 3)
    new, w, rule, _ = reduce_once(t, F(1), TraceState())
    assert rule == "annot-app"
    assert new == App(Annot(Const("succ"), s.evens(), 3), Annot(Nat(1), s.odds(), 3))
    assert w == 1


def test_beta_step():
    t = App(Lam("x", REAL, Var("x", REAL)), Real(interval(3, 3)))
    assert step(WeightedConfig(F(1), t)) == WeightedConfig(F(1), Real(interval(3, 3)))


def test_values_are_done():
    assert step(WeightedConfig(F(1), Nat(3))) == Done(Nat(3))


def test_stuck_comparison():
    c = WeightedConfig(F(1), App(Const("(0<)"), Real(interval(-1, 1))))
    assert step(c) == Stuck("stuck-real")


# -- whole traces -------------------------------------------------------------

def test_sample_trace():
    out = run_trace(Const("sample"), "101", 2)
    assert out.value == RationalInterval(*FROZEN["uniform101n2"])
    assert out.weight == 1


def test_recursive_pr_at_low_precision():
    prog = parse("fix[unit -> real] (lam f:unit->real. lam u:unit. pr (f u)) ()")
    assert run_trace(prog, "", 3).value == interval(-1, 1)


def test_fix_terminates_by_precision():
    # y = pr(y/2 + 1/2) converges towards 1 as n grows
    prog = parse("fix[real] (lam y:real. pr ([1/2] * y + [1/2]))")
    widths = [run_trace(prog, "", n).value.width for n in range(1, 8)]
    assert all(b < a for a, b in zip(widths, widths[1:]))
    assert run_trace(prog, "", 7).value.contains_point(1)


def test_stuck_real_is_bottom():
    out = run_trace(parse("ite ((0<) [-1,1]) 1 2"), "", 4)
    assert out.is_bottom and out.reason == "stuck-real"


def test_short_prefix_is_precision_exhausted():
    out = run_trace(parse("ite ((0<) (sample - [1/2])) 1 2"), "", 4)
    assert out.is_bottom and out.reason == "precision-exhausted"
    assert run_trace(parse("ite ((0<) (sample - [1/3])) 1 2"), "1" * 64, 4).value == 1


def test_fuel_exhaustion():
    out = run_trace(corpus("diverge"), "", 2, fuel=50)
    assert out == Outcome.bottom("fuel", 1, 50)


def test_integral_riemann_sum():
    out = run_trace(parse("int (lam x:real. x * x)"), "", 4)
    assert out.value == RationalInterval(*FROZEN["int_x2_n4"])


def test_score_weights_multiply():
    out = run_trace(parse("(lam u:unit. score [1/3]) (score [1/2])"), "", 2)
    assert out.value == () and out.weight == F(1, 6)


def test_negative_score_is_clamped(caplog):
    with caplog.at_level(logging.WARNING, logger="pfl.machine"):
        out = run_trace(parse("score [-1, 2]"), "", 2)
    assert out.weight == 0
    assert "negative left endpoint" in caplog.text


def test_nested_annotation_inner_wins():
    inner = Annot(Const("sample"), Stream(Prefix("11")), 2)
    out = run_trace(Annot(inner, Stream(Prefix("00")), 2), "", 2, check=False)
    assert out.value == interval(F(3, 4), 1)


def test_trace_log_is_deterministic(schema_validator):
    prog = corpus("box-muller")
    logs = []
    for _ in range(2):
        buf = io.StringIO()
        run_trace(prog, SampleSource(3), 6, trace_log=buf)
        logs.append(buf.getvalue())
    assert logs[0] == logs[1]
    lines = [json.loads(x) for x in logs[0].splitlines()]
    assert [x["step"] for x in lines] == list(range(1, len(lines) + 1))
    for x in lines:
        schema_validator(x, "trace-step.json")


# -- audits over generated programs -------------------------------------------

def _walk(prog, src, n, fuel=3000, st=None):
    """Yield each intermediate (term, weight) of a trace."""
    st = st or TraceState()
    c = inject(prog, src, n)
    term, w = c.term, c.weight
    for _ in range(fuel):
        yield term, w
        if is_value(term):
            return
        try:
            term, w, _, _ = reduce_once(term, w, st)
        except _Halt:
            return


sources = st.builds(SampleSource, st.integers(0, 2 ** 64 - 1))


@given(prog=programs(depth=4), src=sources, n=st.integers(0, 6))
def test_at_most_one_rule_applies(prog, src, n):
    for term, _ in _walk(prog, src, n):
        assert len(matching_rules(term)) <= 1


@given(prog=programs(depth=4), src=sources, n=st.integers(0, 6))
def test_steps_preserve_types(prog, src, n):
    ty = typecheck(prog)
    for term, _ in _walk(prog, src, n):
        assert typecheck(term) == ty


def _has_score(t):
    if isinstance(t, Const):
        return t.name == "score"
    return any(_has_score(v) for v in vars(t).values() if hasattr(v, "__dict__"))


@given(prog=programs(depth=4), src=sources, n=st.integers(0, 6))
def test_weight_is_one_without_score(prog, src, n):
    if _has_score(prog):
        return
    for _, w in _walk(prog, src, n):
        assert w == 1


@given(prog=programs(depth=4), src=sources, n=st.integers(0, 6))
def test_samples_read_disjoint_bits(prog, src, n):
    st_ = TraceState(record_indices=True)
    for _ in _walk(prog, src, n, st=st_):
        pass
    seen = set()
    for idx in st_.sample_indices:
        assert not seen & set(idx)
        seen |= set(idx)


def _refines(coarse, fine):
    if isinstance(coarse, RationalInterval):
        return coarse.contains(fine)
    return coarse == fine


@given(prog=programs(depth=4), s=bitstrings, extra=bitstrings,
       n=st.integers(0, 5), dn=st.integers(0, 3))
def test_more_bits_and_precision_refine(prog, s, extra, n, dn):
    a = run_trace(prog, s, n, fuel=20_000)
    b = run_trace(prog, s + extra, n + dn, fuel=20_000)
    if a.is_bottom or b.is_bottom:
        return
    assert _refines(a.value, b.value)
    assert b.weight >= a.weight


@pytest.mark.parametrize("name", ["sample", "uniform", "box-muller", "nested-interval",
                                  "score-gaussian"])
def test_corpus_refines_with_precision(name):
    prog = corpus(name)
    src = SampleSource(11)
    outs = [run_trace(prog, src, n) for n in range(2, 10)]
    for a, b in zip(outs, outs[1:]):
        if a.is_bottom or b.is_bottom:
            continue
        assert a.value.contains(b.value)
    assert not outs[-1].is_bottom


def test_unit_value_output():
    assert run_trace(Unit(), "", 0).value == ()
    assert typecheck(Unit()) == UNIT


MULTI_SAMPLE = [
    "sample + sample * sample",
    "ite ((0<) (sample - [1/3])) (sample * sample) (sample - sample)",
    "(lam x:real. x + sample) sample",
    "fix[real] (lam y:real. pr (sample + [1/2] * y))",
]


@pytest.mark.parametrize("src", MULTI_SAMPLE + ["box-muller", "score-gaussian"])
@given(seed=st.integers(0, 2 ** 64 - 1), n=st.integers(3, 7))
def test_multi_sample_programs_read_disjoint_bits(src, seed, n):
    prog = corpus(src) if "-" in src and " " not in src else parse(src)
    st_ = TraceState(record_indices=True)
    out = run_trace(prog, SampleSource(seed), n, state=st_)
    flat = [i for idx in st_.sample_indices for i in idx]
    assert out.is_bottom or len(st_.sample_indices) >= 2
    assert len(flat) == len(set(flat))
