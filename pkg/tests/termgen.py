"""Hypothesis strategies for closed, well-typed PFL programs."""

from hypothesis import strategies as st

from pfl.interval import RationalInterval
from pfl.lang import (
    BOOL, NAT, REAL, UNIT, App, Bool, Const, Fix, Ite, Lam, Nat, Pr, Real, Unit, Var,
)

GROUND_TYPES = (UNIT, BOOL, NAT, REAL)
ends = st.fractions(min_value=-4, max_value=4, max_denominator=8)


@st.composite
def real_literal(draw):
    a, b = draw(ends), draw(ends)
    return Real(RationalInterval(min(a, b), max(a, b)))


def _vars_of(env, ty):
    return [name for name, t in env.items() if t == ty]


@st.composite
def term_of(draw, ty, env=None, depth=3, counter=None):
    """A term of ground type ``ty`` with free variables drawn from ``env``."""
    env = env or {}
    counter = counter if counter is not None else [0]
    options = ["leaf"]
    if _vars_of(env, ty):
        options.append("var")
    if depth > 0:
        options += ["ite", "beta", "op", "op"]
        if ty == REAL:
            options.append("fix")
    kind = draw(st.sampled_from(options))

    def sub(t, e=env):
        return draw(term_of(t, e, depth - 1, counter))

    if kind == "var":
        return Var(draw(st.sampled_from(_vars_of(env, ty))), ty)
    if kind == "ite":
        return Ite(sub(BOOL), sub(ty), sub(ty))
    if kind == "beta":
        counter[0] += 1
        name = f"v{counter[0]}"
        arg_ty = draw(st.sampled_from(GROUND_TYPES))
        return App(Lam(name, arg_ty, sub(ty, {**env, name: arg_ty})), sub(arg_ty))
    if kind == "fix":
        counter[0] += 1
        name = f"r{counter[0]}"
        return App(Fix(REAL), Lam(name, REAL, Pr(sub(REAL, {**env, name: REAL}))))
    if ty == REAL:
        if kind == "leaf":
            return draw(st.one_of(real_literal(), st.just(Const("sample")), st.just(Const("pi"))))
        op = draw(st.sampled_from(["bin", "bin", "fn", "pr", "real"]))
        if op == "bin":
            name = draw(st.sampled_from(["+", "-", "*", "/", "min", "max"]))
            return App(App(Const(name), sub(REAL)), sub(REAL))
        if op == "fn":
            return App(Const(draw(st.sampled_from(["ln", "sqrt", "cos", "exp"]))), sub(REAL))
        if op == "pr":
            return Pr(sub(REAL))
        return App(Const("real"), sub(NAT))
    if ty == NAT:
        if kind == "leaf":
            return Nat(draw(st.integers(0, 5)))
        return App(Const(draw(st.sampled_from(["succ", "pred"]))), sub(NAT))
    if ty == BOOL:
        if kind == "leaf":
            return Bool(draw(st.booleans()))
        if draw(st.booleans()):
            return App(Const("(0<)"), sub(REAL))
        return App(Const("iszero"), sub(NAT))
    if kind == "leaf":
        return Unit()
    return App(Const("score"), sub(REAL))


@st.composite
def programs(draw, depth=3):
    ty = draw(st.sampled_from(GROUND_TYPES))
    return draw(term_of(ty, depth=depth))
