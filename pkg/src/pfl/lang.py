"""PFL syntax: types, terms, a parser for ``.pfl`` text, a printer and a typechecker.

Concrete syntax (``--`` starts a comment)::

    e ::= lam x:T. e | let x:T = e in e
        | e + e | e - e | e * e | e / e | e < e
        | e e | ite e e e | pr e | fix[T]
        | x | 3 | [a, b] | [a] | () | tt | ff
        | sample | score | int | pi | ln | sqrt | cos | exp | min | max
        | succ | pred | iszero | real | (+) | (-) | (*) | (/) | (0<)
    T ::= unit | bool | nat | real | T -> T | (T)

``0 < e`` is the sign test ``(0<) e``; ``a < b`` means ``(0<) (b - a)``.
Interval endpoints may be integers, ``p/q`` or exact decimals.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .interval import RationalInterval, format_rational


# -- types ------------------------------------------------------------------

@dataclass(frozen=True)
class Base:
    name: str  # unit | bool | nat | real

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Arrow:
    dom: "PflType"
    cod: "PflType"

    def __str__(self):
        d = f"({self.dom})" if isinstance(self.dom, Arrow) else str(self.dom)
        return f"{d} -> {self.cod}"


PflType = Union[Base, Arrow]

UNIT = Base("unit")
BOOL = Base("bool")
NAT = Base("nat")
REAL = Base("real")
GROUND = (UNIT, BOOL, NAT, REAL)


def arrow(*ts: PflType) -> PflType:
    out = ts[-1]
    for t in reversed(ts[:-1]):
        out = Arrow(t, out)
    return out


def returns_real(t: PflType) -> bool:
    """True when the codomain chain of ``t`` ends in ``real``."""
    while isinstance(t, Arrow):
        t = t.cod
    return t == REAL


# -- terms ------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Fix:
    ty: PflType


@dataclass(frozen=True)
class Var:
    name: str
    ty: Optional[PflType] = None


@dataclass(frozen=True)
class App:
    fn: "PflTerm"
    arg: "PflTerm"


@dataclass(frozen=True)
class Lam:
    var: str
    ty: PflType
    body: "PflTerm"


@dataclass(frozen=True)
class Ite:
    cond: "PflTerm"
    then: "PflTerm"
    orelse: "PflTerm"


@dataclass(frozen=True)
class Pr:
    arg: "PflTerm"


@dataclass(frozen=True)
class Real:
    value: RationalInterval


@dataclass(frozen=True)
class Nat:
    value: int


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class Unit:
    pass


PflTerm = Union[Const, Fix, Var, App, Lam, Ite, Pr, Real, Nat, Bool, Unit]

BINARY_REAL = ("+", "-", "*", "/", "min", "max")
CONST_TYPES: dict[str, PflType] = {
    "sample": REAL,
    "pi": REAL,
    "score": Arrow(REAL, UNIT),
    "(0<)": Arrow(REAL, BOOL),
    "ln": Arrow(REAL, REAL),
    "sqrt": Arrow(REAL, REAL),
    "cos": Arrow(REAL, REAL),
    "exp": Arrow(REAL, REAL),
    "int": Arrow(Arrow(REAL, REAL), REAL),
    "succ": Arrow(NAT, NAT),
    "pred": Arrow(NAT, NAT),
    "iszero": Arrow(NAT, BOOL),
    "real": Arrow(NAT, REAL),
}
for _op in BINARY_REAL:
    CONST_TYPES[_op] = arrow(REAL, REAL, REAL)

INFIX = {"+", "-", "*", "/"}
NAMED_CONSTS = {k for k in CONST_TYPES if k not in INFIX and k != "(0<)"}


def app(f: PflTerm, *args: PflTerm) -> PflTerm:
    for a in args:
        f = App(f, a)
    return f


def binop(op: str, a: PflTerm, b: PflTerm) -> PflTerm:
    return App(App(Const(op), a), b)


def real_lit(lo, hi=None) -> Real:
    lo = Fraction(lo)
    return Real(RationalInterval(lo, lo if hi is None else Fraction(hi)))


def free_vars(t: PflTerm) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, App):
        return free_vars(t.fn) | free_vars(t.arg)
    if isinstance(t, Lam):
        return free_vars(t.body) - {t.var}
    if isinstance(t, Ite):
        return free_vars(t.cond) | free_vars(t.then) | free_vars(t.orelse)
    if isinstance(t, Pr):
        return free_vars(t.arg)
    body = getattr(t, "body", None)  # annotated machine terms
    if body is not None:
        return free_vars(body)
    arg = getattr(t, "arg", None)
    if arg is not None:
        return free_vars(arg)
    return set()


# -- printing ---------------------------------------------------------------

def _fmt_q(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else format_rational(x)


def _is_atom(t) -> bool:
    return isinstance(t, (Const, Fix, Var, Real, Nat, Bool, Unit))


def pretty(t) -> str:
    """Concrete syntax for ``t``; ``parse(pretty(t)) == t`` for source terms."""
    if isinstance(t, Const):
        if t.name in INFIX or t.name == "(0<)":
            return t.name if t.name == "(0<)" else f"({t.name})"
        return t.name
    if isinstance(t, Fix):
        return f"fix[{t.ty}]"
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Real):
        v = t.value
        if v.lo == v.hi:
            return f"[{_fmt_q(v.lo)}]"
        return f"[{_fmt_q(v.lo)}, {_fmt_q(v.hi)}]"
    if isinstance(t, Nat):
        return str(t.value)
    if isinstance(t, Bool):
        return "tt" if t.value else "ff"
    if isinstance(t, Unit):
        return "()"
    if isinstance(t, Lam):
        return f"lam {t.var}:{t.ty}. {pretty(t.body)}"
    if isinstance(t, Ite):
        return f"ite {_atom(t.cond)} {_atom(t.then)} {_atom(t.orelse)}"
    if isinstance(t, Pr):
        return f"pr {_atom(t.arg)}"
    if isinstance(t, App):
        if (isinstance(t.fn, App) and isinstance(t.fn.fn, Const)
                and t.fn.fn.name in INFIX):
            return f"({_operand(t.fn.arg)} {t.fn.fn.name} {_operand(t.arg)})"
        return f"{_head(t.fn)} {_atom(t.arg)}"
    printer = getattr(t, "pretty", None)
    if printer is not None:
        return printer(pretty)
    raise TypeError(f"not a term: {t!r}")


def _atom(t) -> str:
    s = pretty(t)
    if _is_atom(t) or s.startswith("(") and _balanced_outer(s):
        return s
    return f"({s})"


def _operand(t) -> str:
    return f"({pretty(t)})" if isinstance(t, Lam) else pretty(t)


def _head(t) -> str:
    if isinstance(t, App):
        return pretty(t)
    return _atom(t)


def _balanced_outer(s: str) -> bool:
    depth = 0
    for i, ch in enumerate(s):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0 and i != len(s) - 1:
                return False
    return True


# -- parsing ----------------------------------------------------------------

class PflSyntaxError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.line = line
        self.col = col


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|--[^\n]*)
  | (?P<num>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>->|→|λ|ι|ν|ρ|[()\[\],:.=+\-*/<\\])
""", re.VERBOSE)

KEYWORDS = {"lam", "let", "in", "ite", "pr", "fix", "tt", "ff", "true", "false"}
TYPE_NAMES = {"unit": UNIT, "ι": UNIT, "bool": BOOL, "o": BOOL,
              "nat": NAT, "ν": NAT, "real": REAL, "ρ": REAL}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise PflSyntaxError(f"unexpected character {source[pos]!r}",
                                 line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            toks.append(_Tok(kind, text, line, pos - line_start + 1))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, source: str):
        self.toks = tokenize(source)
        self.i = 0

    def peek(self, k: int = 0) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.peek()
        self.i += 1
        return t

    def error(self, msg: str, tok: Optional[_Tok] = None):
        tok = tok or self.peek()
        raise PflSyntaxError(msg, tok.line, tok.col)

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text:
            self.error(f"expected {text!r}, found {t.text or 'end of input'!r}", t)
        return t

    def at(self, *texts: str) -> bool:
        return self.peek().text in texts

    # types
    def type_(self) -> PflType:
        dom = self.type_atom()
        if self.at("->", "→"):
            self.next()
            return Arrow(dom, self.type_())
        return dom

    def type_atom(self) -> PflType:
        t = self.next()
        if t.text == "(":
            ty = self.type_()
            self.expect(")")
            return ty
        ty = TYPE_NAMES.get(t.text)
        if ty is None:
            self.error(f"unknown type {t.text!r}", t)
        return ty

    # terms
    def program(self) -> PflTerm:
        e = self.expr({})
        if self.peek().kind != "eof":
            self.error(f"unexpected {self.peek().text!r}")
        return e

    def binder(self):
        t = self.next()
        if t.kind != "name" or t.text in KEYWORDS or t.text in NAMED_CONSTS:
            self.error(f"expected a variable name, found {t.text!r}", t)
        self.expect(":")
        return t.text

    def expr(self, env) -> PflTerm:
        if self.at("lam", "λ", "\\"):
            self.next()
            x = self.binder()
            ty = self.type_()
            self.expect(".")
            body = self.expr({**env, x: ty})
            return Lam(x, ty, body)
        if self.at("let"):
            self.next()
            x = self.binder()
            ty = self.type_()
            self.expect("=")
            bound = self.expr(env)
            self.expect("in")
            body = self.expr({**env, x: ty})
            return App(Lam(x, ty, body), bound)
        return self.compare(env)

    def compare(self, env) -> PflTerm:
        lhs = self.arith(env)
        if self.at("<"):
            self.next()
            rhs = self.arith(env)
            if isinstance(lhs, Nat) and lhs.value == 0:
                return App(Const("(0<)"), rhs)
            return App(Const("(0<)"), binop("-", rhs, lhs))
        return lhs

    def arith(self, env) -> PflTerm:
        e = self.product(env)
        while self.at("+", "-"):
            op = self.next().text
            e = binop(op, e, self.product(env))
        return e

    def product(self, env) -> PflTerm:
        e = self.application(env)
        while self.at("*", "/"):
            op = self.next().text
            e = binop(op, e, self.application(env))
        return e

    def starts_atom(self) -> bool:
        t = self.peek()
        if t.kind in ("num",):
            return True
        if t.kind == "name":
            return t.text not in ("lam", "let", "in")
        return t.text in ("(", "[")

    def application(self, env) -> PflTerm:
        if self.at("ite"):
            self.next()
            c = self.atom(env)
            a = self.atom(env)
            b = self.atom(env)
            e = Ite(c, a, b)
        elif self.at("pr"):
            self.next()
            e = Pr(self.atom(env))
        else:
            if not self.starts_atom():
                self.error(f"expected a term, found {self.peek().text or 'end of input'!r}")
            e = self.atom(env)
        while self.starts_atom() and not self.at("ite", "pr"):
            e = App(e, self.atom(env))
        return e

    def rational(self) -> Fraction:
        neg = False
        if self.at("-"):
            self.next()
            neg = True
        t = self.next()
        if t.kind != "num":
            self.error("expected a rational endpoint", t)
        if self.at("/"):
            self.next()
            d = self.next()
            if d.kind != "num" or int(d.text) == 0:
                self.error("bad denominator", d)
            q = Fraction(int(t.text), int(d.text))
        elif self.at(".") and self.peek(1).kind == "num":
            self.next()
            frac = self.next().text
            q = Fraction(int(t.text + frac), 10 ** len(frac))
        else:
            q = Fraction(int(t.text))
        return -q if neg else q

    def atom(self, env) -> PflTerm:
        t = self.peek()
        if t.kind == "num":
            self.next()
            return Nat(int(t.text))
        if t.text == "[":
            self.next()
            lo = self.rational()
            hi = lo
            if self.at(","):
                self.next()
                hi = self.rational()
            close = self.expect("]")
            if lo > hi:
                self.error(f"interval endpoints out of order: [{lo}, {hi}]", close)
            return Real(RationalInterval(lo, hi))
        if t.text == "(":
            self.next()
            if self.at(")"):
                self.next()
                return Unit()
            if self.at("+", "-", "*", "/") and self.peek(1).text == ")":
                op = self.next().text
                self.next()
                return Const(op)
            if (self.peek().kind == "num" and self.peek().text == "0"
                    and self.peek(1).text == "<" and self.peek(2).text == ")"):
                self.i += 3
                return Const("(0<)")
            e = self.expr(env)
            self.expect(")")
            return e
        if t.kind == "name":
            self.next()
            name = t.text
            if name in ("tt", "true"):
                return Bool(True)
            if name in ("ff", "false"):
                return Bool(False)
            if name == "fix":
                self.expect("[")
                ty = self.type_()
                self.expect("]")
                return Fix(ty)
            if name in env:
                return Var(name, env[name])
            if name in NAMED_CONSTS:
                return Const(name)
            if name in KEYWORDS:
                self.error(f"unexpected keyword {name!r}", t)
            return Var(name, None)
        self.error(f"unexpected {t.text or 'end of input'!r}", t)


def parse(source: str) -> PflTerm:
    return _Parser(source).program()


def parse_type(source: str) -> PflType:
    p = _Parser(source)
    ty = p.type_()
    if p.peek().kind != "eof":
        p.error(f"unexpected {p.peek().text!r}")
    return ty


# -- typing -----------------------------------------------------------------

class PflTypeError(Exception):
    def __init__(self, message: str, term=None):
        where = f" in {pretty(term)}" if term is not None else ""
        super().__init__(message + where)
        self.term = term


def typecheck(t, env: Optional[dict] = None) -> PflType:
    """The simple type of ``t`` (machine annotations are transparent)."""
    env = env or {}
    if isinstance(t, Var):
        if t.name not in env:
            raise PflTypeError(f"unbound variable {t.name!r}", t)
        ty = env[t.name]
        if t.ty is not None and t.ty != ty:
            raise PflTypeError(f"variable {t.name!r} annotated {t.ty}, bound at {ty}", t)
        return ty
    if isinstance(t, Const):
        try:
            return CONST_TYPES[t.name]
        except KeyError:
            raise PflTypeError(f"unknown constant {t.name!r}", t) from None
    if isinstance(t, Fix):
        return Arrow(Arrow(t.ty, t.ty), t.ty)
    if isinstance(t, Real):
        return REAL
    if isinstance(t, Nat):
        if t.value < 0:
            raise PflTypeError("negative numeral", t)
        return NAT
    if isinstance(t, Bool):
        return BOOL
    if isinstance(t, Unit):
        return UNIT
    if isinstance(t, Lam):
        return Arrow(t.ty, typecheck(t.body, {**env, t.var: t.ty}))
    if isinstance(t, App):
        f = typecheck(t.fn, env)
        a = typecheck(t.arg, env)
        if not isinstance(f, Arrow):
            raise PflTypeError(f"applying a non-function of type {f}", t)
        if f.dom != a:
            raise PflTypeError(f"argument has type {a}, expected {f.dom}", t)
        return f.cod
    if isinstance(t, Ite):
        c = typecheck(t.cond, env)
        if c != BOOL:
            raise PflTypeError(f"condition has type {c}, expected bool", t)
        a = typecheck(t.then, env)
        b = typecheck(t.orelse, env)
        if a != b:
            raise PflTypeError(f"branches have types {a} and {b}", t)
        return a
    if isinstance(t, Pr):
        a = typecheck(t.arg, env)
        if a != REAL:
            raise PflTypeError(f"pr expects real, found {a}", t)
        return REAL
    typer = getattr(t, "typecheck", None)
    if typer is not None:
        return typer(typecheck, env)
    raise PflTypeError(f"not a term: {t!r}")


def check_program(t: PflTerm, ground: bool = True) -> PflType:
    """Typecheck a closed program, optionally requiring a ground type."""
    ty = typecheck(t)
    if ground and ty not in GROUND:
        raise PflTypeError(f"program has non-ground type {ty}")
    return ty
