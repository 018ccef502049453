"""Axiom-directed normalization of closed terms to basic terms.

Every axiom is a root-level rule ``t -> t'`` keyed by its id.  ``normalize``
applies them innermost-first with a fixed per-operator strategy and records
each single application, so a trace can be replayed with ``apply_axiom``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

from .errors import (
    NoMatch, NotClosed, NotStatic, OpenProblem, RecursionPresent, SideConditionFailed, StuckTerm,
)
from .registry import PROJECTION, UNITARY, ActionRegistry
from .sos import Configuration, resolve, validate_term
from .syntax import to_text
from .terms import (
    DELTA, TAU, Abstr, Alt, Atom, CommMerge, DynAtom, Encap, EntMerge, LeftMerge, MergeMem,
    PChoice, Par, Priority, Proj, RecSpec, RecVar, Rename, Seq, Term, Unless, contains, is_basic_term,
    size,
)

D = Atom(DELTA)
T = Atom(TAU)


# ------------------------------------------------------------------ paths

def subterm(t: Term, path) -> Term:
    for i in path:
        t = t.children()[i]
    return t


def with_children(t: Term, kids) -> Term:
    it = iter(kids)
    vals = [next(it) if isinstance(getattr(t, f), Term) else getattr(t, f) for f in t._fields]
    return type(t)(*vals)


def replace_at(t: Term, path, new: Term) -> Term:
    if not path:
        return new
    kids = list(t.children())
    kids[path[0]] = replace_at(kids[path[0]], path[1:], new)
    return with_children(t, kids)


def path_text(path) -> str:
    return ".".join(str(i) for i in path) if path else "ε"


# ------------------------------------------------------------------ rules

RULES: dict = {}


def rule(*ids):
    def deco(fn):
        for i in ids:
            RULES[i] = fn
        return fn
    return deco


def _need(cond, msg="pattern does not match"):
    if not cond:
        raise NoMatch(msg)


def _side(cond, msg):
    if not cond:
        raise SideConditionFailed(msg)


def _atom(t):
    return isinstance(t, Atom)


def _prefix(t):
    """a·x with an atom a."""
    return isinstance(t, Seq) and _atom(t.left)


def deterministic(t: Term) -> bool:
    """Witness for the guard x = x + x: t resolves to a single dynamic term."""
    try:
        return len(resolve(t)) == 1
    except Exception:
        return False


class Ctx(NamedTuple):
    reg: ActionRegistry | None


def _quantum(ctx, a) -> bool:
    return ctx.reg is not None and not a.shadow and ctx.reg.knows(a) and ctx.reg.kind(a) in (UNITARY, PROJECTION)


# --- pqBPA
@rule("A1")
def _a1(t, ctx):
    _need(isinstance(t, Alt))
    return Alt(t.right, t.left)


@rule("A2")
def _a2(t, ctx):
    _need(isinstance(t, Alt) and isinstance(t.left, Alt))
    return Alt(t.left.left, Alt(t.left.right, t.right))


@rule("AA3")
def _aa3(t, ctx):
    _need(isinstance(t, Alt) and _atom(t.left) and t.left is t.right)
    return t.left


@rule("A4")
def _a4(t, ctx):
    _need(isinstance(t, Seq) and isinstance(t.left, Alt))
    return Alt(Seq(t.left.left, t.right), Seq(t.left.right, t.right))


@rule("A5")
def _a5(t, ctx):
    _need(isinstance(t, Seq) and isinstance(t.left, Seq))
    return Seq(t.left.left, Seq(t.left.right, t.right))


@rule("A6")
def _a6(t, ctx):
    _need(isinstance(t, Alt) and t.right is D)
    return t.left


@rule("A7")
def _a7(t, ctx):
    _need(isinstance(t, Seq) and t.left is D)
    return D


@rule("PrAC1")
def _prac1(t, ctx):
    _need(isinstance(t, PChoice))
    return PChoice(t.right, 1 - t.prob, t.left)


@rule("PrAC2")
def _prac2(t, ctx):
    _need(isinstance(t, PChoice) and isinstance(t.right, PChoice))
    p, r = t.prob, t.right.prob
    s = p + r - p * r
    return PChoice(PChoice(t.left, p / s, t.right.left), s, t.right.right)


@rule("PrAC3")
def _prac3(t, ctx):
    _need(isinstance(t, PChoice) and t.left is t.right)
    return t.left


@rule("PrAC4")
def _prac4(t, ctx):
    _need(isinstance(t, Seq) and isinstance(t.left, PChoice))
    x = t.left
    return PChoice(Seq(x.left, t.right), x.prob, Seq(x.right, t.right))


@rule("PrAC5")
def _prac5(t, ctx):
    _need(isinstance(t, Alt) and isinstance(t.left, PChoice))
    x = t.left
    return PChoice(Alt(x.left, t.right), x.prob, Alt(x.right, t.right))


# --- projection
@rule("PR1")
def _pr1(t, ctx):
    _need(isinstance(t, Proj) and _atom(t.body))
    return t.body


@rule("PR2")
def _pr2(t, ctx):
    _need(isinstance(t, Proj) and _prefix(t.body))
    _side(t.n == 1, "PR2 needs Π_1")
    return t.body.left


@rule("PR3")
def _pr3(t, ctx):
    _need(isinstance(t, Proj) and _prefix(t.body))
    _side(t.n > 1, "PR3 needs Π_{n+1}")
    return Seq(t.body.left, Proj(t.n - 1, t.body.right))


# --- merges
@rule("PrMM1")
def _prmm1(t, ctx):
    _need(isinstance(t, Par))
    return MergeMem(t.left, t.left, t.right, t.right)


@rule("PrMM2")
def _prmm2(t, ctx):
    _need(isinstance(t, MergeMem) and isinstance(t.x, PChoice))
    x = t.x
    return PChoice(MergeMem(x.left, t.z, t.y, t.w), x.prob, MergeMem(x.right, t.z, t.y, t.w))


@rule("PrMM3")
def _prmm3(t, ctx):
    _need(isinstance(t, MergeMem) and isinstance(t.y, PChoice))
    y = t.y
    return PChoice(MergeMem(t.x, t.z, y.left, t.w), y.prob, MergeMem(t.x, t.z, y.right, t.w))


@rule("PrMM4")
def _prmm4(t, ctx):
    _need(isinstance(t, MergeMem))
    _side(deterministic(t.x) and deterministic(t.y), "guard x = x + x, y = y + y not witnessed")
    x, z, y, w = t.x, t.z, t.y, t.w
    return Alt(LeftMerge(x, w), Alt(LeftMerge(y, z), Alt(CommMerge(x, y), EntMerge(x, y))))


@rule("PrMM4-ACP")
def _prmm4_acp(t, ctx):
    _need(isinstance(t, MergeMem))
    _side(deterministic(t.x) and deterministic(t.y), "guard x = x + x, y = y + y not witnessed")
    _side(not any(a.shadow for a in _acts(t)), "the form without ≬ needs shadow-free operands")
    x, z, y, w = t.x, t.z, t.y, t.w
    return Alt(LeftMerge(x, w), Alt(LeftMerge(y, z), CommMerge(x, y)))


def _acts(t):
    """Actions occurring as atoms (encapsulation sets and renamings excluded)."""
    if isinstance(t, Atom):
        return {t.action}
    out = set()
    for c in t.children():
        out |= _acts(c)
    return out


@rule("CF")
def _cf(t, ctx):
    _need(isinstance(t, CommMerge) and _atom(t.left) and _atom(t.right))
    c = _gamma(ctx, t.left.action, t.right.action)
    return D if c is None else Atom(c)


def _gamma(ctx, a, b):
    if ctx.reg is None or DELTA in (a, b) or TAU in (a, b):
        return None
    return ctx.reg.comm(a, b)


@rule("CM2")
def _cm2(t, ctx):
    _need(isinstance(t, LeftMerge) and _atom(t.left))
    return Seq(t.left, t.right)


@rule("CM3")
def _cm3(t, ctx):
    _need(isinstance(t, LeftMerge) and _prefix(t.left))
    return Seq(t.left.left, Par(t.left.right, t.right))


@rule("CM4")
def _cm4(t, ctx):
    _need(isinstance(t, LeftMerge) and isinstance(t.left, Alt))
    return Alt(LeftMerge(t.left.left, t.right), LeftMerge(t.left.right, t.right))


@rule("PrCM1")
def _prcm1(t, ctx):
    _need(isinstance(t, LeftMerge) and isinstance(t.left, PChoice))
    x = t.left
    return PChoice(LeftMerge(x.left, t.right), x.prob, LeftMerge(x.right, t.right))


@rule("CM5")
def _cm5(t, ctx):
    _need(isinstance(t, CommMerge) and _atom(t.left) and _prefix(t.right))
    return Seq(CommMerge(t.left, t.right.left), t.right.right)


@rule("CM6")
def _cm6(t, ctx):
    _need(isinstance(t, CommMerge) and _prefix(t.left) and _atom(t.right))
    return Seq(CommMerge(t.left.left, t.right), t.left.right)


@rule("CM7")
def _cm7(t, ctx):
    _need(isinstance(t, CommMerge) and _prefix(t.left) and _prefix(t.right))
    return Seq(CommMerge(t.left.left, t.right.left), Par(t.left.right, t.right.right))


def _distribute(cls, side, guard_name):
    """(x ⊞ y) op z, z op (x ⊞ y), (x + y) op z, z op (x + y)."""
    def fn(t, ctx):
        _need(isinstance(t, cls))
        inner = t.left if side == "left" else t.right
        other = t.right if side == "left" else t.left
        mk = (lambda u: cls(u, other)) if side == "left" else (lambda u: cls(other, u))
        if guard_name is None:
            _need(isinstance(inner, PChoice))
            return PChoice(mk(inner.left), inner.prob, mk(inner.right))
        _need(isinstance(inner, Alt))
        _side(deterministic(other), f"guard {guard_name} not witnessed")
        return Alt(mk(inner.left), mk(inner.right))
    return fn


RULES["PrCM2"] = _distribute(CommMerge, "left", None)
RULES["PrCM3"] = _distribute(CommMerge, "right", None)
RULES["PrCM4"] = _distribute(CommMerge, "left", "z = z + z")
RULES["PrCM5"] = _distribute(CommMerge, "right", "z = z + z")
RULES["PrEM1"] = _distribute(EntMerge, "left", None)
RULES["PrEM2"] = _distribute(EntMerge, "right", None)
RULES["PrEM3"] = _distribute(EntMerge, "left", "z = z + z")
RULES["PrEM4"] = _distribute(EntMerge, "right", "z = z + z")


# --- encapsulation, abstraction, renaming
@rule("D1")
def _d1(t, ctx):
    _need(isinstance(t, Encap) and _atom(t.body))
    _side(t.body.action not in t.actions, "D1 needs a ∉ H")
    return t.body


@rule("D2")
def _d2(t, ctx):
    _need(isinstance(t, Encap) and _atom(t.body))
    _side(t.body.action in t.actions, "D2 needs a ∈ H")
    return D


def _push(cls_outer, cls_inner, mk_inner):
    def fn(t, ctx):
        _need(isinstance(t, cls_outer) and isinstance(t.body, cls_inner))
        b = t.body
        wrap = (lambda u: type(t)(*[u if f == "body" else getattr(t, f) for f in t._fields]))
        return mk_inner(b, wrap)
    return fn


def _alt(b, wrap):
    return Alt(wrap(b.left), wrap(b.right))


def _seq(b, wrap):
    return Seq(wrap(b.left), wrap(b.right))


def _pch(b, wrap):
    return PChoice(wrap(b.left), b.prob, wrap(b.right))


RULES["D3"] = _push(Encap, Alt, _alt)
RULES["D4"] = _push(Encap, Seq, _seq)
RULES["PrD5"] = _push(Encap, PChoice, _pch)
RULES["TI3"] = _push(Abstr, Alt, _alt)
RULES["TI4"] = _push(Abstr, Seq, _seq)
RULES["PrTI"] = _push(Abstr, PChoice, _pch)
RULES["RN3"] = _push(Rename, Alt, _alt)
RULES["RN4"] = _push(Rename, Seq, _seq)
RULES["PrRN1"] = _push(Rename, PChoice, _pch)
RULES["TH2"] = _push(Priority, Seq, _seq)
RULES["PrTH4"] = _push(Priority, PChoice, _pch)
RULES["PR4"] = _push(Proj, Alt, _alt)
RULES["prPR"] = _push(Proj, PChoice, _pch)


@rule("T1")
def _t1(t, ctx):
    _need(isinstance(t, Seq) and t.right is T)
    return t.left


@rule("TI0")
def _ti0(t, ctx):
    _need(isinstance(t, Abstr) and t.body is T)
    return T


@rule("TI1")
def _ti1(t, ctx):
    _need(isinstance(t, Abstr) and _atom(t.body))
    _side(t.body.action not in t.actions, "TI1 needs a ∉ I")
    return t.body


@rule("TI2")
def _ti2(t, ctx):
    _need(isinstance(t, Abstr) and _atom(t.body))
    _side(t.body.action in t.actions, "TI2 needs a ∈ I")
    return T


@rule("RN1")
def _rn1(t, ctx):
    _need(isinstance(t, Rename) and _atom(t.body))
    _side(t.body is not D, "RN1 renames proper actions")
    return Atom(t.f(t.body.action))


@rule("RN2")
def _rn2(t, ctx):
    _need(isinstance(t, Rename) and t.body is D)
    return D


# --- priorities
@rule("TH1")
def _th1(t, ctx):
    _need(isinstance(t, Priority) and _atom(t.body))
    return t.body


@rule("DyTH3")
def _dyth3(t, ctx):
    _need(isinstance(t, Priority) and isinstance(t.body, Alt))
    x, y = t.body.left, t.body.right
    _side(deterministic(x) and deterministic(y), "guard x = x + x, y = y + y not witnessed")
    return Alt(Unless(Priority(x), y), Unless(Priority(y), x))


def _lt(ctx, a, b):
    return ctx.reg is not None and ctx.reg.lt(a, b)


@rule("P1")
def _p1(t, ctx):
    _need(isinstance(t, Unless) and _atom(t.left) and _atom(t.right))
    _side(not _lt(ctx, t.left.action, t.right.action), "P1 needs ¬(a < b)")
    return t.left


@rule("P2")
def _p2(t, ctx):
    _need(isinstance(t, Unless) and _atom(t.left) and _atom(t.right))
    _side(_lt(ctx, t.left.action, t.right.action), "P2 needs a < b")
    return D


@rule("P3")
def _p3(t, ctx):
    _need(isinstance(t, Unless) and isinstance(t.right, Seq))
    return Unless(t.left, t.right.left)


@rule("P4")
def _p4(t, ctx):
    _need(isinstance(t, Unless) and isinstance(t.right, Alt))
    return Unless(Unless(t.left, t.right.left), t.right.right)


@rule("P5")
def _p5(t, ctx):
    _need(isinstance(t, Unless) and isinstance(t.left, Seq))
    return Seq(Unless(t.left.left, t.right), t.left.right)


@rule("P6")
def _p6(t, ctx):
    _need(isinstance(t, Unless) and isinstance(t.left, Alt))
    return Alt(Unless(t.left.left, t.right), Unless(t.left.right, t.right))


# --- entanglement merge
def _em_parts(t):
    """(action, continuation or None) of an atom or a prefix."""
    if _atom(t):
        return t.action, None
    if _prefix(t):
        return t.left.action, t.right
    return None


def _em(q_left: bool, lcont: bool, rcont: bool):
    def fn(t, ctx):
        _need(isinstance(t, EntMerge))
        lp, rp = _em_parts(t.left), _em_parts(t.right)
        _need(lp is not None and rp is not None)
        _need((lp[1] is not None) == lcont and (rp[1] is not None) == rcont)
        q, s = (lp, rp) if q_left else (rp, lp)
        _need(s[0].shadow and s[0].base == q[0] and _quantum(ctx, q[0]), "no α / ◎S_α pair")
        a = Atom(q[0])
        x, y = lp[1], rp[1]
        if x is None and y is None:
            return a
        if x is None or y is None:
            return Seq(a, x if y is None else y)
        return Seq(a, Par(x, y))
    return fn


RULES["EM1"] = _em(True, False, False)
RULES["EM2"] = _em(False, False, False)
RULES["EM3"] = _em(True, False, True)
RULES["EM4"] = _em(False, False, True)
RULES["EM5"] = _em(True, True, False)
RULES["EM6"] = _em(False, True, False)
RULES["EM7"] = _em(True, True, True)
RULES["EM8"] = _em(False, True, True)


@rule("EM-δ")
def _em_delta(t, ctx):
    _need(isinstance(t, EntMerge))
    lp, rp = _em_parts(t.left), _em_parts(t.right)
    _need(lp is not None and rp is not None)
    for q, s in ((lp, rp), (rp, lp)):
        _side(not (s[0].shadow and s[0].base == q[0] and _quantum(ctx, q[0])), "operands do pair")
    return D


# ------------------------------------------------------------------ strategy

_EM_IDS = ["EM1", "EM2", "EM3", "EM4", "EM5", "EM6", "EM7", "EM8", "EM-δ"]

STRATEGY: dict = {
    Seq: ["PrAC4", "A4", "A5", "A7", "T1"],
    PChoice: ["PrAC3", "PrAC2"],
    Proj: ["prPR", "PR4", "PR1", "PR2", "PR3"],
    Par: ["PrMM1"],
    MergeMem: ["PrMM2", "PrMM3", "PrMM4"],
    LeftMerge: ["PrCM1", "CM4", "CM3", "CM2"],
    CommMerge: ["PrCM2", "PrCM3", "PrCM4", "PrCM5", "CM7", "CM6", "CM5", "CF"],
    EntMerge: ["PrEM1", "PrEM2", "PrEM3", "PrEM4"] + _EM_IDS,
    Encap: ["PrD5", "D3", "D4", "D1", "D2"],
    Abstr: ["PrTI", "TI3", "TI4", "TI0", "TI1", "TI2"],
    Rename: ["PrRN1", "RN3", "RN4", "RN2", "RN1"],
    Priority: ["PrTH4", "DyTH3", "TH2", "TH1"],
    Unless: ["P3", "P4", "P5", "P6", "P1", "P2"],
}


def _alt_strategy(t):
    if isinstance(t.left, PChoice):
        return ["PrAC5"]
    if isinstance(t.right, PChoice):
        return ["A1"]
    if isinstance(t.left, Alt):
        return ["A2"]
    if t.right is D:
        return ["A6"]
    if t.left is D:
        return ["A1"]
    return ["AA3"]


def strategy(t: Term) -> list:
    if isinstance(t, Alt):
        return _alt_strategy(t)
    return STRATEGY.get(type(t), [])


# ------------------------------------------------------------------ trace

class RewriteStep(NamedTuple):
    axiom: str
    path: tuple
    before: Term
    after: Term

    def __str__(self):
        return f"{self.axiom} @ {path_text(self.path)} : {to_text(self.before)} => {to_text(self.after)}"


class RewriteTrace(list):
    def lines(self) -> list:
        return [str(s) for s in self]

    def replay(self, t: Term, registry: ActionRegistry | None = None) -> Term:
        for s in self:
            t = apply_axiom(t, s.axiom, s.path, registry)
        return t


# ------------------------------------------------------------------ API

def apply_axiom(t: Term, axiom: str, path=(), registry: ActionRegistry | None = None) -> Term:
    """Rewrite the subterm at ``path`` with one axiom, left to right."""
    try:
        fn = RULES[axiom]
    except KeyError:
        raise NoMatch(f"unknown axiom {axiom!r}") from None
    path = tuple(path)
    try:
        sub = subterm(t, path)
    except IndexError:
        raise NoMatch(f"no subterm at position {path_text(path)}") from None
    return replace_at(t, path, fn(sub, Ctx(registry)))


def _check_input(t: Term):
    if contains(t, (RecSpec,)):
        raise RecursionPresent("normalization works on recursion-free terms")
    if contains(t, (RecVar,)):
        raise NotClosed("term has free recursion variables")
    if contains(t, (DynAtom,)):
        raise NotStatic("normalization works on static terms")


class _Normalizer:
    def __init__(self, registry):
        self.ctx = Ctx(registry)
        self.trace = RewriteTrace()
        self.normal: set = set()

    def run(self, t, path=()):
        while True:
            if t in self.normal:
                return t
            kids = t.children()
            if kids:
                new = tuple(self.run(c, path + (i,)) for i, c in enumerate(kids))
                if new != kids:
                    t = with_children(t, new)
            nxt = self.step(t, path)
            if nxt is None:
                if not is_basic_term(t):
                    raise StuckTerm(f"no axiom applies to {to_text(t)}", t)
                self.normal.add(t)
                return t
            t = nxt

    def step(self, t, path):
        if isinstance(t, Abstr) and contains(t.body, (Alt,)) and contains(t.body, (PChoice,)):
            raise OpenProblem("abstraction over a term mixing + and ⊞ has no axiomatization "
                              f"(open problem): {to_text(t)}", t)
        for rid in strategy(t):
            try:
                new = RULES[rid](t, self.ctx)
            except (NoMatch, SideConditionFailed):
                continue
            self.trace.append(RewriteStep(rid, path, t, new))
            return new
        return None


def normalize(t: Term, registry: ActionRegistry | None = None) -> tuple:
    """Basic term equal to t under the axioms, and the rewrite trace."""
    _check_input(t)
    if registry is not None:
        validate_term(t, registry)
    n = _Normalizer(registry)
    return n.run(t), n.trace


def soundness_graphs(t: Term, application, registry: ActionRegistry, *, path=(), state=None,
                     depth: int | None = None) -> tuple:
    """Configuration graphs of ``t`` and its rewrite, built from the same state.

    ``application`` is an axiom id (applied at ``path``) or the right-hand
    side term itself.
    """
    from .graph import build_graph

    rhs = apply_axiom(t, application, path, registry) if isinstance(application, str) else application
    s = registry.initial_state() if state is None else state
    d = depth or max(size(t), size(rhs)) + 1
    return (build_graph(Configuration(t, s), d, registry),
            build_graph(Configuration(rhs, s), d, registry))


def check_soundness(t: Term, application, registry: ActionRegistry, **kw) -> bool:
    """Strong bisimilarity of ``t`` and its rewrite (see ``soundness_graphs``)."""
    from .bisim import strong_bisim

    return strong_bisim(*soundness_graphs(t, application, registry, **kw)).equivalent


# ------------------------------------------------------------------ catalog

@dataclass(frozen=True)
class AxiomInfo:
    table: str
    instance: Callable      # gen -> left-hand side term satisfying the side conditions


def _cat():
    from .terms import Atom as A

    def pc(g):
        return g.prob()

    c = {}

    def add(ids, table, fn):
        for i in ids.split():
            c[i] = AxiomInfo(table, fn)

    # fpBPA / pBPA
    add("A5", "fpBPA", lambda g: Seq(Seq(g.x(), g.x()), g.x()))
    add("PrAC1", "fpBPA", lambda g: PChoice(g.x(), pc(g), g.x()))
    add("PrAC2", "fpBPA", lambda g: PChoice(g.x(), pc(g), PChoice(g.x(), pc(g), g.x())))
    add("PrAC3", "fpBPA", lambda g: (lambda x: PChoice(x, pc(g), x))(g.x()))
    add("PrAC4", "fpBPA", lambda g: Seq(PChoice(g.x(), pc(g), g.x()), g.x()))
    add("A1", "pBPA-δ", lambda g: Alt(g.x(), g.x()))
    add("A2", "pBPA-δ", lambda g: Alt(Alt(g.x(), g.x()), g.x()))
    add("AA3", "pBPA-δ", lambda g: (lambda a: Alt(a, a))(A(g.action())))
    add("A4", "pBPA-δ", lambda g: Seq(Alt(g.x(), g.x()), g.x()))
    add("PrAC5", "pBPA-δ", lambda g: Alt(PChoice(g.x(), pc(g), g.x()), g.x()))
    add("A6", "pBPA", lambda g: Alt(g.x(), D))
    add("A7", "pBPA", lambda g: Seq(D, g.x()))
    # projection
    add("PR1", "PR", lambda g: Proj(g.n(), A(g.action())))
    add("PR2", "PR", lambda g: Proj(1, Seq(A(g.action()), g.x())))
    add("PR3", "PR", lambda g: Proj(g.n() + 1, Seq(A(g.action()), g.x())))
    add("PR4", "PR", lambda g: Proj(g.n(), Alt(g.x(), g.x())))
    add("prPR", "PR", lambda g: Proj(g.n(), PChoice(g.x(), pc(g), g.x())))
    # pACP+
    add("PrMM1", "pACP+", lambda g: Par(g.x(), g.x()))
    add("PrMM2", "pACP+", lambda g: MergeMem(PChoice(g.x(), pc(g), g.x()), g.x(), g.x(), g.x()))
    add("PrMM3", "pACP+", lambda g: MergeMem(g.x(), g.x(), PChoice(g.x(), pc(g), g.x()), g.x()))
    add("PrMM4-ACP", "pACP+", lambda g: MergeMem(g.x(det=True, shadows=False), g.x(shadows=False),
                                                g.x(det=True, shadows=False), g.x(shadows=False)))
    add("CF", "pACP+", lambda g: CommMerge(A(g.action()), A(g.action())))
    add("CM2", "pACP+", lambda g: LeftMerge(A(g.action()), g.x()))
    add("CM3", "pACP+", lambda g: LeftMerge(Seq(A(g.action()), g.x()), g.x()))
    add("CM4", "pACP+", lambda g: LeftMerge(Alt(g.x(), g.x()), g.x()))
    add("PrCM1", "pACP+", lambda g: LeftMerge(PChoice(g.x(), pc(g), g.x()), g.x()))
    add("CM5", "pACP+", lambda g: CommMerge(A(g.action()), Seq(A(g.action()), g.x())))
    add("CM6", "pACP+", lambda g: CommMerge(Seq(A(g.action()), g.x()), A(g.action())))
    add("CM7", "pACP+", lambda g: CommMerge(Seq(A(g.action()), g.x()), Seq(A(g.action()), g.x())))
    add("PrCM2", "pACP+", lambda g: CommMerge(PChoice(g.x(), pc(g), g.x()), g.x()))
    add("PrCM3", "pACP+", lambda g: CommMerge(g.x(), PChoice(g.x(), pc(g), g.x())))
    add("PrCM4", "pACP+", lambda g: CommMerge(Alt(g.x(), g.x()), g.x(det=True)))
    add("PrCM5", "pACP+", lambda g: CommMerge(g.x(det=True), Alt(g.x(), g.x())))
    add("D1", "pACP+", lambda g: (lambda a: Encap(g.H(exclude=a), A(a)))(g.action()))
    add("D2", "pACP+", lambda g: (lambda a: Encap(g.H() | {a}, A(a)))(g.action(delta=False)))
    add("D3", "pACP+", lambda g: Encap(g.H(), Alt(g.x(), g.x())))
    add("D4", "pACP+", lambda g: Encap(g.H(), Seq(g.x(), g.x())))
    add("PrD5", "pACP+", lambda g: Encap(g.H(), PChoice(g.x(), pc(g), g.x())))
    # quantum entanglement
    add("PrMM4", "QE", lambda g: MergeMem(g.x(det=True), g.x(), g.x(det=True), g.x()))
    for i, (lc, rc, ql) in enumerate([(0, 0, 1), (0, 0, 0), (0, 1, 1), (0, 1, 0),
                                      (1, 0, 1), (1, 0, 0), (1, 1, 1), (1, 1, 0)], 1):
        add(f"EM{i}", "QE", _em_instance(lc, rc, ql))
    add("PrEM1", "QE", lambda g: EntMerge(PChoice(g.x(), pc(g), g.x()), g.x()))
    add("PrEM2", "QE", lambda g: EntMerge(g.x(), PChoice(g.x(), pc(g), g.x())))
    add("PrEM3", "QE", lambda g: EntMerge(Alt(g.x(), g.x()), g.x(det=True)))
    add("PrEM4", "QE", lambda g: EntMerge(g.x(det=True), Alt(g.x(), g.x())))
    # renaming
    add("RN1", "RN", lambda g: Rename(g.f(), A(g.action(delta=False))))
    add("RN2", "RN", lambda g: Rename(g.f(), D))
    add("RN3", "RN", lambda g: Rename(g.f(), Alt(g.x(), g.x())))
    add("RN4", "RN", lambda g: Rename(g.f(), Seq(g.x(), g.x())))
    add("PrRN1", "RN", lambda g: Rename(g.f(), PChoice(g.x(), pc(g), g.x())))
    # priorities
    add("TH1", "Θ", lambda g: Priority(A(g.action())))
    add("TH2", "Θ", lambda g: Priority(Seq(g.x(), g.x())))
    add("PrTH4", "Θ", lambda g: Priority(PChoice(g.x(), pc(g), g.x())))
    add("DyTH3", "Θ", lambda g: Priority(Alt(g.x(det=True), g.x(det=True))))
    add("P1", "Θ", lambda g: Unless(*g.unordered_pair()))
    add("P2", "Θ", lambda g: Unless(*g.ordered_pair()))
    add("P3", "Θ", lambda g: Unless(g.x(), Seq(g.x(), g.x())))
    add("P4", "Θ", lambda g: Unless(g.x(), Alt(g.x(), g.x())))
    add("P5", "Θ", lambda g: Unless(Seq(g.x(), g.x()), g.x()))
    add("P6", "Θ", lambda g: Unless(Alt(g.x(), g.x()), g.x()))
    return c


def _em_instance(lcont, rcont, q_left):
    def make(g):
        a = g.quantum()
        q, s = Atom(a), Atom(a.shadow_of())
        left, right = (q, s) if q_left else (s, q)
        if lcont:
            left = Seq(left, g.x())
        if rcont:
            right = Seq(right, g.x())
        return EntMerge(left, right)
    return make


AXIOMS: dict = _cat()
