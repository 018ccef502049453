"""Structured operational semantics: probabilistic (⇝) and action (→α) steps."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

from .errors import NotDynamic, NotStatic, RegistryError
from .quantum import EPS_Q, QState, apply_projection, apply_unitary, measure_probability
from .registry import (
    CLASSICAL, DEADLOCK, PROJECTION, SHADOW, SILENT, UNITARY, ActionRegistry,
)
from .terms import (
    Abstr, ActionName, Alt, Atom, CommMerge, DynAtom, Encap, EntMerge, LeftMerge,
    MergeMem, PChoice, Par, Priority, Proj, RecSpec, RecVar, Rename, Seq, TAU, Term,
    Unless, actions_of, is_dynamic, unfold,
)
from .syntax import to_text


@dataclass(frozen=True)
class Configuration:
    term: Term
    state: QState


class Step(NamedTuple):
    """One action transition of a dynamic term.

    ``target`` is None for termination (√).  ``state`` is None when the step
    is a projection with zero probability: such steps are kept internally so
    operators can propagate them, and filtered out before they reach users.
    """
    label: ActionName
    target: Term | None
    state: QState | None
    origin: ActionName          # label before abstraction / renaming
    synced: bool = False        # produced by the ≬ synchronization rule

    @property
    def impossible(self) -> bool:
        return self.state is None


# ------------------------------------------------------------ probabilistic

@lru_cache(maxsize=200_000)
def resolve(t: Term) -> tuple:
    """μ*-distribution of a static term: sorted tuple of (dynamic term, weight)."""
    if is_dynamic(t):
        raise NotStatic(f"term is dynamic: {to_text(t)}")
    d = _resolve(t)
    return tuple(sorted(d.items(), key=lambda kv: to_text(kv[0])))


def _add(acc, t, w):
    acc[t] = acc.get(t, 0) + w


def _product(dx, dy, make):
    out = {}
    for x, wx in dx:
        for y, wy in dy:
            _add(out, make(x, y), wx * wy)
    return out


def _resolve(t: Term) -> dict:
    if isinstance(t, Atom):
        return {DynAtom(t.action): Fraction(1)}
    if isinstance(t, Seq):
        return {Seq(x, t.right): w for x, w in resolve(t.left)}
    if isinstance(t, Alt):
        return _product(resolve(t.left), resolve(t.right), Alt)
    if isinstance(t, PChoice):
        out = {}
        for x, w in resolve(t.left):
            _add(out, x, t.prob * w)
        for y, w in resolve(t.right):
            _add(out, y, (1 - t.prob) * w)
        return out
    if isinstance(t, Par):
        x, y = t.left, t.right
        return _product(resolve(x), resolve(y), lambda a, b: _merge_body(a, x, b, y))
    if isinstance(t, MergeMem):
        return _product(resolve(t.x), resolve(t.y), lambda a, b: _merge_body(a, t.z, b, t.w))
    if isinstance(t, (LeftMerge, Unless)):
        return {type(t)(x, t.right): w for x, w in resolve(t.left)}
    if isinstance(t, (CommMerge, EntMerge)):
        return _product(resolve(t.left), resolve(t.right), type(t))
    if isinstance(t, (Encap, Abstr)):
        return {type(t)(t.actions, x): w for x, w in resolve(t.body)}
    if isinstance(t, Proj):
        return {Proj(t.n, x): w for x, w in resolve(t.body)}
    if isinstance(t, Rename):
        return {Rename(t.mapping, x): w for x, w in resolve(t.body)}
    if isinstance(t, Priority):
        return {Priority(x): w for x, w in resolve(t.body)}
    if isinstance(t, RecSpec):
        return dict(resolve(unfold(t)))
    if isinstance(t, RecVar):
        raise RegistryError(f"free recursion variable {t.name}")
    raise TypeError(f"cannot resolve {type(t).__name__}")


def _merge_body(xd, z, yd, w):
    """x'⌊⌊w + y'⌊⌊z + x'|y' + x'≬y' (the ∥ / ][ resolution target)."""
    return Alt(LeftMerge(xd, w), Alt(LeftMerge(yd, z), Alt(CommMerge(xd, yd), EntMerge(xd, yd))))


# ------------------------------------------------------------------ engine

class Engine:
    """Evaluates action transitions against a registry."""

    def __init__(self, registry: ActionRegistry, eps: float = EPS_Q):
        self.reg = registry
        self.eps = eps

    def prob_step(self, c: Configuration) -> list:
        if is_dynamic(c.term):
            raise NotStatic(f"term is dynamic: {to_text(c.term)}")
        return [(Configuration(u, c.state), w) for u, w in resolve(c.term)]

    def steps(self, t: Term, s: QState) -> list:
        """All steps including impossible (zero-probability) projections."""
        if not is_dynamic(t):
            raise NotDynamic(f"term is static: {to_text(t)}")
        memo: dict = {}
        return self._steps(t, s, memo)

    def action_step(self, c: Configuration) -> list:
        return [st for st in self.steps(c.term, c.state) if not st.impossible]

    # ------------------------------------------------------------------
    def _steps(self, t, s, memo):
        r = memo.get(t)
        if r is None:
            r = self._compute(t, s, memo)
            memo[t] = r
        return r

    def _atom(self, a: ActionName, s: QState):
        kind = self.reg.kind(a)
        if kind == DEADLOCK:
            return []
        if kind in (SILENT, CLASSICAL, SHADOW):
            return [Step(a, None, s, a)]
        eff = self.reg.info(a).effect
        if kind == UNITARY:
            return [Step(a, None, apply_unitary(s, eff), a)]
        if kind == PROJECTION:
            if measure_probability(s, eff) <= self.eps:
                return [Step(a, None, None, a)]
            return [Step(a, None, apply_projection(s, eff, self.eps), a)]
        raise RegistryError(f"unknown kind {kind}")

    def _compute(self, t, s, memo):
        if isinstance(t, DynAtom):
            return self._atom(t.action, s)
        if isinstance(t, Seq):
            y = t.right
            return [st._replace(target=y if st.target is None else Seq(st.target, y))
                    for st in self._steps(t.left, s, memo)]
        if isinstance(t, Alt):
            return self._steps(t.left, s, memo) + self._steps(t.right, s, memo)
        if isinstance(t, LeftMerge):
            y = t.right
            return [st._replace(target=y if st.target is None else Par(st.target, y))
                    for st in self._steps(t.left, s, memo)]
        if isinstance(t, CommMerge):
            return self._comm(t, s, memo)
        if isinstance(t, EntMerge):
            return self._ent(t, s, memo)
        if isinstance(t, Encap):
            H = t.actions
            return [st._replace(target=_wrap(Encap, H, st.target))
                    for st in self._steps(t.body, s, memo)
                    if st.synced or st.label not in H]
        if isinstance(t, Abstr):
            I = t.actions
            return [st._replace(label=TAU if st.label in I else st.label,
                                target=_wrap(Abstr, I, st.target))
                    for st in self._steps(t.body, s, memo)]
        if isinstance(t, Proj):
            n = t.n
            return [st._replace(target=None if (n == 1 or st.target is None) else Proj(n - 1, st.target))
                    for st in self._steps(t.body, s, memo)]
        if isinstance(t, Rename):
            return [st._replace(label=t.f(st.label),
                                target=None if st.target is None else Rename(t.mapping, st.target))
                    for st in self._steps(t.body, s, memo)]
        if isinstance(t, Priority):
            inner = self._steps(t.body, s, memo)
            enabled = {st.label for st in inner if not st.impossible}
            return [st._replace(target=None if st.target is None else Priority(st.target))
                    for st in inner if not (self.reg.higher(st.label) & enabled)]
        if isinstance(t, Unless):
            blockers = self.initials(t.right, s)
            return [st for st in self._steps(t.left, s, memo)
                    if not (self.reg.higher(st.label) & blockers)]
        raise NotDynamic(f"no action rules for {type(t).__name__}")

    def initials(self, y: Term, s: QState) -> set:
        """Labels y can perform after some probabilistic resolution."""
        out = set()
        for u, _ in resolve(y):
            out |= {st.label for st in self._steps(u, s, {}) if not st.impossible}
        return out

    def _comm(self, t, s, memo):
        out = []
        left = self._steps(t.left, s, memo)
        right = self._steps(t.right, s, memo)
        for a in left:
            if a.impossible or self.reg.kind(a.label) != CLASSICAL:
                continue
            for b in right:
                if b.impossible or self.reg.kind(b.label) != CLASSICAL:
                    continue
                c = self.reg.comm(a.label, b.label)
                if c is not None:
                    out.append(Step(c, _combine(a.target, b.target), s, c))
        return out

    def _ent(self, t, s, memo):
        out = []
        left = self._steps(t.left, s, memo)
        right = self._steps(t.right, s, memo)
        for a in left:
            for b in right:
                out.extend(self._pair(a, b))
        for b in right:
            for a in left:
                out.extend(self._pair(b, a, swap=True))
        return out

    def _pair(self, q, sh, swap=False):
        """q performs α (unitary/projection), sh performs ◎S_α."""
        if q.label.shadow or not sh.label.shadow or sh.label.base != q.label:
            return []
        if self.reg.kind(q.label) not in (UNITARY, PROJECTION):
            return []
        target = _combine(sh.target, q.target) if swap else _combine(q.target, sh.target)
        return [Step(q.label, target, q.state, q.origin, True)]


def _wrap(cls, acts, target):
    return None if target is None else cls(acts, target)


def _combine(x, y):
    if x is None:
        return y
    if y is None:
        return x
    return Par(x, y)


def validate_term(t: Term, reg: ActionRegistry):
    """Registry checks on a parsed term: every action known, τ_I internal, ρ_f classical."""
    for a in actions_of(t):
        if not reg.knows(a) and not a.indices and not a.shadow:
            raise RegistryError(f"unregistered action {a} (a bare name outside any rec scope "
                                "is read as an action, so this may be a free recursion variable)")
        reg.info(a)

    def go(u):
        if isinstance(u, Abstr):
            bad = sorted(str(a) for a in u.actions if not reg.internal_only(a))
            if bad:
                raise RegistryError("abstraction over action(s) acting on public registers: " + ", ".join(bad))
        if isinstance(u, Rename):
            for a, b in u.mapping:
                if reg.kind(a) != CLASSICAL or reg.kind(b) != CLASSICAL:
                    raise RegistryError(f"renaming {a} -> {b}: only classical actions may be renamed")
        if isinstance(u, RecSpec):
            for _, body in u.eqs:
                go(body)
        for c in u.children():
            go(c)

    go(t)
