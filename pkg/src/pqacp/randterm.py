"""Seeded random closed terms over a small 2-qubit registry, for property sweeps."""
from __future__ import annotations

import random
from fractions import Fraction

import numpy as np

from .quantum import CNOT, H, P0, P1, X, QState, random_density
from .registry import CLASSICAL, PROJECTION, UNITARY, ActionRegistry
from .terms import (
    DELTA, ActionName, Alt, Atom, CommMerge, Encap, EntMerge, LeftMerge, MergeMem, PChoice, Par,
    Priority, Proj, Rename, Seq, Term, Unless, depth,
)
from .sos import resolve

PROBS = [Fraction(1, 2), Fraction(1, 3), Fraction(2, 3), Fraction(1, 4), Fraction(3, 4)]


def sweep_registry(seed: int = 0) -> ActionRegistry:
    """Two qubits, H/X/CNOT, one 2-outcome measurement, five classical actions.

    γ(a,b) = c and γ(d,d) = e; priorities a < b and d < e.  The initial state
    is a fixed random full-rank density matrix so both measurement outcomes
    are possible.
    """
    r = ActionRegistry()
    r.add_register("q0")
    r.add_register("q1")
    r.add_classical("a", "b", "c", "d", "e")
    r.add_unitary("H", ["q0"], H)
    r.add_unitary("X", ["q1"], X)
    r.add_unitary("CNOT", ["q0", "q1"], CNOT)
    r.add_measurement("M", ["q0"], [("m(0)", P0, "1/2"), ("m(1)", P1, "1/2")])
    r.add_comm("a", "b", "c")
    r.add_comm("d", "d", "e")
    r.add_priority("a", "b")
    r.add_priority("d", "e")
    rho = random_density(2, np.random.default_rng(seed))
    r.initial = QState(r.registers, rho)
    return r


class TermGen:
    """Random static closed terms.

    ``ops`` limits the operators used; ``encap_quantum`` controls whether
    encapsulation sets may contain unitaries and projections.
    """

    ALL_OPS = ("seq", "alt", "pch", "par", "lmerge", "comm", "ent", "mm",
               "encap", "proj", "rename", "theta", "unless")
    # ◁ has no axioms against ⊞, so elimination sweeps only meet it through Θ
    ELIM_OPS = tuple(o for o in ALL_OPS if o != "unless")

    def __init__(self, registry: ActionRegistry, rng: random.Random, *, ops=ALL_OPS,
                 max_depth: int = 3, shadows: bool = True, encap_quantum: bool = True,
                 delta_weight: float = 0.05):
        self.reg = registry
        self.rng = rng
        self.ops = tuple(ops)
        self.max_depth = max_depth
        self.shadows = shadows
        self.encap_quantum = encap_quantum
        self.delta_weight = delta_weight
        acts = sorted(registry.actions)
        self.classical = [a for a in acts if registry.kind(a) == CLASSICAL]
        self.quantums = [a for a in acts if registry.kind(a) in (UNITARY, PROJECTION)]
        self.shadow_acts = [a.shadow_of() for a in self.quantums]

    # ----------------------------------------------------------- pieces
    def prob(self) -> Fraction:
        return self.rng.choice(PROBS)

    def n(self) -> int:
        return self.rng.randint(1, 3)

    def quantum(self) -> ActionName:
        return self.rng.choice(self.quantums)

    def action(self, delta: bool = True, shadows: bool | None = None) -> ActionName:
        if delta and self.rng.random() < self.delta_weight:
            return DELTA
        pool = self.classical + self.quantums
        if self.shadows if shadows is None else shadows:
            pool = pool + self.shadow_acts
        return self.rng.choice(pool)

    def H(self, exclude=None) -> frozenset:
        pool = self.classical + self.shadow_acts
        if self.encap_quantum:
            pool = pool + self.quantums
        pool = [a for a in pool if a != exclude]
        return frozenset(self.rng.sample(pool, self.rng.randint(1, 3)))

    def f(self) -> dict:
        src = self.rng.sample(self.classical, self.rng.randint(1, 2))
        return {a: self.rng.choice(self.classical) for a in src}

    def ordered_pair(self):
        a, b = self.rng.choice(sorted(self.reg.less))
        return Atom(a), Atom(b)

    def unordered_pair(self):
        while True:
            a, b = Atom(self.action()), Atom(self.action())
            if not self.reg.lt(a.action, b.action):
                return a, b

    # ------------------------------------------------------------ terms
    def x(self, det: bool = False, shadows: bool | None = None, d: int | None = None) -> Term:
        """A random operand; ``det`` asks for a term with one resolution."""
        d = self.rng.randint(1, self.max_depth) if d is None else d
        for _ in range(1000):
            t = self.term(d, shadows)
            if not det or len(resolve(t)) == 1:
                return t
        raise RuntimeError("could not draw a deterministic term")

    def term(self, d: int, shadows: bool | None = None) -> Term:
        if d <= 1 or self.rng.random() < 0.25:
            return Atom(self.action(shadows=shadows))
        op = self.rng.choice(self.ops)
        sub = lambda: self.term(d - 1, shadows)  # noqa: E731
        if op == "seq":
            return Seq(sub(), sub())
        if op == "alt":
            return Alt(sub(), sub())
        if op == "pch":
            return PChoice(sub(), self.prob(), sub())
        if op == "par":
            return Par(sub(), sub())
        if op == "lmerge":
            return LeftMerge(sub(), sub())
        if op == "comm":
            return CommMerge(sub(), sub())
        if op == "ent":
            return EntMerge(sub(), sub())
        if op == "mm":
            return MergeMem(sub(), sub(), sub(), sub())
        if op == "encap":
            return Encap(self.H(), sub())
        if op == "proj":
            return Proj(self.n(), sub())
        if op == "rename":
            return Rename(self.f(), sub())
        if op == "theta":
            return Priority(sub())
        if op == "unless":
            return Unless(sub(), sub())
        raise ValueError(op)

    def elimination_term(self, max_depth: int = 4, max_merges: int = 2) -> Term:
        """A term for elimination sweeps: at most ``max_merges`` parallel operators."""
        while True:
            t = self.term(self.rng.randint(1, max_depth))
            if _merges(t) <= max_merges:
                return t

    def instance(self, builder, max_depth: int = 4, tries: int = 200) -> Term:
        """Draw builder(self) until the instance has depth ≤ max_depth."""
        for _ in range(tries):
            t = builder(self)
            if depth(t) <= max_depth:
                return t
        raise RuntimeError("no instance within the depth bound")


_MERGES = (Par, LeftMerge, CommMerge, EntMerge, MergeMem)


def _merges(t: Term) -> int:
    return int(isinstance(t, _MERGES)) + sum(_merges(c) for c in t.children())
