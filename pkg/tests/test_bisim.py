import json
import random
from fractions import Fraction

import pytest

from pqacp.bisim import branching_bisim, strong_bisim
from pqacp.errors import DivergenceWithoutExit, IncompatibleRegistries
from pqacp.graph import build_graph
from pqacp.quantum import INTERNAL, H, X, basis_state
from pqacp.registry import ActionRegistry
from pqacp.sos import Configuration
from pqacp.syntax import parse

from oracles import brute_force_bisimilar, random_graph_pair


def registry():
    r = ActionRegistry()
    r.add_register("q")
    r.add_register("w", INTERNAL)
    r.add_classical("a", "b", "c")
    r.add_unitary("H", ["q"], H)
    r.add_unitary("X", ["q"], X)
    r.add_unitary("Hw", ["w"], H)
    return r


REG = registry()


def g(text, depth=10, reg=REG):
    return build_graph(Configuration(parse(text), reg.initial_state()), depth, reg)


def strong(x, y):
    return strong_bisim(g(x), g(y))


def branching(x, y):
    return branching_bisim(g(x), g(y))


class TestStrong:
    @pytest.mark.parametrize("x,y", [
        ("a [+1/2] a", "a"),
        ("a + b", "b + a"),
        ("a [+1/4] b", "b [+3/4] a"),
        ("(a + b) . c", "a . c + b . c"),
        ("H . (a + a)", "H . a"),
        ("rec X where { X = a . X }", "rec Y where { Y = a . a . Y }"),
    ])
    def test_equivalent(self, x, y):
        assert strong(x, y).equivalent

    def test_mu_class_witness(self):
        res = strong("a [+1/3] b", "a [+1/2] b")
        assert not res.equivalent
        assert res.witness["condition"] == "μ-class mismatch"

    def test_action_mismatch_witness(self):
        res = strong("a", "b")
        assert res.witness["condition"] == "action mismatch"
        assert "a" in res.witness["detail"] and "b" in res.witness["detail"]

    def test_quantum_state_matters(self):
        # same labels, different resulting states
        r = ActionRegistry()
        r.add_register("q")
        r.add_unitary("U", ["q"], H)
        r.add_classical("a")
        assert not strong_bisim(g("U . a", reg=r), g("a . U", reg=r)).equivalent

    def test_initial_state_matters_unless_ignored(self):
        zero = build_graph(Configuration(parse("a"), basis_state(REG.registers, "00")), 2, REG)
        one = build_graph(Configuration(parse("a"), basis_state(REG.registers, "10")), 2, REG)
        res = strong_bisim(zero, one)
        assert not res.equivalent and res.witness["condition"] == "ϱ mismatch"
        assert strong_bisim(zero, one, ignore_quantum=True).equivalent

    def test_truncated_matches_only_truncated(self):
        assert not strong_bisim(g("a . b . c", 2), g("a . b", 2)).equivalent
        assert strong_bisim(g("a . b . c", 2), g("a . b . b", 2)).equivalent

    def test_registry_mismatch(self):
        other = ActionRegistry()
        other.add_classical("a")
        with pytest.raises(IncompatibleRegistries):
            strong_bisim(g("a"), g("a", reg=other))

    def test_result_json(self):
        data = json.loads(strong("a", "b").dumps())
        assert data["verdict"] == "inequivalent" and data["witness"]["path"]


class TestBranching:
    @pytest.mark.parametrize("x,y", [
        ("a . tau", "a"),
        ("a . (tau . b + b)", "a . b"),
        ("a . (tau . (b + c) + b)", "a . (b + c)"),
        ("abstr{Hw}(Hw . a)", "tau . a"),
        ("a . abstr{Hw}(Hw . b)", "a . b"),
        ("rec X where { X = a . tau . X }", "rec X where { X = a . X }"),
        ("a . rec X where { X = tau . X [+1/2] b }", "a . b"),
        ("a . (tau . b [+1/2] c)", "a . (b [+1/2] c)"),
    ])
    def test_equivalent(self, x, y):
        assert branching(x, y).equivalent

    def test_root_condition(self):
        res = branching("tau . a", "a")
        assert not res.equivalent
        assert res.witness["condition"] == "root condition"

    def test_silent_step_that_drops_an_option(self):
        assert not branching("a . (tau . b + c)", "a . (b + c)").equivalent

    def test_probabilistic_tau_is_observable(self):
        assert not branching("a . (tau [+1/2] b)", "a . b").equivalent

    def test_divergence_reported(self):
        with pytest.raises(DivergenceWithoutExit):
            branching("a . rec X where { X = tau . X }", "a")

    def test_strong_implies_branching(self):
        for x, y in [("a [+1/2] a", "a"), ("a + b", "b + a"), ("H . a", "H . a")]:
            assert branching(x, y).equivalent

    def test_entry_partition_refines_partition(self):
        res = branching("a . tau . b", "a . b")
        part = res.partition[0] + res.partition[1]
        by_entry_class = {}
        for node, cls in res.entry_partition.items():
            by_entry_class.setdefault(cls, set()).add(part[node])
        assert by_entry_class and all(len(v) == 1 for v in by_entry_class.values())


def test_strong_bisim_agrees_with_brute_force():
    rng = random.Random(80)
    for _ in range(60):
        g1, g2, _ = random_graph_pair(rng)
        assert strong_bisim(g1, g2).equivalent == brute_force_bisimilar(g1, g2)


def test_strong_bisim_is_an_equivalence():
    rng = random.Random(81)
    for _ in range(60):
        g1, g2, _ = random_graph_pair(rng)
        g3, _, _ = random_graph_pair(rng)
        assert strong_bisim(g1, g1).equivalent
        assert strong_bisim(g1, g2).equivalent == strong_bisim(g2, g1).equivalent
        if strong_bisim(g1, g2).equivalent and strong_bisim(g2, g3).equivalent:
            assert strong_bisim(g1, g3).equivalent


def test_weights_are_compared_exactly():
    res = strong("a [+1/3] b", "a [+333333333/1000000000] b")
    assert not res.equivalent
    assert Fraction(1, 3) != Fraction(333333333, 1000000000)
