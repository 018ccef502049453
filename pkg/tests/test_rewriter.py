import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pqacp.errors import NoMatch, NotClosed, OpenProblem, RecursionPresent, SideConditionFailed, StuckTerm
from pqacp.quantum import CNOT, H, X
from pqacp.randterm import TermGen, sweep_registry
from pqacp.registry import ActionRegistry
from pqacp.rewriter import AXIOMS, apply_axiom, check_soundness, normalize
from pqacp.syntax import parse, to_text
from pqacp.terms import Atom, RecVar, Seq, act, is_basic_term


def registry():
    r = ActionRegistry()
    r.add_register("q")
    r.add_register("p")
    r.add_classical("a", "b", "c", "d")
    r.add_unitary("H", ["q"], H)
    r.add_unitary("X", ["q"], X)
    r.add_unitary("CNOT", ["q", "p"], CNOT)
    return r


REG = registry()


def nf(text, reg=REG):
    return normalize(parse(text), reg)


class TestNormalize:
    def test_right_distribution(self):
        t, trace = nf("(a + b) . c")
        assert to_text(t) == "a . c + b . c"
        assert trace.lines() == ["A4 @ ε : (a + b) . c => a . c + b . c"]

    def test_pchoice_reassociation(self):
        t, trace = nf("a [+1/2] (b [+1/2] c)")
        assert to_text(t) == "(a [+2/3] b) [+3/4] c"
        assert [s.axiom for s in trace] == ["PrAC2"]

    def test_shadow_merge(self):
        assert nf("H >< @H")[0] is parse("H")
        assert [s.axiom for s in nf("H >< @H")[1]] == ["EM1"]

    @pytest.mark.parametrize("text", ["H >< @X", "H >< CNOT"])
    def test_unmatched_entanglement_deadlocks(self, text):
        t, trace = nf(text)
        assert t is parse("delta") and trace[-1].axiom == "EM-δ"

    def test_abstraction_distributes(self):
        t, trace = nf("abstr{a}(a + b) [+1/2] c")
        assert to_text(t) == "tau + b [+1/2] c"
        assert [(s.axiom, s.path) for s in trace] == [("TI3", (0,)), ("TI2", (0, 0)), ("TI1", (0, 1))]

    def test_trailing_tau_dropped(self):
        assert nf("a . tau")[0] is parse("a")

    def test_branching_tau_kept(self):
        t, trace = nf("tau . (a + tau . b)")
        assert t is parse("tau . (a + tau . b)") and not trace

    def test_without_registry(self):
        t, _ = normalize(parse("a [+1/2] b"))
        assert t is parse("a [+1/2] b")

    def test_result_is_basic(self):
        for text in ["(a + b) . c", "a || b", "encap{a}(a . b + c)", "theta(a . b)"]:
            assert is_basic_term(nf(text)[0])


class TestNormalizeErrors:
    def test_recursion(self):
        with pytest.raises(RecursionPresent):
            nf("rec X where { X = a . X }")

    def test_free_variable(self):
        with pytest.raises(NotClosed):
            normalize(Seq(Atom(act("a")), RecVar("X")))

    def test_open_problem(self):
        with pytest.raises(OpenProblem) as e:
            nf("abstr{a}((a + b) [+1/2] c)")
        assert isinstance(e.value, StuckTerm)

    def test_unless_over_pchoice_is_stuck(self):
        with pytest.raises(StuckTerm):
            nf("a <| (b [+1/2] c)")


class TestApplyAxiom:
    @pytest.mark.parametrize("text,axiom,out", [
        ("encap{a}(a)", "D2", "delta"),
        ("proj[1](a . b)", "PR2", "a"),
        ("rename[a -> b](delta)", "RN2", "delta"),
        ("a + b", "A1", "b + a"),
    ])
    def test_examples(self, text, axiom, out):
        assert apply_axiom(parse(text), axiom, (), REG) is parse(out)

    def test_side_condition(self):
        with pytest.raises(SideConditionFailed):
            apply_axiom(parse("encap{a}(b)"), "D2", (), REG)

    def test_no_match(self):
        with pytest.raises(NoMatch):
            apply_axiom(parse("a + b"), "A4", (), REG)

    def test_bad_path(self):
        with pytest.raises(NoMatch):
            apply_axiom(parse("a . b"), "A1", (5,), REG)

    def test_at_subterm(self):
        out = apply_axiom(parse("d . (a + b)"), "A1", (1,), REG)
        assert out is parse("d . (b + a)")


class TestSoundness:
    def test_commutativity(self):
        assert check_soundness(parse("a + b"), "A1", REG)

    def test_pchoice_commutativity(self):
        assert check_soundness(parse("a [+1/4] b"), parse("b [+3/4] a"), REG)

    def test_unsound_rewrite_detected(self):
        assert not check_soundness(parse("a + b"), parse("a"), REG)

    def test_catalogue_instances(self):
        reg = sweep_registry(0)
        gen = TermGen(reg, random.Random(3), max_depth=2)
        for name, info in AXIOMS.items():
            assert check_soundness(info.instance(gen), name, reg), name


class TestTrace:
    def test_replay_reproduces_result(self):
        t = parse("(a + b) . (c || d)")
        out, trace = normalize(t, REG)
        assert trace.replay(t, REG) is out

    def test_steps_are_sound(self):
        _, trace = nf("(a + b) . c || d")
        for step in trace[:20]:
            assert check_soundness(step.before, step.after, REG), str(step)

    def test_line_format(self):
        _, trace = nf("a [+1/2] (b [+1/2] c)")
        (line,) = trace.lines()
        head, rest = line.split(" : ")
        assert head == "PrAC2 @ ε"
        assert " => " in rest


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_normalize_terminates_on_random_terms(seed):
    reg = sweep_registry(seed % 5)
    gen = TermGen(reg, random.Random(seed), max_depth=5, encap_quantum=False, ops=TermGen.ELIM_OPS)
    t = gen.elimination_term(max_depth=5, max_merges=1)
    out, trace = normalize(t, reg)
    assert is_basic_term(out)
    assert trace.replay(t, reg) is out


def test_weights_stay_exact():
    t, _ = nf("a [+1/3] (b [+1/3] (c [+1/3] d))")
    stack, weights = [t], []
    while stack:
        u = stack.pop()
        if hasattr(u, "prob"):
            weights.append(u.prob)
        stack.extend(u.children())
    assert weights and all(isinstance(w, Fraction) for w in weights)
