import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pqacp.errors import BadProbability, ParseError, UnboundVariable, UnguardedRecursion
from pqacp.randterm import TermGen, sweep_registry
from pqacp.syntax import parse, to_text
from pqacp.terms import (
    Alt, Atom, CommMerge, DynAtom, Encap, EntMerge, LeftMerge, MergeMem, PChoice, Par, Priority,
    Proj, RecSpec, RecVar, Rename, Seq, Unless, act, free_vars, is_basic_term, is_dynamic,
    pchoice_uniform, unfold, unguarded_vars,
)

a, b, c, s = (Atom(act(x)) for x in "abcs")


class TestParse:
    def test_seq_binds_tighter_than_alt(self):
        assert parse("a . b + c") is Alt(Seq(a, b), c)

    def test_pchoice_of_equal_operands(self):
        assert parse("(a . b) [+1/2] (a . b)") is PChoice(Seq(a, b), Fraction(1, 2), Seq(a, b))

    def test_probability_out_of_range(self):
        with pytest.raises(BadProbability):
            parse("a [+3/2] b")

    @pytest.mark.parametrize("text", ["a [+0] b", "a [+1] b", "a [+1/0] b"])
    def test_degenerate_probabilities(self, text):
        with pytest.raises((BadProbability, ParseError)):
            parse(text)

    def test_syntax_error_has_position(self):
        with pytest.raises(ParseError) as e:
            parse("a +\n (b")
        assert (e.value.line, e.value.col) == (2, 4)

    def test_unguarded_recursion(self):
        with pytest.raises(UnguardedRecursion):
            parse("rec X where { X = X + a }")

    @pytest.mark.parametrize("text,cls", [
        ("a || b", Par), ("a |_ b", LeftMerge), ("a | b", CommMerge), ("a >< @a", EntMerge),
        ("(a, b) ][ (c, a)", MergeMem), ("encap{a}(a)", Encap), ("proj[2](a . b)", Proj),
        ("rename[a -> b](a)", Rename), ("theta(a)", Priority), ("a <| b", Unless),
        ("rec X where { X = a . X }", RecSpec),
    ])
    def test_operator_forms(self, text, cls):
        assert isinstance(parse(text), cls)

    def test_precedence_chain(self):
        t = parse("a . b <| c | a >< b |_ c || a")
        assert isinstance(t, Par)
        assert isinstance(t.left, LeftMerge)

    def test_indexed_and_shadow_actions(self):
        t = parse("M(1) . @M(0)")
        assert t.left.action == act("M", 1)
        assert t.right.action.shadow and t.right.action.base == act("M", 0)

    def test_parsed_terms_are_static(self):
        assert not is_dynamic(parse("a . b + c [+1/2] a || b"))


class TestPrint:
    @pytest.mark.parametrize("term,text", [
        (Alt(a, b), "a + b"),
        (PChoice(a, Fraction(1, 3), b), "a [+1/3] b"),
        (Encap({"s"}, s), "encap{s}(s)"),
    ])
    def test_canonical_text(self, term, text):
        assert to_text(term) == text
        assert parse(text) is term

    def test_parentheses_only_where_needed(self):
        assert to_text(Seq(Alt(a, b), c)) == "(a + b) . c"
        assert to_text(Alt(Seq(a, b), c)) == "a . b + c"

    def test_hash_consing(self):
        assert Seq(a, b) is Seq(Atom(act("a")), Atom(act("b")))


class TestRecursion:
    def test_unfold_single_equation(self):
        x = parse("rec X where { X = a . X }")
        assert unfold(x) is Seq(a, x)

    def test_unfold_mutual(self):
        x = parse("rec X where { X = a . Y; Y = b . X }")
        assert unfold(x) is Seq(a, RecSpec("Y", x.eqs))

    def test_unfold_unknown_variable(self):
        x = parse("rec X where { X = a . X }")
        with pytest.raises(UnboundVariable):
            unfold("Z", x.eqs)

    def test_spec_with_unbound_variable(self):
        with pytest.raises(UnboundVariable):
            RecSpec("X", {"X": Seq(a, RecVar("Y"))})

    def test_unfolding_stays_guarded(self):
        x = parse("rec X where { X = a . Y + b; Y = c . X [+1/2] a . Y }")
        for var, _ in x.eqs:
            t = unfold(var, x.eqs)
            assert not unguarded_vars(t)
            assert not free_vars(t)


class TestBasicTerms:
    @pytest.mark.parametrize("text,basic", [
        ("delta", True), ("a . b", True), ("a || b", False),
        ("a . b + c", True), ("a [+1/2] b . c", True), ("(a + b) . c", False),
        ("a . (b [+1/3] c)", True), ("encap{a}(b)", False),
    ])
    def test_classification(self, text, basic):
        assert is_basic_term(parse(text)) is basic


def test_pchoice_uniform_weights():
    t = pchoice_uniform([a, b, c])
    # a with 1/3, then b vs c evenly
    assert t.prob == Fraction(1, 3) and t.right.prob == Fraction(1, 2)


def test_dynamic_atoms_are_not_parsable_syntax():
    assert is_dynamic(DynAtom(act("a")))
    assert not is_dynamic(a)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10 ** 9), st.integers(1, 6))
def test_print_parse_round_trip(seed, d):
    gen = TermGen(sweep_registry(0), random.Random(seed), max_depth=6)
    t = gen.term(d)
    assert parse(to_text(t)) is t


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "c", "tau", "delta"]), min_size=1, max_size=6),
       st.lists(st.sampled_from([".", "+", "||", "[+1/8]", "|"]), min_size=5, max_size=5))
def test_round_trip_of_flat_expressions(atoms, ops):
    text = atoms[0]
    for x, op in zip(atoms[1:], ops):
        text = f"{text} {op} {x}"
    t = parse(text)
    assert parse(to_text(t)) is t
