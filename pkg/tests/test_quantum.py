import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pqacp.errors import (
    InvalidState, NonProjector, NonUnitary, RegisterMismatch, RegisterNameClash, UnknownRegister,
    ZeroProbabilityBranch,
)
from pqacp.quantum import (
    CNOT, EPS_Q, INTERNAL, P0, P1, H, ProjectionEffect, QState, Register, UnitaryEffect, X, Z,
    apply_projection, apply_unitary, basis_state, measure_probability, partial_trace, public_part,
    pure_state, random_density, reorder, state_eq, tensor,
)

PLUS = np.full((2, 2), 0.5)


def zero(name="q"):
    return basis_state([name])


def plus(name="q"):
    return QState([name], PLUS)


class TestUnitary:
    def test_identity(self):
        out = apply_unitary(zero(), UnitaryEffect(np.eye(2), ("q",)))
        assert state_eq(out, zero())

    def test_hadamard_on_zero(self):
        out = apply_unitary(zero(), UnitaryEffect(H, ("q",)))
        np.testing.assert_allclose(out.matrix, PLUS, atol=1e-15)

    def test_x_on_zero(self):
        out = apply_unitary(zero(), UnitaryEffect(X, ("q",)))
        assert state_eq(out, basis_state(["q"], "1"))

    def test_embedding_on_second_register(self):
        s = basis_state(["a", "b"])
        out = apply_unitary(s, UnitaryEffect(X, ("b",)))
        assert state_eq(out, basis_state(["a", "b"], "01"))

    def test_cnot_with_reversed_targets(self):
        s = basis_state(["a", "b"], "01")
        out = apply_unitary(s, UnitaryEffect(CNOT, ("b", "a")))
        assert state_eq(out, basis_state(["a", "b"], "11"))

    def test_unknown_register(self):
        with pytest.raises(UnknownRegister):
            apply_unitary(zero(), UnitaryEffect(H, ("z",)))

    def test_non_unitary(self):
        with pytest.raises(NonUnitary):
            UnitaryEffect(np.ones((2, 2)), ("q",))


class TestMeasurement:
    def test_eigenstate(self):
        assert measure_probability(zero(), ProjectionEffect(P0, ("q",))) == pytest.approx(1)

    def test_plus_state_half(self):
        assert measure_probability(plus(), ProjectionEffect(P0, ("q",))) == pytest.approx(0.5, abs=1e-15)

    def test_orthogonal(self):
        assert measure_probability(zero(), ProjectionEffect(P1, ("q",))) == pytest.approx(0, abs=1e-15)

    def test_projection_collapses_plus(self):
        out = apply_projection(plus(), ProjectionEffect(P0, ("q",)))
        assert state_eq(out, zero())

    def test_projection_fixed_point(self):
        assert state_eq(apply_projection(zero(), ProjectionEffect(P0, ("q",))), zero())

    def test_zero_probability_branch(self):
        with pytest.raises(ZeroProbabilityBranch):
            apply_projection(zero(), ProjectionEffect(P1, ("q",)))

    def test_non_projector(self):
        with pytest.raises(NonProjector):
            ProjectionEffect(np.diag([1.0, 0.5]), ("q",))


class TestTensorAndEquality:
    def test_basis_tensor(self):
        m = tensor(zero("a"), zero("b")).matrix
        expected = np.zeros((4, 4))
        expected[0, 0] = 1
        np.testing.assert_array_equal(m, expected)

    def test_block_tensor(self):
        m = tensor(zero("a"), plus("b")).matrix
        np.testing.assert_allclose(m, np.kron(np.diag([1, 0]), PLUS))

    def test_name_clash(self):
        with pytest.raises(RegisterNameClash):
            tensor(zero(), zero())

    def test_duplicate_register_in_state(self):
        with pytest.raises(RegisterNameClash):
            QState(["q", "q"], np.eye(4) / 4)

    def test_reflexive(self):
        s = plus()
        assert state_eq(s, s)

    def test_hadamard_involution(self):
        e = UnitaryEffect(H, ("q",))
        assert state_eq(apply_unitary(apply_unitary(zero(), e), e), zero())

    def test_orthogonal_states_differ(self):
        assert not state_eq(zero(), basis_state(["q"], "1"))

    def test_register_order_normalized(self):
        s = basis_state(["a", "b"], "01")
        t = QState(["b", "a"], reorder(s, ["b", "a"]))
        assert state_eq(s, t)

    def test_register_mismatch(self):
        with pytest.raises(RegisterMismatch):
            state_eq(zero("a"), zero("b"))

    def test_invalid_states(self):
        with pytest.raises(InvalidState):
            QState(["q"], np.diag([0.7, 0.7]))
        with pytest.raises(InvalidState):
            QState(["q"], np.diag([1.5, -0.5]))
        with pytest.raises(InvalidState):
            QState(["q"], np.eye(4) / 4)


class TestReduction:
    def test_partial_trace_of_bell_pair(self):
        bell = pure_state(["a", "b"], [1, 0, 0, 1])
        np.testing.assert_allclose(partial_trace(bell, ["b"]).matrix, np.eye(2) / 2, atol=1e-15)

    def test_partial_trace_of_product(self):
        s = tensor(tensor(zero("a"), plus("b")), basis_state(["c"], "1"))
        assert state_eq(partial_trace(s, ["b"]), plus("b"))
        np.testing.assert_allclose(partial_trace(s, ["c", "a"]).matrix, np.diag([0, 0, 1, 0]))

    def test_public_part_hides_internal_registers(self):
        s = QState([Register("p"), Register("i", INTERNAL)], np.kron(PLUS, np.diag([1, 0])))
        assert public_part(s).names == ("p",)
        assert state_eq(public_part(s), plus("p"))


def _random_circuit(rng, n):
    """Random register names and a short sequence of H/X/Z/CNOT effects."""
    gates = [(H, 1), (X, 1), (Z, 1)] + ([(CNOT, 2)] if n > 1 else [])
    names = [f"q{i}" for i in range(n)]
    effects = []
    for _ in range(rng.integers(1, 8)):
        G, k = gates[rng.integers(len(gates))]
        targets = tuple(rng.choice(names, size=k, replace=False))
        effects.append(UnitaryEffect(G, targets))
    return names, effects


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 3))
def test_trace_conservation(seed, n):
    rng = np.random.default_rng(seed)
    names, effects = _random_circuit(rng, n)
    s = QState(names, random_density(n, rng))
    for e in effects:
        s = apply_unitary(s, e)
        assert abs(np.trace(s.matrix) - 1) <= EPS_Q


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_measurement_completeness_and_idempotence(seed):
    rng = np.random.default_rng(seed)
    s = QState(["a", "b"], random_density(2, rng))
    # a random orthonormal basis gives a complete rank-one family
    Q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    family = [ProjectionEffect(np.outer(Q[:, i], Q[:, i].conj()), ("a", "b")) for i in range(4)]
    assert sum(measure_probability(s, e) for e in family) == pytest.approx(1, abs=EPS_Q)
    for e in family:
        if measure_probability(s, e) > EPS_Q:
            once = apply_projection(s, e)
            assert state_eq(apply_projection(once, e), once)


def test_random_density_rank():
    rng = np.random.default_rng(0)
    m = random_density(2, rng, rank=1)
    assert np.linalg.matrix_rank(m, tol=1e-9) == 1
    assert np.trace(m) == pytest.approx(1)
