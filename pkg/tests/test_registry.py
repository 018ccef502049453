import math

import numpy as np
import pytest

from pqacp import protocols
from pqacp.errors import RegistryError
from pqacp.quantum import INTERNAL, P0, P1, H, X, state_eq
from pqacp.randterm import sweep_registry
from pqacp.registry import (
    CLASSICAL, DEADLOCK, PROJECTION, SHADOW, SILENT, UNITARY, ActionRegistry,
)
from pqacp.terms import DELTA, TAU, act


def small():
    r = ActionRegistry()
    r.add_register("q")
    r.add_register("w", INTERNAL)
    r.add_classical("s", "r", "c")
    r.add_unitary("H", ["q"], H)
    r.add_unitary("Xw", ["w"], X)
    r.add_measurement("M", ["q"], [("m(0)", P0, "1/2"), ("m(1)", P1, "1/2")])
    r.add_comm("s", "r", "c")
    return r


class TestKinds:
    def test_builtin_constants(self):
        r = small()
        assert r.kind(TAU) == SILENT
        assert r.kind(DELTA) == DEADLOCK

    def test_registered_kinds(self):
        r = small()
        assert r.kind(act("s")) == CLASSICAL
        assert r.kind(act("H")) == UNITARY
        assert r.kind(act("m", 1)) == PROJECTION
        assert r.info(act("m", 1)).effect.index == 1

    def test_shadow_of_quantum_action(self):
        r = small()
        assert r.kind(act("H").shadow_of()) == SHADOW
        assert r.kind(act("m", 0).shadow_of()) == SHADOW

    def test_shadow_of_classical_action_rejected(self):
        with pytest.raises(RegistryError):
            small().kind(act("s").shadow_of())

    def test_unknown_action(self):
        r = small()
        assert not r.knows(act("nope"))
        with pytest.raises(RegistryError):
            r.info(act("nope"))

    def test_internal_only(self):
        r = small()
        assert r.internal_only(act("Xw"))
        assert not r.internal_only(act("H"))
        assert r.internal_only(act("s"))


class TestValidation:
    def test_unknown_register(self):
        with pytest.raises(RegistryError):
            small().add_unitary("U", ["z"], H)

    def test_non_unitary_matrix(self):
        with pytest.raises(RegistryError):
            small().add_unitary("U", ["q"], np.ones((2, 2)))

    def test_incomplete_measurement(self):
        with pytest.raises(RegistryError):
            small().add_measurement("N", ["q"], [("n(0)", P0, "1")])

    def test_redeclaration(self):
        with pytest.raises(RegistryError):
            small().add_classical("s")

    def test_gamma_is_symmetric(self):
        r = small()
        assert r.comm(act("s"), act("r")) == act("c")
        assert r.comm(act("r"), act("s")) == act("c")
        assert r.comm(act("s"), act("s")) is None

    def test_gamma_only_on_classical(self):
        with pytest.raises(RegistryError):
            small().add_comm("H", "s", "c")

    def test_gamma_defined_twice(self):
        with pytest.raises(RegistryError):
            small().add_comm("r", "s", "s")

    def test_priority_is_transitive(self):
        r = small()
        r.add_priority("s", "r")
        r.add_priority("r", "c")
        assert r.lt(act("s"), act("c"))
        assert r.higher(act("s")) == {act("r"), act("c")}

    def test_priority_cycle(self):
        r = small()
        r.add_priority("s", "r")
        with pytest.raises(RegistryError):
            r.add_priority("r", "s")


class TestJson:
    @pytest.mark.parametrize("make", [small, lambda: sweep_registry(3),
                                      lambda: protocols.build_bb84(1).registry,
                                      lambda: protocols.build_teleport(np.eye(2) / 2).registry])
    def test_round_trip(self, make, tmp_path):
        r = make()
        path = tmp_path / "reg.json"
        r.dump(path)
        back = ActionRegistry.load(path)
        assert back.to_json() == r.to_json()
        assert back.fingerprint() == r.fingerprint()
        assert state_eq(back.initial_state(), r.initial_state())

    def test_basis_initial_state(self):
        data = {"registers": [{"name": "a"}, {"name": "b"}], "initial_state": {"bits": "10"}}
        r = ActionRegistry.from_json(data)
        assert r.initial_state().matrix[2, 2] == 1

    def test_nested_matrix_accepted(self):
        data = {"registers": [{"name": "q"}],
                "actions": {"X": {"kind": "unitary", "targets": ["q"], "matrix": [[0, 1], [1, 0]]}}}
        r = ActionRegistry.from_json(data)
        np.testing.assert_array_equal(r.info(act("X")).effect.U, X)

    @pytest.mark.parametrize("data", [
        {"registers": [{"name": "q"}], "actions": {"U": {"kind": "unitary", "targets": ["q"],
                                                         "matrix": [[1, 1], [1, 1]]}}},
        {"actions": {"p": {"kind": "projection"}}},
        {"registers": [{"name": "q"}], "actions": {"U": {"kind": "unitary", "targets": ["q"],
                                                         "matrix": [[1, 0, 0]]}}},
        {"actions": {"a": {"kind": "classical"}}, "gamma": [["a", "a", "zz"]]},
        {"registers": [{"name": "q"}], "initial_state": {"matrix": [[1, 0], [0, 0], [0, 0], [1, 0]]}},
    ])
    def test_malformed(self, data):
        with pytest.raises(RegistryError):
            ActionRegistry.from_json(data)

    def test_unreadable_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(RegistryError):
            ActionRegistry.load(bad)
        with pytest.raises(RegistryError):
            ActionRegistry.load(tmp_path / "missing.json")

    def test_no_negative_zero_in_output(self):
        data = sweep_registry(0).to_json()
        values = [x for m in data["actions"].values() for pair in m.get("matrix", []) for x in pair]
        values += [x for pair in data["initial_state"]["matrix"] for x in pair]
        assert not any(x == 0 and math.copysign(1, x) < 0 for x in values)
