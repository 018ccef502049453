"""Action registry: what each action does to ϱ, plus γ and the priority order.

JSON layout::

    {
      "registers": [{"name": "q0", "visibility": "public"}, ...],
      "initial_state": {"bits": "00"} | {"matrix": [[re, im], ...]},
      "actions": {
        "a":  {"kind": "classical"},
        "H0": {"kind": "unitary", "targets": ["q0"], "matrix": [[re, im], ...]}
      },
      "measurements": {
        "M": {"targets": ["q0"], "branches": [
            {"action": "m(0)", "matrix": [...], "weight": "1/2"}, ...]}
      },
      "gamma": [["s", "r", "c"]],
      "priority": [["a", "b"]]            # a < b
    }

Matrices are row-major lists of [re, im] pairs (nested row lists are also
accepted on input).  Shadow constants ``@α`` need no entry: they exist for
every registered unitary or projection.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import PqacpError, RegistryError
from .quantum import (
    EPS_Q, INTERNAL, PUBLIC, Identity, ProjectionEffect, QState, Register,
    UnitaryEffect, basis_state, validate_density,
)
from .terms import DELTA, TAU, ActionName

UNITARY = "unitary"
PROJECTION = "projection"
CLASSICAL = "classical"
SHADOW = "shadow"
SILENT = "silent"
DEADLOCK = "deadlock"


@dataclass(frozen=True)
class ActionInfo:
    kind: str
    effect: object  # UnitaryEffect | ProjectionEffect | Identity


@dataclass
class ActionRegistry:
    registers: list = field(default_factory=list)
    actions: dict = field(default_factory=dict)         # ActionName -> ActionInfo
    families: dict = field(default_factory=dict)        # family -> [ActionName]
    gamma: dict = field(default_factory=dict)           # frozenset{a,b} or (a,a) -> c
    less: set = field(default_factory=set)              # transitive pairs (a, b): a < b
    initial: QState | None = None

    # ------------------------------------------------------------ queries
    def info(self, a: ActionName) -> ActionInfo:
        if a == TAU:
            return ActionInfo(SILENT, Identity())
        if a == DELTA:
            return ActionInfo(DEADLOCK, Identity())
        if a.shadow:
            base = self.actions.get(a.base)
            if base is None or base.kind not in (UNITARY, PROJECTION):
                raise RegistryError(f"shadow {a} needs a registered unitary or projection {a.base}")
            return ActionInfo(SHADOW, Identity())
        try:
            return self.actions[a]
        except KeyError:
            raise RegistryError(f"unregistered action {a}") from None

    def kind(self, a: ActionName) -> str:
        return self.info(a).kind

    def knows(self, a: ActionName) -> bool:
        try:
            self.info(a)
            return True
        except RegistryError:
            return False

    def comm(self, a: ActionName, b: ActionName):
        return self.gamma.get(frozenset((a, b)))

    def lt(self, a: ActionName, b: ActionName) -> bool:
        return (a, b) in self.less

    def higher(self, a: ActionName) -> set:
        return {b for (x, b) in self.less if x == a}

    def check_actions(self, names: Iterable[ActionName]):
        for a in names:
            self.info(a)

    def internal_only(self, a: ActionName) -> bool:
        """True when the action's effect touches internal registers only."""
        info = self.info(a)
        if isinstance(info.effect, Identity):
            return True
        vis = {r.name: r.visibility for r in self.registers}
        return all(vis.get(t) == INTERNAL for t in info.effect.targets)

    def initial_state(self) -> QState:
        if self.initial is not None:
            return self.initial
        return basis_state(self.registers)

    def fingerprint(self) -> str:
        import hashlib
        return hashlib.sha256(json.dumps(self.to_json(), sort_keys=True).encode()).hexdigest()[:16]

    # ------------------------------------------------------------ building
    def add_register(self, name: str, visibility: str = PUBLIC):
        if any(r.name == name for r in self.registers):
            raise RegistryError(f"register {name} declared twice")
        self.registers.append(Register(name, visibility))

    def _new(self, a):
        a = ActionName.parse(a) if isinstance(a, str) else a
        if a in self.actions or a in (TAU, DELTA) or a.shadow:
            raise RegistryError(f"action {a} cannot be (re)declared")
        return a

    def _targets(self, targets):
        known = {r.name for r in self.registers}
        for t in targets:
            if t not in known:
                raise RegistryError(f"unknown register {t!r}")
        return tuple(targets)

    def add_classical(self, *names):
        for a in names:
            self.actions[self._new(a)] = ActionInfo(CLASSICAL, Identity())

    def add_unitary(self, name, targets, U):
        a = self._new(name)
        try:
            eff = UnitaryEffect(np.asarray(U, dtype=complex), self._targets(targets))
        except Exception as e:
            raise RegistryError(f"{a}: {e}") from None
        self.actions[a] = ActionInfo(UNITARY, eff)
        return a

    def add_measurement(self, family: str, targets, branches, check_complete: bool = True):
        """branches: iterable of (action name, projector, weight)."""
        targets = self._targets(targets)
        names = []
        total = None
        for i, (name, P, w) in enumerate(branches):
            a = self._new(name)
            try:
                eff = ProjectionEffect(np.asarray(P, dtype=complex), targets, Fraction(w), family, i)
            except Exception as e:
                raise RegistryError(f"{a}: {e}") from None
            self.actions[a] = ActionInfo(PROJECTION, eff)
            names.append(a)
            total = eff.P if total is None else total + eff.P
        if check_complete and total is not None and not np.allclose(total, np.eye(total.shape[0]), atol=EPS_Q):
            raise RegistryError(f"projections of measurement {family} do not sum to the identity")
        self.families[family] = names
        return names

    def add_comm(self, a, b, c):
        a, b, c = (ActionName.parse(x) if isinstance(x, str) else x for x in (a, b, c))
        for x in (a, b, c):
            if self.kind(x) != CLASSICAL:
                raise RegistryError(f"γ is defined on classical actions only; {x} is {self.kind(x)}")
        key = frozenset((a, b))
        if key in self.gamma and self.gamma[key] != c:
            raise RegistryError(f"γ({a},{b}) defined twice")
        self.gamma[key] = c

    def add_priority(self, a, b):
        a, b = (ActionName.parse(x) if isinstance(x, str) else x for x in (a, b))
        pairs = set(self.less) | {(a, b)}
        changed = True
        while changed:  # transitive closure
            changed = False
            for (x, y) in list(pairs):
                for (u, v) in list(pairs):
                    if y == u and (x, v) not in pairs:
                        pairs.add((x, v))
                        changed = True
        if any(x == y for x, y in pairs):
            raise RegistryError("priority order has a cycle")
        self.less = pairs

    # ------------------------------------------------------------ JSON
    def to_json(self) -> dict:
        def mat(M):
            return [[float(z.real) + 0.0, float(z.imag) + 0.0] for z in np.asarray(M).reshape(-1)]

        acts, meas = {}, {}
        for a, info in sorted(self.actions.items()):
            if info.kind == CLASSICAL:
                acts[str(a)] = {"kind": CLASSICAL}
            elif info.kind == UNITARY:
                acts[str(a)] = {"kind": UNITARY, "targets": list(info.effect.targets),
                                "matrix": mat(info.effect.U)}
        for fam, names in sorted(self.families.items()):
            effs = [self.actions[a].effect for a in names]
            meas[fam] = {"targets": list(effs[0].targets) if effs else [],
                         "branches": [{"action": str(a), "matrix": mat(e.P), "weight": str(e.branch_weight)}
                                      for a, e in zip(names, effs)]}
        out = {"registers": [{"name": r.name, "visibility": r.visibility} for r in self.registers],
               "actions": acts, "measurements": meas}
        g = []
        for key, c in self.gamma.items():
            ab = sorted(key)
            if len(ab) == 1:
                ab = ab * 2
            g.append([str(ab[0]), str(ab[1]), str(c)])
        out["gamma"] = sorted(g)
        out["priority"] = sorted([str(a), str(b)] for a, b in self.less)
        if self.initial is not None:
            out["initial_state"] = {"matrix": mat(self.initial.matrix)}
        return out

    def dump(self, path):
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")

    @classmethod
    def from_json(cls, data: dict) -> "ActionRegistry":
        reg = cls()
        try:
            for r in data.get("registers", []):
                reg.add_register(r["name"], r.get("visibility", PUBLIC))
            for name, spec in data.get("actions", {}).items():
                kind = spec.get("kind")
                if kind == CLASSICAL:
                    reg.add_classical(name)
                elif kind == UNITARY:
                    reg.add_unitary(name, spec["targets"], _matrix(spec["matrix"], len(spec["targets"])))
                else:
                    raise RegistryError(f"action {name}: kind must be classical or unitary "
                                        f"(projections are declared under 'measurements')")
            for fam, spec in data.get("measurements", {}).items():
                t = spec["targets"]
                reg.add_measurement(fam, t, [(b["action"], _matrix(b["matrix"], len(t)),
                                              Fraction(str(b.get("weight", 1))))
                                             for b in spec["branches"]])
            for a, b, c in data.get("gamma", []):
                reg.add_comm(a, b, c)
            for a, b in data.get("priority", []):
                reg.add_priority(a, b)
            init = data.get("initial_state")
            if init is not None:
                if "bits" in init:
                    reg.initial = basis_state(reg.registers, init["bits"])
                else:
                    m = _matrix(init["matrix"], len(reg.registers))
                    validate_density(m)
                    reg.initial = QState(reg.registers, m)
        except RegistryError:
            raise
        except (KeyError, TypeError, ValueError, PqacpError) as e:
            raise RegistryError(f"malformed registry: {e}") from None
        return reg

    @classmethod
    def load(cls, path) -> "ActionRegistry":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise RegistryError(f"cannot read registry {path}: {e}") from None
        return cls.from_json(data)


def _matrix(data, nq) -> np.ndarray:
    d = 2 ** nq
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 2 and arr.shape == (d * d, 2):
        flat = arr[:, 0] + 1j * arr[:, 1]
    elif arr.ndim == 3 and arr.shape == (d, d, 2):
        flat = (arr[..., 0] + 1j * arr[..., 1]).reshape(-1)
    elif arr.ndim == 2 and arr.shape == (d, d):
        flat = arr.reshape(-1).astype(complex)
    else:
        raise RegistryError(f"matrix of shape {arr.shape} does not fit {nq} qubit(s)")
    return flat.reshape(d, d)
