"""Fully probabilistic quantum graphs: construction, checks and export."""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NotStatic
from .quantum import EPS_Q, QState, measure_probability, state_eq
from .registry import PROJECTION, ActionRegistry
from .sos import Configuration, Engine, resolve
from .syntax import to_text
from .terms import ActionName, Term, is_dynamic

PROB, ACTION, NIL, TRUNC = "prob", "action", "nil", "truncated"


class StateStore:
    """Interns quantum states up to state_eq at a tolerance."""

    def __init__(self, tol: float = EPS_Q):
        self.tol = tol
        self.states: list = []
        self._buckets: dict = {}

    def add(self, s: QState) -> int:
        bucket = self._buckets.setdefault(s.fingerprint(), [])
        for i in bucket:
            if state_eq(self.states[i], s, self.tol):
                return i
        self.states.append(s)
        i = len(self.states) - 1
        bucket.append(i)
        return i

    def __getitem__(self, i) -> QState:
        return self.states[i]

    def __len__(self):
        return len(self.states)


@dataclass
class Node:
    id: int
    kind: str
    term: Term | None
    state: int
    depth: int = 0


@dataclass(frozen=True)
class Edge:
    label: ActionName
    target: int
    origin: ActionName


@dataclass
class ConfigGraph:
    nodes: list = field(default_factory=list)
    states: StateStore = field(default_factory=StateStore)
    psteps: dict = field(default_factory=dict)     # prob id -> [(action id, weight)]
    asteps: dict = field(default_factory=dict)     # action id -> [Edge]
    root: int = 0
    depth: int = 0
    registry_id: str = ""
    diagnostics: list = field(default_factory=list)
    measurement_checks: list = field(default_factory=list)

    # node views
    def of_kind(self, kind) -> list:
        return [n.id for n in self.nodes if n.kind == kind]

    @property
    def prob_states(self):
        return self.of_kind(PROB)

    @property
    def action_states(self):
        return self.of_kind(ACTION)

    @property
    def truncated(self):
        return self.of_kind(TRUNC)

    def state_of(self, nid) -> QState:
        return self.states[self.nodes[nid].state]

    def successors(self, nid):
        n = self.nodes[nid]
        if n.kind == PROB:
            return [t for t, _ in self.psteps[nid]]
        if n.kind == ACTION:
            return [e.target for e in self.asteps[nid]]
        return []

    def counts(self) -> dict:
        return {"prob_states": len(self.prob_states), "action_states": len(self.action_states),
                "nil": len(self.of_kind(NIL)), "truncated": len(self.truncated),
                "prob_edges": sum(len(v) for v in self.psteps.values()),
                "action_edges": sum(len(v) for v in self.asteps.values())}

    def check_invariants(self) -> list:
        """μ sums to exactly 1 at every prob state and ⇝ preserves ϱ."""
        problems = []
        for p, succ in self.psteps.items():
            total = sum((w for _, w in succ), Fraction(0))
            if total != 1:
                problems.append(f"state {p}: outgoing μ sums to {total}")
            for a, w in succ:
                if w <= 0:
                    problems.append(f"state {p}: non-positive weight {w}")
                if self.nodes[a].state != self.nodes[p].state:
                    problems.append(f"edge {p}->{a} changes the quantum state")
        return problems


def build_graph(c0: Configuration, depth: int, registry: ActionRegistry, *,
                share: bool = True, tol: float = EPS_Q, max_states: int = 2_000_000) -> ConfigGraph:
    """Breadth-first closure of prob_step/action_step from a static configuration.

    Prob states further than ``depth`` action steps from the root are replaced
    by a Truncated marker unless they were already discovered.  With
    ``share=False`` no prob state is reused, which unrolls loops into trees.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if is_dynamic(c0.term):
        raise NotStatic("the root configuration must be static")
    eng = Engine(registry, tol)
    g = ConfigGraph(states=StateStore(tol), depth=depth, registry_id=registry.fingerprint())
    index: dict = {}

    def node(kind, term, sid, d, key=None):
        if key is not None and share and key in index:
            return index[key], False
        n = Node(len(g.nodes), kind, term, sid, d)
        g.nodes.append(n)
        if key is not None:
            index[key] = n.id
        return n.id, True

    root_sid = g.states.add(c0.state)
    g.root, _ = node(PROB, c0.term, root_sid, 0, (PROB, c0.term, root_sid))
    queue = deque([g.root])
    while queue:
        if len(g.nodes) > max_states:
            raise RuntimeError(f"graph exceeds {max_states} states")
        p = queue.popleft()
        pn = g.nodes[p]
        s = g.states[pn.state]
        succ = []
        dead = []
        for u, w in resolve(pn.term):
            steps = eng.steps(u, s)
            live = [st for st in steps if not st.impossible]
            _record_measurements(g, eng, p, u, w, steps, s)
            if not live and steps:
                dead.append((u, w))
            else:
                succ.append((u, w, live))
        if dead and succ:
            mass = sum(w for _, w, _ in succ)
            g.diagnostics.append(
                f"pruned {len(dead)} zero-probability branch(es) at state {p}; "
                f"renormalized the remaining mass {mass}")
            succ = [(u, w / mass, live) for u, w, live in succ]
        elif dead:
            g.diagnostics.append(f"every branch at state {p} is a zero-probability projection")
            succ = [(u, w, []) for u, w in dead]
        out = []
        for u, w, live in succ:
            a, new = node(ACTION, u, pn.state, pn.depth, (ACTION, u, pn.state) if share else None)
            out.append((a, w))
            if not new:
                continue
            edges = []
            for st in live:
                sid = g.states.add(st.state)
                if st.target is None:
                    t, _ = node(NIL, None, sid, pn.depth + 1, (NIL, sid))
                else:
                    key = (PROB, st.target, sid)
                    if share and key in index:
                        t = index[key]
                    elif pn.depth + 1 >= depth:
                        t, _ = node(TRUNC, None, sid, pn.depth + 1, (TRUNC, sid))
                    else:
                        t, _ = node(PROB, st.target, sid, pn.depth + 1, key)
                        queue.append(t)
                edges.append(Edge(st.label, t, st.origin))
            g.asteps[a] = _sorted_edges(g, edges)
        g.psteps[p] = out
    for n in g.nodes:
        if n.kind == ACTION:
            g.asteps.setdefault(n.id, [])
    return g


def _sorted_edges(g, edges):
    return sorted(set(edges), key=lambda e: (str(e.label), e.target, str(e.origin)))


def _record_measurements(g, eng, p, u, w, steps, s):
    projs = {st.origin for st in steps if eng.reg.knows(st.origin) and eng.reg.kind(st.origin) == PROJECTION}
    if len(projs) == 1:
        g.measurement_checks.append((p, next(iter(projs)), w))


def check_measurement_consistency(g: ConfigGraph, registry: ActionRegistry, tol: float = EPS_Q) -> list:
    """Compare declared branch weights of projections with tr(Pϱ) at each prob state."""
    per_state: dict = {}
    for p, beta, w in g.measurement_checks:
        per_state.setdefault(p, {}).setdefault(beta, Fraction(0))
        per_state[p][beta] += w
    warnings = []
    for p in sorted(per_state):
        s = g.state_of(p)
        weights = per_state[p]
        for beta in sorted(weights):
            eff = registry.info(beta).effect
            fam = registry.families.get(eff.family, [beta])
            # only compare when every branch of this state resolved into the family
            if sum(weights.get(b, 0) for b in fam) != 1:
                continue
            actual = measure_probability(s, eff)
            if abs(float(weights[beta]) - actual) > tol:
                warnings.append(f"state {p}: branch {beta} declared weight {weights[beta]} "
                                f"but tr(Pϱ) = {actual:.12g}")
    return warnings


# ------------------------------------------------------------------ export

def _label(n: Node, g: ConfigGraph) -> str:
    if n.kind == NIL:
        return "NIL"
    if n.kind == TRUNC:
        return "Truncated"
    return to_text(n.term)


def to_dot(g: ConfigGraph, max_label: int = 60) -> str:
    lines = ["digraph G {", "  rankdir=LR;", '  node [fontname="monospace"];']
    for n in g.nodes:
        lab = _label(n, g)
        if len(lab) > max_label:
            lab = lab[: max_label - 3] + "..."
        lab = lab.replace("\\", "\\\\").replace('"', '\\"')
        shape = {PROB: "ellipse", ACTION: "box", NIL: "doublecircle", TRUNC: "octagon"}[n.kind]
        extra = ", penwidth=2" if n.id == g.root else ""
        lines.append(f'  n{n.id} [label="{lab}", shape={shape}{extra}];')
    for p in sorted(g.psteps):
        for a, w in g.psteps[p]:
            lines.append(f'  n{p} -> n{a} [style=dashed, label="{w}"];')
    for a in sorted(g.asteps):
        for e in g.asteps[a]:
            lines.append(f'  n{a} -> n{e.target} [label="{e.label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _mat(M):
    return [[float(z.real) + 0.0, float(z.imag) + 0.0] for z in np.asarray(M).reshape(-1)]


def to_json(g: ConfigGraph) -> dict:
    return {
        "root": g.root,
        "depth": g.depth,
        "registry": g.registry_id,
        "states": [{"id": n.id, "kind": n.kind, "term": None if n.term is None else to_text(n.term),
                    "qstate": n.state, "nil": n.kind == NIL, "truncated": n.kind == TRUNC}
                   for n in g.nodes],
        "qstates": [{"id": i, "registers": list(s.names), "matrix": _mat(s.matrix)}
                    for i, s in enumerate(g.states.states)],
        "prob_edges": [{"from": p, "to": a, "weight": str(w)} for p in sorted(g.psteps) for a, w in g.psteps[p]],
        "action_edges": [{"from": a, "to": e.target, "label": str(e.label), "origin": str(e.origin)}
                         for a in sorted(g.asteps) for e in g.asteps[a]],
        "diagnostics": list(g.diagnostics),
    }


def dumps_json(g: ConfigGraph) -> str:
    return json.dumps(to_json(g), indent=1) + "\n"
