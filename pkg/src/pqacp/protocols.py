"""Executable models of teleportation, BB84 and E91 with their acceptance checks.

Each model is one loop ``X = receive_A(0) . τ_I(∂_H(A ∥ B [∥ E])) . X`` where
A, B and E run a single protocol round and restore every register to its
starting value, so the configuration graph closes after one round.  All
registers are internal: the external behaviour is the receive/send loop.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .bisim import BranchingResult, branching_bisim
from .errors import InvalidState, OutOfRange
from .graph import NIL, PROB, TRUNC, ConfigGraph, build_graph, check_measurement_consistency
from .quantum import (
    CNOT, EPS_Q, INTERNAL, SWAP, H, I2, X, Z, QState, basis_projector, kron_all,
    partial_trace, state_eq, validate_density,
)
from .registry import ActionRegistry
from .sos import Configuration
from .syntax import to_text
from .terms import (
    Abstr, Atom, Encap, Par, RecSpec, RecVar, Seq, Term, act, alt_all, pchoice_uniform, seq_all,
)

DEFAULT_DEPTH = 64
BB84_MAX_N = 4
E91_MAX_N = 3

RECEIVE_A = act("receive_A", 0)
SEND_B = act("send_B", 0)


@dataclass
class ProtocolModel:
    name: str
    params: dict
    system: Term
    spec: Term
    registry: ActionRegistry
    H: frozenset
    I: frozenset
    mutation: str | None = None
    input_state: QState | None = None
    _graphs: dict = field(default_factory=dict, repr=False)

    def graph(self, depth: int = DEFAULT_DEPTH) -> ConfigGraph:
        if depth not in self._graphs:
            c0 = Configuration(self.system, self.registry.initial_state())
            self._graphs[depth] = build_graph(c0, depth, self.registry)
        return self._graphs[depth]

    def spec_graph(self, depth: int = DEFAULT_DEPTH) -> ConfigGraph:
        return build_graph(Configuration(self.spec, self.registry.initial_state()), depth, self.registry)

    def to_pqa(self) -> str:
        return to_text(self.system) + "\n"

    def export(self, directory) -> dict:
        """Write <name>.pqa, <name>-spec.pqa and <name>-registry.json; return the paths."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        stem = self.name.lower()
        paths = {"system": d / f"{stem}.pqa", "spec": d / f"{stem}-spec.pqa",
                 "registry": d / f"{stem}-registry.json"}
        paths["system"].write_text(self.to_pqa())
        paths["spec"].write_text(to_text(self.spec) + "\n")
        self.registry.dump(paths["registry"])
        return {k: str(v) for k, v in paths.items()}


# ------------------------------------------------------------------ helpers

def _bits(i: int, n: int) -> list:
    """Bits of i, most significant first (bit j belongs to register j)."""
    return [(i >> (n - 1 - j)) & 1 for j in range(n)]


def _layer(gate_for_bit, i: int, n: int) -> np.ndarray:
    return kron_all(gate_for_bit(b) for b in _bits(i, n))


def _hadamards(i: int, n: int) -> np.ndarray:
    """H on every qubit whose bit in i is set."""
    return _layer(lambda b: H if b else I2, i, n)


def _flips(i: int, n: int) -> np.ndarray:
    return _layer(lambda b: X if b else I2, i, n)


def _a(name: str, *idx) -> Atom:
    return Atom(act(name, *idx))


def _loop(body: Term) -> Term:
    return RecSpec("X", {"X": Seq(Atom(RECEIVE_A), Seq(body, RecVar("X")))})


def spec_loop() -> Term:
    """The desired external behaviour: receive_A(0) . send_B(0) repeated."""
    return RecSpec("X", {"X": Seq(Atom(RECEIVE_A), Seq(Atom(SEND_B), RecVar("X")))})


def _system(parties, H, I) -> Term:
    body = parties[0]
    for p in parties[1:]:
        body = Par(body, p)
    return _loop(Abstr(I, Encap(H, body)))


def _channel(reg, chan, values):
    """send/receive/c actions on a channel with γ(send, receive) = c."""
    for v in values:
        idx = () if v is None else (v,)
        s, r, c = (act(f"{k}_{chan}", *idx) for k in ("send", "receive", "c"))
        reg.add_classical(s, r, c)
        reg.add_comm(s, r, c)


def _rand(reg, family, regs, n, reset):
    """Uniform n-bit toss: X-basis measurement of registers held in |0…0⟩.

    ``reset(i)`` (declared once per name) returns the registers to |0…0⟩
    after outcome i.
    """
    w = Fraction(1, 2 ** n)
    Hn = _hadamards(2 ** n - 1, n)
    reg.add_measurement(family, regs, [
        (act(family, i), Hn @ basis_projector(format(i, f"0{n}b")) @ Hn, w) for i in range(2 ** n)])
    if not reg.knows(act(reset, 0)):
        for i in range(2 ** n):
            reg.add_unitary(act(reset, i), regs, _flips(i, n) @ Hn)


def _rand_choice(family, reset, n, cont) -> Term:
    """⊞ over Rand outcomes, each followed by the register reset and cont(i)."""
    return pchoice_uniform(seq_all([_a(family, i), _a(reset, i), cont(i)]) for i in range(2 ** n))


def _check_n(n, hi, name):
    if not isinstance(n, int) or not 1 <= n <= hi:
        raise OutOfRange(f"{name} supports 1 ≤ n ≤ {hi}, got {n!r}")


def _internal(names):
    return [(nm, INTERNAL) for nm in names]


# ------------------------------------------------------------- teleportation

def build_teleport(input_state, mutation: str | None = None) -> ProtocolModel:
    """Teleport a one-qubit density matrix from register m to register q2.

    ``mutation="drop_pauli"`` removes Bob's correction on the outcome-3 branch.
    """
    rho = np.asarray(input_state.matrix if isinstance(input_state, QState) else input_state, dtype=complex)
    if rho.shape != (2, 2):
        raise InvalidState(f"input must be a 2x2 density matrix, got shape {rho.shape}")
    validate_density(rho)
    reg = ActionRegistry()
    for name, vis in _internal(["m", "q1", "q2"]):
        reg.add_register(name, vis)
    reg.initial = QState(reg.registers, np.kron(rho, basis_projector("00")))

    reg.add_unitary("Set", ["q1", "q2"], np.eye(4))
    reg.add_unitary("Hq", ["q1", "q2"], CNOT @ np.kron(H, I2))
    reg.add_unitary("CNOT", ["m", "q1"], CNOT)
    reg.add_unitary("H", ["m"], H)
    reg.add_measurement("M", ["m", "q1"], [
        (act("M", i), basis_projector(format(i, "02b")), Fraction(1, 4)) for i in range(4)])
    for i in range(4):
        a, b = _bits(i, 2)
        reg.add_unitary(act("sigma", i), ["q2"],
                        np.linalg.matrix_power(Z, a) @ np.linalg.matrix_power(X, b))
        # clear m, q1 back to |0⟩ and move the teleported qubit into m
        reg.add_unitary(act("reset", i), ["m", "q1", "q2"],
                        _embed(SWAP, ["m", "q2"], ["m", "q1", "q2"]) @ np.kron(_flips(i, 2), I2))
    _channel(reg, "QA", [None])
    _channel(reg, "QB", [None])
    _channel(reg, "P", range(4))
    reg.add_classical(RECEIVE_A, SEND_B)

    E = seq_all([_a("Set"), _a("Hq"), _a("send_QA"), _a("send_QB")])
    A = seq_all([_a("receive_QA"), _a("CNOT"), _a("H"),
                 pchoice_uniform(Seq(_a("M", i), _a("send_P", i)) for i in range(4))])

    def bob_branch(i):
        fix = [] if (mutation == "drop_pauli" and i == 3) else [_a("sigma", i)]
        return seq_all([_a("receive_P", i), *fix, Atom(SEND_B), _a("reset", i)])

    B = Seq(_a("receive_QB"), alt_all(bob_branch(i) for i in range(4)))
    H_set = frozenset(act(f"{k}_{c}", *ix) for c, ixs in (("QA", [()]), ("QB", [()]), ("P", [(i,) for i in range(4)]))
                      for ix in ixs for k in ("send", "receive"))
    I_set = frozenset([act("Set"), act("Hq"), act("CNOT"), act("H"), act("c_QA"), act("c_QB")]
                      + [act(k, i) for i in range(4) for k in ("M", "sigma", "c_P", "reset")])
    return ProtocolModel("Teleport", {"input": _mat_list(rho)}, _system([A, B, E], H_set, I_set),
                         spec_loop(), reg, H_set, I_set, mutation,
                         input_state=QState(["q2"], rho, check=False))


def _mat_list(m):
    return [[[float(z.real) + 0.0, float(z.imag) + 0.0] for z in row] for row in np.asarray(m)]


# ---------------------------------------------------------------------- BB84

def build_bb84(n: int, mutation: str | None = None) -> ProtocolModel:
    """BB84 key generation over n qubits.

    ``mutation="flip_basis"`` makes Bob measure bit 0 in the basis opposite to
    the one he announces.
    """
    _check_n(n, BB84_MAX_N, "BB84")
    N = 2 ** n
    q = [f"q{j}" for j in range(n)]
    qp = [f"qp{j}" for j in range(n)]     # Bob's own register q'
    reg = ActionRegistry()
    for name, vis in _internal(q + qp):
        reg.add_register(name, vis)
    _rand(reg, "Rand_Ba", q, n, "rst")
    _rand(reg, "Rand_Ka", q, n, "rst")
    _rand(reg, "Rand_Bb", qp, n, "rst_p")
    w = Fraction(1, N)
    for i in range(N):
        reg.add_unitary(act("Set", i), q, _flips(i, n))
        reg.add_unitary(act("Hb", i), q, _hadamards(i, n))
    for b in range(N):
        Hb = _hadamards(b, n)
        reg.add_measurement(f"M_{b}", q, [
            (act("M", b, k), Hb @ basis_projector(format(k, f"0{n}b")) @ Hb, w) for k in range(N)])
        for k in range(N):
            reg.add_unitary(act("clr_q", b, k), q, _flips(k, n) @ Hb)
    _channel(reg, "Q", [None])
    _channel(reg, "P", range(N))
    cmps = {act("cmp", ba, bb, k & ~(ba ^ bb) & (N - 1)) for ba in range(N) for bb in range(N) for k in range(N)}
    reg.add_classical(*sorted(cmps))
    reg.add_classical(RECEIVE_A, SEND_B)
    flip = 1 << (n - 1) if mutation == "flip_basis" else 0

    def sifted(ba, bb, k):
        return k & ~(ba ^ bb) & (N - 1)

    def alice_tail(ba, ka):
        return seq_all([_a("Set", ka), _a("Hb", ba), _a("send_Q"),
                        alt_all(seq_all([_a("receive_P", bb), _a("send_P", ba), _a("cmp", ba, bb, sifted(ba, bb, ka))])
                                for bb in range(N))])

    A = _rand_choice("Rand_Ba", "rst", n, lambda ba: _rand_choice("Rand_Ka", "rst", n, lambda ka: alice_tail(ba, ka)))

    def bob_tail(bb):
        mb = bb ^ flip
        return pchoice_uniform(
            seq_all([_a("M", mb, kb), _a("clr_q", mb, kb), _a("send_P", bb),
                     alt_all(seq_all([_a("receive_P", ba), _a("cmp", ba, bb, sifted(ba, bb, kb))]) for ba in range(N)),
                     Atom(SEND_B)])
            for kb in range(N))

    B = Seq(_a("receive_Q"), _rand_choice("Rand_Bb", "rst_p", n, bob_tail))
    H_set = frozenset([act("send_Q"), act("receive_Q")] + [act(k, v) for v in range(N) for k in ("send_P", "receive_P")])
    I_set = frozenset(a for a in reg.actions if a not in H_set and a not in (RECEIVE_A, SEND_B))
    return ProtocolModel("BB84", {"n": n}, _system([A, B], H_set, I_set), spec_loop(), reg,
                         H_set, I_set, mutation)


# ----------------------------------------------------------------------- E91

def build_e91(n: int, mutation: str | None = None) -> ProtocolModel:
    """E91 key generation over n EPR pairs, with entanglement made explicit by ≬.

    ``mutation="wrong_shadow"`` makes Bob offer the shadow of outcome 1 where
    the shadow of outcome 0 (basis 0) belongs.
    """
    _check_n(n, E91_MAX_N, "E91")
    N = 2 ** n
    qa = [f"qa{j}" for j in range(n)]
    qb = [f"qb{j}" for j in range(n)]
    reg = ActionRegistry()
    for name, vis in _internal(qa + qb):
        reg.add_register(name, vis)
    # basis choices are drawn on the pair registers before they are entangled
    _rand(reg, "Rand_Ba", qa, n, "rst_a")
    _rand(reg, "Rand_Bb", qb, n, "rst_b")
    w = Fraction(1, N)
    # EPR preparation on the pairs (qa_j, qb_j)
    epr = np.eye(2 ** (2 * n), dtype=complex)
    for j in range(n):
        epr = _embed(CNOT, [qa[j], qb[j]], qa + qb) @ _embed(H, [qa[j]], qa + qb) @ epr
    reg.add_unitary("EPR", qa + qb, epr)
    for side, regs in (("Ma", qa), ("Mb", qb)):
        for b in range(N):
            Hb = _hadamards(b, n)
            reg.add_measurement(f"{side}_{b}", regs, [
                (act(side, b, k), Hb @ basis_projector(format(k, f"0{n}b")) @ Hb, w) for k in range(N)])
            for k in range(N):
                reg.add_unitary(act(f"clr_{side[1]}", b, k), regs, _flips(k, n) @ Hb)
    _channel(reg, "Q", [None])
    _channel(reg, "P", range(N))
    cmps = {act("cmp", ba, bb, k & ~(ba ^ bb) & (N - 1)) for ba in range(N) for bb in range(N) for k in range(N)}
    reg.add_classical(*sorted(cmps))
    reg.add_classical(RECEIVE_A, SEND_B)

    def sifted(ba, bb, k):
        return k & ~(ba ^ bb) & (N - 1)

    def shadows(side, wrong=False):
        out = []
        for b in range(N):
            for k in range(N):
                kk = 1 if (wrong and b == 0 and k == 0) else k
                out.append(Atom(act(side, b, kk).shadow_of()))
        return alt_all(out)

    def alice_tail(ba):
        return pchoice_uniform(
            # the reset waits for Bob's measurement so nothing runs beside his ⊞
            seq_all([_a("Ma", ba, ka), shadows("Mb"), _a("clr_a", ba, ka),
                     alt_all(seq_all([_a("receive_P", bb), _a("send_P", ba), _a("cmp", ba, bb, sifted(ba, bb, ka))])
                             for bb in range(N))])
            for ka in range(N))

    # EPR follows the channel sync, so Bob's toss on qb has finished
    A = _rand_choice("Rand_Ba", "rst_a", n, lambda ba: seq_all([_a("send_Q"), _a("EPR"), alice_tail(ba)]))

    def bob_tail(bb):
        return pchoice_uniform(
            seq_all([_a("Mb", bb, kb), _a("clr_b", bb, kb), _a("send_P", bb),
                     alt_all(seq_all([_a("receive_P", ba), _a("cmp", ba, bb, sifted(ba, bb, kb))]) for ba in range(N)),
                     Atom(SEND_B)])
            for kb in range(N))

    B = _rand_choice("Rand_Bb", "rst_b", n, lambda bb: seq_all(
        [_a("receive_Q"), shadows("Ma", mutation == "wrong_shadow"), bob_tail(bb)]))
    meas = [act(s, b, k) for s in ("Ma", "Mb") for b in range(N) for k in range(N)]
    H_set = frozenset([act("send_Q"), act("receive_Q")]
                      + [act(k, v) for v in range(N) for k in ("send_P", "receive_P")]
                      + meas + [m.shadow_of() for m in meas])
    # measurement labels leave ∂_H only when synchronized by ≬, and are then hidden
    I_set = frozenset(a for a in reg.actions if a not in (RECEIVE_A, SEND_B)
                      and (a not in H_set or a in meas))
    return ProtocolModel("E91", {"n": n}, _system([A, B], H_set, I_set), spec_loop(), reg,
                         H_set, I_set, mutation)


def _embed(U, targets, order) -> np.ndarray:
    """Lift a gate on ``targets`` to the full register list ``order``."""
    k = len(order)
    d = 2 ** k
    out = np.zeros((d, d), dtype=complex)
    pos = [order.index(t) for t in targets]
    for col in range(d):
        bits = _bits(col, k)
        sub = 0
        for p in pos:
            sub = sub * 2 + bits[p]
        for r in range(2 ** len(targets)):
            amp = U[r, sub]
            if amp == 0:
                continue
            nb = bits[:]
            for i, p in enumerate(pos):
                nb[p] = _bits(r, len(targets))[i]
            out[int("".join(map(str, nb)), 2), col] += amp
    return out


# ---------------------------------------------------------------- path checks

@dataclass
class Run:
    prob: Fraction
    edges: list          # [(action node id, Edge)]
    end: str             # "loop", "nil", "truncated" or "deadlock"

    def origins(self) -> list:
        return [e.origin for _, e in self.edges]


def enumerate_paths(g: ConfigGraph, limit: int = 2_000_000) -> list:
    """Every path from the root until it is back at the loop term, stops or deadlocks.

    A path ends on reaching the root term again whatever the quantum state, so
    models whose registers do not return to their start still give one round.
    """
    paths = []
    loop_term = g.nodes[g.root].term
    stack = [(g.root, Fraction(1), (), True)]
    while stack:
        node, prob, edges, first = stack.pop()
        kind = g.nodes[node].kind
        if not first and kind == PROB and g.nodes[node].term is loop_term:
            paths.append(Run(prob, list(edges), "loop"))
        elif kind == NIL:
            paths.append(Run(prob, list(edges), "nil"))
        elif kind == TRUNC:
            paths.append(Run(prob, list(edges), "truncated"))
        elif kind == PROB:
            for a, w in g.psteps[node]:
                stack.append((a, prob * w, edges, False))
        else:
            out = g.asteps[node]
            if not out:
                paths.append(Run(prob, list(edges), "deadlock"))
            for e in out:
                stack.append((e.target, prob, edges + ((node, e),), False))
        if len(paths) > limit:
            raise RuntimeError("too many paths")
    return paths


def _record(p: Run, keys) -> tuple:
    """Indices of the first non-shadow action named by each key, in key order."""
    seen = {}
    for o in p.origins():
        if o.name in keys and o.name not in seen and not o.shadow:
            seen[o.name] = o.indices
    return tuple(seen.get(k) for k in keys)


def canonical_paths(g: ConfigGraph) -> list:
    """Paths under the scheduler that always takes an action state's first edge.

    In x ∥ y an idle operand is re-resolved after its partner moves, so path
    weights depend on the interleaving; fixing one scheduler gives a proper
    distribution whose weights sum to 1.
    """
    loop_term = g.nodes[g.root].term
    out = []
    stack = [(g.root, Fraction(1), (), True)]
    while stack:
        node, prob, edges, first = stack.pop()
        n = g.nodes[node]
        if not first and n.kind == PROB and n.term is loop_term:
            out.append(Run(prob, list(edges), "loop"))
        elif n.kind in (NIL, TRUNC):
            out.append(Run(prob, list(edges), "nil" if n.kind == NIL else "truncated"))
        elif n.kind == PROB:
            stack.extend((a, prob * w, edges, False) for a, w in g.psteps[node])
        elif not g.asteps[node]:
            out.append(Run(prob, list(edges), "deadlock"))
        else:
            e = g.asteps[node][0]
            stack.append((e.target, prob, edges + ((node, e),), False))
    return out


def teleport_fidelity(m: ProtocolModel, g: ConfigGraph, tol: float = EPS_Q) -> list:
    """Paths on which Bob's register differs from the input when send_B fires."""
    bad = []
    checked = 0
    for p in enumerate_paths(g):
        if p.end != "loop":
            bad.append(f"path ends in {p.end}")
            continue
        for src, e in p.edges:
            if e.origin == SEND_B:
                checked += 1
                out = partial_trace(g.state_of(src), ["q2"])
                if not state_eq(out, m.input_state, tol):
                    bad.append("Bob's register differs from the input after "
                               + " ".join(str(o) for o in p.origins() if o.name in ("M", "sigma")))
    if not checked:
        bad.append("no send_B(0) transition found")
    return bad


def _matched(ba, bb, n):
    return [j for j in range(n) if _bits(ba, n)[j] == _bits(bb, n)[j]]


def key_agreement(m: ProtocolModel, g: ConfigGraph) -> dict:
    """Check that the keys agree at every matched-basis position.

    The predicate is checked on every path of the graph.  ``agreement`` is
    the exact probability of agreeing under the canonical scheduler.
    Returns {"outcomes", "disagreements", "agreement", "basis_pairs", "deadlocks"}.
    """
    n = m.params["n"]
    keys = ("Rand_Ba", "Rand_Ka", "Rand_Bb", "M") if m.name == "BB84" else ("Rand_Ba", "Ma", "Rand_Bb", "Mb")

    def agrees(rec):
        ba, ka, bb, kb = rec[0][0], rec[1][-1], rec[2][0], rec[3][-1]
        return all(_bits(ka, n)[j] == _bits(kb, n)[j] for j in _matched(ba, bb, n))

    paths = enumerate_paths(g)
    records, bad, pairs = set(), [], set()
    for p in paths:
        if p.end != "loop":
            continue
        rec = _record(p, keys)
        if any(r is None for r in rec):
            bad.append(f"incomplete outcome {rec}")
            continue
        if rec in records:
            continue
        records.add(rec)
        pairs.add((rec[0][0], rec[2][0]))
        if not agrees(rec):
            bad.append(f"Ba={rec[0][0]} Bb={rec[2][0]} Ka={rec[1][-1]} Kb={rec[3][-1]}: "
                       "keys differ at a matched position")
    agree = total = Fraction(0)
    for p in canonical_paths(g):
        total += p.prob
        rec = _record(p, keys)
        if p.end == "loop" and all(r is not None for r in rec) and agrees(rec):
            agree += p.prob
    return {"outcomes": len(records), "disagreements": sorted(bad),
            "agreement": agree / total if total else Fraction(0),
            "basis_pairs": sorted(pairs), "deadlocks": sum(p.end == "deadlock" for p in paths)}


def basis_weights(m: ProtocolModel, g: ConfigGraph, families=("Rand_Ba", "Rand_Bb")) -> dict:
    """Per-bit marginal weight of outcome 0 at every prob state choosing a Rand outcome.

    Returns {family: [[marginal per bit], ...] per choosing state}.
    """
    n = m.params["n"]
    out = {f: [] for f in families}
    for p, succ in sorted(g.psteps.items()):
        for fam in families:
            per = {}
            for a, w in succ:
                labels = {e.origin for e in g.asteps[a] if e.origin.name == fam}
                if len(labels) == 1:
                    i = next(iter(labels)).indices[0]
                    per[i] = per.get(i, Fraction(0)) + w
            if per:
                out[fam].append([sum((w for i, w in per.items() if _bits(i, n)[j] == 0), Fraction(0))
                                 for j in range(n)])
    return out


# ------------------------------------------------------------ verification

def verify_external_behavior(m: ProtocolModel, depth: int = DEFAULT_DEPTH,
                             tol: float = EPS_Q) -> BranchingResult:
    """Branching bisimilarity of the system against receive_A(0) . send_B(0) repeated."""
    return branching_bisim(m.graph(depth), m.spec_graph(depth), tol=tol)


def _check(name, ok, **detail):
    return {"check": name, "pass": bool(ok), **detail}


def run_checks(m: ProtocolModel, depth: int = DEFAULT_DEPTH, tol: float = EPS_Q) -> list:
    """All acceptance checks for one model as a list of {"check", "pass", ...} dicts."""
    g = m.graph(depth)
    res = verify_external_behavior(m, depth, tol)
    checks = [
        _check("external_behavior", res.equivalent, verdict=res.to_json()["verdict"],
               witness=res.to_json().get("witness")),
        _check("closed_graph", not g.truncated, truncated=len(g.truncated)),
        _check("mu_normalized", not g.check_invariants(), problems=g.check_invariants()[:5]),
    ]
    if m.name == "Teleport":
        warn = check_measurement_consistency(g, m.registry, tol)
        checks.append(_check("measurement_consistency", not warn, warnings=warn[:5]))
        bad = teleport_fidelity(m, g, tol)
        checks.append(_check("bob_register_matches_input", not bad, failures=bad[:5]))
        return checks
    ka = key_agreement(m, g)
    if m.name == "BB84":
        checks.append(_check("key_agreement", not ka["disagreements"], outcomes=ka["outcomes"],
                             failures=ka["disagreements"][:5]))
        bw = basis_weights(m, g)
        ok = all(bw[f] for f in bw) and all(x == Fraction(1, 2) for f in bw for row in bw[f] for x in row)
        checks.append(_check("basis_weights_half", ok,
                             weights={f: sorted({str(x) for row in bw[f] for x in row}) for f in bw}))
        checks.append(_check("basis_pairs", len(ka["basis_pairs"]) == 4 ** m.params["n"],
                             count=len(ka["basis_pairs"])))
    else:
        checks.append(_check("correlation_one", ka["agreement"] == 1 and not ka["disagreements"],
                             correlation=str(ka["agreement"]), failures=ka["disagreements"][:5]))
    return checks


def build(protocol: str, *, n: int = 1, input_state=None, mutation: str | None = None) -> ProtocolModel:
    p = protocol.lower()
    if p == "teleport":
        return build_teleport(input_state if input_state is not None else basis_projector("0"), mutation)
    if p == "bb84":
        return build_bb84(n, mutation)
    if p == "e91":
        return build_e91(n, mutation)
    raise ValueError(f"unknown protocol {protocol!r}")


def report(m: ProtocolModel, depth: int = DEFAULT_DEPTH, tol: float = EPS_Q, seed: int | None = None) -> dict:
    checks = run_checks(m, depth, tol)
    g = m.graph(depth)
    return {"protocol": m.name, "params": m.params, "mutation": m.mutation, "seed": seed,
            "depth": depth, "counts": g.counts(), "checks": checks,
            "pass": all(c["pass"] for c in checks)}


def dumps_report(r: dict) -> str:
    return json.dumps(r, indent=1, sort_keys=True, default=str) + "\n"
