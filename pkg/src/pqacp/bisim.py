"""Strong and branching probabilistic quantum bisimulation on configuration graphs."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DivergenceWithoutExit, IncompatibleRegistries
from .graph import ACTION, NIL, PROB, TRUNC, ConfigGraph, StateStore
from .quantum import EPS_Q, public_part
from .terms import TAU

SILENT = "silent"      # τ and ⇝ merged when reporting exits
DONE = "✓"
CUT = "⊥"


@dataclass
class PartitionResult:
    equivalent: bool
    partition: tuple                 # (classes of g1 nodes, classes of g2 nodes)
    classes: int
    witness: dict | None = None
    elapsed: float = 0.0

    def to_json(self) -> dict:
        return {"verdict": "equivalent" if self.equivalent else "inequivalent",
                "classes": self.classes, "witness": self.witness, "wall_time": round(self.elapsed, 6)}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, ensure_ascii=False) + "\n"


@dataclass
class BranchingResult(PartitionResult):
    entry_partition: dict = field(default_factory=dict)   # entry node -> R̃ class

    @property
    def relation(self):
        return self.partition, self.entry_partition


# ------------------------------------------------------------------ union

class _Union:
    """Disjoint union of two graphs with ϱ classes resolved across them."""

    def __init__(self, g1: ConfigGraph, g2: ConfigGraph, tol: float):
        if g1.registry_id != g2.registry_id:
            raise IncompatibleRegistries(f"graphs use registries {g1.registry_id} and {g2.registry_id}")
        self.graphs = (g1, g2)
        self.kind, self.full, self.pub, self.psucc, self.asucc = [], [], [], [], []
        full_store, pub_store = StateStore(tol), StateStore(tol)
        self.offsets = []
        for g in self.graphs:
            off = len(self.kind)
            self.offsets.append(off)
            fmap = [full_store.add(s) for s in g.states.states]
            pmap = [pub_store.add(public_part(s)) for s in g.states.states]
            for n in g.nodes:
                self.kind.append(n.kind)
                self.full.append(fmap[n.state])
                self.pub.append(pmap[n.state])
                self.psucc.append([(off + a, w) for a, w in g.psteps.get(n.id, [])])
                self.asucc.append([(e.label, off + e.target) for e in g.asteps.get(n.id, [])])
        self.n = len(self.kind)
        self.roots = (g1.root, self.offsets[1] + g2.root)

    def local(self, x) -> list:
        gi = 0 if x < self.offsets[1] else 1
        return [gi + 1, x - self.offsets[gi]]

    def split(self, part) -> tuple:
        o = self.offsets[1]
        return tuple(part[:o]), tuple(part[o:])

    def describe(self, x) -> str:
        g = self.graphs[0 if x < self.offsets[1] else 1]
        n = g.nodes[x - self.offsets[0 if x < self.offsets[1] else 1]]
        if n.kind in (NIL, TRUNC):
            return "NIL" if n.kind == NIL else "Truncated"
        if n.term is None:
            return f"{n.kind} state {n.id}"
        from .syntax import to_text
        return to_text(n.term)


def _refine(n, init, sig):
    """Signature refinement; returns the list of partitions, coarsest first."""
    history = [list(init)]
    part = history[0]
    while True:
        keys: dict = {}
        new = [keys.setdefault((part[x], sig(x, part)), len(keys)) for x in range(n)]
        if len(keys) == len(set(part)):
            return history
        history.append(new)
        part = new


def _canon(init) -> list:
    ids: dict = {}
    return [ids.setdefault(k, len(ids)) for k in init]


# ------------------------------------------------------------------ strong

def strong_bisim(g1: ConfigGraph, g2: ConfigGraph, *, ignore_quantum: bool = False,
                 tol: float = EPS_Q) -> PartitionResult:
    """Coarsest strong probabilistic quantum bisimulation on the disjoint union."""
    t0 = time.perf_counter()
    u = _Union(g1, g2, tol)
    init = _canon([(u.kind[x], 0 if ignore_quantum else u.full[x]) for x in range(u.n)])

    def sig(x, part):
        k = u.kind[x]
        if k == ACTION:
            return frozenset((lab, part[t]) for lab, t in u.asucc[x])
        if k == PROB:
            return _masses(u.psucc[x], part)
        return None

    history = _refine(u.n, init, sig)
    part = history[-1]
    r1, r2 = u.roots
    eq = part[r1] == part[r2]
    witness = None if eq else _strong_witness(u, r1, r2, history, sig, ignore_quantum)
    return PartitionResult(eq, u.split(part), len(set(part)), witness, time.perf_counter() - t0)


def _masses(succ, part) -> frozenset:
    acc: dict = {}
    for t, w in succ:
        acc[part[t]] = acc.get(part[t], Fraction(0)) + w
    return frozenset(acc.items())


def _strong_witness(u, x, y, history, sig, ignore_quantum):
    path = []
    while True:
        path.append([u.local(x), u.local(y)])
        k = next(i for i, p in enumerate(history) if p[x] != p[y])
        base = {"states": [u.local(x), u.local(y)], "terms": [u.describe(x), u.describe(y)], "path": path}
        if k == 0:
            if u.kind[x] != u.kind[y]:
                return {**base, "condition": "kind mismatch", "detail": f"{u.kind[x]} vs {u.kind[y]}"}
            return {**base, "condition": "ϱ mismatch", "detail": "quantum states differ"}
        prev = history[k - 1]
        if u.kind[x] == PROB:
            mx, my = dict(sig(x, prev)), dict(sig(y, prev))
            c = min(set(mx) | set(my), key=lambda c: (mx.get(c, 0) == my.get(c, 0), c))
            if c not in my or c not in mx:
                # structural difference: one side reaches a class the other cannot reach at all
                if c not in mx:
                    x, y = y, x
                x = next(t for t, _ in u.psucc[x] if prev[t] == c)
                y = u.psucc[y][0][0]
                continue
            return {**base, "condition": "μ-class mismatch",
                    "detail": f"mass {mx.get(c, 0)} vs {my.get(c, 0)} into one class"}
        lx = {lab for lab, _ in u.asucc[x]}
        ly = {lab for lab, _ in u.asucc[y]}
        if lx != ly:
            extra = sorted(str(a) for a in lx ^ ly)
            return {**base, "condition": "action mismatch", "detail": "unmatched label(s) " + ", ".join(extra)}
        sx, sy = sig(x, prev), sig(y, prev)
        if not (sx - sy):
            x, y, sx, sy = y, x, sy, sx
        lab, c = min(sx - sy, key=lambda lc: (str(lc[0]), lc[1]))
        x = next(t for l, t in u.asucc[x] if l == lab and prev[t] == c)
        y = next(t for l, t in u.asucc[y] if l == lab)


# ---------------------------------------------------------------- branching

def _tarjan(n, succ):
    """Iterative Tarjan; returns SCCs in reverse topological order (sinks first)."""
    index = [None] * n
    low = [0] * n
    on = [False] * n
    stack, out = [], []
    counter = 0
    for s in range(n):
        if index[s] is not None:
            continue
        work = [(s, iter(succ(s)))]
        index[s] = low[s] = counter
        counter += 1
        stack.append(s)
        on[s] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] is None:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on[w] = True
                    work.append((w, iter(succ(w))))
                    advanced = True
                    break
                if on[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on[w] = False
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


class _Branching:
    def __init__(self, u: _Union):
        self.u = u
        n = u.n
        # uniform move lists: (label or None for ⇝, target, weight)
        self.moves = []
        for x in range(n):
            if u.kind[x] == PROB:
                self.moves.append([(None, t, w) for t, w in u.psucc[x]])
            else:
                self.moves.append([(lab, t, None) for lab, t in u.asucc[x]])

    @staticmethod
    def silent(lab):
        return lab is None or lab == TAU

    def pseudo(self, x):
        k = self.u.kind[x]
        return DONE if k == NIL else CUT if k == TRUNC else None

    def inert_succ(self, part):
        return [[t for lab, t, _ in self.moves[x] if self.silent(lab) and part[t] == part[x]]
                for x in range(self.u.n)]

    def closure(self, part, direct):
        """Obs(x): union of direct(x) over everything inert-reachable from x."""
        inert = self.inert_succ(part)
        obs = [None] * self.u.n
        for comp in _tarjan(self.u.n, lambda v: inert[v]):
            acc = set()
            for v in comp:
                acc |= direct(v)
                for w in inert[v]:
                    if obs[w] is not None:
                        acc |= obs[w]
            fz = frozenset(acc)
            for v in comp:
                obs[v] = fz
        return obs

    def direct(self, part, target_class):
        def d(x):
            out = set()
            p = self.pseudo(x)
            if p:
                out.add((p, None))
            for lab, t, _ in self.moves[x]:
                if self.silent(lab):
                    if part[t] != part[x]:
                        out.add((SILENT, target_class(t)))
                else:
                    out.add((str(lab), target_class(t)))
            return out
        return d

    def refine_r(self, init):
        part = list(init)
        while True:
            obs = self.closure(part, self.direct(part, lambda t: part[t]))
            keys: dict = {}
            new = [keys.setdefault((part[x], obs[x]), len(keys)) for x in range(self.u.n)]
            if len(keys) == len(set(part)):
                return part, obs
            part = new

    # -------------------------------------------------------------- R̃
    def entries(self, part):
        ent = set(self.u.roots)
        for x in range(self.u.n):
            for lab, t, _ in self.moves[x]:
                if part[t] != part[x] or not self.silent(lab):
                    ent.add(t)
        return sorted(ent)

    def decision(self, part, x) -> bool:
        if self.pseudo(x) or self.u.kind[x] == PROB:
            return bool(self.pseudo(x))
        mv = self.moves[x]
        if not mv:
            return True
        if any(not self.silent(lab) for lab, _, _ in mv):
            return True
        return len({t for _, t, _ in mv}) > 1

    def distributions(self, part, ent, rt):
        """Exit distribution of every entry through the continuing states of its class."""
        obs = self.closure(part, self.direct(part, lambda t: rt[t]))
        memo: dict = {}

        def leaf(x):
            return ("stop", obs[x])

        # continuing states reachable inside classes from entries
        nodes, seen = [], set()
        for e in ent:
            todo = [e]
            while todo:
                x = todo.pop()
                if x in seen:
                    continue
                seen.add(x)
                nodes.append(x)
                if self.decision(part, x):
                    continue
                for _, t, _ in self.moves[x]:
                    if part[t] == part[x]:
                        todo.append(t)
        idx = {x: i for i, x in enumerate(nodes)}

        def inside(x):
            if self.decision(part, x):
                return []
            return [idx[t] for _, t, _ in self.moves[x] if part[t] == part[x]]

        for comp in _tarjan(len(nodes), lambda i: inside(nodes[i])):
            comp = [nodes[i] for i in comp]
            if len(comp) == 1 and comp[0] not in [nodes[j] for j in inside(comp[0])]:
                x = comp[0]
                memo[x] = self._row(part, rt, x, memo, leaf)
            else:
                self._solve(part, rt, comp, memo, leaf)
        return {e: memo[e] for e in ent}

    def _weights(self, x):
        mv = self.moves[x]
        if self.u.kind[x] == PROB:
            return [(t, w) for _, t, w in mv]
        return [(mv[0][1], Fraction(1))]   # single silent target

    def _row(self, part, rt, x, memo, leaf):
        if self.decision(part, x):
            return {leaf(x): Fraction(1)}
        acc: dict = {}
        for t, w in self._weights(x):
            if part[t] == part[x]:
                for k, v in memo[t].items():
                    acc[k] = acc.get(k, 0) + w * v
            else:
                k = ("exit", SILENT, rt[t])
                acc[k] = acc.get(k, 0) + w
        return acc

    def _solve(self, part, rt, comp, memo, leaf):
        """Absorption probabilities of a cyclic SCC, exactly over the rationals."""
        pos = {x: i for i, x in enumerate(comp)}
        m = len(comp)
        A = [[Fraction(0)] * m for _ in range(m)]
        rhs = [dict() for _ in range(m)]
        for x in comp:
            i = pos[x]
            A[i][i] += 1
            for t, w in self._weights(x):
                if t in pos:
                    A[i][pos[t]] -= w
                elif part[t] == part[x]:
                    for k, v in memo[t].items():
                        rhs[i][k] = rhs[i].get(k, 0) + w * v
                else:
                    k = ("exit", SILENT, rt[t])
                    rhs[i][k] = rhs[i].get(k, 0) + w
        keys = sorted({k for r in rhs for k in r}, key=repr)
        B = [[r.get(k, Fraction(0)) for k in keys] for r in rhs]
        for c in range(m):
            p = next((r for r in range(c, m) if A[r][c] != 0), None)
            if p is None:
                raise DivergenceWithoutExit("a silent cycle has no exit")
            A[c], A[p], B[c], B[p] = A[p], A[c], B[p], B[c]
            piv = A[c][c]
            A[c] = [v / piv for v in A[c]]
            B[c] = [v / piv for v in B[c]]
            for r in range(m):
                if r != c and A[r][c] != 0:
                    f = A[r][c]
                    A[r] = [a - f * b for a, b in zip(A[r], A[c])]
                    B[r] = [a - f * b for a, b in zip(B[r], B[c])]
        for x in comp:
            row = {k: v for k, v in zip(keys, B[pos[x]]) if v != 0}
            if sum(row.values()) != 1:
                raise DivergenceWithoutExit("a silent cycle leaves probability mass without an exit")
            memo[x] = row

    def refine_rt(self, part, ent):
        rt = {e: part[e] for e in ent}
        rt_full = self._extend(part, rt)
        while True:
            dist = self.distributions(part, ent, rt_full)
            keys: dict = {}
            new = {e: keys.setdefault((rt[e], frozenset(dist[e].items())), len(keys)) for e in ent}
            if len(keys) == len(set(rt.values())):
                return rt, dist
            rt = new
            rt_full = self._extend(part, rt)

    def _extend(self, part, rt):
        # non-entries never appear as exit targets
        return [rt.get(x) for x in range(self.u.n)]


def branching_bisim(g1: ConfigGraph, g2: ConfigGraph, *, tol: float = EPS_Q) -> BranchingResult:
    """Rooted probabilistic quantum branching bisimulation.

    R is the coarsest branching refinement treating τ and ⇝ as silent; R̃
    refines R on entry states by their exit distributions.  The roots must be
    R̃-related and the root conditions must hold in both directions.
    """
    t0 = time.perf_counter()
    u = _Union(g1, g2, tol)
    b = _Branching(u)
    part, obs = b.refine_r(_canon(u.pub))
    ent = b.entries(part)
    rt, dist = b.refine_rt(part, ent)
    r1, r2 = u.roots
    witness = None
    if part[r1] != part[r2]:
        witness = {"states": [u.local(r1), u.local(r2)], "condition": "branching mismatch",
                   "detail": _obs_diff(obs[r1], obs[r2])}
    elif rt[r1] != rt[r2]:
        witness = {"states": [u.local(r1), u.local(r2)], "condition": "probability mismatch",
                   "detail": _dist_diff(dist[r1], dist[r2])}
    else:
        witness = _root_condition(u, part, r1, r2) or _root_condition(u, part, r2, r1)
    eq = witness is None
    res = BranchingResult(eq, u.split(part), len(set(part)), witness, time.perf_counter() - t0)
    res.entry_partition = rt
    return res


def _obs_diff(a, b) -> str:
    diff = sorted({str(lab) for lab, _ in a ^ b})
    return "unmatched observable exit(s) " + ", ".join(diff) if diff else "exits reach different classes"


def _dist_diff(a, b) -> str:
    ks = sorted(set(a) | set(b), key=repr)
    for k in ks:
        if a.get(k, 0) != b.get(k, 0):
            return f"exit probability {a.get(k, 0)} vs {b.get(k, 0)}"
    return "distributions differ"


def _root_condition(u, part, r, s):
    """Every root step r ⇝ p (→α t) must be matched by s ⇝ q (→α t′) with p R q, t R t′."""
    for p, _ in u.psucc[r]:
        qs = [q for q, _ in u.psucc[s] if part[q] == part[p]]
        if not qs:
            return {"states": [u.local(r), u.local(s)], "condition": "root condition",
                    "detail": f"unmatched initial probabilistic step to {u.describe(p)}"}
        for lab, t in u.asucc[p]:
            if not any(l2 == lab and part[t2] == part[t] for q in qs for l2, t2 in u.asucc[q]):
                return {"states": [u.local(r), u.local(s)], "condition": "root condition",
                        "detail": f"unmatched initial step {lab}"}
    return None
