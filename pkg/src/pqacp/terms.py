"""Process terms: action names, the term AST and structural helpers.

Terms are hash-consed: constructing the same term twice returns the same
object, so equality is identity and hashing is O(1).  This matters because
the SOS engine deduplicates configurations by term.
"""
from __future__ import annotations

import re
import weakref
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import BadProbability, UnboundVariable, UnguardedRecursion

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")


@dataclass(frozen=True, order=True)
class ActionName:
    name: str
    indices: tuple = ()
    shadow: bool = False

    def __post_init__(self):
        if not self.name or not _IDENT.match(self.name):
            raise ValueError(f"bad action name {self.name!r}")
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))

    @property
    def base(self) -> "ActionName":
        """The action a shadow constant stands for (self for non-shadows)."""
        return ActionName(self.name, self.indices) if self.shadow else self

    def shadow_of(self) -> "ActionName":
        return ActionName(self.name, self.indices, True)

    def __str__(self):
        s = self.name
        if self.indices:
            s += "(" + ",".join(str(i) for i in self.indices) + ")"
        return "@" + s if self.shadow else s

    @classmethod
    def parse(cls, text: str) -> "ActionName":
        m = re.fullmatch(r"\s*(@)?\s*([A-Za-z_][A-Za-z0-9_']*)\s*(?:\(([-\d,\s]*)\))?\s*", text)
        if not m:
            raise ValueError(f"bad action name {text!r}")
        idx = tuple(int(x) for x in m.group(3).split(",") if x.strip()) if m.group(3) else ()
        return cls(m.group(2), idx, bool(m.group(1)))


DELTA = ActionName("delta")
TAU = ActionName("tau")


def act(name: str, *indices: int) -> ActionName:
    return ActionName(name, tuple(indices))


def as_prob(p) -> Fraction:
    """Coerce to an exact probability in the open interval (0, 1)."""
    if isinstance(p, float):
        raise BadProbability(f"probabilities must be exact rationals, got float {p!r}")
    try:
        q = Fraction(p)
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise BadProbability(str(e)) from None
    if not 0 < q < 1:
        raise BadProbability(f"probability {q} outside (0,1)")
    return q


class Term:
    """Base of all term nodes.  Instances are interned and immutable."""

    __slots__ = ("__weakref__", "_text", "_dyn")
    _fields: tuple = ()
    _table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()

    def __new__(cls, *args):
        args = cls._normalize(*args)
        key = (cls, args)
        obj = Term._table.get(key)
        if obj is not None:
            return obj
        obj = object.__new__(cls)
        for f, v in zip(cls._fields, args):
            object.__setattr__(obj, f, v)
        object.__setattr__(obj, "_text", None)
        object.__setattr__(obj, "_dyn", None)
        obj._check()
        Term._table[key] = obj
        return obj

    @classmethod
    def _normalize(cls, *args):
        if len(args) != len(cls._fields):
            raise TypeError(f"{cls.__name__} takes {len(cls._fields)} arguments")
        return args

    def _check(self):
        pass

    def __setattr__(self, k, v):
        raise AttributeError("terms are immutable")

    def __reduce__(self):
        return (type(self), tuple(getattr(self, f) for f in self._fields))

    def children(self) -> tuple:
        return tuple(getattr(self, f) for f in self._fields if isinstance(getattr(self, f), Term))

    def __repr__(self):
        from .syntax import to_text
        return f"<{type(self).__name__} {to_text(self)}>"

    def __str__(self):
        from .syntax import to_text
        return to_text(self)


class Atom(Term):
    __slots__ = ("action",)
    _fields = ("action",)

    @classmethod
    def _normalize(cls, action):
        if isinstance(action, str):
            action = ActionName.parse(action)
        return (action,)


class DynAtom(Term):
    """The breve counterpart ᾰ of an atom; produced only by the engine."""
    __slots__ = ("action",)
    _fields = ("action",)
    _normalize = Atom._normalize


class _Binary(Term):
    __slots__ = ("left", "right")
    _fields = ("left", "right")

    def _check(self):
        for c in (self.left, self.right):
            if not isinstance(c, Term):
                raise TypeError(f"{type(self).__name__} operands must be terms")


class Seq(_Binary):
    __slots__ = ()


class Alt(_Binary):
    __slots__ = ()


class Par(_Binary):
    __slots__ = ()


class LeftMerge(_Binary):
    __slots__ = ()


class CommMerge(_Binary):
    __slots__ = ()


class EntMerge(_Binary):
    __slots__ = ()


class Unless(_Binary):
    __slots__ = ()


class PChoice(Term):
    __slots__ = ("left", "prob", "right")
    _fields = ("left", "prob", "right")

    @classmethod
    def _normalize(cls, left, prob, right):
        return (left, as_prob(prob), right)


class MergeMem(Term):
    """(x, z) ][ (y, w): merge with memory of the unresolved operands z, w."""
    __slots__ = ("x", "z", "y", "w")
    _fields = ("x", "z", "y", "w")


class Encap(Term):
    __slots__ = ("actions", "body")
    _fields = ("actions", "body")

    @classmethod
    def _normalize(cls, actions, body):
        return (frozenset(ActionName.parse(a) if isinstance(a, str) else a for a in actions), body)


class Abstr(Term):
    __slots__ = ("actions", "body")
    _fields = ("actions", "body")
    _normalize = Encap._normalize


class Proj(Term):
    __slots__ = ("n", "body")
    _fields = ("n", "body")

    def _check(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError("projection index must be a positive integer")


class Rename(Term):
    """ρ_f; the map is stored as a sorted tuple of (source, target) pairs."""
    __slots__ = ("mapping", "body")
    _fields = ("mapping", "body")

    @classmethod
    def _normalize(cls, mapping, body):
        items = mapping.items() if isinstance(mapping, Mapping) else mapping
        pairs = []
        for a, b in items:
            a = ActionName.parse(a) if isinstance(a, str) else a
            b = ActionName.parse(b) if isinstance(b, str) else b
            if a != b:
                pairs.append((a, b))
        return (tuple(sorted(set(pairs))), body)

    def _check(self):
        srcs = [a for a, _ in self.mapping]
        if len(srcs) != len(set(srcs)):
            raise ValueError("renaming maps an action twice")

    def f(self, a: ActionName) -> ActionName:
        for s, t in self.mapping:
            if s == a:
                return t
        return a


class Priority(Term):
    __slots__ = ("body",)
    _fields = ("body",)


class RecVar(Term):
    __slots__ = ("name",)
    _fields = ("name",)


class RecSpec(Term):
    """⟨X|E⟩ with E stored as a sorted tuple of (variable, body) pairs."""
    __slots__ = ("var", "eqs", "_eqmap")
    _fields = ("var", "eqs")

    @classmethod
    def _normalize(cls, var, eqs):
        items = eqs.items() if isinstance(eqs, Mapping) else eqs
        return (var, tuple(sorted(items, key=lambda kv: kv[0])))

    def _check(self):
        m = dict(self.eqs)
        object.__setattr__(self, "_eqmap", m)
        if self.var not in m:
            raise UnboundVariable(f"variable {self.var} not defined in its specification")
        for x, body in self.eqs:
            free = free_vars(body) - set(m)
            if free:
                raise UnboundVariable(f"unbound variable(s) {sorted(free)} in equation for {x}")
            bad = unguarded_vars(body)
            if bad:
                raise UnguardedRecursion(f"equation for {x} has unguarded occurrence(s) of {sorted(bad)}")

    @property
    def eqmap(self) -> dict:
        return self._eqmap


# ---------------------------------------------------------------- helpers

def free_vars(t: Term) -> set:
    if isinstance(t, RecVar):
        return {t.name}
    if isinstance(t, RecSpec):
        return set()  # specs are closed by construction
    out = set()
    for c in t.children():
        out |= free_vars(c)
    return out


def unguarded_vars(t: Term) -> set:
    """Variables with an occurrence not preceded by an atom on some path."""
    if isinstance(t, RecVar):
        return {t.name}
    if isinstance(t, (Atom, DynAtom, RecSpec)):
        return set()
    if isinstance(t, Seq):
        return unguarded_vars(t.left)
    out = set()
    for c in t.children():
        out |= unguarded_vars(c)
    return out


def substitute(t: Term, env: Mapping[str, Term]) -> Term:
    if isinstance(t, RecVar):
        return env.get(t.name, t)
    if isinstance(t, (Atom, DynAtom, RecSpec)):
        return t
    if not free_vars(t) & set(env):
        return t
    args = [substitute(v, env) if isinstance(v, Term) else v
            for v in (getattr(t, f) for f in t._fields)]
    return type(t)(*args)


def unfold(x, eqs=None) -> Term:
    """One-step body substitution: t_X with every bound Y replaced by ⟨Y|E⟩."""
    if isinstance(x, RecSpec):
        x, eqs = x.var, x.eqs
    if isinstance(x, RecVar):
        x = x.name
    m = dict(eqs.items() if isinstance(eqs, Mapping) else eqs)
    if x not in m:
        raise UnboundVariable(f"{x} is not defined by the specification")
    key = tuple(sorted(m.items(), key=lambda kv: kv[0]))
    env = {y: RecSpec(y, key) for y in m}
    return substitute(m[x], env)


def is_closed(t: Term) -> bool:
    return not free_vars(t)


def contains(t: Term, kinds) -> bool:
    if isinstance(t, kinds):
        return True
    if isinstance(t, RecSpec):
        return any(contains(b, kinds) for _, b in t.eqs)
    return any(contains(c, kinds) for c in t.children())


def actions_of(t: Term) -> set:
    """All action names occurring in t (atoms, operator sets and renamings)."""
    out: set = set()

    def go(u):
        if isinstance(u, (Atom, DynAtom)):
            out.add(u.action)
        elif isinstance(u, (Encap, Abstr)):
            out.update(u.actions)
        elif isinstance(u, Rename):
            for a, b in u.mapping:
                out.update((a, b))
        if isinstance(u, RecSpec):
            for _, b in u.eqs:
                go(b)
        for c in u.children():
            go(c)

    go(t)
    return out


def is_dynamic(t: Term) -> bool:
    """Whether t has been resolved by a probabilistic step (carries a breve)."""
    d = t._dyn
    if d is None:
        d = _dyn(t)
        object.__setattr__(t, "_dyn", d)
    return d


def _dyn(t):
    if isinstance(t, DynAtom):
        return True
    if isinstance(t, (Atom, PChoice, Par, MergeMem, RecVar, RecSpec)):
        return False
    if isinstance(t, (Seq, Alt, LeftMerge, CommMerge, EntMerge, Unless)):
        return is_dynamic(t.left)
    return is_dynamic(t.body)


def is_basic_term(t: Term) -> bool:
    """Membership in B: atoms, a·t, sums of B₊ terms, ⊞ of B terms."""
    if isinstance(t, PChoice):
        return is_basic_term(t.left) and is_basic_term(t.right)
    return _basic_plus(t)


def _basic_plus(t):
    if isinstance(t, Atom):
        return True
    if isinstance(t, Seq):
        return isinstance(t.left, Atom) and t.left.action != DELTA and is_basic_term(t.right)
    if isinstance(t, Alt):
        return _basic_plus(t.left) and _basic_plus(t.right)
    return False


def size(t: Term) -> int:
    return 1 + sum(size(c) for c in t.children())


def depth(t: Term) -> int:
    return 1 + max((depth(c) for c in t.children()), default=0)


def alt_all(terms: Iterable[Term]) -> Term:
    """Right-nested sum; raises on an empty iterable."""
    ts = list(terms)
    if not ts:
        raise ValueError("empty sum")
    out = ts[-1]
    for t in reversed(ts[:-1]):
        out = Alt(t, out)
    return out


def seq_all(terms: Iterable[Term]) -> Term:
    ts = list(terms)
    out = ts[-1]
    for t in reversed(ts[:-1]):
        out = Seq(t, out)
    return out


def pchoice_uniform(terms: Iterable[Term]) -> Term:
    """x1 ⊞ x2 ⊞ … ⊞ xn with weight 1/n each (right-nested)."""
    ts = list(terms)
    out = ts[-1]
    for k in range(len(ts) - 2, -1, -1):
        out = PChoice(ts[k], Fraction(1, len(ts) - k), out)
    return out


def pchoice_weighted(pairs) -> Term:
    """Right-nested choice from (term, weight) pairs whose weights sum to 1."""
    pairs = list(pairs)
    total = sum(Fraction(w) for _, w in pairs)
    if total != 1:
        raise BadProbability(f"weights sum to {total}, not 1")
    out = pairs[-1][0]
    rest = Fraction(pairs[-1][1])
    for t, w in reversed(pairs[:-1]):
        w = Fraction(w)
        rest += w
        out = PChoice(t, w / rest, out)
    return out
