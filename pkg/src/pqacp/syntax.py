"""Concrete syntax: tokenizer, recursive-descent parser and canonical printer.

Operators, tightest first::

    .      sequential composition         a . b
    <|     unless                          x <| y      (left associative)
    |      communication merge             x | y
    ><     entanglement merge              x >< y
    |_     left merge                      x |_ y
    ||     parallel composition            x || y
    ][     merge with memory               (x, z) ][ (y, w)
    +      alternative composition         x + y
    [+p/q] probabilistic choice chain      x [+1/4] y [+1/4] z ...

In a chain ``x1 [+p1] x2 [+p2] ... xn`` each pi is the weight of xi and
xn receives the remainder.
"""
from __future__ import annotations

import re
from fractions import Fraction

from .errors import BadProbability, ParseError, UnboundVariable
from .terms import (
    Abstr, ActionName, Alt, Atom, CommMerge, DELTA, DynAtom, Encap, EntMerge,
    LeftMerge, MergeMem, PChoice, Par, Priority, Proj, RecSpec, RecVar, Rename,
    Seq, TAU, Term, Unless,
)

KEYWORDS = {"delta", "tau", "encap", "abstr", "proj", "rename", "theta", "rec", "where"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<pch>\[\+\s*(?P<pn>-?\d+)\s*/\s*(?P<pd>-?\d+)\s*\])
  | (?P<op>\|\||\|_|><|<\||\]\[|->|[.+|(){}\[\],;=@!])
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
""", re.VERBOSE)

# binding strength of binary operators (higher binds tighter)
PREC = {Seq: 9, Unless: 8, CommMerge: 7, EntMerge: 6, LeftMerge: 5, Par: 4,
        MergeMem: 3, Alt: 2, PChoice: 1}
SYMBOL = {Seq: ".", Unless: "<|", CommMerge: "|", EntMerge: "><", LeftMerge: "|_",
          Par: "||", Alt: "+"}
_LEFT_ASSOC = {Unless}


class _Tok:
    __slots__ = ("kind", "val", "line", "col")

    def __init__(self, kind, val, line, col):
        self.kind, self.val, self.line, self.col = kind, val, line, col


def tokenize(src: str) -> list:
    toks, pos, line, lstart = [], 0, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - lstart + 1)
        col = pos - lstart + 1
        kind = m.lastgroup
        text = m.group(0)
        if m.group("ws") is not None:
            pass
        elif m.group("pch") is not None:
            toks.append(_Tok("pch", (int(m.group("pn")), int(m.group("pd"))), line, col))
        elif m.group("op") is not None:
            toks.append(_Tok("op", text, line, col))
        elif m.group("int") is not None:
            toks.append(_Tok("int", int(text), line, col))
        else:
            kind = "kw" if text in KEYWORDS else "ident"
            toks.append(_Tok(kind, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            lstart = pos + text.rfind("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", None, line, pos - lstart + 1))
    return toks


class _Pair:
    """(x, z) operand of ][; only legal directly around a ][ token."""

    def __init__(self, a, b, tok):
        self.a, self.b, self.tok = a, b, tok


class Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0
        self.scopes: list = []

    # token helpers
    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def at(self, kind, val=None):
        t = self.tok
        return t.kind == kind and (val is None or t.val == val)

    def accept(self, kind, val=None):
        if self.at(kind, val):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, kind, val=None):
        t = self.accept(kind, val)
        if t is None:
            want = val if val is not None else kind
            got = self.tok.val if self.tok.kind != "eof" else "end of input"
            self.error(f"expected {want!r}, found {got!r}")
        return t

    def term(self, t, tok):
        if isinstance(t, _Pair):
            self.error("a pair (x, z) may only appear as an operand of ][", tok)
        return t

    # grammar
    def parse(self) -> Term:
        t = self.term(self.pchoice(), self.tok)
        if not self.at("eof"):
            self.error(f"unexpected {self.tok.val!r}")
        return t

    def pchoice(self):
        start = self.tok
        first = self.alt()
        if not self.at("pch"):
            return first
        first = self.term(first, start)
        items, weights = [first], []
        while self.at("pch"):
            t = self.accept("pch")
            n, d = t.val
            if d == 0:
                self.error("zero denominator in probability", t)
            w = Fraction(n, d)
            if not 0 < w < 1:
                raise BadProbability(f"probability {w} outside (0,1) at line {t.line}, column {t.col}")
            weights.append(w)
            s = self.tok
            items.append(self.term(self.alt(), s))
        if sum(weights) >= 1:
            raise BadProbability(f"chain weights {', '.join(map(str, weights))} leave no mass for the last branch")
        out = items[-1]
        rest = 1 - sum(weights)
        for t, w in reversed(list(zip(items[:-1], weights))):
            rest += w
            out = PChoice(t, w / rest, out)
        return out

    def _binary(self, sub, sym, cls, right_assoc=True):
        start = self.tok
        left = sub()
        if right_assoc:
            if self.at("op", sym):
                left = self.term(left, start)
                self.accept("op", sym)
                s = self.tok
                right = self.term(self._binary(sub, sym, cls), s)
                return cls(left, right)
            return left
        while self.at("op", sym):
            left = self.term(left, start)
            self.accept("op", sym)
            s = self.tok
            left = cls(left, self.term(sub(), s))
        return left

    def alt(self):
        return self._binary(self.mergemem, "+", Alt)

    def mergemem(self):
        start = self.tok
        left = self.par()
        if self.at("op", "]["):
            if not isinstance(left, _Pair):
                self.error("left operand of ][ must be a pair (x, z)", start)
            self.accept("op", "][")
            s = self.tok
            right = self.par()
            if not isinstance(right, _Pair):
                self.error("right operand of ][ must be a pair (y, w)", s)
            return MergeMem(left.a, left.b, right.a, right.b)
        return left

    def par(self):
        return self._binary(self.lmerge, "||", Par)

    def lmerge(self):
        return self._binary(self.ent, "|_", LeftMerge)

    def ent(self):
        return self._binary(self.comm, "><", EntMerge)

    def comm(self):
        return self._binary(self.unless, "|", CommMerge)

    def unless(self):
        return self._binary(self.seq, "<|", Unless, right_assoc=False)

    def seq(self):
        return self._binary(self.primary, ".", Seq)

    def action(self, shadow=False):
        t = self.tok
        if t.kind == "kw" and t.val in ("delta", "tau"):
            self.i += 1
            return DELTA if t.val == "delta" else TAU
        name = self.expect("ident").val
        idx = ()
        if self.at("op", "(") and self.toks[self.i + 1].kind == "int":
            self.accept("op", "(")
            idx = [self.expect("int").val]
            while self.accept("op", ","):
                idx.append(self.expect("int").val)
            self.expect("op", ")")
        return ActionName(name, tuple(idx), shadow)

    def action_ref(self):
        shadow = bool(self.accept("op", "@"))
        return self.action(shadow)

    def action_set(self):
        self.expect("op", "{")
        out = []
        if not self.at("op", "}"):
            out.append(self.action_ref())
            while self.accept("op", ","):
                out.append(self.action_ref())
        self.expect("op", "}")
        return frozenset(out)

    def paren_body(self):
        self.expect("op", "(")
        s = self.tok
        t = self.term(self.pchoice(), s)
        self.expect("op", ")")
        return t

    def primary(self):
        t = self.tok
        if t.kind == "op" and t.val == "!":
            self.error("dynamic (breve) atoms are engine-internal and cannot be written")
        if t.kind == "op" and t.val == "(":
            self.i += 1
            s = self.tok
            a = self.term(self.pchoice(), s)
            if self.accept("op", ","):
                s = self.tok
                b = self.term(self.pchoice(), s)
                self.expect("op", ")")
                return _Pair(a, b, t)
            self.expect("op", ")")
            return a
        if t.kind == "op" and t.val == "@":
            self.i += 1
            return Atom(self.action(shadow=True))
        if t.kind == "kw":
            if t.val in ("delta", "tau"):
                return Atom(self.action())
            self.i += 1
            if t.val == "encap":
                return Encap(self.action_set(), self.paren_body())
            if t.val == "abstr":
                return Abstr(self.action_set(), self.paren_body())
            if t.val == "proj":
                self.expect("op", "[")
                n = self.expect("int")
                if n.val < 1:
                    self.error("projection index must be positive", n)
                self.expect("op", "]")
                return Proj(n.val, self.paren_body())
            if t.val == "rename":
                self.expect("op", "[")
                pairs = []
                if not self.at("op", "]"):
                    while True:
                        a = self.action_ref()
                        self.expect("op", "->")
                        pairs.append((a, self.action_ref()))
                        if not self.accept("op", ","):
                            break
                self.expect("op", "]")
                try:
                    return Rename(pairs, self.paren_body())
                except ValueError as e:
                    self.error(str(e), t)
            if t.val == "theta":
                return Priority(self.paren_body())
            if t.val == "rec":
                return self.rec(t)
            self.error(f"unexpected keyword {t.val!r}", t)
        if t.kind == "ident":
            if not (self.toks[self.i + 1].kind == "op" and self.toks[self.i + 1].val == "("):
                for scope in reversed(self.scopes):
                    if t.val in scope:
                        self.i += 1
                        return RecVar(t.val)
            return Atom(self.action())
        self.error("expected a term" if t.kind != "eof" else "unexpected end of input")

    def rec(self, kw):
        var = self.expect("ident").val
        self.expect("kw", "where")
        self.expect("op", "{")
        # pre-scan the equation names so bodies can refer forward
        names, j, depth = [], self.i, 0
        while self.toks[j].kind != "eof":
            tk = self.toks[j]
            if tk.kind == "op" and tk.val == "{":
                depth += 1
            elif tk.kind == "op" and tk.val == "}":
                if depth == 0:
                    break
                depth -= 1
            elif depth == 0 and tk.kind == "ident" and self.toks[j + 1].kind == "op" \
                    and self.toks[j + 1].val == "=" and (j == self.i or self.toks[j - 1].val == ";"):
                names.append(tk.val)
            j += 1
        if len(set(names)) != len(names):
            self.error("variable defined twice in recursive specification", kw)
        self.scopes.append(set(names))
        eqs = {}
        while not self.at("op", "}"):
            x = self.expect("ident").val
            self.expect("op", "=")
            s = self.tok
            eqs[x] = self.term(self.pchoice(), s)
            if not self.accept("op", ";"):
                break
        self.expect("op", "}")
        self.scopes.pop()
        if var not in eqs:
            raise UnboundVariable(f"{var} is not defined in its where-block (line {kw.line})")
        return RecSpec(var, eqs)


def parse(source: str) -> Term:
    """Parse concrete syntax into a term."""
    return Parser(source).parse()


# ------------------------------------------------------------------ printing

def _prec(t):
    if isinstance(t, (Atom, DynAtom, RecVar, RecSpec, Encap, Abstr, Proj, Rename, Priority)):
        return 10
    return PREC[type(t)]


def to_text(t: Term) -> str:
    s = t._text
    if s is None:
        s = _print(t)
        object.__setattr__(t, "_text", s)
    return s


def _wrap(t, need):
    s = to_text(t)
    return f"({s})" if need else s


def _chain(t):
    """Flatten a right-nested PChoice into absolute (term, weight) items."""
    items, mass = [], Fraction(1)
    while isinstance(t, PChoice):
        items.append((t.left, mass * t.prob))
        mass *= 1 - t.prob
        t = t.right
    items.append((t, mass))
    return items


def _print(t: Term) -> str:
    if isinstance(t, Atom):
        return str(t.action)
    if isinstance(t, DynAtom):
        return "!" + str(t.action)
    if isinstance(t, RecVar):
        return t.name
    if isinstance(t, RecSpec):
        body = "; ".join(f"{x} = {to_text(b)}" for x, b in t.eqs)
        return f"rec {t.var} where {{ {body} }}"
    if isinstance(t, (Encap, Abstr)):
        kw = "encap" if isinstance(t, Encap) else "abstr"
        names = ", ".join(str(a) for a in sorted(t.actions))
        return f"{kw}{{{names}}}({to_text(t.body)})"
    if isinstance(t, Proj):
        return f"proj[{t.n}]({to_text(t.body)})"
    if isinstance(t, Rename):
        pairs = ", ".join(f"{a} -> {b}" for a, b in t.mapping)
        return f"rename[{pairs}]({to_text(t.body)})"
    if isinstance(t, Priority):
        return f"theta({to_text(t.body)})"
    if isinstance(t, MergeMem):
        return f"({to_text(t.x)}, {to_text(t.z)}) ][ ({to_text(t.y)}, {to_text(t.w)})"
    if isinstance(t, PChoice):
        items = _chain(t)
        parts = [_wrap(items[0][0], _prec(items[0][0]) <= 1)]
        for (prev, w), (nxt, _) in zip(items[:-1], items[1:]):
            parts.append(f"[+{w.numerator}/{w.denominator}]")
            parts.append(_wrap(nxt, _prec(nxt) <= 1))
        return " ".join(parts)
    p = PREC[type(t)]
    if type(t) in _LEFT_ASSOC:
        l_need, r_need = _prec(t.left) < p, _prec(t.right) <= p
    else:
        l_need, r_need = _prec(t.left) <= p, _prec(t.right) < p
    return f"{_wrap(t.left, l_need)} {SYMBOL[type(t)]} {_wrap(t.right, r_need)}"
