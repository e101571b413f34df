"""Facts about points and runs.

A fact is an expression tree evaluated at points ``(r, t)``. Atoms cover
actions (``performs``), agent and environment variables, and the time;
``ever(f)`` lifts a fact to the run-level "f holds at some point".

Text syntax (keywords are lower case, ``not`` binds tightest and
``implies`` loosest)::

    fact    := orexpr [ "implies" orexpr ]
    orexpr  := andexpr { "or" andexpr }
    andexpr := unary { "and" unary }
    unary   := "not" unary | "ever" "(" fact ")" | atom | "(" fact ")"
    atom    := "performs" "(" id "," id ")" | "var" "(" id "," id ")" "==" literal
             | "envvar" "(" id ")" "==" literal | "time" "==" int | "true" | "false"
    literal := int | "true" | "false" | id

Truth of a fact is tabulated once per tree as one run mask per time step.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .model import SKIP, LocalState, PakError, PpsTree, Run, Scalar, _scalar_key


class FactSyntaxError(PakError, ValueError):
    def __init__(self, message: str, pos: int, text: str = ""):
        self.pos = pos
        super().__init__(f"{message} at position {pos}" + (f": {text!r}" if text else ""))


class UnknownIdentifierError(PakError, KeyError):
    def __str__(self):
        return str(self.args[0])


class ImproperActionError(PakError, ValueError):
    pass


# -- AST --------------------------------------------------------------------


class Fact:
    def __and__(self, other: "Fact") -> "Fact":
        return And((self, other))

    def __or__(self, other: "Fact") -> "Fact":
        return Or((self, other))

    def __invert__(self) -> "Fact":
        return Not(self)

    def __str__(self):
        return render(self)


@dataclass(frozen=True)
class Const(Fact):
    value: bool


@dataclass(frozen=True)
class Performs(Fact):
    agent: str
    action: str


@dataclass(frozen=True)
class VarEq(Fact):
    agent: str
    name: str
    value: Scalar
    _kind: str = field(init=False, repr=False, default="")

    def __post_init__(self):
        object.__setattr__(self, "_kind", _scalar_key(self.value)[0])


@dataclass(frozen=True)
class EnvVarEq(Fact):
    name: str
    value: Scalar
    _kind: str = field(init=False, repr=False, default="")

    def __post_init__(self):
        object.__setattr__(self, "_kind", _scalar_key(self.value)[0])


@dataclass(frozen=True)
class TimeEq(Fact):
    t: int


@dataclass(frozen=True)
class Not(Fact):
    arg: Fact


@dataclass(frozen=True)
class And(Fact):
    args: tuple[Fact, ...]


@dataclass(frozen=True)
class Or(Fact):
    args: tuple[Fact, ...]


@dataclass(frozen=True)
class Implies(Fact):
    lhs: Fact
    rhs: Fact


@dataclass(frozen=True)
class Ever(Fact):
    arg: Fact


TRUE = Const(True)
FALSE = Const(False)


def _cache_hash(cls):
    # Facts are used as memo keys; hashing a deep tree on every lookup adds up.
    raw = cls.__hash__

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = raw(self)
            object.__setattr__(self, "_hash", h)
        return h

    cls.__hash__ = __hash__


for _cls in (Const, Performs, VarEq, EnvVarEq, TimeEq, Not, And, Or, Implies, Ever):
    _cache_hash(_cls)


def children(f: Fact) -> tuple[Fact, ...]:
    if isinstance(f, (Not, Ever)):
        return (f.arg,)
    if isinstance(f, (And, Or)):
        return f.args
    if isinstance(f, Implies):
        return (f.lhs, f.rhs)
    return ()


# -- rendering ----------------------------------------------------------------


def _lit(v: Scalar) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def render(f: Fact, top: bool = True) -> str:
    """Text form of ``f``; ``parse_fact(render(f)) == f``."""
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Performs):
        return f"performs({f.agent}, {f.action})"
    if isinstance(f, VarEq):
        return f"var({f.agent}, {f.name}) == {_lit(f.value)}"
    if isinstance(f, EnvVarEq):
        return f"envvar({f.name}) == {_lit(f.value)}"
    if isinstance(f, TimeEq):
        return f"time == {f.t}"
    if isinstance(f, Ever):
        s = f"ever({render(f.arg)})"
        return s if top else f"({s})"
    if isinstance(f, Not):
        inner = render(f.arg, top=False)
        if isinstance(f.arg, (And, Or, Implies)):
            inner = f"({render(f.arg)})"
        return f"not {inner}"
    if isinstance(f, (And, Or)):
        word = " and " if isinstance(f, And) else " or "
        loose = (Or, Implies) if isinstance(f, And) else (Implies,)
        parts = []
        for a in f.args:
            s = render(a, top=False)
            # nested same-type nodes are parenthesised to keep the tree shape
            if isinstance(a, loose) or type(a) is type(f):
                s = f"({render(a)})"
            parts.append(s)
        return word.join(parts)
    if isinstance(f, Implies):
        def side(x):
            return f"({render(x)})" if isinstance(x, Implies) else render(x, top=False)
        return f"{side(f.lhs)} implies {side(f.rhs)}"
    raise TypeError(f"not a fact: {f!r}")


# -- parsing --------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(==)|([(),])|(-?\d+)|([A-Za-z_][A-Za-z0-9_']*))")
_KEYWORDS = {"ever", "not", "and", "or", "implies", "performs", "var", "envvar", "time",
             "true", "false"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise FactSyntaxError("unexpected character", pos, text[pos])
        start = m.start(m.lastindex)
        if m.group(1):
            toks.append(("op", "==", start))
        elif m.group(2):
            toks.append(("op", m.group(2), start))
        elif m.group(3):
            toks.append(("int", m.group(3), start))
        else:
            word = m.group(4)
            toks.append(("kw" if word in _KEYWORDS else "id", word, start))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.k = 0

    def peek(self):
        return self.toks[self.k]

    def take(self, kind=None, value=None):
        tok = self.toks[self.k]
        if (kind and tok[0] != kind) or (value and tok[1] != value):
            want = value or kind
            got = tok[1] or "end of input"
            raise FactSyntaxError(f"expected {want!r}, found {got!r}", tok[2])
        self.k += 1
        return tok

    def at(self, value) -> bool:
        tok = self.peek()
        return tok[0] in ("kw", "op") and tok[1] == value

    def fact(self) -> Fact:
        lhs = self.orexpr()
        if self.at("implies"):
            self.take()
            rhs = self.orexpr()
            if self.at("implies"):
                raise FactSyntaxError("'implies' is not associative; add parentheses",
                                      self.peek()[2])
            return Implies(lhs, rhs)
        return lhs

    def orexpr(self) -> Fact:
        items = [self.andexpr()]
        while self.at("or"):
            self.take()
            items.append(self.andexpr())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def andexpr(self) -> Fact:
        items = [self.unary()]
        while self.at("and"):
            self.take()
            items.append(self.unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def unary(self) -> Fact:
        if self.at("not"):
            self.take()
            return Not(self.unary())
        if self.at("ever"):
            self.take()
            self.take("op", "(")
            inner = self.fact()
            self.take("op", ")")
            return Ever(inner)
        if self.at("("):
            self.take()
            inner = self.fact()
            self.take("op", ")")
            return inner
        return self.atom()

    def ident(self) -> str:
        tok = self.peek()
        if tok[0] in ("id", "kw"):
            self.k += 1
            return tok[1]
        raise FactSyntaxError(f"expected identifier, found {tok[1] or 'end of input'!r}", tok[2])

    def literal(self) -> Scalar:
        tok = self.peek()
        if tok[0] == "int":
            self.k += 1
            return int(tok[1])
        if tok[0] == "kw" and tok[1] in ("true", "false"):
            self.k += 1
            return tok[1] == "true"
        if tok[0] == "id":
            self.k += 1
            return tok[1]
        raise FactSyntaxError(f"expected literal, found {tok[1] or 'end of input'!r}", tok[2])

    def atom(self) -> Fact:
        tok = self.peek()
        if tok[0] == "kw":
            word = tok[1]
            if word in ("true", "false"):
                self.k += 1
                return Const(word == "true")
            if word == "performs":
                self.k += 1
                self.take("op", "(")
                agent = self.ident()
                self.take("op", ",")
                action = self.ident()
                self.take("op", ")")
                return Performs(agent, action)
            if word == "var":
                self.k += 1
                self.take("op", "(")
                agent = self.ident()
                self.take("op", ",")
                name = self.ident()
                self.take("op", ")")
                self.take("op", "==")
                return VarEq(agent, name, self.literal())
            if word == "envvar":
                self.k += 1
                self.take("op", "(")
                name = self.ident()
                self.take("op", ")")
                self.take("op", "==")
                return EnvVarEq(name, self.literal())
            if word == "time":
                self.k += 1
                self.take("op", "==")
                return TimeEq(int(self.take("int")[1]))
        raise FactSyntaxError(f"expected a fact, found {tok[1] or 'end of input'!r}", tok[2])


def parse_fact(text: str) -> Fact:
    """Parse the text syntax into a :class:`Fact`.

    >>> parse_fact("performs(A, fireA) and performs(B, fireB)")
    And(args=(Performs(agent='A', action='fireA'), Performs(agent='B', action='fireB')))
    """
    p = _Parser(text)
    f = p.fact()
    tok = p.peek()
    if tok[0] != "end":
        raise FactSyntaxError(f"unexpected {tok[1]!r}", tok[2])
    return f


def as_fact(f) -> Fact:
    return parse_fact(f) if isinstance(f, str) else f


# -- binding ------------------------------------------------------------------


def _var_names(tree: PpsTree, agent: str) -> set[str]:
    key = ("varnames", agent)
    if key not in tree._memo:
        tree._memo[key] = {n for ls in tree.local_states(agent) for n, _ in ls.vars}
    return tree._memo[key]


def _env_names(tree: PpsTree) -> set[str]:
    if "envnames" not in tree._memo:
        tree._memo["envnames"] = {
            k for n in tree.nodes if n.state is not None for k, _ in n.state.env
        }
    return tree._memo["envnames"]


def bind(tree: PpsTree, fact) -> Fact:
    """Check that every identifier in ``fact`` exists in ``tree``."""
    fact = as_fact(fact)
    tree.check()

    def walk(f, inside_ever):
        if isinstance(f, Ever):
            if inside_ever:
                raise ValueError("ever(...) may not be nested inside another ever")
            walk(f.arg, True)
            return
        if isinstance(f, (Performs, VarEq)):
            if f.agent not in tree.agents:
                raise UnknownIdentifierError(f"unknown agent {f.agent!r}")
        if isinstance(f, Performs):
            if f.action != SKIP and f.action not in tree.alphabet(f.agent):
                raise UnknownIdentifierError(f"unknown action {f.agent}.{f.action}")
        elif isinstance(f, VarEq):
            if f.name not in _var_names(tree, f.agent):
                raise UnknownIdentifierError(f"unknown variable {f.agent}.{f.name}")
        elif isinstance(f, EnvVarEq):
            if f.name not in _env_names(tree):
                raise UnknownIdentifierError(f"unknown environment variable {f.name}")
        for c in children(f):
            walk(c, inside_ever)

    walk(fact, False)
    return fact


# -- evaluation ---------------------------------------------------------------


def _level_mask(tree: PpsTree, t: int, pred) -> int:
    mask = 0
    for v in tree.nodes_at(t):
        if pred(tree.by_id[v].state):
            mask |= tree.node_mask[v]
    return mask


def action_masks(tree: PpsTree, agent: str, action: str) -> tuple[int, ...]:
    """For each time t, the runs in which ``agent`` performs ``action`` at t.

    The record lives in the history of ``r(t+1)``; nothing is performed at
    the final time of a run.
    """
    key = ("acts", agent, action)
    if key not in tree._memo:
        H = tree.horizon
        tree._memo[key] = tuple(
            _level_mask(tree, t + 1, lambda g, t=t: g.performed(t, agent, action))
            for t in range(H)
        ) + (0,)
    return tree._memo[key]


def truth_table(tree: PpsTree, fact) -> tuple[int, ...]:
    """Run masks ``m[t]`` with bit k set iff the fact holds at (run k, t)."""
    fact = as_fact(fact)
    key = ("fact", fact)
    memo = tree._memo
    if key in memo:
        return memo[key]
    bind(tree, fact)
    H = tree.horizon
    full = tree.all_mask
    f = fact
    if isinstance(f, Const):
        out = (full if f.value else 0,) * (H + 1)
    elif isinstance(f, Performs):
        out = action_masks(tree, f.agent, f.action)
    elif isinstance(f, VarEq):
        want = _scalar_key(f.value)
        out = tuple(
            _level_mask(tree, t, lambda g: _eq(g.local(f.agent).get(f.name), want))
            for t in range(H + 1)
        )
    elif isinstance(f, EnvVarEq):
        want = _scalar_key(f.value)
        out = tuple(
            _level_mask(tree, t, lambda g: _eq(g.env_get(f.name), want)) for t in range(H + 1)
        )
    elif isinstance(f, TimeEq):
        out = tuple(full if t == f.t else 0 for t in range(H + 1))
    elif isinstance(f, Not):
        out = tuple(full ^ m for m in truth_table(tree, f.arg))
    elif isinstance(f, And):
        out = (full,) * (H + 1)
        for a in f.args:
            out = tuple(x & y for x, y in zip(out, truth_table(tree, a)))
    elif isinstance(f, Or):
        out = (0,) * (H + 1)
        for a in f.args:
            out = tuple(x | y for x, y in zip(out, truth_table(tree, a)))
    elif isinstance(f, Implies):
        out = tuple(
            (full ^ a) | b
            for a, b in zip(truth_table(tree, f.lhs), truth_table(tree, f.rhs))
        )
    elif isinstance(f, Ever):
        m = 0
        for x in truth_table(tree, f.arg):
            m |= x
        out = (m,) * (H + 1)
    else:
        raise TypeError(f"not a fact: {f!r}")
    memo[key] = out
    return out


def _eq(have, want) -> bool:
    return have is not None and _scalar_key(have) == want


def holds_at(tree: PpsTree, fact, run: Run, t: int) -> bool:
    """Truth of ``fact`` at the point ``(run, t)``."""
    own = tree.check_point(run, t)
    return bool(truth_table(tree, fact)[t] >> own.index & 1)


# -- run facts --------------------------------------------------------------


@dataclass(frozen=True)
class RunFact:
    """A time-invariant fact, realised as the set of runs satisfying it."""

    label: str
    runs: frozenset[Run]

    def __contains__(self, run: Run) -> bool:
        return run in self.runs

    def __len__(self):
        return len(self.runs)


def _runfact(tree: PpsTree, label: str, mask: int) -> RunFact:
    return RunFact(label, tree.runs_of(mask))


def is_run_fact(tree: PpsTree, fact) -> bool:
    """True iff the truth of ``fact`` never changes along any run."""
    table = truth_table(tree, fact)
    return all(m == table[0] for m in table)


def is_past_based(tree: PpsTree, fact) -> bool:
    """True iff, at every node, all runs through it agree on ``fact``."""
    table = truth_table(tree, fact)
    for t, m in enumerate(table):
        for v in tree.nodes_at(t):
            through = tree.node_mask[v]
            if m & through not in (0, through):
                return False
    return True


def runs_satisfying(tree: PpsTree, rf) -> frozenset[Run]:
    """The runs satisfying a run fact (a :class:`RunFact` or a time-invariant fact)."""
    if isinstance(rf, RunFact):
        return rf.runs
    fact = as_fact(rf)
    if not is_run_fact(tree, fact):
        raise ValueError(f"{render(fact)!r} is not a fact about runs; wrap it in ever(...)")
    return tree.runs_of(truth_table(tree, fact)[0])


def properness(tree: PpsTree, agent: str, action: str) -> tuple[bool, Run | None]:
    """(is proper, offending run). The run is None when the action never occurs."""
    if agent not in tree.agents:
        raise UnknownIdentifierError(f"unknown agent {agent!r}")
    if action != SKIP and action not in tree.alphabet(agent):
        raise UnknownIdentifierError(f"unknown action {agent}.{action}")
    key = ("proper", agent, action)
    if key in tree._memo:
        return tree._memo[key]
    masks = action_masks(tree, agent, action)
    seen = twice = 0
    for m in masks:
        twice |= seen & m
        seen |= m
    if twice:
        out = (False, tree.runs[(twice & -twice).bit_length() - 1])
    else:
        out = (bool(seen), None)
    tree._memo[key] = out
    return out


def require_proper(tree: PpsTree, agent: str, action: str, msg: str = "action must be proper"):
    ok, _ = properness(tree, agent, action)
    if not ok:
        raise ImproperActionError(f"{msg}: {agent}.{action}")


def performed_mask(tree: PpsTree, agent: str, action: str) -> int:
    m = 0
    for x in action_masks(tree, agent, action):
        m |= x
    return m


def at_action_mask(tree: PpsTree, fact, agent: str, action: str) -> int:
    require_proper(tree, agent, action, "φ@α requires a proper action")
    table = truth_table(tree, fact)
    m = 0
    for t, acts in enumerate(action_masks(tree, agent, action)):
        m |= acts & table[t]
    return m


def occurs_mask(tree: PpsTree, ls: LocalState) -> int:
    try:
        return tree.local_states(ls.agent)[ls]
    except KeyError:
        raise ValueError(f"{ls!r} does not occur in the tree") from None


def at_state_mask(tree: PpsTree, fact, ls: LocalState) -> int:
    return occurs_mask(tree, ls) & truth_table(tree, fact)[ls.time]


def performed(tree: PpsTree, agent: str, action: str) -> RunFact:
    """R(alpha): the runs in which ``agent`` performs ``action``."""
    return _runfact(tree, f"R({agent}.{action})", performed_mask(tree, agent, action))


def occurs(tree: PpsTree, ls: LocalState) -> RunFact:
    """R(l): the runs in which the local state ``ls`` appears."""
    return _runfact(tree, f"R({ls!r})", occurs_mask(tree, ls))


def at_action(tree: PpsTree, fact, agent: str, action: str) -> RunFact:
    """``fact@alpha``: alpha occurs and ``fact`` holds where it does."""
    fact = as_fact(fact)
    m = at_action_mask(tree, fact, agent, action)
    return _runfact(tree, f"[{render(fact)}]@{agent}.{action}", m)


def at_state(tree: PpsTree, fact, ls: LocalState) -> RunFact:
    """``fact@l``: the local state occurs and ``fact`` holds at that point."""
    fact = as_fact(fact)
    return _runfact(tree, f"[{render(fact)}]@{ls!r}", at_state_mask(tree, fact, ls))

