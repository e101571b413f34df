"""Purely probabilistic systems: trees, runs, points and the run measure.

A pps is a finite tree whose root only carries the initial distribution.
Every other node holds a global state; every root-child-to-leaf path is a
run. All probabilities are :class:`fractions.Fraction` values, so measures
and conditionals are exact.

Internally a tree indexes its runs once and represents run sets as integer
bitmasks (bit ``k`` set means run ``k`` is a member). Measures of masks are
computed as integer sums over a common denominator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Union

Scalar = Union[int, bool, str]
VarsLike = Union[Mapping[str, Scalar], Iterable[tuple[str, Scalar]]]

SKIP = "skip"
ENV = "env"


class PakError(Exception):
    """Base class for errors raised by pakcheck."""


class InvalidTreeError(PakError, ValueError):
    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__("invalid pps tree:\n  " + "\n  ".join(report.violations))


class ForeignRunError(PakError, ValueError):
    pass


class NullConditionError(PakError, ZeroDivisionError):
    pass


class NotAPointError(PakError, IndexError):
    pass


def _scalar_key(value: Scalar) -> tuple[str, Scalar]:
    # bool is a subclass of int; keep True and 1 apart.
    if isinstance(value, bool):
        return ("b", value)
    if isinstance(value, int):
        return ("i", value)
    if isinstance(value, str):
        return ("s", value)
    raise TypeError(f"unsupported variable value {value!r}; use int, bool or str")


def canonical_vars(vars: VarsLike) -> tuple[tuple[str, Scalar], ...]:
    items = vars.items() if isinstance(vars, Mapping) else vars
    out = {}
    for name, value in items:
        _scalar_key(value)
        out[str(name)] = value
    return tuple(sorted(out.items()))


def _vars_key(vars: tuple[tuple[str, Scalar], ...]):
    return tuple((name, _scalar_key(value)) for name, value in vars)


@dataclass(frozen=True, eq=False)
class LocalState:
    """An agent's local state. Equality is structural: agent, time and vars."""

    agent: str
    time: int
    vars: tuple[tuple[str, Scalar], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "vars", canonical_vars(self.vars))

    @cached_property
    def _key(self):
        return (self.agent, self.time, _vars_key(self.vars))

    def __eq__(self, other):
        if not isinstance(other, LocalState):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def get(self, name: str, default=None):
        for key, value in self.vars:
            if key == name:
                return value
        return default

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.vars)
        return f"LocalState({self.agent}@{self.time}: {inner})"


@dataclass(frozen=True, eq=False)
class GlobalState:
    """Environment vars, the action history and every agent's local state.

    ``history`` holds ``(time, agent, action)`` records ordered by time and
    then by the tree's agent order.
    """

    env: tuple[tuple[str, Scalar], ...]
    history: tuple[tuple[int, str, str], ...]
    locals: tuple[LocalState, ...]

    def __post_init__(self):
        object.__setattr__(self, "env", canonical_vars(self.env))
        object.__setattr__(self, "history", tuple(tuple(h) for h in self.history))
        object.__setattr__(self, "locals", tuple(self.locals))

    @cached_property
    def _key(self):
        return (_vars_key(self.env), self.history, tuple(l._key for l in self.locals))

    def __eq__(self, other):
        if not isinstance(other, GlobalState):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return hash(self._key)

    @property
    def time(self) -> int | None:
        return self.locals[0].time if self.locals else None

    def local(self, agent: str) -> LocalState:
        for ls in self.locals:
            if ls.agent == agent:
                return ls
        raise KeyError(agent)

    def env_get(self, name: str, default=None):
        for key, value in self.env:
            if key == name:
                return value
        return default

    def performed(self, time: int, agent: str, action: str) -> bool:
        return (time, agent, action) in self.history


@dataclass(frozen=True)
class Node:
    id: int
    parent: int | None
    prob: Fraction | None = None
    state: GlobalState | None = None


@dataclass(frozen=True, eq=False)
class Run:
    """A root-child-to-leaf path. ``run(t)`` is the global state at time t."""

    index: int
    nodes: tuple[int, ...]
    states: tuple[GlobalState, ...]

    def __eq__(self, other):
        if not isinstance(other, Run):
            return NotImplemented
        return self.nodes == other.nodes and self.states == other.states

    def __hash__(self):
        return hash(self.nodes)

    def __call__(self, t: int) -> GlobalState:
        return self.states[t]

    def local(self, agent: str, t: int) -> LocalState:
        return self.states[t].local(agent)

    @property
    def horizon(self) -> int:
        return len(self.nodes) - 1

    def __repr__(self):
        return f"Run#{self.index}{list(self.nodes)}"


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def add(self, msg: str):
        self.violations.append(msg)


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True, eq=False)
class PpsTree:
    """A finite pps ``T = (V, E, pi)``.

    ``nodes`` lists every node including the root (the unique node whose
    ``parent`` is None). ``actions`` maps each agent to its alphabet; the
    implicit ``skip`` action need not be listed.

    The tree is immutable. Derived indices (runs, local-state occurrences,
    fact truth tables) are memoised on first use.
    """

    agents: tuple[str, ...]
    actions: tuple[tuple[str, tuple[str, ...]], ...]
    nodes: tuple[Node, ...]
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        acts = self.actions.items() if isinstance(self.actions, Mapping) else self.actions
        object.__setattr__(
            self, "actions", tuple(sorted((a, tuple(sorted(set(xs)))) for a, xs in acts))
        )
        object.__setattr__(self, "nodes", tuple(self.nodes))

    def __eq__(self, other):
        if not isinstance(other, PpsTree):
            return NotImplemented
        return (self.agents, self.actions, self.nodes) == (
            other.agents,
            other.actions,
            other.nodes,
        )

    def __hash__(self):
        return id(self)

    # -- structure -------------------------------------------------------

    def alphabet(self, agent: str) -> tuple[str, ...]:
        for name, acts in self.actions:
            if name == agent:
                return acts
        raise KeyError(agent)

    @cached_property
    def by_id(self) -> dict[int, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def root(self) -> Node:
        roots = [n for n in self.nodes if n.parent is None]
        if len(roots) != 1:
            raise InvalidTreeError(validate_tree(self))
        return roots[0]

    @cached_property
    def children(self) -> dict[int, tuple[int, ...]]:
        kids: dict[int, list[int]] = {n.id: [] for n in self.nodes}
        for n in self.nodes:
            if n.parent is not None and n.parent in kids:
                kids[n.parent].append(n.id)
        return {k: tuple(v) for k, v in kids.items()}

    @cached_property
    def depth(self) -> dict[int, int]:
        """Node depth with root children at depth 0 (the root sits at -1)."""
        out = {self.root.id: -1}
        stack = [self.root.id]
        while stack:
            v = stack.pop()
            for c in self.children[v]:
                out[c] = out[v] + 1
                stack.append(c)
        return out

    def nodes_at(self, t: int) -> tuple[int, ...]:
        return self._levels[t] if 0 <= t < len(self._levels) else ()

    @cached_property
    def _levels(self) -> tuple[tuple[int, ...], ...]:
        levels: list[list[int]] = []
        for n in self.nodes:
            d = self.depth.get(n.id)
            if d is None or d < 0:
                continue
            while len(levels) <= d:
                levels.append([])
            levels[d].append(n.id)
        return tuple(tuple(l) for l in levels)

    @property
    def horizon(self) -> int:
        return len(self._levels) - 1

    def check(self) -> "PpsTree":
        """Return self, raising :class:`InvalidTreeError` if invalid."""
        report = self._memo.get("validation")
        if report is None:
            report = self._memo["validation"] = validate_tree(self)
        if not report.ok:
            raise InvalidTreeError(report)
        return self

    # -- runs ------------------------------------------------------------

    @cached_property
    def runs(self) -> tuple[Run, ...]:
        self.check()
        out: list[Run] = []
        stack = [(c, (c,)) for c in reversed(self.children[self.root.id])]
        while stack:
            v, path = stack.pop()
            kids = self.children[v]
            if not kids:
                states = tuple(self.by_id[n].state for n in path)
                out.append(Run(len(out), path, states))
            for c in reversed(kids):
                stack.append((c, path + (c,)))
        return tuple(out)

    @cached_property
    def _weights(self) -> tuple[tuple[int, ...], int]:
        """Run measures as integers over one common denominator."""
        raw = []
        for run in self.runs:
            m = self.by_id[run.nodes[0]].prob
            for n in run.nodes[1:]:
                m *= self.by_id[n].prob
            raw.append(Fraction(m))
        den = 1
        for m in raw:
            den = den * m.denominator // math.gcd(den, m.denominator)
        return tuple(m.numerator * (den // m.denominator) for m in raw), den

    def run_measure(self, run: Run) -> Fraction:
        nums, den = self._weights
        return Fraction(nums[self._own(run).index], den)

    @property
    def all_mask(self) -> int:
        return (1 << len(self.runs)) - 1

    @cached_property
    def _byte_sums(self) -> tuple[list[int], ...]:
        # Per 8-run block, the weight of every subset of the block.
        nums, _ = self._weights
        tables = []
        for base in range(0, len(nums), 8):
            tbl = [0] * 256
            for b in range(1, 256):
                low = (b & -b).bit_length() - 1
                k = base + low
                tbl[b] = tbl[b & (b - 1)] + (nums[k] if k < len(nums) else 0)
            tables.append(tbl)
        return tuple(tables)

    def mask_weight(self, mask: int) -> int:
        """Measure of ``mask`` scaled by the common denominator."""
        if not mask:
            return 0
        tables = self._byte_sums
        data = mask.to_bytes(len(tables), "little")
        return sum(tbl[b] for tbl, b in zip(tables, data) if b)

    def mask_measure(self, mask: int) -> Fraction:
        return Fraction(self.mask_weight(mask), self._weights[1])

    def mask_of(self, runs: Iterable[Run]) -> int:
        mask = 0
        for r in runs:
            mask |= 1 << self._own(r).index
        return mask

    def runs_of(self, mask: int) -> frozenset[Run]:
        return frozenset(self.runs[k] for k in _bits(mask))

    def _own(self, run: Run) -> Run:
        runs = self.runs
        if 0 <= run.index < len(runs) and runs[run.index] == run:
            return runs[run.index]
        for r in runs:
            if r == run:
                return r
        raise ForeignRunError("run not in tree")

    @cached_property
    def node_mask(self) -> dict[int, int]:
        """Mask of the runs passing through each non-root node."""
        out: dict[int, int] = {}
        for run in self.runs:
            bit = 1 << run.index
            for n in run.nodes:
                out[n] = out.get(n, 0) | bit
        return out

    def local_states(self, agent: str) -> dict[LocalState, int]:
        """Every local state of ``agent`` occurring in the tree, with R(l)."""
        key = ("locals", agent)
        if key not in self._memo:
            occ: dict[LocalState, int] = {}
            for t in range(self.horizon + 1):
                for v in self.nodes_at(t):
                    ls = self.by_id[v].state.local(agent)
                    occ[ls] = occ.get(ls, 0) | self.node_mask[v]
            self._memo[key] = occ
        return self._memo[key]

    def check_point(self, run: Run, t: int) -> Run:
        own = self._own(run)
        if not isinstance(t, int) or not 0 <= t <= own.horizon:
            raise NotAPointError(f"({run!r}, {t}) is not a point of T")
        return own


class TreeBuilder:
    """Incremental construction of a :class:`PpsTree`."""

    def __init__(self, agents: Iterable[str], actions: Mapping[str, Iterable[str]] | None = None):
        self.agents = tuple(agents)
        self.actions = {a: set((actions or {}).get(a, ())) for a in self.agents}
        self._nodes = [Node(0, None)]

    @property
    def root(self) -> int:
        return 0

    def add(self, parent: int, prob, state: GlobalState) -> int:
        nid = len(self._nodes)
        self._nodes.append(Node(nid, parent, Fraction(prob), state))
        for t, agent, action in state.history:
            if action != SKIP:
                self.actions.setdefault(agent, set()).add(action)
        return nid

    def build(self) -> PpsTree:
        return PpsTree(self.agents, {a: tuple(xs) for a, xs in self.actions.items()}, self._nodes)


def validate_tree(tree: PpsTree) -> ValidationReport:
    """Report every violated well-formedness condition of ``tree``."""
    rep = ValidationReport()
    ids = [n.id for n in tree.nodes]
    if len(set(ids)) != len(ids):
        rep.add("duplicate node ids")
        return rep
    by_id = {n.id: n for n in tree.nodes}
    roots = [n for n in tree.nodes if n.parent is None]
    if len(roots) != 1:
        rep.add(f"expected exactly one root, found {len(roots)}")
        return rep
    root = roots[0]
    if root.state is not None:
        rep.add("root must not carry a global state")
    for n in tree.nodes:
        if n.parent is not None and n.parent not in by_id:
            rep.add(f"node {n.id}: parent {n.parent} does not exist")
    if rep.violations:
        return rep

    kids: dict[int, list[int]] = {n.id: [] for n in tree.nodes}
    for n in tree.nodes:
        if n.parent is not None:
            kids[n.parent].append(n.id)
    depth = {root.id: -1}
    stack = [root.id]
    while stack:
        v = stack.pop()
        for c in kids[v]:
            depth[c] = depth[v] + 1
            stack.append(c)
    unreachable = [i for i in ids if i not in depth]
    if unreachable:
        rep.add(f"nodes not reachable from the root (cycle?): {sorted(unreachable)}")
        return rep
    if not kids[root.id]:
        rep.add("root has no children")
        return rep

    agents = tuple(tree.agents)
    if len(set(agents)) != len(agents):
        rep.add("duplicate agent identifiers")
    alph = dict(tree.actions)
    for a in alph:
        if a not in agents:
            rep.add(f"action alphabet given for unknown agent {a!r}")
    seen: dict[str, str] = {}
    for a in agents:
        for act in alph.get(a, ()):
            if act == SKIP:
                continue
            if act in seen and seen[act] != a:
                rep.add(f"action {act!r} belongs to both {seen[act]!r} and {a!r}")
            seen.setdefault(act, a)

    for v, cs in kids.items():
        if not cs:
            continue
        total = Fraction(0)
        for c in cs:
            p = by_id[c].prob
            if not isinstance(p, Fraction):
                rep.add(f"edge {v}->{c}: probability must be a Fraction, got {p!r}")
                continue
            if not 0 < p <= 1:
                rep.add(f"edge {v}->{c}: probability {p} outside (0,1]")
            total += p
        if total != 1:
            rep.add(f"node {v}: outgoing sum {total} ≠ 1")

    leaf_depths = {depth[v] for v, cs in kids.items() if not cs}
    if len(leaf_depths) > 1:
        rep.add(f"leaves at unequal depths {sorted(leaf_depths)}")

    for n in tree.nodes:
        if n is root:
            continue
        d = depth[n.id]
        g = n.state
        if not isinstance(g, GlobalState):
            rep.add(f"node {n.id}: missing global state")
            continue
        names = tuple(ls.agent for ls in g.locals)
        if names != agents:
            rep.add(f"node {n.id}: local states for {names}, expected {agents}")
        for ls in g.locals:
            if ls.time != d:
                rep.add(f"node {n.id}: agent {ls.agent} has time {ls.time} at depth {d}")
        _check_history(rep, n, d, g, by_id, agents, alph)
    return rep


def _check_history(rep, n, d, g, by_id, agents, alph):
    order = {a: k for k, a in enumerate(agents)}
    hist = g.history
    for rec in hist:
        if len(rec) != 3:
            rep.add(f"node {n.id}: malformed history record {rec!r}")
            return
    if any(t >= d or t < 0 for t, _, _ in hist):
        rep.add(f"node {n.id}: history records an action at or after time {d}")
    keys = [(t, order.get(a, len(agents))) for t, a, _ in hist]
    if keys != sorted(keys):
        rep.add(f"node {n.id}: history not ordered by (time, agent)")
    expected = [(t, a) for t in range(d) for a in agents]
    if [(t, a) for t, a, _ in hist] != expected:
        rep.add(f"node {n.id}: history must hold one record per agent per elapsed round")
    for t, a, act in hist:
        if a in order and act != SKIP and act not in alph.get(a, ()):
            rep.add(f"node {n.id}: history action {act!r} not in the alphabet of {a!r}")
    parent = by_id[n.parent]
    if parent.state is not None:
        prev = parent.state.history
        if hist[: len(prev)] != prev or any(t != d - 1 for t, _, _ in hist[len(prev):]):
            rep.add(f"node {n.id}: history does not extend its parent's by round {d - 1}")
    elif hist:
        rep.add(f"node {n.id}: initial state must have an empty history")


def enumerate_runs(tree: PpsTree) -> list[tuple[Run, Fraction]]:
    """Every run of ``tree`` with its measure ``mu(r)``."""
    tree.check()
    return [(r, tree.run_measure(r)) for r in tree.runs]


def measure(tree: PpsTree, runs: Iterable[Run]) -> Fraction:
    return tree.mask_measure(tree.mask_of(runs))


def conditional_measure(tree: PpsTree, event: Iterable[Run], given: Iterable[Run]) -> Fraction:
    """``mu(event | given)``; raises on a null conditioning event."""
    return conditional_mask(tree, tree.mask_of(event), tree.mask_of(given))


def conditional_mask(tree: PpsTree, event: int, given: int) -> Fraction:
    den = tree.mask_weight(given)
    if den == 0:
        raise NullConditionError("conditioning on null event")
    return Fraction(tree.mask_weight(event & given), den)
