"""Seeded random pps trees and facts for property suites.

Trees are generated the way a protocol would unfold them: each agent's
action distribution is drawn once per local state and reused whenever that
local state recurs, and the environment's distribution is drawn once per
environment state. Agents carry a single bit ``o`` that is updated through
random tables, so different histories regularly collapse to equal local
states. Every action name carries the round it belongs to, which makes all
actions proper by construction.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

from .facts import (
    TRUE,
    And,
    EnvVarEq,
    Ever,
    Fact,
    Implies,
    Not,
    Or,
    Performs,
    TimeEq,
    VarEq,
    is_past_based,
)
from .model import SKIP, GlobalState, LocalState, PpsTree, TreeBuilder

LEAF_BUDGET = 256
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RandomPpsParams:
    seed: int
    max_depth: int = 3
    max_branching: int = 2
    num_agents: int = 2
    actions_per_agent: int = 2
    denominator_bound: int = 12

    def __post_init__(self):
        checks = [
            (0 <= self.seed <= _MASK64, "seed must be a 64-bit unsigned integer"),
            (1 <= self.max_depth <= 4, "max_depth must lie in [1, 4]"),
            (2 <= self.max_branching <= 3, "max_branching must lie in [2, 3]"),
            (1 <= self.num_agents <= 3, "num_agents must lie in [1, 3]"),
            (1 <= self.actions_per_agent <= 3, "actions_per_agent must lie in [1, 3]"),
            (self.denominator_bound >= self.max_branching, "denominator_bound too small"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)


def _distribution(rng: random.Random, k: int, bound: int) -> list[Fraction]:
    """k positive fractions summing to 1 over a common denominator <= bound."""
    if k == 1:
        return [Fraction(1)]
    den = rng.randint(k, bound)
    cuts = sorted(rng.sample(range(1, den), k - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [den])]
    return [Fraction(n, den) for n in parts]


def _support_size(rng: random.Random, available: int, cap: int, limit: int) -> int:
    # Point mass half of the time, otherwise a mixed step.
    if available == 1 or limit <= 1 or rng.random() < 0.5:
        return 1
    return rng.randint(2, min(cap, available, limit))


def random_pps(params: RandomPpsParams) -> PpsTree:
    rng = random.Random(params.seed)
    bound = params.denominator_bound
    width = params.max_branching
    horizon = rng.randint(1, params.max_depth)
    agents = [f"p{k}" for k in range(params.num_agents)]
    env_actions = [f"e{k}" for k in range(width)]

    agent_memo: dict[LocalState, list[tuple[str, Fraction]]] = {}
    env_memo: dict[tuple[int, int], list[tuple[str, Fraction]]] = {}
    bit_table: dict[tuple, int] = {}
    env_table: dict[tuple, int] = {}

    builder = TreeBuilder(agents)
    n_init = rng.randint(1, width)
    inits = []
    for s in range(n_init):
        locals_ = tuple(LocalState(a, 0, {"o": rng.randint(0, 1)}) for a in agents)
        inits.append(GlobalState({"s": s}, (), locals_))
    frontier = [
        (builder.add(builder.root, p, g), g)
        for g, p in zip(inits, _distribution(rng, n_init, bound))
    ]

    for t in range(horizon):
        limit = max(1, LEAF_BUDGET // len(frontier))
        nxt = []
        for nid, g in frontier:
            room = limit
            dists = []
            for a in agents:
                ls = g.local(a)
                if ls not in agent_memo:
                    cands = [f"{a}_b{b}_t{t}" for b in range(params.actions_per_agent)] + [SKIP]
                    k = _support_size(rng, len(cands), width, room)
                    acts = rng.sample(cands, k)
                    agent_memo[ls] = list(zip(acts, _distribution(rng, k, bound)))
                dists.append(agent_memo[ls])
                room = max(1, room // len(agent_memo[ls]))
            ekey = (t, g.env_get("s"))
            if ekey not in env_memo:
                k = _support_size(rng, width, width, room)
                acts = rng.sample(env_actions, k)
                env_memo[ekey] = list(zip(acts, _distribution(rng, k, bound)))

            merged: dict[GlobalState, Fraction] = {}
            for combo in itertools.product(env_memo[ekey], *dists):
                (e, pe), picks = combo[0], combo[1:]
                prob = pe
                for _, pa in picks:
                    prob *= pa
                new_locals = []
                for a, (act, _) in zip(agents, picks):
                    o = g.local(a).get("o")
                    key = (a, t, o, act, e)
                    if key not in bit_table:
                        bit_table[key] = rng.randint(0, 1)
                    new_locals.append(LocalState(a, t + 1, {"o": bit_table[key]}))
                ekey2 = (t, g.env_get("s"), e)
                if ekey2 not in env_table:
                    env_table[ekey2] = rng.randint(0, width - 1)
                history = g.history + tuple((t, a, act) for a, (act, _) in zip(agents, picks))
                succ = GlobalState({"s": env_table[ekey2]}, history, tuple(new_locals))
                merged[succ] = merged.get(succ, Fraction(0)) + prob
            for succ, prob in merged.items():
                nxt.append((builder.add(nid, prob, succ), succ))
        frontier = nxt

    tree = builder.build()
    tree.check()
    return tree


def _atom(rng: random.Random, tree: PpsTree, allow_actions: bool) -> Fact:
    roll = rng.random()
    if allow_actions and roll < 0.3:
        pairs = [(a, x) for a in tree.agents for x in tree.alphabet(a)]
        if pairs:
            return Performs(*rng.choice(pairs))
    if roll < 0.65:
        return VarEq(rng.choice(tree.agents), "o", rng.randint(0, 1))
    if roll < 0.85:
        return EnvVarEq("s", rng.randint(0, 2))
    if roll < 0.97:
        return TimeEq(rng.randint(0, tree.horizon))
    return TRUE


def _compose(rng: random.Random, tree: PpsTree, depth: int, allow_actions: bool) -> Fact:
    if depth == 0 or rng.random() < 0.35:
        return _atom(rng, tree, allow_actions)
    roll = rng.random()
    sub = lambda: _compose(rng, tree, depth - 1, allow_actions)  # noqa: E731
    if roll < 0.2:
        return Not(sub())
    if roll < 0.55:
        return And((sub(), sub()))
    if roll < 0.85:
        return Or((sub(), sub()))
    return Implies(sub(), sub())


def random_facts(tree: PpsTree, seed: int, count: int = 8) -> list[Fact]:
    """A deterministic mix of facts: half built from state atoms only (hence
    past-based), the rest free to mention actions and ``ever``."""
    rng = random.Random(seed * 7919 + 17)
    out = []
    for k in range(count):
        if k % 2 == 0:
            out.append(_compose(rng, tree, 3, allow_actions=False))
        else:
            f = _compose(rng, tree, 3, allow_actions=True)
            out.append(Ever(f) if rng.random() < 0.25 else f)
    return out


def past_based_facts(tree: PpsTree, facts) -> list[Fact]:
    return [f for f in facts if is_past_based(tree, f)]
