"""Finite-table joint protocols and their compilation into pps trees.

A protocol assigns every participant (each agent, plus the environment) a
distribution over actions as a function of what it can see: an agent sees
its own local state, the environment sees its vars, the time and the action
history. All rule lists use first-match semantics.

Guard keys:

* agent rules: ``"time"`` or one of the agent's own variable names;
* environment rules: ``"time"``, an environment variable name, or
  ``"did(AGENT.ACTION)"`` (true iff the history records that action);
* transition rules: ``"time"``, ``"AGENT.VAR"`` or ``"env.VAR"``.

A transition rule additionally carries a joint-action pattern (participant
to action, with ``"env"`` naming the environment) and a list of
assignments to ``"AGENT.VAR"`` / ``"env.VAR"`` targets. Time and history
are maintained by the engine.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .model import (
    ENV,
    SKIP,
    GlobalState,
    LocalState,
    PakError,
    PpsTree,
    Scalar,
    TreeBuilder,
    _scalar_key,
    canonical_vars,
)

ENV_IDLE = "idle"


class ProtocolError(PakError, ValueError):
    pass


def _same(a: Scalar, b: Scalar) -> bool:
    return _scalar_key(a) == _scalar_key(b)


@dataclass(frozen=True)
class ActionDistribution:
    """Finite-support distribution over action names."""

    entries: tuple[tuple[str, Fraction], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "entries", tuple((str(a), Fraction(p)) for a, p in self.entries)
        )

    @classmethod
    def of(cls, spec) -> "ActionDistribution":
        if isinstance(spec, ActionDistribution):
            return spec
        if isinstance(spec, str):
            return cls(((spec, Fraction(1)),))
        items = spec.items() if isinstance(spec, Mapping) else spec
        return cls(tuple(items))

    def problems(self) -> list[str]:
        out = []
        names = [a for a, _ in self.entries]
        if not self.entries:
            out.append("empty distribution")
        if len(set(names)) != len(names):
            out.append(f"repeated actions in {names}")
        if any(p <= 0 for _, p in self.entries):
            out.append("probabilities must be strictly positive")
        total = sum((p for _, p in self.entries), Fraction(0))
        if total != 1:
            out.append(f"probabilities sum to {total}, not 1")
        return out

    @property
    def actions(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.entries)

    def __iter__(self):
        return iter(self.entries)


def _guard(g) -> tuple[tuple[str, Scalar], ...]:
    return canonical_vars(g or {})


@dataclass(frozen=True)
class Rule:
    """``guard -> distribution``, used for both agent and environment rules."""

    guard: tuple[tuple[str, Scalar], ...]
    dist: ActionDistribution

    def __post_init__(self):
        object.__setattr__(self, "guard", _guard(self.guard))
        object.__setattr__(self, "dist", ActionDistribution.of(self.dist))


@dataclass(frozen=True)
class TransitionRule:
    guard: tuple[tuple[str, Scalar], ...] = ()
    on: tuple[tuple[str, str], ...] = ()
    set: tuple[tuple[str, Scalar], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "guard", _guard(self.guard))
        on = self.on.items() if isinstance(self.on, Mapping) else self.on
        object.__setattr__(self, "on", tuple(sorted((str(k), str(v)) for k, v in on)))
        object.__setattr__(self, "set", canonical_vars(self.set or {}))


@dataclass(frozen=True)
class ProtocolSpec:
    agents: tuple[str, ...]
    horizon: int
    initial: tuple[tuple[GlobalState, Fraction], ...]
    agent_rules: Mapping[str, tuple[Rule, ...]]
    env_rules: tuple[Rule, ...] = ()
    transition_rules: tuple[TransitionRule, ...] = (TransitionRule(),)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(
            self, "initial", tuple((g, Fraction(p)) for g, p in self.initial)
        )
        object.__setattr__(
            self,
            "agent_rules",
            {a: tuple(_as_rule(r) for r in self.agent_rules.get(a, ())) for a in self.agents},
        )
        object.__setattr__(self, "env_rules", tuple(_as_rule(r) for r in self.env_rules))
        object.__setattr__(
            self,
            "transition_rules",
            tuple(r if isinstance(r, TransitionRule) else TransitionRule(**r)
                  for r in self.transition_rules),
        )

    def alphabet(self, agent: str) -> tuple[str, ...]:
        acts = {a for r in self.agent_rules[agent] for a in r.dist.actions}
        acts.discard(SKIP)
        return tuple(sorted(acts))

    def problems(self) -> list[str]:
        """Well-formedness violations; empty when the spec can be compiled."""
        out = []
        if not self.agents or len(set(self.agents)) != len(self.agents):
            out.append("agents must be a non-empty list of distinct identifiers")
        if ENV in self.agents:
            out.append(f"{ENV!r} is reserved for the environment")
        if not isinstance(self.horizon, int) or self.horizon < 1:
            out.append("horizon must be a positive integer")
        if not self.initial:
            out.append("no initial states")
        total = sum((p for _, p in self.initial), Fraction(0))
        if total != 1:
            out.append(f"initial probabilities sum to {total}, not 1")
        for k, (g, p) in enumerate(self.initial):
            if p <= 0:
                out.append(f"initial state {k}: probability must be positive")
            if tuple(ls.agent for ls in g.locals) != self.agents:
                out.append(f"initial state {k}: local states must follow agent order")
            if g.history or any(ls.time != 0 for ls in g.locals):
                out.append(f"initial state {k}: must be at time 0 with empty history")
        for a in self.agents:
            for k, rule in enumerate(self.agent_rules[a]):
                for msg in rule.dist.problems():
                    out.append(f"agent rule {a}[{k}]: {msg}")
        for k, rule in enumerate(self.env_rules):
            for msg in rule.dist.problems():
                out.append(f"env rule [{k}]: {msg}")
        owner: dict[str, str] = {}
        for a in self.agents:
            for act in self.alphabet(a):
                if act in owner:
                    out.append(f"action {act!r} used by both {owner[act]!r} and {a!r}")
                owner[act] = a
        participants = set(self.agents) | {ENV}
        for k, rule in enumerate(self.transition_rules):
            for who, _ in rule.on:
                if who not in participants:
                    out.append(f"transition rule [{k}]: unknown participant {who!r}")
            for target, _ in rule.set:
                owner_name = target.split(".", 1)[0]
                if "." not in target or owner_name not in participants:
                    out.append(f"transition rule [{k}]: bad assignment target {target!r}")
                elif target.split(".", 1)[1] == "time":
                    out.append(f"transition rule [{k}]: time is engine-managed")
        return out


def _as_rule(r) -> Rule:
    if isinstance(r, Rule):
        return r
    guard, dist = r
    return Rule(guard, dist)


def initial_state(agents: Iterable[str], locals: Mapping[str, Mapping], env=None) -> GlobalState:
    """A time-0 global state from per-agent variable mappings."""
    return GlobalState(
        env or {}, (), tuple(LocalState(a, 0, locals.get(a, {})) for a in agents)
    )


# -- compilation -----------------------------------------------------------


def _agent_guard_ok(guard, ls: LocalState) -> bool:
    for key, want in guard:
        have = ls.time if key == "time" else ls.get(key)
        if have is None or not _same(have, want):
            return False
    return True


def _env_guard_ok(guard, g: GlobalState, t: int) -> bool:
    for key, want in guard:
        if key == "time":
            have = t
        elif key.startswith("did(") and key.endswith(")"):
            agent, _, action = key[4:-1].partition(".")
            have = any(a == agent and x == action for _, a, x in g.history)
        else:
            have = g.env_get(key)
        if have is None or not _same(have, want):
            return False
    return True


def _state_value(g: GlobalState, t: int, key: str):
    if key == "time":
        return t
    owner, _, name = key.partition(".")
    if owner == ENV:
        return g.env_get(name)
    try:
        return g.local(owner).get(name)
    except KeyError:
        return None


def _first(rules, ok) -> ActionDistribution | None:
    for rule in rules:
        if ok(rule.guard):
            return rule.dist
    return None


def _successor(spec: ProtocolSpec, g: GlobalState, t: int, joint: dict[str, str]) -> GlobalState:
    for rule in spec.transition_rules:
        if all(joint.get(who) == act for who, act in rule.on) and all(
            (v := _state_value(g, t, k)) is not None and _same(v, want) for k, want in rule.guard
        ):
            break
    else:
        acts = ", ".join(f"{k}={v}" for k, v in joint.items())
        raise ProtocolError(f"no transition rule covers state {g!r} at time {t} with actions ({acts})")
    env = dict(g.env)
    lvars = {ls.agent: dict(ls.vars) for ls in g.locals}
    for target, value in rule.set:
        owner, _, name = target.partition(".")
        (env if owner == ENV else lvars[owner])[name] = value
    history = g.history + tuple((t, a, joint[a]) for a in spec.agents)
    return GlobalState(env, history, tuple(LocalState(a, t + 1, lvars[a]) for a in spec.agents))


def build_tree(spec: ProtocolSpec) -> PpsTree:
    """Unfold ``spec`` into its pps tree.

    Joint actions leading to the same successor state are merged and their
    probabilities summed. Since agents' actions are recorded in the history,
    only environment choices with identical effects can collapse.
    """
    problems = spec.problems()
    if problems:
        raise ProtocolError("malformed protocol:\n  " + "\n  ".join(problems))
    builder = TreeBuilder(spec.agents, {a: spec.alphabet(a) for a in spec.agents})

    init: dict[GlobalState, Fraction] = {}
    for g, p in spec.initial:
        init[g] = init.get(g, Fraction(0)) + p
    frontier = [(builder.add(builder.root, p, g), g) for g, p in init.items()]

    for t in range(spec.horizon):
        nxt = []
        for nid, g in frontier:
            choices = []
            for a in spec.agents:
                ls = g.local(a)
                dist = _first(spec.agent_rules[a], lambda gd: _agent_guard_ok(gd, ls))
                choices.append(dist.entries if dist else ((SKIP, Fraction(1)),))
            dist = _first(spec.env_rules, lambda gd: _env_guard_ok(gd, g, t))
            choices.append(dist.entries if dist else ((ENV_IDLE, Fraction(1)),))

            succ: dict[GlobalState, Fraction] = {}
            for combo in itertools.product(*choices):
                prob = Fraction(1)
                for _, p in combo:
                    prob *= p
                joint = dict(zip(spec.agents + (ENV,), (a for a, _ in combo)))
                g2 = _successor(spec, g, t, joint)
                succ[g2] = succ.get(g2, Fraction(0)) + prob
            for g2, p in succ.items():
                nxt.append((builder.add(nid, p, g2), g2))
        frontier = nxt
    return builder.build()


# -- builtin systems ---------------------------------------------------------


def _fs(refrain: bool) -> ProtocolSpec:
    agents = ("A", "B")
    half = Fraction(1, 2)
    initial = [
        (initial_state(agents, {"A": {"go": go, "reply": "none"}, "B": {"count": 0}}), half)
        for go in (0, 1)
    ]
    alice = [Rule({"time": 0, "go": 1}, "sendA")]
    if refrain:
        alice.append(Rule({"time": 2, "go": 1, "reply": "NO"}, SKIP))
    alice.append(Rule({"time": 2, "go": 1}, "fireA"))
    bob = [
        Rule({"time": 1, "count": 0}, "sendNO"),
        Rule({"time": 1}, "sendYES"),
        Rule({"time": 2, "count": 0}, SKIP),
        Rule({"time": 2}, "fireB"),
    ]
    # Loss is independent per message: 9/10 delivered, 1/10 lost.
    env = [
        Rule(
            {"time": 0},
            {
                "deliver_both": Fraction(81, 100),
                "deliver_first": Fraction(9, 100),
                "deliver_second": Fraction(9, 100),
                "lose_both": Fraction(1, 100),
            },
        ),
        Rule({"time": 1}, {"deliver": Fraction(9, 10), "lose": Fraction(1, 10)}),
    ]
    transitions = [
        TransitionRule(on={"A": "sendA", ENV: "deliver_both"}, set={"B.count": 2}),
        TransitionRule(on={"A": "sendA", ENV: "deliver_first"}, set={"B.count": 1}),
        TransitionRule(on={"A": "sendA", ENV: "deliver_second"}, set={"B.count": 1}),
        TransitionRule(on={"B": "sendYES", ENV: "deliver"}, set={"A.reply": "YES"}),
        TransitionRule(on={"B": "sendNO", ENV: "deliver"}, set={"A.reply": "NO"}),
        TransitionRule(),
    ]
    return ProtocolSpec(
        agents,
        3,
        initial,
        {"A": alice, "B": bob},
        env,
        transitions,
        name="fs-refrain" if refrain else "fs",
    )


def builtin_fs() -> ProtocolSpec:
    """The relaxed firing-squad protocol FS.

    When ``go=1`` Alice sends two messages at time 0 and fires at time 2.
    Bob answers YES at time 1 if at least one message arrived (and then
    fires at time 2), otherwise NO (and never fires). Bob's local state
    records only how many messages he received.
    """
    return _fs(refrain=False)


def builtin_fs_refrain() -> ProtocolSpec:
    """FS, except that Alice does not fire after receiving NO."""
    return _fs(refrain=True)


def fig1_spec() -> ProtocolSpec:
    agents = ("i",)
    return ProtocolSpec(
        agents,
        1,
        [(initial_state(agents, {}), 1)],
        {"i": [Rule({"time": 0}, {"alpha": Fraction(1, 2), "alpha_prime": Fraction(1, 2)})]},
        name="fig1",
    )


def builtin_fig1() -> PpsTree:
    """Single agent ``i``, one initial state, a mixed step over alpha/alpha_prime."""
    b = TreeBuilder(("i",), {"i": ("alpha", "alpha_prime")})
    g0 = b.add(b.root, 1, GlobalState({}, (), (LocalState("i", 0),)))
    for act in ("alpha", "alpha_prime"):
        b.add(g0, Fraction(1, 2), GlobalState({}, ((0, "i", act),), (LocalState("i", 1),)))
    return b.build()


def build_counterexample(p, eps) -> PpsTree:
    """Three-run system where the constraint holds at ``p`` yet the threshold
    is met only on a set of measure ``eps``.

    Agent ``j`` holds a fixed ``bit`` (1 with probability ``p``). With
    ``bit=0`` it sends ``m``; with ``bit=1`` it sends ``m`` with probability
    ``1 - eps/p`` and ``m_prime`` otherwise. Agent ``i`` records the message
    and performs ``alpha`` at time 1 unconditionally.
    """
    p, eps = Fraction(p), Fraction(eps)
    if not 0 < eps < p < 1:
        raise ValueError("counterexample requires 0<ε<p<1")
    b = TreeBuilder(("i", "j"), {"i": ("alpha",), "j": ("send_m", "send_m_prime")})

    def state(t, bit, got, hist):
        return GlobalState(
            {}, hist, (LocalState("i", t, {"got": got}), LocalState("j", t, {"bit": bit}))
        )

    for bit, prior, sends in (
        (0, 1 - p, [("send_m", Fraction(1))]),
        (1, p, [("send_m", 1 - eps / p), ("send_m_prime", eps / p)]),
    ):
        s = b.add(b.root, prior, state(0, bit, "nothing", ()))
        for act, q in sends:
            got = "m" if act == "send_m" else "m_prime"
            h1 = ((0, "i", SKIP), (0, "j", act))
            v = b.add(s, q, state(1, bit, got, h1))
            b.add(v, 1, state(2, bit, got, h1 + ((1, "i", "alpha"), (1, "j", SKIP))))
    return b.build()
