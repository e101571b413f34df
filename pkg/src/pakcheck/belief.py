"""Posterior beliefs and the quantities built from them.

An agent's degree of belief in a fact at a point is the prior run measure
conditioned on the agent's current local state occurring:
``Bel_i(phi) = mu(phi@l | R(l))`` with ``l = r_i(t)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .facts import (
    Fact,
    action_masks,
    as_fact,
    at_action_mask,
    at_state_mask,
    occurs_mask,
    performed_mask,
    require_proper,
)
from .model import LocalState, PpsTree, Run, _bits, conditional_mask


@dataclass(frozen=True)
class BeliefProfile:
    """``Bel_i(phi)@alpha`` for every run, and per acting local state.

    Runs in which the action is not performed carry belief 0.
    """

    agent: str
    fact: Fact
    action: str
    by_run: Mapping[Run, Fraction]
    by_state: Mapping[LocalState, Fraction]

    @property
    def support(self) -> frozenset[LocalState]:
        return frozenset(self.by_state)

    def min_belief(self) -> Fraction:
        return min(self.by_state.values())


def state_belief(tree: PpsTree, fact, ls: LocalState) -> Fraction:
    """``mu(fact@l | R(l))`` for a local state occurring in ``tree``."""
    return conditional_mask(tree, at_state_mask(tree, fact, ls), occurs_mask(tree, ls))


def belief_at(tree: PpsTree, agent: str, fact, run: Run, t: int) -> Fraction:
    own = tree.check_point(run, t)
    return state_belief(tree, as_fact(fact), own.local(agent, t))


def acting_states(tree: PpsTree, agent: str, action: str) -> dict[LocalState, int]:
    """``L_i[alpha]`` mapped to the runs satisfying ``alpha@l``."""
    key = ("acting", agent, action)
    if key not in tree._memo:
        out: dict[LocalState, int] = {}
        for t, acts in enumerate(action_masks(tree, agent, action)):
            if not acts:
                continue
            for v in tree.nodes_at(t):
                hit = tree.node_mask[v] & acts
                if hit:
                    ls = tree.by_id[v].state.local(agent)
                    out[ls] = out.get(ls, 0) | hit
        tree._memo[key] = out
    return tree._memo[key]


def belief_profile(tree: PpsTree, agent: str, fact, action: str) -> BeliefProfile:
    fact = as_fact(fact)
    key = ("profile", agent, fact, action)
    if key in tree._memo:
        return tree._memo[key]
    require_proper(tree, agent, action)
    by_state = {}
    by_run = {r: Fraction(0) for r in tree.runs}
    for ls, mask in acting_states(tree, agent, action).items():
        b = state_belief(tree, fact, ls)
        by_state[ls] = b
        for k in _bits(mask):
            by_run[tree.runs[k]] = b
    prof = BeliefProfile(agent, fact, action, by_run, by_state)
    tree._memo[key] = prof
    return prof


def success_probability(tree: PpsTree, fact, agent: str, action: str) -> Fraction:
    """``mu(fact@alpha | R(alpha))``, the left side of a probabilistic constraint."""
    fact = as_fact(fact)
    key = ("success", fact, agent, action)
    if key not in tree._memo:
        tree._memo[key] = conditional_mask(
            tree, at_action_mask(tree, fact, agent, action), performed_mask(tree, agent, action)
        )
    return tree._memo[key]


def expected_belief(tree: PpsTree, agent: str, fact, action: str) -> Fraction:
    """``sum_r mu(r | R(alpha)) * (Bel_i(fact)@alpha)[r]``, summed run by run.

    Each term is ``w_r / W * a / b`` with ``w_r`` the run weight, ``W`` the
    weight of R(alpha) and ``a/b`` the belief; terms are accumulated as
    integers over the common denominator ``W * lcm(b)``.
    """
    prof = belief_profile(tree, agent, fact, action)
    weights, _ = tree._weights
    acting = performed_mask(tree, agent, action)
    total_w = sum(weights[k] for k in _bits(acting))
    lcm = 1
    for b in prof.by_state.values():
        lcm = lcm * b.denominator // math.gcd(lcm, b.denominator)
    num = 0
    for run in tree.runs:
        w = weights[run.index] if acting >> run.index & 1 else 0
        b = prof.by_run[run]
        num += w * b.numerator * (lcm // b.denominator)
    return Fraction(num, total_w * lcm)


def expected_belief_grouped(tree: PpsTree, agent: str, fact, action: str) -> Fraction:
    """The same expectation grouped by acting local state:
    ``sum_l mu(alpha@l | R(alpha)) * Bel(l)``."""
    prof = belief_profile(tree, agent, fact, action)
    acting = performed_mask(tree, agent, action)
    total = Fraction(0)
    for ls, mask in acting_states(tree, agent, action).items():
        total += conditional_mask(tree, mask, acting) * prof.by_state[ls]
    return total


def threshold_mask(tree: PpsTree, agent: str, fact, action: str, p) -> int:
    prof = belief_profile(tree, agent, fact, action)
    p = Fraction(p)
    mask = 0
    for ls, m in acting_states(tree, agent, action).items():
        if prof.by_state[ls] >= p:
            mask |= m
    return mask


def threshold_measure(tree: PpsTree, agent: str, fact, action: str, p) -> Fraction:
    """``mu(Bel_i(fact)@alpha >= p | R(alpha))``."""
    return conditional_mask(
        tree, threshold_mask(tree, agent, fact, action, p), performed_mask(tree, agent, action)
    )
