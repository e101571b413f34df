"""Property suite over seeded random trees.

Each check counts how many instances it examined and how many violated
the expected implication. A healthy run has zero violations everywhere.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .analysis import (
    Verdict,
    check_local_state_independence,
    is_deterministic_action,
    is_proper,
    acting_belief_gaps,
    verify_expectation,
    verify_pak,
    verify_sometimes,
    verify_sufficiency,
)
from .belief import belief_profile, success_probability
from .facts import (
    And,
    Fact,
    Performs,
    as_fact,
    at_action_mask,
    at_state_mask,
    is_past_based,
    occurs_mask,
    performed_mask,
    render,
)
from .model import PpsTree, measure
from .randomized import RandomPpsParams, random_facts, random_pps

P_GRID = tuple(Fraction(x) for x in ("0", "1/10", "1/4", "1/2", "3/4", "9/10", "1"))
DE_GRID = tuple(Fraction(x) for x in ("1/10", "1/4", "1/2", "9/10"))
FACTS_PER_TREE = 8


def suite_params(seed: int) -> RandomPpsParams:
    """Parameters used for seed ``seed``: depth up to 4, branching up to 3,
    and one to three agents cycling with the seed."""
    return RandomPpsParams(
        seed=seed,
        max_depth=4,
        max_branching=3,
        num_agents=1 + seed % 3,
        actions_per_agent=1 + (seed // 3) % 3,
    )


@dataclass
class SuiteResult:
    checked: dict[str, int] = field(default_factory=lambda: defaultdict(int))
    violations: dict[str, int] = field(default_factory=lambda: defaultdict(int))
    examples: list[str] = field(default_factory=list)
    trees: int = 0

    def tally(self, name: str, ok: bool, detail: str = ""):
        self.checked[name] += 1
        if not ok:
            self.violations[name] += 1
            if len(self.examples) < 20:
                self.examples.append(f"{name}: {detail}")

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())

    def merge(self, other: "SuiteResult"):
        for k, v in other.checked.items():
            self.checked[k] += v
        for k, v in other.violations.items():
            self.violations[k] += v
        self.examples.extend(other.examples[: max(0, 20 - len(self.examples))])
        self.trees += other.trees


def proper_actions(tree: PpsTree) -> list[tuple[str, str]]:
    return [(a, x) for a in tree.agents for x in tree.alphabet(a) if is_proper(tree, a, x)]


def bookkeeping_violations(tree: PpsTree, fact: Fact, agent: str, action: str) -> list[str]:
    """Exhaustive run-set comparison of the five bookkeeping equivalences
    relating ``alpha@l``, ``[phi and alpha]@l``, ``R(l)`` and ``R(alpha)``."""
    out = []
    fact = as_fact(fact)
    act = Performs(agent, action)
    both = And((fact, act))
    r_alpha = performed_mask(tree, agent, action)
    phi_at = at_action_mask(tree, fact, agent, action)
    if phi_at != phi_at & r_alpha:
        out.append("(e)")
    for ls in tree.local_states(agent):
        r_l = occurs_mask(tree, ls)
        a_l = at_state_mask(tree, act, ls)
        b_l = at_state_mask(tree, both, ls)
        for tag, ok in (
            ("(a)", a_l == a_l & r_l),
            ("(b)", b_l == b_l & r_l),
            ("(c)", b_l & a_l == b_l),
            ("(d)", a_l == a_l & r_alpha),
        ):
            if not ok:
                out.append(f"{tag} at {ls!r}")
    return out


def check_tree(tree: PpsTree, facts: Iterable[Fact], label: str = "") -> SuiteResult:
    res = SuiteResult(trees=1)
    tree.check()
    res.tally("measure-sums-to-one", measure(tree, tree.runs) == 1, label)
    facts = list(facts)
    for agent, action in proper_actions(tree):
        det = is_deterministic_action(tree, agent, action)
        for fact in facts:
            where = f"{label} {agent}.{action} {render(fact)}"
            pb = is_past_based(tree, fact)
            indep = check_local_state_independence(tree, fact, agent, action).holds
            if det:
                res.tally("independence-deterministic", indep, where)
            if pb:
                res.tally("independence-past-based", indep, where)

            exp = verify_expectation(tree, fact, agent, action)
            res.tally("expectation-grouped", exp.verdict is not Verdict.FAILS or indep, where)
            if indep:
                res.tally("expectation", exp.holds, where)
            if pb:
                res.tally("expectation-past-based", exp.holds, where)

            prof = belief_profile(tree, fact=fact, agent=agent, action=action)
            succ = success_probability(tree, fact, agent, action)
            for p in set(P_GRID) | {prof.min_belief()}:
                rep = verify_sufficiency(tree, fact, agent, action, p)
                res.tally("sufficiency", rep.verdict is not Verdict.FAILS, f"{where} p={p}")
            for p in set(P_GRID) | {succ}:
                rep = verify_sometimes(tree, fact, agent, action, p)
                ok = rep.verdict is not Verdict.FAILS
                if indep and succ >= p:
                    ok = rep.holds and rep.witnesses[0]["belief"] >= p
                res.tally("sometimes", ok, f"{where} p={p}")
            for d in DE_GRID:
                for e in DE_GRID:
                    rep = verify_pak(tree, fact, agent, action, d, e)
                    res.tally("pak", rep.verdict is not Verdict.FAILS, f"{where} d={d} e={e}")
            if indep and succ == 1:
                rep = verify_pak(tree, fact, agent, action, 0, 0)
                ok = rep.holds and all(b == 1 for b in prof.by_state.values())
                res.tally("pak-probability-one", ok, where)
            res.tally("bookkeeping-equivalences", not bookkeeping_violations(tree, fact, agent, action), where)
            if indep:
                res.tally("belief-given-acting-state", not acting_belief_gaps(tree, fact, agent, action), where)
    return res


def run_suite(seeds: Iterable[int], facts_per_tree: int = FACTS_PER_TREE) -> SuiteResult:
    total = SuiteResult(trees=0)
    for seed in seeds:
        tree = random_pps(suite_params(seed))
        total.merge(check_tree(tree, random_facts(tree, seed, facts_per_tree), f"seed={seed}"))
    return total
