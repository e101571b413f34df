"""Structural predicates, constraint checks and theorem verifiers.

Every verifier returns an :class:`AnalysisReport` carrying the exact values
it computed. When a theorem's hypotheses do not hold on the given tree the
verdict is ``not-applicable`` and the raw values are still reported, so
counterexamples such as the mixed-step system stay observable.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from fractions import Fraction

from .belief import (
    acting_states,
    belief_profile,
    expected_belief,
    expected_belief_grouped,
    success_probability,
    threshold_measure,
)
from .facts import (
    Fact,
    FactSyntaxError,
    action_masks,
    as_fact,
    at_action_mask,
    is_past_based,
    parse_fact,
    properness,
    render,
    require_proper,
    truth_table,
)
from .model import LocalState, PpsTree, Run, conditional_mask


class Verdict(str, enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    NOT_APPLICABLE = "not-applicable"

    def __str__(self):
        return self.value


@dataclass
class AnalysisReport:
    kind: str
    verdict: Verdict
    values: dict[str, Fraction] = field(default_factory=dict)
    witnesses: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS

    def __post_init__(self):
        if self.verdict is Verdict.FAILS and not self.witnesses:
            raise ValueError(f"{self.kind}: a failing report needs a witness")


@dataclass(frozen=True)
class Properness:
    proper: bool
    witness: Run | None = None

    def __bool__(self):
        return self.proper


def is_proper(tree: PpsTree, agent: str, action: str) -> Properness:
    """Performed at least once in the tree and at most once per run.

    On failure the witness is a run performing the action twice, or None
    when the action never occurs at all.
    """
    ok, witness = properness(tree, agent, action)
    return Properness(ok, witness)


def is_deterministic_action(tree: PpsTree, agent: str, action: str) -> bool:
    """Whether performing ``action`` is a function of the agent's local state."""
    acts = action_masks(tree, agent, action)
    for ls, runs in tree.local_states(agent).items():
        hit = acts[ls.time] & runs
        if hit and hit != runs:
            return False
    return True


def _independence(tree: PpsTree, fact: Fact, agent: str, action: str):
    """Yield ``(l, belief, act_prob, joint)`` for every occurring local state."""
    table = truth_table(tree, fact)
    acts = action_masks(tree, agent, action)
    for ls, runs in tree.local_states(agent).items():
        t = ls.time
        yield (
            ls,
            conditional_mask(tree, table[t], runs),
            conditional_mask(tree, acts[t], runs),
            conditional_mask(tree, table[t] & acts[t], runs),
        )


def check_local_state_independence(tree: PpsTree, fact, agent: str, action: str) -> AnalysisReport:
    """``mu(phi@l | R(l)) * mu(alpha@l | R(l)) == mu([phi and alpha]@l | R(l))``
    at every local state of ``agent`` occurring in the tree."""
    fact = as_fact(fact)
    require_proper(tree, agent, action)
    key = ("indep", fact, agent, action)
    if key in tree._memo:
        return tree._memo[key]
    witnesses = []
    checked = 0
    for ls, bel, act, joint in _independence(tree, fact, agent, action):
        checked += 1
        if bel * act != joint:
            witnesses.append(
                {"local_state": ls, "lhs": bel * act, "rhs": joint,
                 "belief": bel, "action_probability": act}
            )
    verdict = Verdict.FAILS if witnesses else Verdict.HOLDS
    values = {"lhs": witnesses[0]["lhs"], "rhs": witnesses[0]["rhs"]} if witnesses else {}
    rep = AnalysisReport(
        "independence", verdict, values, witnesses,
        [f"{checked} local states of {agent} checked for {render(fact)} vs {agent}.{action}"],
    )
    tree._memo[key] = rep
    return rep


def _independent(tree, fact, agent, action) -> AnalysisReport:
    return check_local_state_independence(tree, fact, agent, action)


def check_constraint(tree: PpsTree, fact, agent: str, action: str, p) -> AnalysisReport:
    """Does ``mu(fact@alpha | R(alpha)) >= p`` hold?"""
    fact = as_fact(fact)
    p = Fraction(p)
    value = success_probability(tree, fact, agent, action)
    witnesses = []
    if value < p:
        acting = 0
        for m in action_masks(tree, agent, action):
            acting |= m
        bad = acting & ~at_action_mask(tree, fact, agent, action)
        run = tree.runs[(bad & -bad).bit_length() - 1]
        witnesses.append({"run": run, "note": "action performed while the condition fails"})
    return AnalysisReport(
        "constraint",
        Verdict.HOLDS if value >= p else Verdict.FAILS,
        {"value": value, "threshold": p},
        witnesses,
    )


def verify_sufficiency(tree: PpsTree, fact, agent: str, action: str, p) -> AnalysisReport:
    """If every acting belief is at least ``p`` then the constraint holds at ``p``."""
    fact = as_fact(fact)
    p = Fraction(p)
    prof = belief_profile(tree, agent, fact, action)
    lo = prof.min_belief()
    value = success_probability(tree, fact, agent, action)
    values = {"min_belief": lo, "success": value, "threshold": p}
    indep = _independent(tree, fact, agent, action)
    if not indep.holds:
        return AnalysisReport(
            "sufficiency", Verdict.NOT_APPLICABLE, values, indep.witnesses,
            ["condition is not local-state independent of the action"],
        )
    if lo < p:
        return AnalysisReport(
            "sufficiency", Verdict.NOT_APPLICABLE, values, [],
            ["premise fails: some acting belief is below the threshold"],
        )
    if value >= p:
        return AnalysisReport("sufficiency", Verdict.HOLDS, values)
    return AnalysisReport(
        "sufficiency", Verdict.FAILS, values,
        [{"local_state": ls, "belief": b} for ls, b in prof.by_state.items()],
    )


def verify_expectation(tree: PpsTree, fact, agent: str, action: str) -> AnalysisReport:
    """Success probability equals expected acting belief."""
    fact = as_fact(fact)
    lhs = success_probability(tree, fact, agent, action)
    rhs = expected_belief(tree, agent, fact, action)
    grouped = expected_belief_grouped(tree, agent, fact, action)
    values = {"lhs": lhs, "rhs": rhs, "gap": lhs - rhs}
    if grouped != rhs:
        return AnalysisReport(
            "expectation", Verdict.FAILS, {**values, "grouped": grouped},
            [{"note": "run-wise and state-grouped expectations differ"}],
        )
    indep = _independent(tree, fact, agent, action)
    if not indep.holds:
        return AnalysisReport(
            "expectation", Verdict.NOT_APPLICABLE, values, indep.witnesses,
            ["condition is not local-state independent of the action"],
        )
    if lhs == rhs:
        return AnalysisReport("expectation", Verdict.HOLDS, values)
    prof = belief_profile(tree, agent, fact, action)
    return AnalysisReport(
        "expectation", Verdict.FAILS, values,
        [{"local_state": ls, "belief": b} for ls, b in prof.by_state.items()],
    )


def verify_sometimes(tree: PpsTree, fact, agent: str, action: str, p) -> AnalysisReport:
    """Find a point where the action is performed with belief at least ``p``."""
    fact = as_fact(fact)
    p = Fraction(p)
    value = success_probability(tree, fact, agent, action)
    values = {"success": value, "threshold": p}
    indep = _independent(tree, fact, agent, action)
    if not indep.holds:
        return AnalysisReport(
            "sometimes", Verdict.NOT_APPLICABLE, values, indep.witnesses,
            ["condition is not local-state independent of the action"],
        )
    if value < p:
        return AnalysisReport(
            "sometimes", Verdict.NOT_APPLICABLE, values, [],
            ["premise fails: the constraint does not hold at this threshold"],
        )
    prof = belief_profile(tree, agent, fact, action)
    acting = acting_states(tree, agent, action)
    best = max(prof.by_state, key=lambda ls: prof.by_state[ls])
    if prof.by_state[best] >= p:
        mask = acting[best]
        run = tree.runs[(mask & -mask).bit_length() - 1]
        values["belief"] = prof.by_state[best]
        return AnalysisReport(
            "sometimes", Verdict.HOLDS, values,
            [{"run": run, "time": best.time, "local_state": best, "belief": prof.by_state[best]}],
        )
    return AnalysisReport(
        "sometimes", Verdict.FAILS, values,
        [{"local_state": ls, "belief": b} for ls, b in prof.by_state.items()],
    )


def verify_pak(tree: PpsTree, fact, agent: str, action: str, delta, eps) -> AnalysisReport:
    """If the constraint holds at ``1 - delta*eps`` then acting beliefs are at
    least ``1 - eps`` on a set of measure at least ``1 - delta``.

    With ``eps == 0`` the premise forces success probability 1 and the
    stronger conclusion "every acting belief equals 1" is checked.
    """
    fact = as_fact(fact)
    delta, eps = Fraction(delta), Fraction(eps)
    if not (0 <= delta <= 1 and 0 <= eps <= 1):
        raise ValueError("delta and eps must lie in [0, 1]")
    require_proper(tree, agent, action)
    value = success_probability(tree, fact, agent, action)
    premise = 1 - delta * eps
    values = {"success": value, "premise_bound": premise, "delta": delta, "eps": eps}
    indep = _independent(tree, fact, agent, action)
    if not indep.holds:
        return AnalysisReport(
            "pak", Verdict.NOT_APPLICABLE, values, indep.witnesses,
            ["condition is not local-state independent of the action"],
        )
    if value < premise:
        return AnalysisReport(
            "pak", Verdict.NOT_APPLICABLE, values, [],
            ["premise fails: success probability below 1 - delta*eps"],
        )
    strong = threshold_measure(tree, agent, fact, action, 1 - eps)
    bound = Fraction(1) if eps == 0 else 1 - delta
    values.update({"belief_bound": 1 - eps, "measure": strong, "conclusion_bound": bound})
    notes = ["probability-one case: every acting belief must be 1"] if eps == 0 else []
    if strong >= bound:
        return AnalysisReport("pak", Verdict.HOLDS, values, [], notes)
    prof = belief_profile(tree, agent, fact, action)
    return AnalysisReport(
        "pak", Verdict.FAILS, values,
        [{"local_state": ls, "belief": b} for ls, b in prof.by_state.items() if b < 1 - eps],
        notes,
    )


def acting_belief_gaps(tree: PpsTree, fact, agent: str, action: str) -> list[tuple[LocalState, Fraction, Fraction]]:
    """Acting local states where ``mu(phi@alpha | alpha@l) != mu(phi@l | R(l))``."""
    fact = as_fact(fact)
    at_alpha = at_action_mask(tree, fact, agent, action)
    prof = belief_profile(tree, agent, fact, action)
    out = []
    for ls, mask in acting_states(tree, agent, action).items():
        lhs = conditional_mask(tree, at_alpha, mask)
        if lhs != prof.by_state[ls]:
            out.append((ls, lhs, prof.by_state[ls]))
    return out


_IDENT = r"[A-Za-z_][A-Za-z0-9_']*"
_CONSTRAINT = re.compile(
    rf"""^\s*mu\s*\((?P<fact>.*)@\s*(?P<agent>{_IDENT})\s*\.\s*(?P<action>{_IDENT})\s*
        \|\s*R\s*\(\s*(?P<agent2>{_IDENT})\s*\.\s*(?P<action2>{_IDENT})\s*\)\s*\)
        \s*>=\s*(?P<num>\d+)\s*(?:/\s*(?P<den>\d+)\s*)?$""",
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Constraint:
    fact: Fact
    agent: str
    action: str
    threshold: Fraction

    def check(self, tree: PpsTree) -> AnalysisReport:
        return check_constraint(tree, self.fact, self.agent, self.action, self.threshold)

    def __str__(self):
        a = f"{self.agent}.{self.action}"
        t = self.threshold
        return f"mu({render(self.fact)} @ {a} | R({a})) >= {t.numerator}/{t.denominator}"


def parse_constraint(text: str) -> Constraint:
    """Parse ``mu( FACT @ AGENT.ACTION | R(AGENT.ACTION) ) >= NUM/DEN``."""
    m = _CONSTRAINT.match(text)
    if not m:
        raise FactSyntaxError(
            "expected mu( FACT @ AGENT.ACTION | R(AGENT.ACTION) ) >= NUM/DEN", 0
        )
    if (m["agent"], m["action"]) != (m["agent2"], m["action2"]):
        raise FactSyntaxError("the action after @ and inside R(...) must be the same", m.start("agent2"))
    den = int(m["den"] or 1)
    if den == 0:
        raise FactSyntaxError("zero denominator in threshold", m.start("den"))
    return Constraint(parse_fact(m["fact"]), m["agent"], m["action"], Fraction(int(m["num"]), den))


__all__ = [
    "AnalysisReport",
    "Constraint",
    "Properness",
    "Verdict",
    "check_constraint",
    "check_local_state_independence",
    "is_deterministic_action",
    "is_past_based",
    "is_proper",
    "acting_belief_gaps",
    "parse_constraint",
    "verify_expectation",
    "verify_pak",
    "verify_sometimes",
    "verify_sufficiency",
]
