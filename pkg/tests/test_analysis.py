from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from pakcheck import (
    TRUE,
    GlobalState,
    LocalState,
    RandomPpsParams,
    TreeBuilder,
    Verdict,
    check_constraint,
    check_local_state_independence,
    is_deterministic_action,
    is_proper,
    parse_constraint,
    random_facts,
    random_pps,
    success_probability,
    verify_expectation,
    verify_pak,
    verify_sometimes,
    verify_sufficiency,
)
from pakcheck.analysis import AnalysisReport, acting_belief_gaps
from pakcheck.facts import FactSyntaxError, UnknownIdentifierError, is_past_based
from pakcheck.suite import proper_actions

import oracle
from helpers import BOTH

FIRE_B = "performs(B, fireB)"
BIT = "var(j, bit) == 1"


def repeat_tree():
    b = TreeBuilder(["i"], {"i": ["a"]})
    s0 = b.add(b.root, 1, GlobalState({}, (), (LocalState("i", 0),)))
    s1 = b.add(s0, 1, GlobalState({}, ((0, "i", "a"),), (LocalState("i", 1),)))
    b.add(s1, 1, GlobalState({}, ((0, "i", "a"), (1, "i", "a")), (LocalState("i", 2),)))
    return b.build()


def test_is_proper(fs, fig1):
    assert is_proper(fs, "A", "fireA")
    tree = repeat_tree()
    res = is_proper(tree, "i", "a")
    assert not res and res.witness == tree.runs[0]
    never = TreeBuilder(["i"], {"i": ["a"]})
    never.add(never.root, 1, GlobalState({}, (), (LocalState("i", 0),)))
    res = is_proper(never.build(), "i", "a")
    assert not res and res.witness is None
    with pytest.raises(UnknownIdentifierError):
        is_proper(fig1, "i", "beta")


def test_is_deterministic(fs, fig1, cx):
    assert is_deterministic_action(fs, "A", "fireA")
    assert not is_deterministic_action(fig1, "i", "alpha")
    assert is_deterministic_action(cx, "i", "alpha")


def test_independence_fig1(fig1):
    rep = check_local_state_independence(fig1, "not performs(i, alpha)", "i", "alpha")
    assert rep.verdict is Verdict.FAILS
    w = rep.witnesses[0]
    assert w["local_state"] == LocalState("i", 0)
    assert (w["lhs"], w["rhs"]) == (Fraction(1, 4), Fraction(0))


def test_independence_fs(fs):
    assert check_local_state_independence(fs, FIRE_B, "A", "fireA").holds


def test_check_constraint(fs, refrain):
    rep = check_constraint(fs, BOTH, "A", "fireA", Fraction(19, 20))
    assert rep.holds and rep.values["value"] == Fraction(99, 100)
    rep = check_constraint(fs, BOTH, "A", "fireA", Fraction(999, 1000))
    assert rep.verdict is Verdict.FAILS and rep.values["value"] == Fraction(99, 100)
    assert rep.witnesses
    assert check_constraint(refrain, BOTH, "A", "fireA", Fraction(999, 1000)).verdict is Verdict.FAILS
    assert check_constraint(refrain, BOTH, "A", "fireA", Fraction(499, 500)).holds


def test_sufficiency(fs, fig1, cx):
    assert verify_sufficiency(fs, FIRE_B, "A", "fireA", 0).holds
    rep = verify_sufficiency(cx, BIT, "i", "alpha", Fraction(89, 99))
    assert rep.holds
    assert rep.values["min_belief"] == Fraction(89, 99)
    assert rep.values["success"] == Fraction(9, 10)
    rep = verify_sufficiency(fig1, "not performs(i, alpha)", "i", "alpha", Fraction(1, 2))
    assert rep.verdict is Verdict.NOT_APPLICABLE
    assert rep.values["min_belief"] == Fraction(1, 2) and rep.values["success"] == 0


def test_expectation(fs, fig1, cx):
    rep = verify_expectation(fs, FIRE_B, "A", "fireA")
    assert rep.holds and rep.values["lhs"] == rep.values["rhs"] == Fraction(99, 100)
    rep = verify_expectation(fig1, "performs(i, alpha)", "i", "alpha")
    assert rep.verdict is Verdict.NOT_APPLICABLE
    assert (rep.values["lhs"], rep.values["rhs"], rep.values["gap"]) == (1, Fraction(1, 2), Fraction(1, 2))
    rep = verify_expectation(cx, BIT, "i", "alpha")
    assert rep.holds and rep.values["lhs"] == rep.values["rhs"] == Fraction(9, 10)


def test_sometimes(fs, cx):
    rep = verify_sometimes(fs, FIRE_B, "A", "fireA", Fraction(19, 20))
    assert rep.holds and rep.witnesses[0]["belief"] >= Fraction(19, 20)
    rep = verify_sometimes(cx, BIT, "i", "alpha", Fraction(9, 10))
    w = rep.witnesses[0]
    assert rep.holds and w["belief"] == 1
    assert w["run"](1).local("i").get("got") == "m_prime"
    rep = verify_sometimes(fs, FIRE_B, "A", "fireA", 0)
    assert rep.holds and rep.witnesses[0]["time"] == 2


def test_sometimes_not_applicable(fs, fig1):
    assert verify_sometimes(fs, FIRE_B, "A", "fireA", 1).verdict is Verdict.NOT_APPLICABLE
    assert verify_sometimes(fig1, "performs(i, alpha)", "i", "alpha", 0).verdict is Verdict.NOT_APPLICABLE


def test_pak(fs, cx):
    rep = verify_pak(fs, FIRE_B, "A", "fireA", Fraction(1, 10), Fraction(1, 10))
    assert rep.holds
    assert rep.values["premise_bound"] == rep.values["success"] == Fraction(99, 100)
    assert rep.values["measure"] == Fraction(991, 1000)
    rep = verify_pak(fs, TRUE, "A", "fireA", 0, 0)
    assert rep.holds and rep.values["measure"] == 1
    rep = verify_pak(cx, BIT, "i", "alpha", 1, 1)
    assert rep.holds and rep.values["premise_bound"] == 0
    rep = verify_pak(cx, BIT, "i", "alpha", Fraction(1, 10), Fraction(1, 10))
    assert rep.verdict is Verdict.NOT_APPLICABLE


@pytest.mark.parametrize("d, e", [(-1, 0), (0, 2), (Fraction(3, 2), Fraction(1, 2))])
def test_pak_domain(fs, d, e):
    with pytest.raises(ValueError):
        verify_pak(fs, TRUE, "A", "fireA", d, e)


def test_failing_report_needs_witness():
    with pytest.raises(ValueError):
        AnalysisReport("x", Verdict.FAILS)


def test_constraint_text(fs):
    c = parse_constraint(" mu ( performs(A,fireA) and performs(B,fireB) @ A . fireA | R( A.fireA ) ) >= 19 / 20 ")
    assert c.agent == "A" and c.action == "fireA" and c.threshold == Fraction(19, 20)
    assert parse_constraint(str(c)) == c
    assert c.check(fs).holds
    with pytest.raises(FactSyntaxError):
        parse_constraint("mu(true @ A.fireA | R(B.fireB)) >= 1/2")
    with pytest.raises(FactSyntaxError):
        parse_constraint("mu(true @ A.fireA | R(A.fireA)) > 1/2")


SEEDS = st.integers(0, 2**64 - 1)
PROPS = settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@given(SEEDS)
@PROPS
def test_independence_matches_oracle_and_acting_beliefs(seed):
    tree = random_pps(RandomPpsParams(seed=seed, max_depth=3, max_branching=2, num_agents=2))
    for fact in random_facts(tree, seed, 4):
        pb = is_past_based(tree, fact)
        for agent, action in proper_actions(tree):
            rep = check_local_state_independence(tree, fact, agent, action)
            assert rep.holds == oracle.independent(tree, fact, agent, action)
            if pb or is_deterministic_action(tree, agent, action):
                assert rep.holds
            if rep.holds:
                assert not acting_belief_gaps(tree, fact, agent, action)
                assert verify_expectation(tree, fact, agent, action).holds


@given(SEEDS, st.fractions(0, 1, max_denominator=20), st.fractions(0, 1, max_denominator=20))
@PROPS
def test_implications_never_fail(seed, a, b):
    tree = random_pps(RandomPpsParams(seed=seed, max_depth=3))
    for fact in random_facts(tree, seed, 3):
        for agent, action in proper_actions(tree):
            for rep in (
                verify_sufficiency(tree, fact, agent, action, a),
                verify_sometimes(tree, fact, agent, action, a),
                verify_pak(tree, fact, agent, action, a, b),
            ):
                assert rep.verdict is not Verdict.FAILS


def test_independence_failure_is_detected_on_mixed_trees():
    # at least some random trees exhibit the mixed-step phenomenon
    found = 0
    for seed in range(1, 40):
        tree = random_pps(RandomPpsParams(seed=seed, max_depth=3, max_branching=3))
        for fact in random_facts(tree, seed, 6):
            for agent, action in proper_actions(tree):
                if not check_local_state_independence(tree, fact, agent, action).holds:
                    found += 1
                    assert success_probability(tree, fact, agent, action) == oracle.success(tree, fact, agent, action)
    assert found > 0
