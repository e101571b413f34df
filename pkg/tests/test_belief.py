from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from pakcheck import (
    FALSE,
    TRUE,
    ImproperActionError,
    RandomPpsParams,
    belief_at,
    belief_profile,
    expected_belief,
    random_facts,
    random_pps,
    success_probability,
    threshold_measure,
)
from pakcheck.belief import expected_belief_grouped, state_belief
from pakcheck.facts import And, Not, Or, TimeEq, truth_table
from pakcheck.suite import proper_actions

import oracle
from helpers import BOTH, alice_states

SEEDS = st.integers(0, 2**64 - 1)
SMALL = dict(max_depth=3, max_branching=2, num_agents=2, actions_per_agent=2)
PROPS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def small_tree(seed):
    return random_pps(RandomPpsParams(seed=seed, **SMALL))


def test_fs_beliefs_at_points(fs):
    states = alice_states(fs)
    for reply, want in (("none", Fraction(99, 100)), ("NO", Fraction(0)), ("YES", Fraction(1))):
        ls = states[reply]
        run = next(r for r in fs.runs if r(2).local("A") == ls)
        assert belief_at(fs, "A", "performs(B, fireB)", run, 2) == want
    assert belief_at(fs, "A", TRUE, fs.runs[0], 0) == 1


def test_profiles(fs, fig1, cx):
    prof = belief_profile(fig1, "i", "not performs(i, alpha)", "alpha")
    r, r2 = fig1.runs
    assert prof.by_run == {r: Fraction(1, 2), r2: Fraction(0)}
    prof = belief_profile(cx, "i", "var(j, bit) == 1", "alpha")
    assert sorted(prof.by_run.values()) == [Fraction(89, 99), Fraction(89, 99), Fraction(1)]
    prof = belief_profile(fs, "A", "performs(B, fireB)", "fireA")
    assert set(prof.by_state.values()) == {Fraction(1), Fraction(99, 100), Fraction(0)}
    assert prof.support == frozenset(prof.by_state)


def test_non_acting_runs_have_zero_belief(fs):
    prof = belief_profile(fs, "A", TRUE, "fireA")
    for run, b in prof.by_run.items():
        if run(0).local("A").get("go") == 0:
            assert b == 0
        else:
            assert b == 1


def test_success_and_expectation(fs, refrain, fig1, cx):
    assert success_probability(fs, TRUE, "A", "fireA") == 1
    assert success_probability(fs, BOTH, "A", "fireA") == Fraction(99, 100)
    assert success_probability(refrain, BOTH, "A", "fireA") == Fraction(990, 991)
    assert expected_belief(fs, "A", TRUE, "fireA") == 1
    assert expected_belief(fig1, "i", "performs(i, alpha)", "alpha") == Fraction(1, 2)
    assert success_probability(fig1, "performs(i, alpha)", "i", "alpha") == 1
    assert expected_belief(fs, "A", "performs(B, fireB)", "fireA") == Fraction(99, 100)
    cx_exp = Fraction(99, 100) * Fraction(89, 99) + Fraction(1, 100) * 1
    assert cx_exp == Fraction(9, 10)
    assert expected_belief(cx, "i", "var(j, bit) == 1", "alpha") == cx_exp


def test_threshold(fs, cx):
    assert threshold_measure(fs, "A", "performs(B, fireB)", "fireA", 0) == 1
    assert threshold_measure(fs, "A", "performs(B, fireB)", "fireA", Fraction(19, 20)) == Fraction(991, 1000)
    assert threshold_measure(cx, "i", "var(j, bit) == 1", "alpha", Fraction(9, 10)) == Fraction(1, 100)


def test_improper_action(fig1):
    with pytest.raises(ImproperActionError, match="action must be proper"):
        belief_profile(fig1, "i", TRUE, "skip")


def test_builtins_match_oracle(fs, refrain, fig1, cx):
    cases = [
        (fs, "performs(B, fireB)", "A", "fireA"),
        (fs, BOTH, "A", "fireA"),
        (refrain, BOTH, "A", "fireA"),
        (fig1, "not performs(i, alpha)", "i", "alpha"),
        (fig1, "performs(i, alpha)", "i", "alpha"),
        (cx, "var(j, bit) == 1", "i", "alpha"),
    ]
    for tree, fact, agent, action in cases:
        assert success_probability(tree, fact, agent, action) == oracle.success(tree, fact, agent, action)
        assert expected_belief(tree, agent, fact, action) == oracle.expected(tree, fact, agent, action)
        for p in (Fraction(1, 2), Fraction(9, 10), Fraction(19, 20)):
            assert threshold_measure(tree, agent, fact, action, p) == oracle.threshold(tree, fact, agent, action, p)


@given(SEEDS)
@PROPS
def test_random_trees_match_oracle(seed):
    tree = small_tree(seed)
    facts = random_facts(tree, seed, 4)
    for agent, action in proper_actions(tree)[:4]:
        for fact in facts:
            assert success_probability(tree, fact, agent, action) == oracle.success(tree, fact, agent, action)
            assert expected_belief(tree, agent, fact, action) == oracle.expected(tree, fact, agent, action)


@given(SEEDS)
@PROPS
def test_constant_beliefs(seed):
    tree = small_tree(seed)
    for agent in tree.agents:
        for ls in tree.local_states(agent):
            assert state_belief(tree, TRUE, ls) == 1
            assert state_belief(tree, FALSE, ls) == 0


@given(SEEDS)
@PROPS
def test_additivity_for_disjoint_facts(seed):
    tree = small_tree(seed)
    phi, chi = random_facts(tree, seed, 2)
    # make the pair disjoint at every point
    chi = And((chi, Not(phi)))
    for agent in tree.agents:
        for ls in tree.local_states(agent):
            both = state_belief(tree, Or((phi, chi)), ls)
            assert both == state_belief(tree, phi, ls) + state_belief(tree, chi, ls)
            assert 0 <= both <= 1


@given(SEEDS)
@PROPS
def test_grouped_expectation_and_monotone_threshold(seed):
    tree = small_tree(seed)
    grid = [Fraction(k, 12) for k in range(13)]
    for fact in random_facts(tree, seed, 4):
        for agent, action in proper_actions(tree):
            assert expected_belief(tree, agent, fact, action) == expected_belief_grouped(tree, agent, fact, action)
            values = [threshold_measure(tree, agent, fact, action, p) for p in grid]
            assert values == sorted(values, reverse=True)
            prof = belief_profile(tree, agent, fact, action)
            for b in prof.by_run.values():
                assert 0 <= b <= 1


@given(SEEDS, st.integers(0, 3))
@PROPS
def test_time_facts_are_known(seed, t):
    # an agent's clock is part of its local state
    tree = small_tree(seed)
    table = truth_table(tree, TimeEq(t))
    for agent in tree.agents:
        for ls in tree.local_states(agent):
            assert state_belief(tree, TimeEq(t), ls) == (1 if ls.time == t else 0)
    assert all(m == (tree.all_mask if k == t else 0) for k, m in enumerate(table))
