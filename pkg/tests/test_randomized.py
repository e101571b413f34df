import pytest
from hypothesis import given, settings, strategies as st

from pakcheck import RandomPpsParams, is_proper, measure, random_facts, random_pps, validate_tree
from pakcheck.analysis import is_deterministic_action


@given(
    st.integers(0, 2**64 - 1),
    st.integers(1, 4),
    st.integers(2, 3),
    st.integers(1, 3),
    st.integers(1, 3),
)
@settings(max_examples=60, deadline=None)
def test_generated_trees_are_valid_and_deterministic(seed, depth, branching, agents, acts):
    params = RandomPpsParams(seed, depth, branching, agents, acts)
    tree = random_pps(params)
    assert validate_tree(tree).ok
    assert measure(tree, tree.runs) == 1
    assert random_pps(params) == tree
    assert random_facts(tree, seed) == random_facts(random_pps(params), seed)
    for a in tree.agents:
        for x in tree.alphabet(a):
            assert is_proper(tree, a, x)
        for ls in tree.local_states(a):
            assert ls.time <= depth
    # edges multiply one draw per participant, each over a denominator <= 12
    for n in tree.nodes:
        if n.prob is not None:
            d = n.prob.denominator
            for q in (2, 3, 5, 7, 11):
                while d % q == 0:
                    d //= q
            assert d == 1


def test_seed_one_twice():
    p = RandomPpsParams(seed=1, max_depth=4, max_branching=3, num_agents=3)
    assert random_pps(p) == random_pps(p)


def test_indistinguishable_histories_occur():
    hits = 0
    for seed in range(1, 30):
        tree = random_pps(RandomPpsParams(seed=seed, max_depth=3))
        for agent in tree.agents:
            for ls, mask in tree.local_states(agent).items():
                nodes = [v for v in tree.nodes_at(ls.time) if tree.by_id[v].state.local(agent) == ls]
                hits += len(nodes) > 1
    assert hits > 0


def test_both_deterministic_and_mixed_actions_occur():
    det = mixed = 0
    for seed in range(1, 30):
        tree = random_pps(RandomPpsParams(seed=seed, max_depth=3))
        for a in tree.agents:
            for x in tree.alphabet(a):
                if is_deterministic_action(tree, a, x):
                    det += 1
                else:
                    mixed += 1
    assert det and mixed


@pytest.mark.parametrize(
    "kw",
    [
        dict(seed=-1),
        dict(seed=2**64),
        dict(seed=0, max_depth=5),
        dict(seed=0, max_branching=4),
        dict(seed=0, num_agents=0),
        dict(seed=0, actions_per_agent=4),
    ],
)
def test_params_bounds(kw):
    with pytest.raises(ValueError):
        RandomPpsParams(**kw)
