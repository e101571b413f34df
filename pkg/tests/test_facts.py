from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pakcheck import (
    TRUE,
    FactSyntaxError,
    ImproperActionError,
    UnknownIdentifierError,
    at_action,
    at_state,
    bind,
    holds_at,
    is_past_based,
    is_run_fact,
    measure,
    occurs,
    parse_fact,
    performed,
    render,
    runs_satisfying,
)
from pakcheck.facts import (
    And,
    EnvVarEq,
    Ever,
    Implies,
    Not,
    Or,
    Performs,
    TimeEq,
    VarEq,
    properness,
)
from pakcheck.model import NotAPointError

from helpers import alice_states

IDS = st.sampled_from(["A", "B", "i", "fireA", "x_1", "m_prime", "go", "alpha'"])
LITS = st.one_of(st.integers(-5, 5), st.booleans(), st.sampled_from(["YES", "none", "m"]))
ATOMS = st.one_of(
    st.builds(Performs, IDS, IDS),
    st.builds(VarEq, IDS, IDS, LITS),
    st.builds(EnvVarEq, IDS, LITS),
    st.builds(TimeEq, st.integers(0, 4)),
    st.just(TRUE),
)
FACTS = st.recursive(
    ATOMS,
    lambda sub: st.one_of(
        st.builds(Not, sub),
        st.builds(lambda xs: And(tuple(xs)), st.lists(sub, min_size=2, max_size=3)),
        st.builds(lambda xs: Or(tuple(xs)), st.lists(sub, min_size=2, max_size=3)),
        st.builds(Implies, sub, sub),
        st.builds(Ever, sub),
    ),
    max_leaves=8,
)


@given(FACTS)
@settings(max_examples=300)
def test_render_parse_round_trip(f):
    assert parse_fact(render(f)) == f


def test_parse_examples():
    assert parse_fact("performs(A, fireA)") == Performs("A", "fireA")
    assert parse_fact("var(j, bit) == 1") == VarEq("j", "bit", 1)
    assert parse_fact("performs(A, fireA) and performs(B, fireB)") == And(
        (Performs("A", "fireA"), Performs("B", "fireB"))
    )


def test_precedence():
    f = parse_fact("not time == 1 and time == 2 or true implies false")
    assert isinstance(f, Implies)
    assert isinstance(f.lhs, Or)
    assert isinstance(f.lhs.args[0], And)
    assert isinstance(f.lhs.args[0].args[0], Not)


@pytest.mark.parametrize(
    "text, pos",
    [("performs(A fireA)", 11), ("time == ", 8), ("var(A, go) = 1", 11), ("a implies b implies c", None)],
)
def test_syntax_errors_carry_position(text, pos):
    with pytest.raises(FactSyntaxError) as exc:
        parse_fact(text)
    if pos is not None:
        assert exc.value.pos == pos


def test_bind_checks_identifiers(fs):
    bind(fs, "var(A, go) == 1")
    with pytest.raises(UnknownIdentifierError):
        bind(fs, "performs(A, fireB)")
    with pytest.raises(UnknownIdentifierError):
        bind(fs, "var(C, go) == 1")
    with pytest.raises(UnknownIdentifierError):
        bind(fs, "envvar(nothing) == 1")
    with pytest.raises(ValueError, match="nested"):
        bind(fs, "ever(ever(true))")


def _fs_bad_run(fs):
    return next(
        r for r in fs.runs
        if r(3).local("A").get("go") == 1 and r(3).local("A").get("reply") == "NO"
    )


def test_holds_at(fs):
    r = _fs_bad_run(fs)
    assert holds_at(fs, TRUE, r, 0)
    assert holds_at(fs, "performs(A, fireA)", r, 2)
    assert not holds_at(fs, "performs(B, fireB)", r, 2)
    assert not holds_at(fs, "performs(A, fireA)", r, 3)
    with pytest.raises(NotAPointError, match="not a point of T"):
        holds_at(fs, TRUE, r, 9)


def test_runs_satisfying(fs, fig1):
    assert runs_satisfying(fs, "ever(true)") == frozenset(fs.runs)
    go = frozenset(r for r in fs.runs if r(0).local("A").get("go") == 1)
    assert runs_satisfying(fs, "ever(performs(A, fireA))") == go
    assert runs_satisfying(fig1, "ever(performs(i, alpha))") == frozenset([fig1.runs[0]])
    with pytest.raises(ValueError):
        runs_satisfying(fs, "performs(A, fireA)")


def test_at_action(fs, fig1):
    assert at_action(fs, TRUE, "A", "fireA").runs == performed(fs, "A", "fireA").runs
    got = at_action(fs, "performs(B, fireB)", "A", "fireA").runs
    want = frozenset(
        r for r in fs.runs
        if r(0).local("A").get("go") == 1 and r(3).local("B").get("count") >= 1
    )
    assert got == want
    assert at_action(fig1, "not performs(i, alpha)", "i", "alpha").runs == frozenset()


def test_improper_action_rejected():
    from pakcheck import GlobalState, LocalState, TreeBuilder

    b = TreeBuilder(["i"], {"i": ["a"]})
    s0 = b.add(b.root, 1, GlobalState({}, (), (LocalState("i", 0),)))
    s1 = b.add(s0, 1, GlobalState({}, ((0, "i", "a"),), (LocalState("i", 1),)))
    b.add(s1, 1, GlobalState({}, ((0, "i", "a"), (1, "i", "a")), (LocalState("i", 2),)))
    tree = b.build()
    ok, witness = properness(tree, "i", "a")
    assert not ok and witness == tree.runs[0]
    with pytest.raises(ImproperActionError, match="φ@α requires a proper action"):
        at_action(tree, TRUE, "i", "a")


def test_at_state(fs, cx):
    none = alice_states(fs)["none"]
    assert at_state(fs, TRUE, none).runs == occurs(fs, none).runs
    assert measure(fs, occurs(fs, none).runs) == Fraction(1, 10) * Fraction(1, 2)
    fire_b = at_state(fs, "performs(B, fireB)", none).runs
    assert measure(fs, fire_b) == Fraction(99, 1000) * Fraction(1, 2)
    merged = next(ls for ls in cx.local_states("i") if ls.get("got") == "m" and ls.time == 1)
    bit = at_state(cx, "var(j, bit) == 1", merged).runs
    assert len(bit) == 1
    [r] = bit
    assert r(1).local("i").get("got") == "m" and r(0).local("j").get("bit") == 1


def test_run_fact_and_past_based(fs, fig1):
    assert is_run_fact(fs, "ever(performs(B, fireB))")
    assert is_run_fact(fs, "var(A, go) == 1")
    assert not is_run_fact(fs, "performs(A, fireA)")
    assert is_past_based(fs, "var(A, go) == 1")
    for ls in fs.local_states("B"):
        assert is_past_based(fs, f"var(B, count) == {ls.get('count')}")
    assert not is_past_based(fig1, "performs(i, alpha)")
    assert is_past_based(fig1, "time == 0")
