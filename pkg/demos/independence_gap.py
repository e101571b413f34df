"""A mixed action at a single local state breaks the link between belief
and success: high belief, zero success, and the checker says why.

Run: python3 demos/independence_gap.py
"""
from fractions import Fraction

from pakcheck import (
    belief_profile,
    builtin_fig1,
    check_local_state_independence,
    expected_belief,
    success_probability,
    verify_sufficiency,
)
from pakcheck.report import describe_state

tree = builtin_fig1()
psi, phi = "not performs(i, alpha)", "performs(i, alpha)"

print("min belief in psi when acting:", belief_profile(tree, "i", psi, "alpha").min_belief())
print("success of psi:", success_probability(tree, psi, "i", "alpha"))
print("success of phi:", success_probability(tree, phi, "i", "alpha"),
      "expected belief:", expected_belief(tree, "i", phi, "alpha"))

ind = check_local_state_independence(tree, psi, "i", "alpha")
w = ind.witnesses[0]
print(f"independence {ind.verdict.value} at {describe_state(w['local_state'])}: lhs {w['lhs']} vs rhs {w['rhs']}")

rep = verify_sufficiency(tree, psi, "i", "alpha", Fraction(1, 2))
print("sufficiency:", rep.verdict.value, {k: str(v) for k, v in rep.values.items()})
