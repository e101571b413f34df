"""Two generals, lossy messages, and how confident Alice is when she fires.

Run: python3 demos/firing_squad.py
"""
from fractions import Fraction

from pakcheck import (
    belief_profile,
    build_tree,
    builtin_fs,
    builtin_fs_refrain,
    check_constraint,
    success_probability,
    threshold_measure,
)
from pakcheck.report import describe_state

BOTH = "performs(A, fireA) and performs(B, fireB)"

tree = build_tree(builtin_fs())
print(f"{len(tree.runs)} runs")

rep = check_constraint(tree, BOTH, "A", "fireA", Fraction(19, 20))
print("P(both fire | Alice fires) =", rep.values["value"], "->", rep.verdict.value)

prof = belief_profile(tree, "A", "performs(B, fireB)", "fireA")
for ls, b in sorted(prof.by_state.items(), key=lambda kv: kv[1]):
    print(f"  Alice at {describe_state(ls)} believes Bob fires with {b}")

print("measure of confident firing runs:", threshold_measure(tree, "A", "performs(B, fireB)", "fireA", Fraction(19, 20)))

# Alice holds back when she knows Bob will not fire.
refrain = build_tree(builtin_fs_refrain())
print("with refraining:", success_probability(refrain, BOTH, "A", "fireA"))
