"""Success p, yet only an eps-fraction of acting runs is confident at p.

Run: python3 demos/no_lower_bound.py
"""
from fractions import Fraction

from pakcheck import belief_profile, build_counterexample, expected_belief, success_probability, threshold_measure

FACT = "var(j, bit) == 1"

for p, eps in [(Fraction(9, 10), Fraction(1, 100)), (Fraction(99, 100), Fraction(1, 1000))]:
    tree = build_counterexample(p, eps)
    beliefs = sorted(set(belief_profile(tree, "i", FACT, "alpha").by_state.values()))
    print(f"p={p} eps={eps}")
    print("  success      ", success_probability(tree, FACT, "i", "alpha"))
    print("  beliefs      ", ", ".join(map(str, beliefs)))
    print("  expected     ", expected_belief(tree, "i", FACT, "alpha"))
    print("  mu(belief>=p)", threshold_measure(tree, "i", FACT, "alpha", p))
