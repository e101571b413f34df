"""Exercise every implication over seeded random systems and print the tally.

Run: python3 demos/random_suite.py [cases]
"""
import sys
import time

from pakcheck.suite import run_suite

cases = int(sys.argv[1]) if len(sys.argv) > 1 else 50
start = time.perf_counter()
res = run_suite(range(1, cases + 1))
print(f"{res.trees} trees in {time.perf_counter() - start:.1f}s")
for name in sorted(res.checked):
    print(f"  {name:28} {res.checked[name]:7} checked {res.violations[name]:3} violations")
print("ok" if res.ok else "\n".join(res.examples))
