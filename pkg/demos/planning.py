"""
Planning as single-level reachability
=====================================

A rule turns some propositions on and others off when its preconditions
hold.  The compiled automaton reaches q1 exactly when all propositions can
be made true; a breadth-first search over truth assignments agrees.
"""

from itava.analysis import compile_planning, existential_reach, plan_exists
from itava.generators import random_planning

for seed in range(10):
    n, rules = random_planning(seed, max_props=4, max_rules=5)
    a, target = compile_planning(n, rules)
    v = existential_reach(a, [target])
    print(f"seed {seed}: {n} props, {len(rules)} rules, "
          f"automaton {v.answer:3s} bfs {'Yes' if plan_exists(n, rules) else 'No'}")
