"""
Removing additive parameters
============================

When parameters only appear as additive constants, an automaton with one
extra level per parameter simulates every valuation at once.  Compare the
reduction with the region procedure on a few random models.
"""

import time

from itava import existential_reach, print_model, reduce_additive
from itava.analysis import additive_reach, prepare
from itava.generators import random_additive
from itava.smt import resolve_solver_path

solver = resolve_solver_path()

a = random_additive(3, levels=2, params=1, max_states=3, max_transitions=3, max_const=1)
print(print_model(a))
b = reduce_additive(prepare(a))
print(f"reduced: {len(b.states)} states, {len(b.transitions)} transitions, "
      f"{len(b.clocks)} clocks, {b.levels} levels, params {list(b.params)}\n")

for seed in range(8):
    a = random_additive(seed, levels=2, params=2, max_states=4, max_transitions=4, max_const=1)
    t0 = time.perf_counter()
    v1 = additive_reach(a)
    t1 = time.perf_counter()
    v2 = existential_reach(a, solver=solver)
    t2 = time.perf_counter()
    print(f"seed {seed}: reduction {v1.answer:3s} ({t1 - t0:.2f} s)  regions {v2.answer:3s} ({t2 - t1:.2f} s)")
