"""
A two-level parametric automaton, step by step
==============================================

Load A2, run it concretely at p1 = 5, p2 = -1, saturate the expression
sets, pick the parameter region of that valuation and build its class
automaton.  Run from the repository root: ``python demos/a2_walkthrough.py``.
"""

from fractions import Fraction
from pathlib import Path

from itava import build, load_model, path_feasible, reach, region_of, saturate
from itava.classgraph import TIME, class_text
from itava.semantics import Delay, Fire, format_trace, run
from itava.smt import resolve_solver_path

MODELS = Path(__file__).resolve().parent.parent / "models"
a = load_model(MODELS / "a2.pita")
pi = {"p1": Fraction(5), "p2": Fraction(-1)}

# a concrete run: wait 4 in q1, interrupt, wait 2 at level 2, fire b
actions = [Delay(Fraction(4)), Fire(0), Delay(Fraction(2)), Fire(1)]
configs = run(a, actions, pi)
print(format_trace(a, configs, actions))

# expression sets; E_k holds the clock expressions compared at level k
es = saturate(a)
print("\nPolPar:", ", ".join(str(p) for p in es.polpar))
for k, exprs in sorted(es.exprs.items()):
    print(f"E{k} ({len(exprs)}):", ", ".join(str(e) for e in exprs))

# the region of pi fixes the sign of every PolPar member and the order of
# the parameter constants at level 1
region = region_of(pi, es)
ca = build(a, region, es)
print(f"\nclass automaton: {len(ca.classes)} classes, {len(ca.edges)} edges")

# follow time successors from the initial class
i, seen = ca.initial, []
succ = {s: d for s, lab, d in ca.edges if lab == TIME}
while i not in seen:
    seen.append(i)
    i = succ[i]
print("time chain from the initial class:", " -> ".join(f"c{j}" for j in seen))
print("last class of the chain:")
print(class_text(ca.classes[seen[-1]], es))

# existential reachability of q2 over all valuations (needs an SMT solver
# for Unknown-free answers; the sampling back end is used otherwise)
v = reach(a, "exist", ["q2"], solver=resolve_solver_path())
print("\nexists pi reaching q2:", v.answer, "at", {k: str(x) for k, x in v.witness_valuation.items()})
print("witness path:", v.witness_path)
print("concretely feasible:", path_feasible(a, v.abstract_path, v.witness_valuation).feasible)
