"""
Existential versus robust reachability
======================================

In pinned.pita the target can only be reached when p1 = 1 exactly.  Some
valuation works, but no open set of valuations does.
"""

from pathlib import Path

from itava import load_model, reach
from itava.smt import resolve_solver_path

MODELS = Path(__file__).resolve().parent.parent / "models"
solver = resolve_solver_path()


def show(pi):
    return ", ".join(f"{k} = {x}" for k, x in pi.items()) if pi else "-"


for name in ("pinned.pita", "a2.pita"):
    a = load_model(MODELS / name)
    print(f"== {a.name}")
    for mode in ("exist", "robust", "forall"):
        v = reach(a, mode, solver=solver)
        print(f"  {mode:7s} {v.answer:8s} {show(v.witness_valuation)}")
    v = reach(a, "robust", solver=solver)
    if v.witness_region:
        print("  robust witness region (strict atoms only):")
        for line in v.witness_region:
            print("   ", line)
