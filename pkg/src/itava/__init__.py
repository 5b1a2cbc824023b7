"""Reachability analysis for interrupt timed automata and their parametric variant."""

from .analysis import (Verdict, compile_planning, existential_reach, reach, reduce_additive,
                       robust_reach, universal_reach)
from .classgraph import build
from .exprsets import check_bounds, saturate
from .frontend import load_model, parse_model, parse_scope, parse_valuation, print_model
from .model import Automaton
from .regions import enumerate_regions, region_of
from .semantics import path_feasible, simulate_random

__all__ = [
    "Automaton", "Verdict", "build", "check_bounds", "compile_planning", "enumerate_regions",
    "existential_reach", "load_model", "parse_model", "parse_scope", "parse_valuation",
    "path_feasible", "print_model", "reach", "reduce_additive", "region_of", "robust_reach",
    "saturate", "simulate_random", "universal_reach",
]
