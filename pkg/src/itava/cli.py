"""Command-line entry point: ``itava <command> MODEL [options]``."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .analysis import AnalysisError, reach
from .classgraph import DEFAULT_CLASS_CAP, ClassGraphError, build, dump_classes, export_dot
from .exprsets import SaturationError, check_bounds, saturate
from .frontend import ModelError, ParseError, parse_document, parse_model, parse_scope, parse_valuation
from .model import desugar_policies, validate
from .regions import EnumerationLog, enumerate_regions, region_constraints, region_of
from .semantics import SemanticsError, simulate_random
from .smt import Oracle, SolverError, resolve_solver_path

EXIT_USAGE = 64
EXIT_ERROR = 3


class UsageError(Exception):
    pass


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _parser() -> argparse.ArgumentParser:
    common = _ArgParser(add_help=False)
    common.add_argument("--solver", metavar="PATH", help="SMT solver binary (overrides ITAVA_SMT_SOLVER)")
    common.add_argument("--cap", type=int, metavar="N", help="bound on |E_k| and on the class count")
    common.add_argument("--json", metavar="OUT", help="write a JSON result document")
    common.add_argument("--seed", type=int, default=0, metavar="S")

    p = _ArgParser(prog="itava", description="Reachability analysis for (parametric) interrupt timed automata.")
    sub = p.add_subparsers(dest="command", parser_class=_ArgParser)

    c = sub.add_parser("check", parents=[common], help="parse and validate a model")
    c.add_argument("model")

    r = sub.add_parser("reach", parents=[common], help="decide reachability of target states")
    r.add_argument("model")
    r.add_argument("--mode", choices=("exist", "forall", "robust"), default="exist")
    r.add_argument("--scope", metavar="FILE", help="constraint on the parameters")
    r.add_argument("--target", metavar="Q,...", help="target states (default: the final states)")

    g = sub.add_parser("graph", parents=[common], help="build the class automaton of one region")
    g.add_argument("model")
    g.add_argument("--region", type=int, metavar="INDEX", help="region index in enumeration order")
    g.add_argument("--pi", metavar="FILE", help="use the region containing this valuation")
    g.add_argument("--dot", metavar="OUT", help="write the graph in DOT format")
    g.add_argument("--dump-classes", action="store_true", help="print every class and edge")

    s = sub.add_parser("simulate", parents=[common], help="random run with exact rationals")
    s.add_argument("model")
    s.add_argument("--pi", metavar="FILE", help="parameter valuation")
    s.add_argument("--steps", type=int, default=20, metavar="N")

    e = sub.add_parser("exprsets", parents=[common], help="print PolPar and the sets E_k")
    e.add_argument("model")
    e.add_argument("--bounds", action="store_true", help="also check the size, bit and degree bounds")

    rg = sub.add_parser("regions", parents=[common], help="list nonempty parameter regions")
    rg.add_argument("model")
    rg.add_argument("--open", action="store_true", help="only regions defined by strict inequalities")
    rg.add_argument("--scope", metavar="FILE")
    return p


def _read(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def _write_json(path: Optional[str], doc) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _load(path: str):
    return parse_model(_read(path))


def _oracle(a, args):
    return Oracle(a.params, resolve_solver_path(args.solver), args.seed)


def cmd_check(args, out) -> int:
    doc = parse_document(_read(args.model))
    problems = [v for v in validate(doc.automaton) if "policy annotation" not in v.rule]
    a = doc.automaton
    if problems:
        for v in problems:
            print(f"{args.model}: {doc.describe(v)}", file=out)
        _write_json(args.json, {"valid": False, "violations": [doc.describe(v) for v in problems]})
        return EXIT_ERROR
    print(f"{a.name}: {a.levels} levels, {len(a.params)} parameters, {len(a.clocks)} clocks, "
          f"{len(a.states)} states, {len(a.transitions)} transitions", file=out)
    _write_json(args.json, {"valid": True, "levels": a.levels, "params": list(a.params),
                            "states": len(a.states), "transitions": len(a.transitions)})
    return 0


def cmd_reach(args, out) -> int:
    a = _load(args.model)
    scope = parse_scope(_read(args.scope), a.params) if args.scope else None
    targets = [q.strip() for q in args.target.split(",") if q.strip()] if args.target else None
    v = reach(a, args.mode, targets, scope=scope, solver=resolve_solver_path(args.solver), cap=args.cap,
              class_cap=args.cap or DEFAULT_CLASS_CAP, seed=args.seed)
    doc = v.to_json()
    print(f"answer: {v.answer}", file=out)
    if v.witness_valuation is not None:
        print("valuation: " + ", ".join(f"{p} = {x}" for p, x in doc["witness_valuation"].items()), file=out)
    if v.witness_region is not None:
        print("region:", file=out)
        for line in v.witness_region:
            print(f"  {line}", file=out)
    if v.witness_path is not None:
        print("path: " + " ; ".join(v.witness_path), file=out)
    if v.witness_delays is not None:
        print("delays: " + " ".join(doc["witness_delays"]), file=out)
    _write_json(args.json, doc)
    return v.exit_code


def _pick_region(a, es, args):
    if args.pi:
        pi = parse_valuation(_read(args.pi))
        return region_of(pi, es, 0)
    want = args.region or 0
    oracle = _oracle(a, args)
    try:
        for r in enumerate_regions(es, oracle):
            if r.index == want:
                return r
    finally:
        oracle.close()
    raise UsageError(f"no region with index {want}")


def cmd_graph(args, out) -> int:
    a = desugar_policies(_load(args.model))
    es = saturate(a, cap=args.cap)
    region = _pick_region(a, es, args)
    ca = build(a, region, es, args.cap or DEFAULT_CLASS_CAP)
    print(f"{region.describe(es)}", file=out)
    print(f"{len(ca.classes)} classes, {len(ca.edges)} edges, states {sorted(ca.states())}", file=out)
    if args.dump_classes:
        out.write(dump_classes(ca))
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(export_dot(ca))
    _write_json(args.json, {"region": region_constraints(region, es).lines(), "classes": len(ca.classes),
                            "edges": len(ca.edges), "states": sorted(ca.states())})
    return 0


def cmd_simulate(args, out) -> int:
    a = desugar_policies(_load(args.model))
    pi = parse_valuation(_read(args.pi)) if args.pi else None
    res = simulate_random(a, args.steps, args.seed, pi)
    out.write(res.trace(a))
    _write_json(args.json, {"trace": res.trace(a).splitlines(), "visited": sorted(res.visited),
                            "violations": len(res.violations)})
    return 0 if not res.violations else EXIT_ERROR


def cmd_exprsets(args, out) -> int:
    a = desugar_policies(_load(args.model))
    es = saturate(a, cap=args.cap)
    out.write(es.dump())
    doc = {"polpar": [str(p) for p in es.polpar],
           "exprsets": {f"E{k}": [str(e) for e in es.exprs[k]] for k in sorted(es.exprs)}}
    code = 0
    if args.bounds:
        rep = check_bounds(es, a)
        print(str(rep), file=out)
        doc["bounds_ok"] = rep.ok
        doc["bounds_violations"] = rep.violations
        code = 0 if rep.ok else EXIT_ERROR
    _write_json(args.json, doc)
    return code


def cmd_regions(args, out) -> int:
    a = desugar_policies(_load(args.model))
    es = saturate(a, cap=args.cap)
    scope = parse_scope(_read(args.scope), a.params) if args.scope else None
    oracle = _oracle(a, args)
    log = EnumerationLog()
    listing = []
    try:
        for r in enumerate_regions(es, oracle, scope, args.open, log):
            lines = region_constraints(r, es).lines()
            print(f"region {r.index}", file=out)
            for line in lines:
                print(f"  {line}", file=out)
            listing.append({"index": r.index, "constraints": lines})
    finally:
        oracle.close()
    print(f"{log.emitted} regions, {log.inconclusive} inconclusive", file=out)
    _write_json(args.json, {"regions": listing, "inconclusive": log.inconclusive})
    return 0 if not log.inconclusive else 2


COMMANDS = {"check": cmd_check, "reach": cmd_reach, "graph": cmd_graph, "simulate": cmd_simulate,
            "exprsets": cmd_exprsets, "regions": cmd_regions}


def cli(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = _parser().parse_args(argv)
        if args.command is None:
            raise UsageError("itava: a command is required (" + ", ".join(COMMANDS) + ")")
        return COMMANDS[args.command](args, out)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except ParseError as e:
        print(f"{getattr(args, 'model', '')}: {e}", file=sys.stderr)
        return EXIT_ERROR
    except ModelError as e:
        for v in e.violations:
            print(f"{args.model}: {v}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        print(f"itava: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (AnalysisError, SaturationError, ClassGraphError, SemanticsError, SolverError) as e:
        print(f"itava: {e}", file=sys.stderr)
        return EXIT_ERROR + 1


def main() -> None:
    sys.exit(cli())
