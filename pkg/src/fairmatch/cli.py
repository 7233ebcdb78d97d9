"""``fairmatch`` command line: solve, verify, analyze, generate, export-ilp.

JSON goes to stdout and diagnostics to stderr.  Exit codes: 0 yes / fair,
1 no / unfair, 2 unreadable or invalid input, 3 every admissible solver over
budget, 4 solvers disagree under ``--cross-check``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from . import generate as gen
from .core import (Instance, InvalidInstance, Matching, ParseError, instance_to_json, load_instance,
                   load_matching, matching_to_json, require_valid, verify_matching)
from .ilp import build_ilp1, build_ilp2, export_lp, structural_report
from .oracle import DEFAULT_NODE_BUDGET, BudgetExceeded, solve_bruteforce
from .reductions import MccInstance, UbpInstance, reduce_mcc_full, reduce_ubp_full
from .solver_fes import FesLimitExceeded, solve_fes
from .solver_nd import build_quotient, preprocess, solve_nd
from .solver_smallk import KLimitExceeded, solve_smallk
from .solver_twdp import StateCapExceeded, solve_twdp
from .structure import (degree_stats, feedback_edge_indices, load_pace, make_nice, tree_decomposition,
                        treedepth_upper, twin_classes, validate_td)

log = logging.getLogger("fairmatch")

EXIT_YES, EXIT_NO, EXIT_PARSE, EXIT_BUDGET, EXIT_DISAGREE = 0, 1, 2, 3, 4
ALGOS = ("auto", "oracle", "fes", "smallk", "nd", "twdp")


class OverBudget(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    algo: str = "auto"
    max_fes: int = 12
    max_nd: int = 10
    max_width: int = 6
    max_delta_v: int = 8
    max_k: int = 10
    node_budget: int = DEFAULT_NODE_BUDGET
    td_file: Optional[str] = None

    def __post_init__(self) -> None:
        if self.algo not in ALGOS:
            raise ValueError(f"unknown algorithm {self.algo}")
        for name in ("max_fes", "max_nd", "max_width", "max_delta_v", "max_k", "node_budget"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


# -- structural parameters ------------------------------------------------------------

def v_class_count(inst: Instance) -> Optional[int]:
    pre = preprocess(inst)
    if pre.early_no:
        return None
    return sum(1 for side, _ in twin_classes(pre.reduced) if side == "V")


def analyze(inst: Instance) -> dict:
    require_valid(inst)
    du, dv = degree_stats(inst)
    pre = preprocess(inst)
    nd = None if pre.early_no else len(twin_classes(pre.reduced))
    td = tree_decomposition(inst, exact=False) if inst.nu + inst.nv else None
    return {
        "num_u": inst.nu,
        "num_v": inst.nv,
        "num_colors": inst.num_colors,
        "fes": len(feedback_edge_indices(inst)),
        "delta_u": du,
        "delta_v": dv,
        "nd": nd,
        "nd_v_classes": v_class_count(inst),
        "tw_estimate": td.width if td else -1,
        "td_upper": treedepth_upper(inst) if inst.nu + inst.nv else 0,
    }


# -- solving --------------------------------------------------------------------------

def _twdp_runner(inst: Instance, cfg: RunConfig) -> Callable[[], Optional[Matching]]:
    def run():
        if cfg.td_file:
            td, n = load_pace(cfg.td_file)
            if n != inst.nu + inst.nv:
                raise ParseError(f"{cfg.td_file}: {n} vertices, instance has {inst.nu + inst.nv}")
            problems = validate_td(td, inst.graph_adj)
            if problems:
                raise ParseError(f"{cfg.td_file}: " + "; ".join(problems[:3]))
            return solve_twdp(inst, make_nice(td))
        return solve_twdp(inst)
    return run


def runner(name: str, inst: Instance, cfg: RunConfig) -> Callable[[], Optional[Matching]]:
    if name == "oracle":
        return lambda: solve_bruteforce(inst, cfg.node_budget)
    if name == "fes":
        return lambda: solve_fes(inst, cfg.max_fes)
    if name == "smallk":
        return lambda: solve_smallk(inst, cfg.max_k)
    if name == "nd":
        return lambda: solve_nd(inst, cfg.max_nd)
    if name == "twdp":
        return _twdp_runner(inst, cfg)
    raise ValueError(name)


def admissible(inst: Instance, params: dict, cfg: RunConfig) -> list[str]:
    """Solvers whose parameter guard the instance passes, in auto-selection order."""
    out = []
    if params["fes"] <= cfg.max_fes:
        out.append("fes")
    if params["nd_v_classes"] is not None and params["nd_v_classes"] <= cfg.max_nd:
        out.append("nd")
    if cfg.td_file or (params["tw_estimate"] <= cfg.max_width and params["delta_v"] <= cfg.max_delta_v):
        out.append("twdp")
    if inst.nv <= cfg.max_k:
        out.append("smallk")
    out.append("oracle")
    return out


def run_solver(name: str, inst: Instance, cfg: RunConfig) -> Optional[Matching]:
    try:
        return runner(name, inst, cfg)()
    except (BudgetExceeded, FesLimitExceeded, KLimitExceeded, StateCapExceeded) as exc:
        raise OverBudget(f"{name}: {exc}") from exc


def solve(inst: Instance, cfg: RunConfig, cross_check: bool = False) -> dict:
    params = analyze(inst)
    order = admissible(inst, params, cfg)
    if cfg.algo != "auto":
        chosen, result = cfg.algo, run_solver(cfg.algo, inst, cfg)
    else:
        failures = []
        for chosen in order:
            try:
                result = run_solver(chosen, inst, cfg)
                break
            except OverBudget as exc:
                failures.append(str(exc))
                log.info("falling back after %s", exc)
        else:
            raise OverBudget("; ".join(failures))
    out = {
        "answer": "yes" if result is not None else "no",
        "algo_used": chosen,
        "params": params,
    }
    if result is not None:
        out["witness"] = matching_to_json(result)
    if cross_check:
        verdicts = {chosen: result is not None}
        for name in order:
            if name in verdicts:
                continue
            try:
                verdicts[name] = run_solver(name, inst, cfg) is not None
            except OverBudget as exc:
                log.warning("cross-check skipped %s", exc)
        out["cross_check"] = verdicts
        out["agree"] = len(set(verdicts.values())) == 1
    return out


# -- commands ---------------------------------------------------------------------------

def _print(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _write_or_print(obj, path: Optional[str]) -> None:
    if path:
        Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")
    else:
        _print(obj)


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    require_valid(inst)
    cfg = RunConfig(args.algo, args.max_fes, args.max_nd, args.max_width, args.max_delta_v,
                    args.max_k, args.budget, args.td_file)
    if args.emit_quotient:
        pre = preprocess(inst)
        if pre.early_no or pre.reduced.nu == 0:
            log.warning("no quotient: preprocessing settled the instance")
        else:
            q = build_quotient(pre.reduced)
            _write_or_print({"instance": instance_to_json(q.inner),
                             "mapping": {k: [list(p) for p in v] for k, v in q.mapping.items()}},
                            args.emit_quotient)
    if args.export_ilp1:
        export_lp(build_ilp1(inst), args.export_ilp1)
    try:
        out = solve(inst, cfg, args.cross_check)
    except OverBudget as exc:
        log.error("over budget: %s", exc)
        _print({"answer": "unknown", "error": str(exc)})
        return EXIT_BUDGET
    _print(out)
    if args.cross_check and not out["agree"]:
        log.error("solvers disagree: %s", out["cross_check"])
        return EXIT_DISAGREE
    return EXIT_YES if out["answer"] == "yes" else EXIT_NO


def cmd_verify(args) -> int:
    inst = load_instance(args.instance)
    m = load_matching(args.matching)
    report = verify_matching(inst, m)
    _print(report.to_json())
    return EXIT_YES if report.overall else EXIT_NO


def cmd_analyze(args) -> int:
    _print(analyze(load_instance(args.instance)))
    return 0


def _emit_generated(inst: Instance, provenance: dict, args) -> int:
    _write_or_print(instance_to_json(inst), args.output)
    if args.provenance:
        Path(args.provenance).write_text(json.dumps(provenance, indent=2, sort_keys=True) + "\n",
                                         encoding="utf-8")
    return 0


def _parse_mcc_edges(text: str) -> list:
    """Edges as JSON ``[[[a, i], [b, j]], ...]`` or lines ``a i b j``."""
    text = text.strip()
    if text.startswith("["):
        return [(tuple(p), tuple(q)) for p, q in json.loads(text)]
    out = []
    for line in text.splitlines():
        if line.strip() and not line.lstrip().startswith("#"):
            a, i, b, j = map(int, line.split())
            out.append(((a, i), (b, j)))
    return out


def cmd_generate(args) -> int:
    if args.kind == "mcc":
        edges = _parse_mcc_edges(Path(args.edges_file).read_text(encoding="utf-8")) if args.edges_file else []
        red = reduce_mcc_full(MccInstance(args.l, args.n, tuple(edges)))
        return _emit_generated(red.instance, red.builder.provenance, args)
    if args.kind == "ubp":
        items = tuple(int(x) for x in args.items.split(","))
        red = reduce_ubp_full(UbpInstance(items, args.m, args.b))
        return _emit_generated(red.instance, red.builder.provenance, args)
    seed = int(os.environ.get("FAIRMATCH_SEED", args.seed))
    rng = random.Random(seed)
    inst = gen.random_instance(rng, args.max_u, args.max_v, args.max_colors, p=args.p)
    return _emit_generated(inst, {}, args)


def cmd_export_ilp(args) -> int:
    inst = load_instance(args.instance)
    require_valid(inst)
    model = build_ilp1(inst) if args.which == "ilp1" else build_ilp2(inst)
    export_lp(model, args.output)
    if args.report and args.which == "ilp2":
        _print(structural_report(inst, model, td_limit=args.td_limit).to_json())
    return 0


# -- parser ---------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fairmatch", description="Generalized fair matching toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="decide an instance and print a witness")
    s.add_argument("instance")
    s.add_argument("--algo", choices=ALGOS, default="auto")
    s.add_argument("--td-file", help="PACE .td decomposition for twdp")
    s.add_argument("--max-fes", type=int, default=12)
    s.add_argument("--max-nd", type=int, default=10, help="V twin-class limit for nd")
    s.add_argument("--max-width", type=int, default=6)
    s.add_argument("--max-delta-v", type=int, default=8)
    s.add_argument("--max-k", type=int, default=10, help="|V| limit for smallk")
    s.add_argument("--budget", type=int, default=DEFAULT_NODE_BUDGET, help="oracle node limit")
    s.add_argument("--cross-check", action="store_true")
    s.add_argument("--emit-quotient", metavar="PATH")
    s.add_argument("--export-ilp1", metavar="PATH")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="check a matching")
    v.add_argument("instance")
    v.add_argument("matching")
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("analyze", help="structural parameters")
    a.add_argument("instance")
    a.set_defaults(func=cmd_analyze)

    g = sub.add_parser("generate", help="write a generated instance")
    gsub = g.add_subparsers(dest="kind", required=True)
    gm = gsub.add_parser("mcc")
    gm.add_argument("--l", type=int, required=True)
    gm.add_argument("--n", type=int, required=True)
    gm.add_argument("--edges-file")
    gu = gsub.add_parser("ubp")
    gu.add_argument("--items", required=True, help="comma separated sizes")
    gu.add_argument("--m", type=int, required=True)
    gu.add_argument("--b", type=int, required=True)
    gr = gsub.add_parser("random")
    gr.add_argument("--seed", type=int, default=0)
    gr.add_argument("--max-u", type=int, default=8)
    gr.add_argument("--max-v", type=int, default=4)
    gr.add_argument("--max-colors", type=int, default=3)
    gr.add_argument("--p", type=float, default=0.5)
    for q in (gm, gu, gr):
        q.add_argument("-o", "--output")
        q.add_argument("--provenance", metavar="PATH")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("export-ilp", help="write ILP1 or ILP2 in LP format")
    e.add_argument("instance")
    e.add_argument("--which", choices=("ilp1", "ilp2"), default="ilp2")
    e.add_argument("-o", "--output", required=True)
    e.add_argument("--report", action="store_true", help="print the ILP2 structural report")
    e.add_argument("--td-limit", type=int, default=40)
    e.set_defaults(func=cmd_export_ilp)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ParseError, InvalidInstance, OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
