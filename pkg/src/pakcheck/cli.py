"""``pakcheck`` command line.

Exit codes: 0 holds / success, 1 fails, 2 usage or input error,
3 not applicable.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction
from importlib import resources
from typing import Sequence

from . import analysis as an
from .analysis import AnalysisReport, Verdict, parse_constraint
from .belief import belief_at, belief_profile, expected_belief, success_probability
from .facts import as_fact, bind
from .model import PakError, PpsTree, validate_tree
from .modelio import dumps_model, loads_model, save_model
from .protocol import ProtocolSpec, build_counterexample, build_tree
from .report import approx, describe_state, frac, render_report, report_to_dict
from .suite import run_suite

EXIT = {Verdict.HOLDS: 0, Verdict.FAILS: 1, Verdict.NOT_APPLICABLE: 3}
USAGE_ERROR = 2
BUILTINS = {
    "fs": "fs.json",
    "fs-refrain": "fs-refrain.json",
    "fig1": "fig1.json",
}


class UsageError(Exception):
    pass


def _fraction(text: str) -> Fraction:
    if "." in text:
        raise argparse.ArgumentTypeError("decimal values not allowed; use num/den")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a fraction: {text!r}") from None


def builtin_text(name: str) -> str:
    if name not in BUILTINS:
        raise UsageError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}")
    return resources.files("pakcheck").joinpath("data", BUILTINS[name]).read_text("utf-8")


def load_any(ref: str) -> PpsTree | ProtocolSpec:
    if ref.startswith("builtin:"):
        return loads_model(builtin_text(ref[len("builtin:"):]))
    try:
        with open(ref, encoding="utf-8") as fh:
            return loads_model(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read {ref}: {exc.strerror}") from None


def load_tree(ref: str) -> PpsTree:
    model = load_any(ref)
    tree = build_tree(model) if isinstance(model, ProtocolSpec) else model
    return tree.check()


def _action(text: str) -> tuple[str, str]:
    agent, dot, action = text.partition(".")
    if not dot or not agent or not action:
        raise UsageError(f"action must be written AGENT.ACTION, got {text!r}")
    return agent, action


def _emit(args, rep: AnalysisReport) -> int:
    print(render_report(rep, args.format))
    return EXIT[rep.verdict]


# -- subcommands ----------------------------------------------------------------


def cmd_validate(args) -> int:
    model = load_any(args.model)
    tree = build_tree(model) if isinstance(model, ProtocolSpec) else model
    report = validate_tree(tree)
    if args.format == "json":
        print(json.dumps({"valid": report.ok, "violations": report.violations,
                          "runs": len(tree.runs) if report.ok else None}, indent=2))
    elif report.ok:
        print(f"valid: {len(tree.runs)} runs, horizon {tree.horizon}")
    else:
        print("invalid:")
        for v in report.violations:
            print(f"  {v}")
    return 0 if report.ok else 1


def cmd_runs(args) -> int:
    tree = load_tree(args.model)
    rows = []
    for run in tree.runs:
        rows.append(
            {
                "index": run.index,
                "measure": frac(tree.run_measure(run)),
                "actions": [f"{t}:{a}.{x}" for t, a, x in run(run.horizon).history if x != "skip"],
            }
        )
    if args.format == "json":
        print(json.dumps(rows, indent=2))
    else:
        for row in rows:
            print(f"run {row['index']}: mu = {approx(Fraction(row['measure']))}  "
                  + " ".join(row["actions"]))
    return 0


def cmd_belief(args) -> int:
    tree = load_tree(args.model)
    fact = bind(tree, as_fact(args.fact))
    if args.action is None:
        if args.agent is None or args.run is None or args.time is None:
            raise UsageError("give --action, or all of --agent, --run and --time")
        if not 0 <= args.run < len(tree.runs):
            raise UsageError(f"run index {args.run} out of range")
        b = belief_at(tree, args.agent, fact, tree.runs[args.run], args.time)
        print(frac(b) if args.format == "json" else approx(b))
        return 0
    agent, action = _action(args.action)
    prof = belief_profile(tree, agent, fact, action)
    succ = success_probability(tree, fact, agent, action)
    exp = expected_belief(tree, agent, fact, action)
    if args.format == "json":
        print(json.dumps({
            "agent": agent, "action": action,
            "by_state": [{"local_state": describe_state(ls), "belief": frac(b)}
                         for ls, b in prof.by_state.items()],
            "by_run": {str(r.index): frac(b) for r, b in prof.by_run.items()},
            "success": frac(succ), "expected_belief": frac(exp),
        }, indent=2, ensure_ascii=False))
    else:
        for ls, b in prof.by_state.items():
            print(f"{describe_state(ls)}: belief {approx(b)}")
        print(f"success probability: {approx(succ)}")
        print(f"expected belief:     {approx(exp)}")
    return 0


def cmd_check(args) -> int:
    tree = load_tree(args.model)
    c = parse_constraint(args.constraint)
    bind(tree, c.fact)
    return _emit(args, c.check(tree))


def cmd_independence(args) -> int:
    tree = load_tree(args.model)
    agent, action = _action(args.action)
    return _emit(args, an.check_local_state_independence(tree, bind(tree, as_fact(args.fact)), agent, action))


def cmd_verify(args) -> int:
    tree = load_tree(args.model)
    agent, action = _action(args.action)
    fact = bind(tree, as_fact(args.fact))
    if args.theorem == "expectation":
        rep = an.verify_expectation(tree, fact, agent, action)
    else:
        if args.p is None:
            raise UsageError(f"--p is required for {args.theorem}")
        fn = an.verify_sufficiency if args.theorem == "sufficiency" else an.verify_sometimes
        rep = fn(tree, fact, agent, action, args.p)
    return _emit(args, rep)


def cmd_pak(args) -> int:
    tree = load_tree(args.model)
    agent, action = _action(args.action)
    fact = bind(tree, as_fact(args.fact))
    return _emit(args, an.verify_pak(tree, fact, agent, action, args.delta, args.eps))


def cmd_counterexample(args) -> int:
    tree = build_counterexample(args.p, args.eps)
    if args.out:
        save_model(tree, args.out)
        print(f"wrote {args.out}: {len(tree.runs)} runs")
    else:
        sys.stdout.write(dumps_model(tree))
    return 0


def cmd_builtin(args) -> int:
    if args.action == "list":
        for name in BUILTINS:
            print(f"builtin:{name}")
        return 0
    if not args.name:
        raise UsageError("builtin emit needs a NAME")
    text = builtin_text(args.name)
    if args.tree:
        model = loads_model(text)
        if isinstance(model, ProtocolSpec):
            text = dumps_model(build_tree(model))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_suite(args) -> int:
    seed = args.seed
    env = os.environ.get("PAKCHECK_SEED")
    if env is not None:
        try:
            seed = int(env)
        except ValueError:
            raise UsageError(f"PAKCHECK_SEED must be an integer, got {env!r}") from None
    start = time.perf_counter()
    res = run_suite(range(seed, seed + args.cases))
    elapsed = time.perf_counter() - start
    if args.format == "json":
        print(json.dumps({
            "seeds": [seed, seed + args.cases - 1],
            "checks": {k: {"checked": res.checked[k], "violations": res.violations[k]}
                       for k in sorted(res.checked)},
            "examples": res.examples,
            "ok": res.ok,
        }, indent=2))
    else:
        print(f"suite: seeds {seed}..{seed + args.cases - 1}, {res.trees} trees, {elapsed:.1f}s")
        for k in sorted(res.checked):
            print(f"  {k:28s} {res.checked[k]:8d} checked {res.violations[k]:4d} violations")
        for e in res.examples:
            print(f"  violation: {e}")
    return 0 if res.ok else 1


# -- parser ---------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pakcheck",
        description="Exact verification of probabilistic constraints and beliefs on pps trees.",
    )
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def cmd(name, fn, help, model=True):
        sp = sub.add_parser(name, help=help, description=help)
        if model:
            sp.add_argument("--model", required=True,
                            help="model file, or builtin:fs / builtin:fs-refrain / builtin:fig1")
        sp.add_argument("--format", choices=("text", "json"), default="text")
        sp.set_defaults(fn=fn)
        return sp

    cmd("validate", cmd_validate, "check that a model is a well-formed pps")
    cmd("runs", cmd_runs, "list runs with their exact measures")

    sp = cmd("belief", cmd_belief, "beliefs at acting states, or at one point")
    sp.add_argument("--fact", required=True)
    sp.add_argument("--action", help="AGENT.ACTION; prints the belief profile")
    sp.add_argument("--agent")
    sp.add_argument("--run", type=int)
    sp.add_argument("--time", type=int)

    sp = cmd("check", cmd_check, "check a probabilistic constraint")
    sp.add_argument("--constraint", required=True,
                    help='e.g. "mu(FACT @ A.act | R(A.act)) >= 19/20"')

    sp = cmd("independence", cmd_independence, "local-state independence of a fact and an action")
    sp.add_argument("--fact", required=True)
    sp.add_argument("--action", required=True)

    sp = cmd("verify", cmd_verify, "verify the expectation, sufficiency or sometimes theorem")
    sp.add_argument("--fact", required=True)
    sp.add_argument("--action", required=True)
    sp.add_argument("--theorem", choices=("expectation", "sufficiency", "sometimes"),
                    default="expectation")
    sp.add_argument("--p", type=_fraction)

    sp = cmd("pak", cmd_pak, "verify the probably-approximately-knowing bound")
    sp.add_argument("--fact", required=True)
    sp.add_argument("--action", required=True)
    sp.add_argument("--delta", type=_fraction, required=True)
    sp.add_argument("--eps", type=_fraction, required=True)

    sp = cmd("counterexample", cmd_counterexample,
             "build the tree meeting the constraint at p with threshold measure eps", model=False)
    sp.add_argument("--p", type=_fraction, required=True)
    sp.add_argument("--eps", type=_fraction, required=True)
    sp.add_argument("--out")

    sp = cmd("builtin", cmd_builtin, "list or emit the shipped models", model=False)
    sp.add_argument("action", choices=("list", "emit"))
    sp.add_argument("name", nargs="?")
    sp.add_argument("--tree", action="store_true", help="emit the compiled tree")
    sp.add_argument("--out")

    sp = cmd("suite", cmd_suite, "run the random property suite", model=False)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--cases", type=int, default=50)
    return p


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except (UsageError, PakError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"pakcheck: error: {msg}", file=sys.stderr)
        return USAGE_ERROR


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
