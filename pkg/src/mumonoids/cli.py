"""Command-line driver: check, optimize, run, and bench.

Exit codes sort failures by phase: 2 for syntax, 3 for types, 4 for
anything that goes wrong while a program runs, 5 for unusable
invocations (bad flags, missing files, unknown benchmarks).
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time
from typing import Dict, List, Optional, Sequence, Tuple

from .benchmarks import BENCHMARKS, get_benchmark
from .distsim import (
    RoundRobin,
    TransferReport,
    partition,
    run_plan_p1,
    run_plan_p2,
    run_plan_p2_repartitioned,
)
from .errors import (
    DataError,
    MumonoidsError,
    ParseError,
    PlanError,
    TypeCheckError,
)
from .expr import Fixpoint, Lambda, Program, children, format_program, inline_lets
from .generators import read_table
from .interp import run_program
from .optimizer import (
    PlanDirective,
    format_trace,
    is_syntactic_homomorphism,
    optimize,
)
from .parser import parse_program
from .typecheck import typecheck_program
from .values import Bag, Value, format_value

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_TYPE = 3
EXIT_RUN = 4
EXIT_USAGE = 5


class _UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 5, not argparse's default 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def digest(v: Value) -> str:
    """A short fingerprint of a value's canonical text."""
    return hashlib.sha256(format_value(v).encode("utf-8")).hexdigest()[:12]


def _toplevel_fixpoints(e) -> List[Fixpoint]:
    found: List[Fixpoint] = []

    def scan(node):
        if isinstance(node, Fixpoint):
            found.append(node)
        if isinstance(node, Lambda):
            return
        for c in children(node):
            scan(c)

    scan(e)
    return found


def _make_hook(
    directives: Sequence[PlanDirective],
    partitions: int,
    seed: int,
    reports: List[Tuple[str, TransferReport]],
):
    """A fixpoint interceptor that routes directed loops through the
    simulator and leaves everything else to the reference loop."""

    def hook(fix, env, runner):
        d = next((x for x in directives if x.fixpoint is fix), None)
        if d is None:
            d = next((x for x in directives if x.fixpoint == fix), None)
        if d is None:
            return None
        seed_bag = runner.eval(fix.seed, env)
        if not isinstance(seed_bag, Bag):
            return None
        pr = partition(seed_bag, partitions, RoundRobin(seed))
        if d.plan == "p1":
            out, rep = run_plan_p1(pr, fix.body, fix.delta, env, runner.limits)
        elif d.plan == "p2":
            out, rep = run_plan_p2(pr, fix.body, fix.delta, env, runner.limits)
        else:
            out, rep = run_plan_p2_repartitioned(
                pr, fix.body, fix.delta, d.key_path or (), env, runner.limits
            )
        reports.append((d.plan, rep))
        return out

    return hook


def _load_source(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc}")


def _load_inputs(
    program: Program, pairs: Sequence[str], data_dir: Optional[str]
) -> Dict[str, Bag]:
    named: Dict[str, str] = {}
    for pair in pairs:
        name, sep, path = pair.partition("=")
        if not sep or not name or not path:
            raise _UsageError(f"--input wants NAME=FILE, got {pair!r}")
        named[name] = path
    out: Dict[str, Bag] = {}
    for name, _t in program.inputs:
        if name in named:
            path = named.pop(name)
        elif data_dir is not None:
            path = os.path.join(data_dir, f"{name}.tsv")
        else:
            raise _UsageError(f"no data for input {name!r}; pass --input {name}=FILE")
        try:
            out[name] = read_table(path)
        except DataError as exc:
            raise _UsageError(str(exc))
    if named:
        extra = ", ".join(sorted(named))
        raise _UsageError(f"--input names not declared by the program: {extra}")
    return out


def _describe_result(v: Value) -> List[str]:
    if isinstance(v, Bag):
        lines = [f"result: {v.size} records ({len(list(v.support()))} distinct)"]
        text = format_value(v)
        if v.size <= 200:
            lines.append(text)
    else:
        lines = [f"result: {format_value(v)}"]
    lines.append(f"digest: {digest(v)}")
    return lines


def _report_block(tag: str, rep: TransferReport) -> List[str]:
    return [f"transfer ({tag}):"] + ["  " + line for line in rep.lines()]


def _emit(lines: Sequence[str], report_path: Optional[str]) -> None:
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if report_path:
        try:
            with open(report_path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise _UsageError(f"cannot write {report_path}: {exc}")


# --- subcommands -----------------------------------------------------------


def _cmd_check(args) -> int:
    program = parse_program(_load_source(args.file))
    typecheck_program(program)
    body = inline_lets(program.body)
    seen = 0
    for fix in _toplevel_fixpoints(body):
        seen += 1
        if not is_syntactic_homomorphism(fix.body):
            print(
                f"warning: loop {seen}: the body is not a recognized "
                "homomorphism; the loop cannot run per partition"
            )
    word = "loop" if seen == 1 else "loops"
    print(f"ok: {args.file} typechecks ({seen} {word})")
    return EXIT_OK


def _cmd_optimize(args) -> int:
    program = parse_program(_load_source(args.file))
    result = optimize(program, seed=args.seed)
    sys.stdout.write(format_program(result.program))
    if args.explain:
        print()
        print(format_trace(result.trace))
    return EXIT_OK


def _run_optimized(
    program: Program,
    inputs: Dict[str, Bag],
    directives: Sequence[PlanDirective],
    partitions: int,
    seed: int,
) -> Tuple[Value, List[Tuple[str, TransferReport]]]:
    reports: List[Tuple[str, TransferReport]] = []
    hook = _make_hook(directives, partitions, seed, reports)
    value = run_program(program, inputs, fixpoint_hook=hook)
    return value, reports


def _forced_directives(program: Program, plan: str) -> List[PlanDirective]:
    out = []
    for fix in _toplevel_fixpoints(program.body):
        if plan == "p2" and not is_syntactic_homomorphism(fix.body):
            raise PlanError(
                "--plan p2 needs per-partition loops to be safe, and a loop "
                "body here is not a recognized homomorphism"
            )
        out.append(PlanDirective(fix, plan, None, f"forced by --plan {plan}"))
    return out


def _partition_count(args) -> int:
    if args.partitions is not None:
        if args.partitions < 1:
            raise _UsageError("--partitions must be at least 1")
        return args.partitions
    if args.cores < 1:
        raise _UsageError("--cores must be at least 1")
    return 4 * args.cores


def _cmd_run(args) -> int:
    program = parse_program(_load_source(args.file))
    typecheck_program(program)
    inputs = _load_inputs(program, args.input, args.data)
    partitions = _partition_count(args)
    lines: List[str] = []
    if args.plan == "auto":
        result = optimize(program, seed=args.seed)
        run_prog = result.program
        directives = result.directives
    else:
        run_prog = Program(program.inputs, inline_lets(program.body))
        directives = _forced_directives(run_prog, args.plan)
    value, reports = _run_optimized(
        run_prog, inputs, directives, partitions, args.seed
    )
    lines.extend(_describe_result(value))
    for i, (tag, rep) in enumerate(reports, 1):
        lines.extend(_report_block(f"loop {i}, plan {tag}", rep))
    _emit(lines, args.report)
    return EXIT_OK


def _cmd_bench(args) -> int:
    try:
        bench = get_benchmark(args.name)
    except DataError as exc:
        raise _UsageError(str(exc))
    inputs = bench.make_inputs(seed=args.seed, n=args.n, p=args.p)
    program = bench.parse()
    partitions = _partition_count(args)
    lines = [f"benchmark: {bench.name} ({bench.title})"]
    for name, bag in sorted(inputs.items()):
        lines.append(f"input {name}: {bag.size} records")
    lines.append(f"partitions: {partitions}")

    started = time.perf_counter()
    reference = run_program(program, inputs)
    ref_time = time.perf_counter() - started
    lines.append(f"unoptimized: digest {digest(reference)} ({ref_time:.3f}s)")

    result = optimize(program, seed=args.seed)

    base_directives = [
        PlanDirective(d.fixpoint, "p1", None, "baseline") for d in result.directives
    ]
    started = time.perf_counter()
    base_value, base_reports = _run_optimized(
        result.program, inputs, base_directives, partitions, args.seed
    )
    base_time = time.perf_counter() - started

    started = time.perf_counter()
    opt_value, opt_reports = _run_optimized(
        result.program, inputs, result.directives, partitions, args.seed
    )
    opt_time = time.perf_counter() - started

    lines.append(
        f"optimized (all loops P1): digest {digest(base_value)} ({base_time:.3f}s)"
    )
    lines.append(
        f"optimized (chosen plans): digest {digest(opt_value)} ({opt_time:.3f}s)"
    )
    if len({digest(reference), digest(base_value), digest(opt_value)}) != 1:
        raise MumonoidsError(
            "the plans disagree on the result; this is a bug, not a data problem"
        )
    lines.append("rewrites:")
    lines.extend("  " + line for line in format_trace(result.trace).splitlines())
    for i, (tag, rep) in enumerate(base_reports, 1):
        lines.extend(_report_block(f"loop {i}, plan {tag}", rep))
    for i, (tag, rep) in enumerate(opt_reports, 1):
        lines.extend(_report_block(f"loop {i}, plan {tag}", rep))
    baseline = sum(r.records_shuffled for _, r in base_reports)
    chosen = sum(r.records_shuffled for _, r in opt_reports)
    lines.append(f"records shuffled: {baseline} under P1, {chosen} under chosen plans")
    _emit(lines, args.report)
    return EXIT_OK


# --- argument wiring --------------------------------------------------------


def _build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(
        prog="mumonoids",
        description="Check, optimize, and run iterative collection programs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="parse and typecheck a program")
    p_check.add_argument("file")

    p_opt = sub.add_parser("optimize", help="print the optimized program")
    p_opt.add_argument("file")
    p_opt.add_argument("--explain", action="store_true", help="show the rewrite trace")
    p_opt.add_argument("--seed", type=int, default=0)

    p_run = sub.add_parser("run", help="run a program on data files")
    p_run.add_argument("file")
    p_run.add_argument(
        "--input",
        action="append",
        default=[],
        metavar="NAME=FILE",
        help="bind a declared input to a tab-separated file (repeatable)",
    )
    p_run.add_argument(
        "--data", metavar="DIR", help="directory holding NAME.tsv per input"
    )
    p_run.add_argument("--plan", choices=("p1", "p2", "auto"), default="auto")
    p_run.add_argument("--partitions", type=int)
    p_run.add_argument("--cores", type=int, default=2)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--report", metavar="FILE", help="also write the output here")

    p_bench = sub.add_parser("bench", help="run a built-in workload")
    p_bench.add_argument("name", help=", ".join(sorted(BENCHMARKS)))
    p_bench.add_argument("--n", type=int, help="dataset size knob")
    p_bench.add_argument("--p", type=float, help="dataset density knob")
    p_bench.add_argument("--partitions", type=int)
    p_bench.add_argument("--cores", type=int, default=2)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--report", metavar="FILE", help="also write the output here")

    return parser


_COMMANDS = {
    "check": _cmd_check,
    "optimize": _cmd_optimize,
    "run": _cmd_run,
    "bench": _cmd_bench,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except TypeCheckError as exc:
        print(f"type error: {exc}", file=sys.stderr)
        return EXIT_TYPE
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MumonoidsError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
