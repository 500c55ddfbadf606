"""Command line front end.

Subcommands map one-to-one onto library calls: gen (random system file),
analyze (partition + per-CPU verdict), simulate (EDF simulation of a plan),
experiment (success-ratio sweep). Exit codes are the machine contract:
0 success/schedulable/no-miss, 1 negative verdict or misses, 2 usage or
input errors. The HTTP service is separate; run it with
`uvicorn semipart.service:app`.
"""

import argparse
import json
import random
import sys
from fractions import Fraction

from .assign import realized_workloads, semi_partition
from .demand import DEFAULT_CAP, TestMode
from .experiment import MODES, SweepConfig, generate_task_system, run_sweep, write_table
from .model import AssignmentPlan, TaskSystem, Verdict
from .sim import SimConfig, SporadicSeeded, SynchronousPeriodic, run_simulation
from .taskio import (
    TaskFileError,
    dump_doc,
    load_plan,
    load_system,
    plan_to_doc,
    save_plan,
    save_system,
    system_to_doc,
)

DEFAULT_SEED = 0
DEFAULT_K = 2
SIM_HORIZON_CAP = 10**6


def _util_fraction(text: str) -> float:
    value = float(text)
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError("utilization fraction must be in (0, 1]")
    return value


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {e}")


def _fraction_list(text: str) -> tuple[Fraction, ...]:
    """Comma list of decimals, each item optionally a start:stop:step range."""
    items: list[Fraction] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            if ":" in part:
                start, stop, step = (Fraction(x) for x in part.split(":"))
                if step <= 0:
                    raise ValueError("step must be positive")
                f = start
                while f <= stop:
                    items.append(f)
                    f += step
            else:
                items.append(Fraction(part))
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"bad fraction list {text!r}: {e}")
    return tuple(items)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semipart",
        description="Schedulability analysis for semi-partitioned EDF "
        "with restricted job migrations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random task-system file")
    p.add_argument("--cpus", type=int, required=True, help="number of CPUs (m)")
    p.add_argument(
        "--util",
        type=_util_fraction,
        required=True,
        help="target total utilization per CPU, in (0, 1]",
    )
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="RNG seed (default 0)")
    p.add_argument(
        "--k", type=int, default=DEFAULT_K, help=f"frame count K written to the file (default {DEFAULT_K})"
    )
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("analyze", help="partition a system and report the verdict")
    p.add_argument("input", help="task-system file")
    p.add_argument("--k", type=int, default=None, help="override the file's K")
    p.add_argument(
        "--mode",
        choices=["packed", "pattern"],
        default="pattern",
        help="demand model for split tasks (default pattern)",
    )
    p.add_argument(
        "--cap",
        type=int,
        default=DEFAULT_CAP,
        help=f"analysis horizon cap in ticks (default {DEFAULT_CAP})",
    )
    p.add_argument("--plan-out", help="also write the plan to this path")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="run the EDF simulator over a plan")
    p.add_argument("input", help="task-system file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--plan", help="plan file produced by analyze --plan-out")
    group.add_argument(
        "--auto", action="store_true", help="run the partitioner first and use its plan"
    )
    p.add_argument(
        "--horizon",
        type=int,
        default=None,
        help=f"ticks to simulate (default min(2*hyperperiod, {SIM_HORIZON_CAP}))",
    )
    p.add_argument(
        "--model",
        choices=["synchronous", "sporadic"],
        default="synchronous",
        help="release model (default synchronous)",
    )
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="sporadic seed (default 0)")
    p.add_argument(
        "--max-jitter",
        type=int,
        default=0,
        help="sporadic extra inter-arrival delay bound (default 0)",
    )
    p.add_argument("--k", type=int, default=None, help="override the file's K (with --auto)")
    p.add_argument(
        "--mode", choices=["packed", "pattern"], default="pattern", help="test mode for --auto"
    )
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="horizon cap for --auto")
    p.add_argument("--trace", help="write an event trace to this path")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="success-ratio sweep over random systems")
    p.add_argument("--cpus", type=_int_list, default=(2, 4), help="comma list (default 2,4)")
    p.add_argument(
        "--fractions",
        type=_fraction_list,
        default=_fraction_list("0.50:0.95:0.05"),
        help="comma list of decimals or start:stop:step ranges (default 0.50:0.95:0.05)",
    )
    p.add_argument("--k-values", type=_int_list, default=(2, 8), help="comma list (default 2,8)")
    p.add_argument(
        "--modes",
        default=",".join(MODES),
        help=f"comma list from {{{','.join(MODES)}}} (default all)",
    )
    p.add_argument("--trials", type=int, default=100, help="trials per cell (default 100)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed (default 0)")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help=f"horizon cap (default {DEFAULT_CAP})")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.set_defaults(func=cmd_experiment)

    return parser


def cmd_gen(args) -> int:
    system = generate_task_system(args.cpus, args.util, random.Random(args.seed))
    if args.out:
        save_system(system, args.k, args.out)
    else:
        sys.stdout.write(dump_doc(system_to_doc(system, args.k)))
    return 0


def _finding_dict(finding) -> dict:
    return {
        "cpu": finding.cpu,
        "density": str(finding.density),
        "horizon": finding.horizon,
        "truncated": finding.truncated,
        "violation_time": finding.violation_time,
        "demand": finding.demand,
    }


def _print_verdict(system: TaskSystem, k: int, plan: AssignmentPlan, verdict: Verdict) -> None:
    total = system.total_utilization
    print(
        f"system: {len(system.tasks)} tasks, {system.cpu_count} cpus, "
        f"K={k}, utilization {float(total):.4f}"
    )
    for f in verdict.per_cpu:
        line = f"cpu {f.cpu}: density={f.density} horizon={f.horizon}"
        if f.violation_time is not None:
            line += f" violation at t={f.violation_time} demand={f.demand}"
        if f.truncated:
            line += " truncated"
        print(line)
    if plan.fixed:
        print("placements:")
        for tid, cpu in sorted(plan.fixed.items()):
            print(f"  task {tid} -> cpu {cpu}")
    for tid in plan.migrating_ids:
        counts = plan.job_counts[tid]
        print(f"  task {tid} -> split, jobs per cpu {counts}")
        print("    sequence: " + " ".join(str(c) for c in plan.sequences[tid]))
        for cpu in sorted(plan.multiframes.get(tid, {})):
            frames = plan.multiframes[tid][cpu].frames
            print(f"    cpu {cpu} frames: " + " ".join(str(f) for f in frames))
    print(f"verdict: {verdict.status.value}")


def cmd_analyze(args) -> int:
    system, file_k = load_system(args.input)
    k = args.k if args.k is not None else file_k
    plan, verdict = semi_partition(system, k, TestMode(args.mode), args.cap)
    if args.plan_out:
        save_plan(plan, args.plan_out)
    if args.json:
        print(
            json.dumps(
                {
                    "status": verdict.status.value,
                    "schedulable": verdict.ok,
                    "k": k,
                    "mode": args.mode,
                    "per_cpu": [_finding_dict(f) for f in verdict.per_cpu],
                    "plan": plan_to_doc(plan).model_dump(),
                },
                indent=2,
                sort_keys=True,
            )
        )
    else:
        _print_verdict(system, k, plan, verdict)
    return 0 if verdict.ok else 1


def cmd_simulate(args) -> int:
    system, file_k = load_system(args.input)
    if args.plan:
        plan = load_plan(args.plan, system)
    else:
        k = args.k if args.k is not None else file_k
        plan, verdict = semi_partition(system, k, TestMode(args.mode), args.cap)
        if not verdict.ok:
            print(
                f"error: partitioner verdict is {verdict.status.value}; "
                "supply --plan to simulate an explicit placement",
                file=sys.stderr,
            )
            return 2
    horizon = args.horizon
    if horizon is None:
        hyper = max(w.hyperperiod for w in realized_workloads(system, plan))
        horizon = min(2 * hyper, SIM_HORIZON_CAP)
    release = (
        SporadicSeeded(args.seed, args.max_jitter)
        if args.model == "sporadic"
        else SynchronousPeriodic()
    )
    cfg = SimConfig(system=system, plan=plan, horizon=horizon, release_model=release)
    report = run_simulation(cfg, record_trace=bool(args.trace))
    if args.trace:
        with open(args.trace, "w") as fp:
            for e in report.trace:
                fp.write(f"{e.time} {e.kind} {e.task_id} {e.job_index} {e.cpu}\n")
    if args.json:
        print(
            json.dumps(
                {
                    "ok": not report.misses,
                    "horizon": horizon,
                    "misses": [
                        {
                            "task_id": miss.task_id,
                            "job_index": miss.job_index,
                            "cpu": miss.cpu,
                            "deadline": miss.deadline,
                            "completion": miss.completion,
                        }
                        for miss in report.misses
                    ],
                    "migrations": report.migrations,
                    "preemptions": report.preemptions,
                },
                indent=2,
                sort_keys=True,
            )
        )
    else:
        print(
            f"simulated {horizon} ticks on {system.cpu_count} cpus: "
            f"misses={len(report.misses)} migrations={report.migrations} "
            f"preemptions={report.preemptions}"
        )
        for miss in report.misses:
            done = "unfinished" if miss.completion is None else f"completion {miss.completion}"
            print(
                f"miss: task {miss.task_id} job {miss.job_index} cpu {miss.cpu} "
                f"deadline {miss.deadline} {done}"
            )
    return 0 if not report.misses else 1


def cmd_experiment(args) -> int:
    cfg = SweepConfig(
        cpu_counts=args.cpus,
        util_fractions=args.fractions,
        k_values=args.k_values,
        modes=tuple(m.strip() for m in args.modes.split(",") if m.strip()),
        trials=args.trials,
        seed=args.seed,
        cap=args.cap,
    )
    rows = run_sweep(cfg)
    if args.out:
        with open(args.out, "w", newline="") as fp:
            write_table(rows, fp)
    else:
        write_table(rows, sys.stdout)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TaskFileError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
