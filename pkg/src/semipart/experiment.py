"""Random workload generation and success-ratio sweeps.

Task systems are drawn per a fixed protocol (utilizations uniform on (0,1]
summed to an exact per-platform target, integer periods in [100, 3000],
implicit deadlines) and judged by the partitioner in one of three modes:
ffd (no splitting), packed, pattern. Trials are seeded per (m, fraction,
trial) only, so the same systems are judged across every K and mode and
cells can be compared pairwise.
"""

import csv
import hashlib
import random
from dataclasses import dataclass
from fractions import Fraction

from .assign import semi_partition
from .demand import DEFAULT_CAP, TestMode
from .model import Status, Task, TaskSystem

MODES = ("ffd", "packed", "pattern")
ALLOWED_CPU_COUNTS = (2, 4, 8, 16, 32, 64)

PERIOD_RANGE = (100, 3000)


def _as_fraction(value) -> Fraction:
    # floats go through str() so 0.8 means 4/5, not its binary expansion
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


def generate_task_system(cpu_count: int, util_fraction, rng: random.Random) -> TaskSystem:
    """Draw tasks until total utilization reaches cpu_count * util_fraction.

    Utilizations are uniform on (0, 1], drawn sequentially; the final draw
    is truncated so the pre-rounding sum lands exactly on the target. Each
    task gets an integer period, an implicit deadline and
    C = max(1, round(u*T)), so the realized sum drifts by at most 1/(2T)
    per task. The task count emerges from the draws.
    """
    target = float(util_fraction) * cpu_count
    tasks = []
    acc = 0.0
    tid = 1
    while acc < target:
        u = 1.0 - rng.random()  # uniform on (0, 1]
        if acc + u >= target:
            u = target - acc
            acc = target
        else:
            acc += u
        period = rng.randint(*PERIOD_RANGE)
        wcet = max(1, round(u * period))
        tasks.append(Task(id=tid, wcet=wcet, deadline=period, period=period))
        tid += 1
    return TaskSystem(tasks=tuple(tasks), cpu_count=cpu_count)


@dataclass(frozen=True)
class SweepConfig:
    cpu_counts: tuple[int, ...]
    util_fractions: tuple[Fraction, ...]
    k_values: tuple[int, ...]
    modes: tuple[str, ...] = MODES
    trials: int = 100
    seed: int = 0
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        object.__setattr__(self, "cpu_counts", tuple(self.cpu_counts))
        object.__setattr__(
            self, "util_fractions", tuple(_as_fraction(f) for f in self.util_fractions)
        )
        object.__setattr__(self, "k_values", tuple(self.k_values))
        object.__setattr__(self, "modes", tuple(m.lower() for m in self.modes))
        if any(m not in ALLOWED_CPU_COUNTS for m in self.cpu_counts):
            raise ValueError(f"cpu counts must come from {ALLOWED_CPU_COUNTS}")
        if any(not Fraction(1, 2) <= f <= Fraction(19, 20) for f in self.util_fractions):
            raise ValueError("utilization fractions must lie in [0.50, 0.95]")
        if any(k < 1 for k in self.k_values):
            raise ValueError("K values must be >= 1")
        if any(mode not in MODES for mode in self.modes):
            raise ValueError(f"modes must come from {MODES}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass(frozen=True)
class SweepRow:
    cpu_count: int
    fraction: Fraction
    k: int
    mode: str
    trials: int
    successes: int
    overflows: int

    @property
    def ratio(self) -> float:
        return self.successes / self.trials


def trial_seed(master: int, cpu_count: int, fraction, trial: int) -> int:
    """Stable per-trial seed; independent of K and mode so trials pair."""
    key = f"{master}|{cpu_count}|{_as_fraction(fraction)}|{trial}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")


def judge(system: TaskSystem, k: int, mode: str, cap: int = DEFAULT_CAP) -> Status:
    """Partition verdict for one system under one (K, mode) configuration."""
    if mode == "ffd":
        k = 1
        mode = "pattern"  # irrelevant without splitting, fixed for determinism
    _, verdict = semi_partition(system, k, TestMode(mode), cap)
    return verdict.status


def run_sweep(cfg: SweepConfig) -> tuple[SweepRow, ...]:
    """Evaluate every (m, fraction, K, mode) cell over paired trials.

    Within one (m, fraction) cell all K values and modes judge the same
    `trials` systems. ffd ignores K and yields a single row with K=1.
    """
    rows = []
    for m in cfg.cpu_counts:
        for fraction in cfg.util_fractions:
            configs = []
            if "ffd" in cfg.modes:
                configs.append((1, "ffd"))
            for k in cfg.k_values:
                for mode in ("packed", "pattern"):
                    if mode in cfg.modes:
                        configs.append((k, mode))
            tallies = {c: [0, 0] for c in configs}  # successes, overflows
            for trial in range(cfg.trials):
                rng = random.Random(trial_seed(cfg.seed, m, fraction, trial))
                system = generate_task_system(m, fraction, rng)
                for k, mode in configs:
                    status = judge(system, k, mode, cfg.cap)
                    if status is Status.SCHEDULABLE:
                        tallies[(k, mode)][0] += 1
                    elif status is Status.HORIZON_OVERFLOW:
                        tallies[(k, mode)][1] += 1
            for k, mode in configs:
                successes, overflows = tallies[(k, mode)]
                rows.append(
                    SweepRow(m, fraction, k, mode, cfg.trials, successes, overflows)
                )
    return tuple(rows)


def write_table(rows, fp) -> None:
    """Emit the sweep table as CSV with a fixed header and 4-decimal ratios."""
    writer = csv.writer(fp)
    writer.writerow(["m", "fraction", "K", "mode", "trials", "successes", "overflows", "ratio"])
    for r in rows:
        writer.writerow(
            [
                r.cpu_count,
                f"{float(r.fraction):.2f}",
                r.k,
                r.mode,
                r.trials,
                r.successes,
                r.overflows,
                f"{r.ratio:.4f}",
            ]
        )
