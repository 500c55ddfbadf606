"""Task-to-CPU assignment for semi-partitioned EDF with restricted migrations.

Placement runs in two phases. First-fit decreasing places whole tasks on
CPUs as long as the per-CPU demand test accepts them. A task no CPU accepts
is split instead: its cycle of `frame_count` consecutive releases is
distributed over CPUs, each CPU taking some of the release slots, so every
job runs entirely on one CPU and the assignment repeats every cycle.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass

from .demand import DEFAULT_CAP, CpuWorkload, TestMode, schedulability_test
from .model import (
    AssignmentPlan,
    MultiframeTask,
    Status,
    Task,
    TaskSystem,
    Verdict,
)


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class BitPattern:
    """0/1 job-selection vector over the slots of one assignment cycle."""

    bits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(self.bits))
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be 0 or 1")

    @property
    def ones(self) -> int:
        return sum(self.bits)


def regular_pattern(frame_count: int, count: int) -> BitPattern:
    """Spread `count` ones over `frame_count` slots as evenly as possible.

    Slot p carries a one exactly when the rounded quota ceil((p+1)*count/
    frame_count) steps up, so every prefix of p slots holds either
    floor(p*count/frame_count) or ceil(p*count/frame_count) ones.
    """
    if frame_count < 1:
        raise ValueError("frame_count must be >= 1")
    if not 0 <= count <= frame_count:
        raise ValueError(f"count must be in [0, {frame_count}], got {count}")
    bits = tuple(
        _ceil_div((p + 1) * count, frame_count) - _ceil_div(p * count, frame_count)
        for p in range(frame_count)
    )
    return BitPattern(bits)


def flatten_sequence(patterns: Sequence[BitPattern], frame_count: int) -> tuple[int, ...]:
    """Interleave per-CPU selection patterns into one cyclic CPU sequence.

    Scans slot-major, then ascending CPU index, emitting each CPU that
    selected the slot; job q of the cycle runs on the q-th emitted CPU.
    """
    for cpu, pattern in enumerate(patterns):
        if len(pattern.bits) != frame_count:
            raise ValueError(f"pattern for cpu {cpu} must have {frame_count} bits")
    seq = [
        cpu
        for slot in range(frame_count)
        for cpu, pattern in enumerate(patterns)
        if pattern.bits[slot]
    ]
    if len(seq) != frame_count:
        raise ValueError(
            f"patterns select {len(seq)} jobs in total, expected {frame_count}"
        )
    return tuple(seq)


def most_regular_assign(
    task: Task, frame_count: int, counts: Sequence[int]
) -> tuple[dict[int, MultiframeTask], tuple[int, ...]]:
    """Build per-CPU frame vectors from known per-CPU job counts.

    Each CPU's share is spread evenly over the cycle, and the per-CPU
    vectors are read off the interleaved sequence, so together they
    partition the cycle's release slots.
    """
    counts = tuple(counts)
    if sum(counts) != frame_count:
        raise ValueError(
            f"job counts sum to {sum(counts)}, expected frame_count {frame_count}"
        )
    patterns = [regular_pattern(frame_count, c) for c in counts]
    sequence = flatten_sequence(patterns, frame_count)
    multiframes = {}
    for cpu, count in enumerate(counts):
        if count == 0:
            continue
        frames = tuple(
            task.wcet if sequence[p] == cpu else 0 for p in range(frame_count)
        )
        multiframes[cpu] = MultiframeTask(
            source_task_id=task.id,
            frames=frames,
            deadline=task.deadline,
            period=task.period,
        )
    return multiframes, sequence


def merge_frames(
    prior: Sequence[MultiframeTask], temp: MultiframeTask, frame_count: int
) -> MultiframeTask:
    """Scatter a short frame vector into the slots no prior vector occupies.

    `temp` must have exactly one frame per free slot; its q-th frame lands
    in the q-th free slot (ascending), so the result never collides with
    the prior vectors.
    """
    occupied = [False] * frame_count
    for mf in prior:
        if mf.frame_count != frame_count:
            raise ValueError("prior frame vectors must span the full cycle")
        for p, f in enumerate(mf.frames):
            if f:
                if occupied[p]:
                    raise ValueError(f"prior frame vectors overlap at slot {p}")
                occupied[p] = True
    free = [p for p in range(frame_count) if not occupied[p]]
    if temp.frame_count != len(free):
        raise ValueError(
            f"temp has {temp.frame_count} frames but {len(free)} slots are free"
        )
    frames = [0] * frame_count
    for q, p in enumerate(free):
        frames[p] = temp.frames[q]
    return MultiframeTask(
        source_task_id=temp.source_task_id,
        frames=tuple(frames),
        deadline=temp.deadline,
        period=temp.period,
    )


@dataclass(frozen=True)
class MigratingAssignment:
    """Outcome of splitting one task: per-CPU job counts, vectors, sequence."""

    counts: tuple[int, ...]
    multiframes: dict[int, MultiframeTask]
    sequence: tuple[int, ...]


def incremental_assign(
    task: Task,
    frame_count: int,
    cpu_count: int,
    probe: Callable[[MultiframeTask, int], bool],
) -> MigratingAssignment | None:
    """Split a task's release cycle across CPUs, largest feasible share first.

    Walks CPUs in index order. On each CPU it tries to park j of the still
    unassigned jobs, j descending from all of them down to 1: the j jobs are
    spread evenly over the remaining free slots and `probe(candidate, cpu)`
    decides whether the CPU absorbs them. Returns None if jobs remain after
    the last CPU.
    """
    remaining = frame_count
    committed: list[tuple[int, MultiframeTask]] = []
    counts = [0] * cpu_count
    for cpu in range(cpu_count):
        if remaining == 0:
            break
        prior = [mf for _, mf in committed]
        for j in range(remaining, 0, -1):
            bits = regular_pattern(remaining, j).bits
            temp = MultiframeTask(
                source_task_id=task.id,
                frames=tuple(task.wcet if b else 0 for b in bits),
                deadline=task.deadline,
                period=task.period,
            )
            candidate = merge_frames(prior, temp, frame_count)
            if probe(candidate, cpu):
                committed.append((cpu, candidate))
                counts[cpu] = j
                remaining -= j
                break
    if remaining > 0:
        return None
    sequence = [0] * frame_count
    multiframes = {}
    for cpu, mf in committed:
        multiframes[cpu] = mf
        for p, f in enumerate(mf.frames):
            if f:
                sequence[p] = cpu
    return MigratingAssignment(tuple(counts), multiframes, tuple(sequence))


def _by_decreasing_utilization(tasks) -> list[Task]:
    # equal utilizations fall back to ascending id for determinism
    return sorted(tasks, key=lambda t: (-t.utilization, t.id))


def ffd_assign(
    system: TaskSystem, mode=TestMode.PATTERN, cap: int = DEFAULT_CAP
) -> tuple[AssignmentPlan, tuple[Task, ...]]:
    """First-fit decreasing without splitting: place or report as leftover."""
    mode = TestMode(mode)
    workloads = [CpuWorkload() for _ in range(system.cpu_count)]
    fixed: dict[int, int] = {}
    leftovers = []
    for task in _by_decreasing_utilization(system.tasks):
        for cpu in range(system.cpu_count):
            candidate = workloads[cpu].with_fixed(task)
            if schedulability_test(candidate, mode, cap, cpu_index=cpu).ok:
                workloads[cpu] = candidate
                fixed[task.id] = cpu
                break
        else:
            leftovers.append(task)
    plan = AssignmentPlan(cpu_count=system.cpu_count, frame_count=1, fixed=fixed)
    return plan, tuple(leftovers)


def realized_workloads(system: TaskSystem, plan: AssignmentPlan) -> list[CpuWorkload]:
    """Per-CPU workloads induced by a plan, deterministic member order."""
    workloads = []
    for cpu in range(plan.cpu_count):
        fixed = tuple(
            system.task_by_id(tid)
            for tid, c in sorted(plan.fixed.items())
            if c == cpu
        )
        mfs = tuple(
            plan.multiframes[tid][cpu]
            for tid in sorted(plan.multiframes)
            if cpu in plan.multiframes[tid]
        )
        workloads.append(CpuWorkload(fixed, mfs))
    return workloads


def semi_partition(
    system: TaskSystem, frame_count: int, mode=TestMode.PATTERN, cap: int = DEFAULT_CAP
) -> tuple[AssignmentPlan, Verdict]:
    """Place every task, splitting across CPUs when whole placement fails.

    Tasks are taken in decreasing utilization. Each is first placed
    first-fit as a whole; if no CPU accepts it and frame_count > 1, its
    release cycle is split via incremental_assign, probing candidates with
    the same test mode. Fails as soon as one task cannot be placed.

    A schedulable result is replayed: the final verdict re-runs the test on
    every CPU's realized workload.
    """
    mode = TestMode(mode)
    if frame_count < 1:
        raise ValueError("frame_count must be >= 1")
    m = system.cpu_count
    workloads = [CpuWorkload() for _ in range(m)]
    fixed: dict[int, int] = {}
    job_counts: dict[int, tuple[int, ...]] = {}
    sequences: dict[int, tuple[int, ...]] = {}
    multiframes: dict[int, dict[int, MultiframeTask]] = {}

    def current_plan() -> AssignmentPlan:
        return AssignmentPlan(
            cpu_count=m,
            frame_count=frame_count,
            fixed=dict(fixed),
            job_counts=dict(job_counts),
            sequences=dict(sequences),
            multiframes=dict(multiframes),
        )

    for task in _by_decreasing_utilization(system.tasks):
        overflow_seen = False
        probe_findings = []
        placed = False
        for cpu in range(m):
            verdict = schedulability_test(
                workloads[cpu].with_fixed(task), mode, cap, cpu_index=cpu
            )
            probe_findings.extend(verdict.per_cpu)
            if verdict.status is Status.HORIZON_OVERFLOW:
                overflow_seen = True
            if verdict.ok:
                workloads[cpu] = workloads[cpu].with_fixed(task)
                fixed[task.id] = cpu
                placed = True
                break
        if placed:
            continue
        result = None
        if frame_count > 1:
            # split the release cycle; a cycle of 1 forbids migration

            def probe(candidate: MultiframeTask, cpu: int) -> bool:
                nonlocal overflow_seen
                v = schedulability_test(
                    workloads[cpu].with_multiframe(candidate), mode, cap, cpu_index=cpu
                )
                if v.status is Status.HORIZON_OVERFLOW:
                    overflow_seen = True
                return v.ok

            result = incremental_assign(task, frame_count, m, probe)
        if result is None:
            status = Status.HORIZON_OVERFLOW if overflow_seen else Status.NOT_SCHEDULABLE
            return current_plan(), Verdict(status, tuple(probe_findings))
        job_counts[task.id] = result.counts
        sequences[task.id] = result.sequence
        multiframes[task.id] = result.multiframes
        for cpu, mf in result.multiframes.items():
            workloads[cpu] = workloads[cpu].with_multiframe(mf)

    replays = [
        schedulability_test(workloads[cpu], mode, cap, cpu_index=cpu)
        for cpu in range(m)
    ]
    findings = tuple(v.per_cpu[0] for v in replays)
    if all(v.ok for v in replays):
        status = Status.SCHEDULABLE
    elif any(v.status is Status.HORIZON_OVERFLOW for v in replays):
        status = Status.HORIZON_OVERFLOW
    else:
        status = Status.NOT_SCHEDULABLE
    return current_plan(), Verdict(status, findings)
