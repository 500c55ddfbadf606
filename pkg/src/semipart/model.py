"""Task model for sporadic tasks and cyclically scheduled multiframe workloads.

All timing quantities (WCET, deadline, period, analysis horizons) are integer
ticks. Ratios such as utilization and density are exact fractions, never
floats, so schedulability verdicts cannot drift with rounding.
"""

import enum
from dataclasses import dataclass, field
from fractions import Fraction


class HorizonOverflowError(Exception):
    """Raised when an analysis horizon exceeds the configured cap."""


@dataclass(frozen=True, order=True)
class Task:
    """Sporadic task with WCET, relative deadline and minimum inter-arrival time."""

    id: int
    wcet: int
    deadline: int
    period: int

    def __post_init__(self):
        for name in ("wcet", "deadline", "period"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ValueError(f"task {self.id}: {name} must be an integer tick count")
        if self.wcet < 1:
            raise ValueError(f"task {self.id}: wcet must be >= 1")
        # constrained deadlines only: C <= D <= T
        if not self.wcet <= self.deadline <= self.period:
            raise ValueError(
                f"task {self.id}: need wcet <= deadline <= period, "
                f"got ({self.wcet}, {self.deadline}, {self.period})"
            )

    @property
    def utilization(self) -> Fraction:
        return Fraction(self.wcet, self.period)

    @property
    def density(self) -> Fraction:
        return Fraction(self.wcet, self.deadline)


@dataclass(frozen=True)
class TaskSystem:
    """A set of sporadic tasks to be scheduled on `cpu_count` identical CPUs."""

    tasks: tuple[Task, ...]
    cpu_count: int

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        if self.cpu_count < 1:
            raise ValueError("cpu_count must be >= 1")
        seen = set()
        for t in self.tasks:
            if t.id in seen:
                raise ValueError(f"duplicate task id {t.id}")
            seen.add(t.id)

    @property
    def total_utilization(self) -> Fraction:
        return sum((t.utilization for t in self.tasks), Fraction(0))

    def task_by_id(self, tid: int) -> Task:
        for t in self.tasks:
            if t.id == tid:
                return t
        raise KeyError(f"no task with id {tid}")


def validate_system(tasks, cpu_count: int) -> TaskSystem:
    """Build a TaskSystem from raw (id, wcet, deadline, period) rows.

    Rejects empty systems, duplicate ids and per-task constraint violations
    with messages that name the offending task.
    """
    rows = list(tasks)
    if not rows:
        raise ValueError("task system is empty")
    built = []
    for row in rows:
        if isinstance(row, Task):
            built.append(row)
        else:
            tid, c, d, t = row
            built.append(Task(id=tid, wcet=c, deadline=d, period=t))
    return TaskSystem(tasks=tuple(built), cpu_count=cpu_count)


@dataclass(frozen=True)
class MultiframeTask:
    """Cyclic frame vector for one CPU's share of a migrating task.

    Frame j holds the WCET if the j-th job of each cycle runs on this CPU and
    0 otherwise, so all nonzero frames are equal. `deadline` and `period`
    are those of the source task and apply to each released job.
    """

    source_task_id: int
    frames: tuple[int, ...]
    deadline: int
    period: int

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if len(self.frames) < 1:
            raise ValueError(f"multiframe of task {self.source_task_id}: empty frame vector")
        if not 1 <= self.deadline <= self.period:
            raise ValueError(
                f"multiframe of task {self.source_task_id}: need 1 <= deadline <= period"
            )
        nonzero = [f for f in self.frames if f != 0]
        if any(f < 0 for f in self.frames):
            raise ValueError(f"multiframe of task {self.source_task_id}: negative frame")
        if len(set(nonzero)) > 1:
            raise ValueError(
                f"multiframe of task {self.source_task_id}: nonzero frames must be equal"
            )
        if nonzero and nonzero[0] > self.deadline:
            raise ValueError(
                f"multiframe of task {self.source_task_id}: frame wcet exceeds deadline"
            )

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    @property
    def job_count(self) -> int:
        """Jobs executed here per cycle of frame_count releases."""
        return sum(1 for f in self.frames if f != 0)

    @property
    def wcet(self) -> int:
        return max(self.frames)

    @property
    def utilization(self) -> Fraction:
        """Long-run share of this CPU: job_count*wcet / (frame_count*period)."""
        return Fraction(self.job_count * self.wcet, self.frame_count * self.period)


def packed_form(mf: MultiframeTask) -> MultiframeTask:
    """Rearrange the frames so all jobs sit at the start of the cycle.

    The packed form depends only on (job_count, frame_count, wcet), not on
    where the jobs fall. Its demand dominates the original arrangement.
    """
    ell = mf.job_count
    frames = (mf.wcet,) * ell + (0,) * (mf.frame_count - ell)
    return MultiframeTask(
        source_task_id=mf.source_task_id,
        frames=frames,
        deadline=mf.deadline,
        period=mf.period,
    )


class Status(enum.Enum):
    SCHEDULABLE = "schedulable"
    NOT_SCHEDULABLE = "not-schedulable"
    HORIZON_OVERFLOW = "horizon-overflow"


@dataclass(frozen=True)
class CpuFinding:
    """Per-CPU outcome of a schedulability test.

    `violation_time`/`demand` witness the first point with demand > t, if
    any. `truncated` marks a scan cut short by the horizon cap; a truncated
    scan with no violation is not a proof of schedulability.
    """

    cpu: int
    density: Fraction
    horizon: int
    truncated: bool = False
    violation_time: int | None = None
    demand: int | None = None


@dataclass(frozen=True)
class Verdict:
    status: Status
    per_cpu: tuple[CpuFinding, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status is Status.SCHEDULABLE


@dataclass(frozen=True)
class AssignmentPlan:
    """Placement produced by the partitioner.

    `fixed` maps non-migrating task ids to their CPU. For each migrating
    task id, `job_counts[tid][j]` is how many jobs per cycle CPU j executes,
    `sequences[tid]` is the cyclic CPU index per release (length = frame
    count), and `multiframes[tid][cpu]` holds that CPU's frame vector.
    """

    cpu_count: int
    frame_count: int
    fixed: dict[int, int] = field(default_factory=dict)
    job_counts: dict[int, tuple[int, ...]] = field(default_factory=dict)
    sequences: dict[int, tuple[int, ...]] = field(default_factory=dict)
    multiframes: dict[int, dict[int, MultiframeTask]] = field(default_factory=dict)

    def __post_init__(self):
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        for tid, cpu in self.fixed.items():
            if tid in self.job_counts:
                raise ValueError(f"task {tid}: both fixed and migrating")
            if not 0 <= cpu < self.cpu_count:
                raise ValueError(f"task {tid}: cpu {cpu} out of range")
        if set(self.sequences) != set(self.job_counts):
            raise ValueError("sequences and job_counts must cover the same tasks")
        for tid, counts in self.job_counts.items():
            if len(counts) != self.cpu_count:
                raise ValueError(f"task {tid}: job count row must have one entry per cpu")
            if sum(counts) != self.frame_count:
                raise ValueError(f"task {tid}: job counts must sum to frame_count")
            seq = self.sequences[tid]
            if len(seq) != self.frame_count:
                raise ValueError(f"task {tid}: sequence must cover all frames")
            if any(not 0 <= c < self.cpu_count for c in seq):
                raise ValueError(f"task {tid}: sequence names a cpu out of range")
            for j, cnt in enumerate(counts):
                if sum(1 for c in seq if c == j) != cnt:
                    raise ValueError(f"task {tid}: sequence disagrees with job counts")
            for cpu, mf in self.multiframes.get(tid, {}).items():
                if mf.frame_count != self.frame_count:
                    raise ValueError(f"task {tid}: frame vector length mismatch")
                slots = {p for p, f in enumerate(mf.frames) if f}
                if slots != {p for p, c in enumerate(seq) if c == cpu}:
                    raise ValueError(
                        f"task {tid}: cpu {cpu} frame vector disagrees with sequence"
                    )

    @property
    def migrating_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.job_counts))

    def cpu_of(self, tid: int, release_index: int) -> int:
        """CPU that executes the given release of a task."""
        if tid in self.fixed:
            return self.fixed[tid]
        seq = self.sequences[tid]
        return seq[release_index % len(seq)]
