"""Discrete-event simulation of per-CPU preemptive EDF under a placement plan.

Jobs of a fixed task always release onto its CPU; job q of a split task
releases onto the CPU its cyclic sequence names for slot q mod cycle. A job,
once released, runs to completion on that one CPU (restricted migrations:
only consecutive jobs of a task change CPUs). Every job consumes its full
WCET. The simulator is a falsifier: misses disprove an analysis verdict,
a clean run proves nothing.
"""

import heapq
import random
from dataclasses import dataclass

from .model import AssignmentPlan, TaskSystem


@dataclass(frozen=True)
class SynchronousPeriodic:
    """All first releases at t=0, inter-arrivals exactly the period."""


@dataclass(frozen=True)
class SporadicSeeded:
    """Inter-arrival = period + uniform jitter in [0, max_jitter], seeded."""

    seed: int
    max_jitter: int = 0

    def __post_init__(self):
        if self.max_jitter < 0:
            raise ValueError("max_jitter must be >= 0")


@dataclass(frozen=True)
class SimConfig:
    system: TaskSystem
    plan: AssignmentPlan
    horizon: int
    release_model: object = SynchronousPeriodic()

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be > 0")


@dataclass(frozen=True)
class DeadlineMiss:
    task_id: int
    job_index: int
    cpu: int
    deadline: int
    completion: int | None  # None = still unfinished at the horizon


@dataclass(frozen=True)
class TraceEvent:
    time: int
    kind: str  # release | start | preempt | complete
    task_id: int
    job_index: int
    cpu: int


@dataclass(frozen=True)
class SimReport:
    misses: tuple[DeadlineMiss, ...]
    migrations: int
    preemptions: int
    trace: tuple[TraceEvent, ...] | None = None


class _Job:
    __slots__ = ("task_id", "index", "cpu", "arrival", "deadline", "remaining", "completion")

    def __init__(self, task_id, index, cpu, arrival, deadline, wcet):
        self.task_id = task_id
        self.index = index
        self.cpu = cpu
        self.arrival = arrival
        self.deadline = deadline
        self.remaining = wcet
        self.completion = None

    @property
    def key(self):
        # EDF with deterministic tie-break
        return (self.deadline, self.task_id, self.index)


def _release_jobs(cfg: SimConfig) -> list[_Job]:
    model = cfg.release_model
    jobs = []
    for task in cfg.system.tasks:
        rng = None
        if isinstance(model, SporadicSeeded):
            rng = random.Random(f"{model.seed}:{task.id}")
        arrival = 0
        index = 0
        while arrival < cfg.horizon:
            cpu = cfg.plan.cpu_of(task.id, index)
            jobs.append(
                _Job(task.id, index, cpu, arrival, arrival + task.deadline, task.wcet)
            )
            gap = task.period
            if rng is not None:
                gap += rng.randint(0, model.max_jitter)
            arrival += gap
            index += 1
    jobs.sort(key=lambda j: (j.arrival, j.task_id, j.index))
    return jobs


def run_simulation(cfg: SimConfig, record_trace: bool = False) -> SimReport:
    """Simulate the plan and report misses, migrations and preemptions.

    Events are handled in time order; at one instant completions are
    processed before releases, so a deadline is met exactly when the job
    finishes no later than it.
    """
    system, plan = cfg.system, cfg.plan
    if plan.cpu_count != system.cpu_count:
        raise ValueError("plan and system disagree on cpu count")
    ids = {t.id for t in system.tasks}
    planned = set(plan.fixed) | set(plan.job_counts)
    if planned - ids:
        raise ValueError(f"plan references unknown tasks {sorted(planned - ids)}")
    if ids - planned:
        raise ValueError(f"plan does not cover tasks {sorted(ids - planned)}")

    jobs = _release_jobs(cfg)
    ready: list[list] = [[] for _ in range(system.cpu_count)]
    running: list[_Job | None] = [None] * system.cpu_count
    trace: list[TraceEvent] = []
    preemptions = 0
    now = 0
    next_release = 0
    INF = float("inf")

    def emit(kind, job, time):
        if record_trace:
            trace.append(TraceEvent(time, kind, job.task_id, job.index, job.cpu))

    while True:
        candidates = [jobs[next_release].arrival] if next_release < len(jobs) else []
        candidates += [now + running[c].remaining for c in range(system.cpu_count) if running[c]]
        t = min(candidates, default=INF)
        if t is INF or t > cfg.horizon:
            break
        for c in range(system.cpu_count):
            if running[c]:
                running[c].remaining -= t - now
        now = t
        for c in range(system.cpu_count):
            job = running[c]
            if job and job.remaining == 0:
                job.completion = now
                heapq.heappop(ready[c])
                running[c] = None
                emit("complete", job, now)
        while next_release < len(jobs) and jobs[next_release].arrival == now:
            job = jobs[next_release]
            heapq.heappush(ready[job.cpu], (job.key, job))
            emit("release", job, now)
            next_release += 1
        for c in range(system.cpu_count):
            top = ready[c][0][1] if ready[c] else None
            if top is running[c]:
                continue
            if running[c] is not None:
                preemptions += 1
                emit("preempt", running[c], now)
            if top is not None:
                emit("start", top, now)
            running[c] = top

    misses = tuple(
        DeadlineMiss(j.task_id, j.index, j.cpu, j.deadline, j.completion)
        for j in sorted(jobs, key=lambda j: (j.deadline, j.task_id, j.index))
        if j.deadline <= cfg.horizon
        and (j.completion is None or j.completion > j.deadline)
    )

    migrations = 0
    per_task_cpus: dict[int, list[int]] = {}
    for j in jobs:
        per_task_cpus.setdefault(j.task_id, []).append(j.cpu)
    for cpus in per_task_cpus.values():
        migrations += sum(1 for a, b in zip(cpus, cpus[1:]) if a != b)

    return SimReport(
        misses=misses,
        migrations=migrations,
        preemptions=preemptions,
        trace=tuple(trace) if record_trace else None,
    )
