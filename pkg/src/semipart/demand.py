"""Demand bound functions and processor-demand schedulability tests.

A CPU's workload is a set of fixed sporadic tasks plus cyclic frame vectors
left there by migrating tasks. The test checks sum-of-demand <= t at every
candidate deadline up to a horizon; two demand models are supported for the
frame vectors:

* packed: only the number of jobs per cycle matters, all jobs are assumed
  to arrive back to back at the start of the cycle (pessimistic but cheap);
* pattern: the actual frame positions are used, demand over the cycle
  residue is the worst contiguous window of the frame vector.

Pattern demand never exceeds packed demand for the same vector.
"""

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .model import (
    CpuFinding,
    HorizonOverflowError,
    MultiframeTask,
    Status,
    Task,
    Verdict,
)

DEFAULT_CAP = 10**8

# points per numpy chunk when scanning candidate deadlines
_CHUNK_POINTS = 1_500_000


class TestMode(Enum):
    __test__ = False  # keep pytest from collecting this as a test class

    PACKED = "packed"
    PATTERN = "pattern"


def dbf_classic(task: Task, time: int) -> int:
    """Max demand of a sporadic task over any interval of the given length."""
    if time < 0:
        raise ValueError("time must be >= 0")
    jobs = (time - task.deadline) // task.period + 1
    return max(0, jobs) * task.wcet


def super_period_count(time: int, frame_count: int, period: int) -> int:
    """Full cycles of `frame_count` releases that fit in the interval."""
    return time // (frame_count * period)


def residual_job_count(time: int, frame_count: int, period: int, deadline: int) -> int:
    """Deadlines inside the partial cycle at the end of the interval.

    Clamped below at 0 for intervals shorter than one deadline; for
    deadline <= period the value never exceeds frame_count.
    """
    rem = time % (frame_count * period)
    return max(0, (rem - deadline) // period + 1)


def dbf_packed(mf: MultiframeTask, time: int) -> int:
    """Demand of a frame vector assuming all jobs sit at the cycle start."""
    if time < 0:
        raise ValueError("time must be >= 0")
    k, ell, c = mf.frame_count, mf.job_count, mf.wcet
    s = super_period_count(time, k, mf.period)
    a = residual_job_count(time, k, mf.period, mf.deadline)
    return s * ell * c + min(ell, a) * c


@lru_cache(maxsize=4096)
def _window_table(frames: tuple[int, ...]) -> tuple[int, ...]:
    """table[w] = worst sum of w consecutive frames, wrapping cyclically."""
    k = len(frames)
    ext = frames + frames
    prefix = [0]
    for f in ext:
        prefix.append(prefix[-1] + f)
    table = [0] * (k + 1)
    for w in range(1, k + 1):
        table[w] = max(prefix[c + w] - prefix[c] for c in range(k))
    return tuple(table)


def window_demand(frames, width: int) -> int:
    """Worst sum of `width` consecutive frames of a cyclic vector."""
    frames = tuple(frames)
    if not 0 <= width <= len(frames):
        raise ValueError("width must be between 0 and the frame count")
    return _window_table(frames)[width]


def dbf_pattern(mf: MultiframeTask, time: int) -> int:
    """Demand of a frame vector using the actual job positions.

    Whole cycles contribute job_count*wcet each; the trailing partial cycle
    contributes the worst window of as many consecutive frames as have
    deadlines inside it.
    """
    if time < 0:
        raise ValueError("time must be >= 0")
    k = mf.frame_count
    s = super_period_count(time, k, mf.period)
    nb = residual_job_count(time, k, mf.period, mf.deadline)
    base = s * mf.job_count * mf.wcet
    return base + window_demand(mf.frames, min(nb, k))


@dataclass(frozen=True)
class CpuWorkload:
    """Everything one CPU has to schedule."""

    fixed_tasks: tuple[Task, ...] = ()
    multiframes: tuple[MultiframeTask, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "fixed_tasks", tuple(self.fixed_tasks))
        object.__setattr__(self, "multiframes", tuple(self.multiframes))
        counts = {mf.frame_count for mf in self.multiframes}
        if len(counts) > 1:
            raise ValueError("all frame vectors on a CPU must share one frame count")

    def with_fixed(self, task: Task) -> "CpuWorkload":
        return CpuWorkload(self.fixed_tasks + (task,), self.multiframes)

    def with_multiframe(self, mf: MultiframeTask) -> "CpuWorkload":
        return CpuWorkload(self.fixed_tasks, self.multiframes + (mf,))

    @property
    def density(self) -> Fraction:
        """Long-run demand rate; above 1 the CPU is overloaded."""
        total = sum((t.utilization for t in self.fixed_tasks), Fraction(0))
        return total + sum((mf.utilization for mf in self.multiframes), Fraction(0))

    @property
    def hyperperiod(self) -> int:
        spans = [t.period for t in self.fixed_tasks]
        spans += [mf.frame_count * mf.period for mf in self.multiframes]
        return math.lcm(*spans) if spans else 1

    def demand(self, time: int, mode) -> int:
        """Total demand of the workload over an interval of the given length."""
        mode = TestMode(mode)
        total = sum(dbf_classic(t, time) for t in self.fixed_tasks)
        for mf in self.multiframes:
            if mode is TestMode.PACKED:
                total += dbf_packed(mf, time)
            else:
                total += dbf_pattern(mf, time)
        return total


@dataclass(frozen=True)
class TestPoints:
    __test__ = False  # keep pytest from collecting this as a test class

    times: tuple[int, ...]
    horizon: int
    truncated: bool


def test_points(workload: CpuWorkload, cap: int = DEFAULT_CAP) -> TestPoints:
    """Candidate deadlines of a workload up to min(hyperperiod, cap)."""
    full = workload.hyperperiod
    horizon = min(full, cap)
    pts = set()
    members = [(t.deadline, t.period) for t in workload.fixed_tasks]
    members += [(mf.deadline, mf.period) for mf in workload.multiframes]
    for d, t in members:
        pts.update(range(d, horizon + 1, t))
    return TestPoints(tuple(sorted(pts)), horizon, full > cap)


test_points.__test__ = False  # not a test, despite what the name suggests to pytest


def _deadline_chunk(members, lo: int, hi: int) -> np.ndarray:
    """Ascending unique absolute deadlines in [lo, hi]."""
    arrays = []
    for d, t in members:
        q0 = max(0, -((d - lo) // t))
        start = d + q0 * t
        if start <= hi:
            arrays.append(np.arange(start, hi + 1, t, dtype=np.int64))
    if not arrays:
        return np.empty(0, dtype=np.int64)
    return np.unique(np.concatenate(arrays))


def _demand_vector(workload: CpuWorkload, mode: TestMode, ts: np.ndarray) -> np.ndarray:
    total = np.zeros(len(ts), dtype=np.int64)
    for task in workload.fixed_tasks:
        jobs = (ts - task.deadline) // task.period + 1
        np.maximum(jobs, 0, out=jobs)
        total += jobs * task.wcet
    for mf in workload.multiframes:
        k, c = mf.frame_count, mf.wcet
        cycle = k * mf.period
        s = ts // cycle
        rem = ts - s * cycle
        nb = (rem - mf.deadline) // mf.period + 1
        np.maximum(nb, 0, out=nb)
        total += s * (mf.job_count * c)
        if mode is TestMode.PACKED:
            total += np.minimum(nb, mf.job_count) * c
        else:
            table = np.asarray(_window_table(mf.frames), dtype=np.int64)
            total += table[nb]
    return total


def _scan_chunks(workload: CpuWorkload, mode: TestMode, limit: int):
    """Yield (times, demands) over (0, limit] in bounded-size chunks."""
    members = [(t.deadline, t.period) for t in workload.fixed_tasks]
    members += [(mf.deadline, mf.period) for mf in workload.multiframes]
    rate = sum(Fraction(1, t) for _, t in members)
    if rate == 0:
        return
    span = max(int(_CHUNK_POINTS / rate), max(t for _, t in members))
    lo = 1
    while lo <= limit:
        hi = min(lo + span - 1, limit)
        ts = _deadline_chunk(members, lo, hi)
        if len(ts):
            yield ts, _demand_vector(workload, mode, ts)
        lo = hi + 1


def _violation_bound(workload: CpuWorkload, density: Fraction) -> int | None:
    """Upper bound on the first demand violation, or None if unbounded.

    demand(t) <= density*t + slack for every t, where the slack collects the
    per-task constants, so any violation lies below slack/(1 - density).
    """
    if density >= 1:
        return None
    slack = Fraction(0)
    for t in workload.fixed_tasks:
        slack += t.utilization * (t.period - t.deadline)
    for mf in workload.multiframes:
        slack += mf.job_count * mf.wcet
    return int(slack / (1 - density))


def schedulability_test(
    workload: CpuWorkload, mode, cap: int = DEFAULT_CAP, cpu_index: int = 0
) -> Verdict:
    """Processor-demand test for one CPU's workload.

    Returns SCHEDULABLE when no candidate deadline in the decision horizon
    has demand exceeding interval length, NOT_SCHEDULABLE with the first
    violating point (or a failed rate precheck) as witness, and
    HORIZON_OVERFLOW when the horizon had to be truncated at `cap` before a
    decision was reached.
    """
    mode = TestMode(mode)
    density = workload.density
    if density > 1:
        finding = CpuFinding(cpu=cpu_index, density=density, horizon=0)
        return Verdict(Status.NOT_SCHEDULABLE, (finding,))

    full = workload.hyperperiod
    if not workload.multiframes and all(
        t.deadline == t.period for t in workload.fixed_tasks
    ):
        # implicit deadlines: demand(t) <= density*t at every point, exactly
        finding = CpuFinding(cpu=cpu_index, density=density, horizon=full)
        return Verdict(Status.SCHEDULABLE, (finding,))

    needed = full
    bound = _violation_bound(workload, density)
    if bound is not None:
        needed = min(needed, bound)
    limit = min(needed, cap)
    truncated = needed > cap

    for ts, demands in _scan_chunks(workload, mode, limit):
        bad = demands > ts
        if bad.any():
            i = int(np.argmax(bad))
            finding = CpuFinding(
                cpu=cpu_index,
                density=density,
                horizon=int(ts[i]),
                violation_time=int(ts[i]),
                demand=int(demands[i]),
            )
            return Verdict(Status.NOT_SCHEDULABLE, (finding,))

    finding = CpuFinding(
        cpu=cpu_index, density=density, horizon=limit, truncated=truncated
    )
    if truncated:
        return Verdict(Status.HORIZON_OVERFLOW, (finding,))
    return Verdict(Status.SCHEDULABLE, (finding,))


def load(workload: CpuWorkload, cap: int = DEFAULT_CAP) -> Fraction:
    """Peak demand-to-length ratio sup dbf(t)/t of a fixed-task workload.

    Exact rational result. Raises HorizonOverflowError when the hyperperiod
    exceeds `cap`, since the peak is only guaranteed inside one hyperperiod.
    """
    if workload.multiframes:
        raise ValueError("load is defined for fixed-task workloads only")
    if not workload.fixed_tasks:
        return Fraction(0)
    if all(t.deadline == t.period for t in workload.fixed_tasks):
        return workload.density
    full = workload.hyperperiod
    if full > cap:
        raise HorizonOverflowError(
            f"hyperperiod {full} exceeds cap {cap}; load peak not reachable"
        )
    best = Fraction(0)
    for ts, demands in _scan_chunks(workload, TestMode.PATTERN, full):
        # float pass to shortlist candidates, exact compare to decide
        ratios = demands / ts
        top = ratios.max()
        for i in np.nonzero(ratios >= top - 1e-9)[0]:
            cand = Fraction(int(demands[i]), int(ts[i]))
            if cand > best:
                best = cand
    return best
