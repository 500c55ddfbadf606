import random

import pytest

from semipart.assign import realized_workloads, semi_partition
from semipart.demand import TestMode, schedulability_test
from semipart.model import AssignmentPlan, MultiframeTask, Status, Task, TaskSystem
from semipart.sim import (
    DeadlineMiss,
    SimConfig,
    SporadicSeeded,
    SynchronousPeriodic,
    run_simulation,
)


def single_cpu_plan(*task_ids):
    return AssignmentPlan(1, 1, {tid: 0 for tid in task_ids})


def test_idle_system_reports_nothing():
    system = TaskSystem((Task(1, 1, 10, 10),), 1)
    rep = run_simulation(SimConfig(system, single_cpu_plan(1), 100))
    assert rep.misses == ()
    assert rep.migrations == 0
    assert rep.preemptions == 0
    assert rep.trace is None


def test_overload_misses_lower_priority_task():
    # identical deadlines: the id tie-break runs task 1 first, task 2 slips
    system = TaskSystem((Task(1, 3, 5, 5), Task(2, 3, 5, 5)), 1)
    rep = run_simulation(SimConfig(system, single_cpu_plan(1, 2), 6))
    assert rep.misses == (DeadlineMiss(2, 0, 0, 5, 6),)


def test_completion_at_deadline_is_a_meet():
    system = TaskSystem((Task(1, 2, 4, 4), Task(2, 2, 4, 4)), 1)
    rep = run_simulation(SimConfig(system, single_cpu_plan(1, 2), 40))
    assert rep.misses == ()


def test_unfinished_job_reported_with_none_completion():
    system = TaskSystem((Task(1, 10, 10, 10),), 1)
    plan = single_cpu_plan(1)
    rep = run_simulation(SimConfig(system, plan, 25))
    # third job releases at 20, deadline 30 > horizon: not judged
    assert all(m.deadline <= 25 for m in rep.misses)
    assert rep.misses == ()

    # shrink the wcet budget artificially via an overloaded pair instead
    system = TaskSystem((Task(1, 4, 5, 5), Task(2, 4, 5, 5)), 1)
    rep = run_simulation(SimConfig(system, single_cpu_plan(1, 2), 5))
    assert rep.misses == (DeadlineMiss(2, 0, 0, 5, None),)


def test_split_task_migrates_between_consecutive_jobs():
    frames0 = MultiframeTask(1, (2, 0, 2), 5, 5)
    frames1 = MultiframeTask(1, (0, 2, 0), 5, 5)
    plan = AssignmentPlan(2, 3, {}, {1: (2, 1)}, {1: (0, 1, 0)}, {1: {0: frames0, 1: frames1}})
    system = TaskSystem((Task(1, 2, 5, 5),), 2)
    rep = run_simulation(SimConfig(system, plan, 30))
    # jobs land on cpus 0,1,0,0,1,0: four consecutive-pair changes
    assert rep.migrations == 4
    assert rep.misses == ()
    assert rep.preemptions == 0


def test_preemption_counted_only_for_displaced_incomplete_jobs():
    system = TaskSystem((Task(1, 1, 2, 4), Task(2, 5, 10, 10)), 1)
    rep = run_simulation(SimConfig(system, single_cpu_plan(1, 2), 20), record_trace=True)
    assert rep.preemptions == 2
    assert rep.misses == ()
    preempt_times = [ev.time for ev in rep.trace if ev.kind == "preempt"]
    assert preempt_times == [4, 12]


def test_trace_orders_completions_before_releases():
    system = TaskSystem((Task(1, 2, 4, 4), Task(2, 2, 4, 4)), 1)
    plan = single_cpu_plan(1, 2)
    rep = run_simulation(SimConfig(system, plan, 16), record_trace=True)
    rank = {"complete": 0, "release": 1, "preempt": 2, "start": 2}
    last = None
    for ev in rep.trace:
        key = (ev.time, rank[ev.kind])
        assert last is None or key >= last
        last = key


def test_trace_jobs_never_change_cpu():
    system = TaskSystem((Task(1, 30, 40, 40), Task(2, 30, 40, 40), Task(3, 4, 10, 10)), 2)
    plan, verdict = semi_partition(system, 2, TestMode.PATTERN)
    assert verdict.ok
    rep = run_simulation(SimConfig(system, plan, 200), record_trace=True)
    assert rep.misses == ()
    seen = {}
    for ev in rep.trace:
        key = (ev.task_id, ev.job_index)
        assert seen.setdefault(key, ev.cpu) == ev.cpu
    # split task alternates cpus and releases every job
    releases = [ev for ev in rep.trace if ev.kind == "release" and ev.task_id == 3]
    assert [ev.cpu for ev in releases[:4]] == [0, 1, 0, 1]


def test_each_completed_job_runs_exactly_its_wcet():
    rng = random.Random(21)
    for _ in range(25):
        tasks = []
        for tid in range(1, rng.randint(2, 4) + 1):
            period = rng.randint(4, 12)
            deadline = rng.randint(2, period)
            wcet = rng.randint(1, max(1, deadline - 1))
            tasks.append(Task(tid, wcet, deadline, period))
        system = TaskSystem(tuple(tasks), 1)
        plan = single_cpu_plan(*[t.id for t in tasks])
        rep = run_simulation(SimConfig(system, plan, 60), record_trace=True)
        budget = {}
        started = {}
        for ev in rep.trace:
            key = (ev.task_id, ev.job_index)
            if ev.kind == "start":
                started[key] = ev.time
            elif ev.kind == "preempt":
                budget[key] = budget.get(key, 0) + ev.time - started.pop(key)
            elif ev.kind == "complete":
                budget[key] = budget.get(key, 0) + ev.time - started.pop(key)
                wcet = system.task_by_id(ev.task_id).wcet
                assert budget[key] == wcet


def test_analysis_verdict_matches_simulation_small_batch():
    rng = random.Random(22)
    agreed = 0
    for _ in range(30):
        tasks = []
        for tid in range(1, rng.randint(2, 5) + 1):
            period = rng.choice([4, 5, 8, 10])
            deadline = rng.randint(2, period)
            wcet = rng.randint(1, max(1, deadline // 2 + 1))
            if wcet > deadline:
                wcet = deadline
            tasks.append(Task(tid, wcet, deadline, period))
        system = TaskSystem(tuple(tasks), 2)
        k = rng.choice([1, 2, 4])
        plan, verdict = semi_partition(system, k, TestMode.PATTERN)
        if not verdict.ok:
            continue
        agreed += 1
        hyper = max(w.hyperperiod for w in realized_workloads(system, plan))
        rep = run_simulation(SimConfig(system, plan, 2 * hyper))
        assert rep.misses == (), f"analysis said schedulable, sim missed: {tasks}"
    assert agreed >= 8


def test_sporadic_zero_jitter_matches_synchronous():
    system = TaskSystem((Task(1, 2, 4, 4), Task(2, 3, 9, 9)), 1)
    plan = single_cpu_plan(1, 2)
    a = run_simulation(SimConfig(system, plan, 120, SynchronousPeriodic()), record_trace=True)
    b = run_simulation(SimConfig(system, plan, 120, SporadicSeeded(seed=7)), record_trace=True)
    assert a.trace == b.trace
    assert a.misses == b.misses


def test_sporadic_same_seed_is_deterministic():
    system = TaskSystem((Task(1, 2, 4, 6), Task(2, 3, 9, 9)), 1)
    plan = single_cpu_plan(1, 2)
    model = SporadicSeeded(seed=5, max_jitter=4)
    a = run_simulation(SimConfig(system, plan, 300, model), record_trace=True)
    b = run_simulation(SimConfig(system, plan, 300, model), record_trace=True)
    assert a.trace == b.trace


def test_sporadic_jitter_stretches_gaps():
    system = TaskSystem((Task(1, 1, 4, 4),), 1)
    plan = single_cpu_plan(1)
    rep = run_simulation(
        SimConfig(system, plan, 200, SporadicSeeded(seed=3, max_jitter=5)),
        record_trace=True,
    )
    arrivals = [ev.time for ev in rep.trace if ev.kind == "release"]
    gaps = [b - a for a, b in zip(arrivals, arrivals[1:])]
    assert gaps
    assert all(4 <= g <= 9 for g in gaps)
    assert any(g > 4 for g in gaps)  # seed 3 does produce jitter


def test_rejects_negative_jitter():
    with pytest.raises(ValueError):
        SporadicSeeded(seed=0, max_jitter=-1)


def test_rejects_nonpositive_horizon():
    system = TaskSystem((Task(1, 1, 4, 4),), 1)
    with pytest.raises(ValueError, match="horizon"):
        SimConfig(system, single_cpu_plan(1), 0)


def test_rejects_plan_cpu_count_mismatch():
    system = TaskSystem((Task(1, 1, 4, 4),), 2)
    plan = single_cpu_plan(1)
    with pytest.raises(ValueError, match="cpu count"):
        run_simulation(SimConfig(system, plan, 10))


def test_rejects_plan_missing_a_task():
    system = TaskSystem((Task(1, 1, 4, 4), Task(2, 1, 4, 4)), 1)
    with pytest.raises(ValueError, match="does not cover"):
        run_simulation(SimConfig(system, single_cpu_plan(1), 10))


def test_rejects_plan_with_unknown_task():
    system = TaskSystem((Task(1, 1, 4, 4),), 1)
    with pytest.raises(ValueError, match="unknown"):
        run_simulation(SimConfig(system, single_cpu_plan(1, 9), 10))
