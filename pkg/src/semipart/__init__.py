"""Schedulability analysis for semi-partitioned EDF with restricted migrations."""

from .assign import (
    BitPattern,
    MigratingAssignment,
    ffd_assign,
    flatten_sequence,
    incremental_assign,
    merge_frames,
    most_regular_assign,
    realized_workloads,
    regular_pattern,
    semi_partition,
)
from .demand import (
    DEFAULT_CAP,
    CpuWorkload,
    TestMode,
    TestPoints,
    dbf_classic,
    dbf_packed,
    dbf_pattern,
    load,
    residual_job_count,
    schedulability_test,
    super_period_count,
    test_points,
    window_demand,
)
from .experiment import SweepConfig, SweepRow, generate_task_system, run_sweep, write_table
from .model import (
    AssignmentPlan,
    CpuFinding,
    HorizonOverflowError,
    MultiframeTask,
    Status,
    Task,
    TaskSystem,
    Verdict,
    packed_form,
    validate_system,
)
from .sim import (
    DeadlineMiss,
    SimConfig,
    SimReport,
    SporadicSeeded,
    SynchronousPeriodic,
    TraceEvent,
    run_simulation,
)

__version__ = "0.1.0"
