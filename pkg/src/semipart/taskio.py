"""Reading and writing task-system and plan files.

Both formats are JSON documents. A task system is {"cpus": m, "K": k,
"tasks": [{"id", "C", "D", "T"}, ...]}. A plan stores the placement that
`analyze` found: fixed task -> cpu, plus per split task its per-CPU job
counts and cyclic cpu sequence; frame vectors are reconstructed from the
sequence and the source task, so a plan file is only meaningful next to
its system file. Unknown fields warn, missing fields are errors.
"""

import json
import warnings
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .model import AssignmentPlan, MultiframeTask, TaskSystem, validate_system


class TaskFileError(ValueError):
    """Malformed system or plan document."""


class UnknownFieldWarning(UserWarning):
    """A document carried fields the schema does not define."""


class TaskRecord(BaseModel):
    model_config = ConfigDict(extra="allow")
    id: int
    C: int
    D: int
    T: int


class SystemDoc(BaseModel):
    model_config = ConfigDict(extra="allow")
    cpus: int = Field(ge=1)
    K: int = Field(ge=1)
    tasks: list[TaskRecord]


class PlanDoc(BaseModel):
    model_config = ConfigDict(extra="allow")
    cpus: int = Field(ge=1)
    K: int = Field(ge=1)
    fixed: dict[int, int] = {}
    jobs: dict[int, list[int]] = {}
    sequence: dict[int, list[int]] = {}


def _warn_extras(doc, where: str) -> None:
    extras = sorted((doc.model_extra or {}).keys())
    if extras:
        warnings.warn(
            f"{where}: ignoring unknown fields {extras}", UnknownFieldWarning, stacklevel=3
        )


def _parse(text: str, model, where: str):
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise TaskFileError(f"{where}: not valid JSON ({e})") from e
    try:
        doc = model.model_validate(raw)
    except ValidationError as e:
        raise TaskFileError(f"{where}: {e}") from e
    _warn_extras(doc, where)
    return doc


def system_from_doc(doc: SystemDoc) -> tuple[TaskSystem, int]:
    for rec in doc.tasks:
        _warn_extras(rec, f"task {rec.id}")
    try:
        system = validate_system(
            [(rec.id, rec.C, rec.D, rec.T) for rec in doc.tasks], doc.cpus
        )
    except ValueError as e:
        raise TaskFileError(str(e)) from e
    return system, doc.K


def system_to_doc(system: TaskSystem, frame_count: int) -> SystemDoc:
    return SystemDoc(
        cpus=system.cpu_count,
        K=frame_count,
        tasks=[
            TaskRecord(id=t.id, C=t.wcet, D=t.deadline, T=t.period)
            for t in system.tasks
        ],
    )


def load_system(path) -> tuple[TaskSystem, int]:
    """Parse a task-system file; returns the system and its frame count K."""
    text = Path(path).read_text()
    return system_from_doc(_parse(text, SystemDoc, str(path)))


def dump_doc(doc: BaseModel) -> str:
    return json.dumps(doc.model_dump(), indent=2, sort_keys=True) + "\n"


def save_system(system: TaskSystem, frame_count: int, path) -> None:
    Path(path).write_text(dump_doc(system_to_doc(system, frame_count)))


def plan_to_doc(plan: AssignmentPlan) -> PlanDoc:
    return PlanDoc(
        cpus=plan.cpu_count,
        K=plan.frame_count,
        fixed=dict(sorted(plan.fixed.items())),
        jobs={tid: list(plan.job_counts[tid]) for tid in sorted(plan.job_counts)},
        sequence={tid: list(plan.sequences[tid]) for tid in sorted(plan.sequences)},
    )


def plan_from_doc(doc: PlanDoc, system: TaskSystem) -> AssignmentPlan:
    multiframes = {}
    for tid, seq in doc.sequence.items():
        try:
            task = system.task_by_id(tid)
        except KeyError as e:
            raise TaskFileError(f"plan references unknown task {tid}") from e
        per_cpu = {}
        for cpu in sorted(set(seq)):
            frames = tuple(task.wcet if c == cpu else 0 for c in seq)
            per_cpu[cpu] = MultiframeTask(
                source_task_id=tid,
                frames=frames,
                deadline=task.deadline,
                period=task.period,
            )
        multiframes[tid] = per_cpu
    try:
        return AssignmentPlan(
            cpu_count=doc.cpus,
            frame_count=doc.K,
            fixed=dict(doc.fixed),
            job_counts={tid: tuple(row) for tid, row in doc.jobs.items()},
            sequences={tid: tuple(seq) for tid, seq in doc.sequence.items()},
            multiframes=multiframes,
        )
    except ValueError as e:
        raise TaskFileError(f"inconsistent plan: {e}") from e


def load_plan(path, system: TaskSystem) -> AssignmentPlan:
    """Parse a plan file against the system it was computed for."""
    text = Path(path).read_text()
    return plan_from_doc(_parse(text, PlanDoc, str(path)), system)


def save_plan(plan: AssignmentPlan, path) -> None:
    Path(path).write_text(dump_doc(plan_to_doc(plan)))
