"""HTTP service exposing generation, analysis, simulation and sweeps.

Thin wrappers over the library: request/response bodies reuse the file
schemas where possible, so a body posted to /analyze is exactly the content
of a task-system file. Domain validation failures map to 400.
"""

import random
from fractions import Fraction

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import experiment, sim
from .assign import semi_partition
from .demand import DEFAULT_CAP, TestMode
from .model import AssignmentPlan, TaskSystem, Verdict
from .taskio import (
    PlanDoc,
    SystemDoc,
    TaskFileError,
    plan_from_doc,
    plan_to_doc,
    system_from_doc,
    system_to_doc,
)

app = FastAPI(title="semipart", version="0.1.0")


@app.exception_handler(ValueError)
async def _value_error(request: Request, exc: ValueError):
    # TaskFileError subclasses ValueError; both are caller mistakes
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.get("/health")
def health():
    return {"status": "ok"}


class GenerateRequest(BaseModel):
    cpus: int = Field(ge=1)
    util: float = Field(gt=0, le=1)
    seed: int = 0
    k: int = Field(default=2, ge=1)


@app.post("/generate", response_model=SystemDoc)
def generate(req: GenerateRequest) -> SystemDoc:
    rng = random.Random(req.seed)
    system = experiment.generate_task_system(req.cpus, req.util, rng)
    return system_to_doc(system, req.k)


class CpuFindingDoc(BaseModel):
    cpu: int
    density: str  # exact fraction, e.g. "117/121"
    horizon: int
    truncated: bool
    violation_time: int | None = None
    demand: int | None = None


class AnalyzeRequest(BaseModel):
    system: SystemDoc
    k: int | None = Field(default=None, ge=1)  # default: the file's K
    mode: str = "pattern"
    cap: int = Field(default=DEFAULT_CAP, ge=1)


class AnalyzeResponse(BaseModel):
    status: str
    schedulable: bool
    per_cpu: list[CpuFindingDoc]
    plan: PlanDoc


def _verdict_docs(verdict: Verdict) -> list[CpuFindingDoc]:
    return [
        CpuFindingDoc(
            cpu=f.cpu,
            density=str(f.density),
            horizon=f.horizon,
            truncated=f.truncated,
            violation_time=f.violation_time,
            demand=f.demand,
        )
        for f in verdict.per_cpu
    ]


def _analyze(system: TaskSystem, k: int, mode: str, cap: int) -> tuple[AssignmentPlan, Verdict]:
    return semi_partition(system, k, TestMode(mode), cap)


@app.post("/analyze", response_model=AnalyzeResponse)
def analyze(req: AnalyzeRequest) -> AnalyzeResponse:
    system, file_k = system_from_doc(req.system)
    k = req.k if req.k is not None else file_k
    plan, verdict = _analyze(system, k, req.mode, req.cap)
    return AnalyzeResponse(
        status=verdict.status.value,
        schedulable=verdict.ok,
        per_cpu=_verdict_docs(verdict),
        plan=plan_to_doc(plan),
    )


class MissDoc(BaseModel):
    task_id: int
    job_index: int
    cpu: int
    deadline: int
    completion: int | None


class SimulateRequest(BaseModel):
    system: SystemDoc
    plan: PlanDoc | None = None  # absent: run the partitioner first
    k: int | None = Field(default=None, ge=1)
    mode: str = "pattern"
    cap: int = Field(default=DEFAULT_CAP, ge=1)
    horizon: int = Field(ge=1)
    model: str = Field(default="synchronous", pattern="^(synchronous|sporadic)$")
    seed: int = 0
    max_jitter: int = Field(default=0, ge=0)


class SimulateResponse(BaseModel):
    ok: bool
    misses: list[MissDoc]
    migrations: int
    preemptions: int


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest) -> SimulateResponse:
    system, file_k = system_from_doc(req.system)
    if req.plan is not None:
        plan = plan_from_doc(req.plan, system)
    else:
        k = req.k if req.k is not None else file_k
        plan, verdict = _analyze(system, k, req.mode, req.cap)
        if not verdict.ok:
            raise TaskFileError(
                f"no plan supplied and the partitioner verdict is {verdict.status.value}"
            )
    release = (
        sim.SporadicSeeded(req.seed, req.max_jitter)
        if req.model == "sporadic"
        else sim.SynchronousPeriodic()
    )
    report = sim.run_simulation(
        sim.SimConfig(system=system, plan=plan, horizon=req.horizon, release_model=release)
    )
    return SimulateResponse(
        ok=not report.misses,
        misses=[
            MissDoc(
                task_id=miss.task_id,
                job_index=miss.job_index,
                cpu=miss.cpu,
                deadline=miss.deadline,
                completion=miss.completion,
            )
            for miss in report.misses
        ],
        migrations=report.migrations,
        preemptions=report.preemptions,
    )


class SweepRequest(BaseModel):
    cpus: list[int]
    fractions: list[str | float]
    k_values: list[int]
    modes: list[str] = list(experiment.MODES)
    trials: int = Field(default=20, ge=1)
    seed: int = 0
    cap: int = Field(default=DEFAULT_CAP, ge=1)


class SweepRowDoc(BaseModel):
    m: int
    fraction: str
    K: int
    mode: str
    trials: int
    successes: int
    overflows: int
    ratio: float


class SweepResponse(BaseModel):
    rows: list[SweepRowDoc]


@app.post("/sweep", response_model=SweepResponse)
def sweep(req: SweepRequest) -> SweepResponse:
    cfg = experiment.SweepConfig(
        cpu_counts=tuple(req.cpus),
        util_fractions=tuple(Fraction(str(f)) for f in req.fractions),
        k_values=tuple(req.k_values),
        modes=tuple(req.modes),
        trials=req.trials,
        seed=req.seed,
        cap=req.cap,
    )
    rows = experiment.run_sweep(cfg)
    return SweepResponse(
        rows=[
            SweepRowDoc(
                m=r.cpu_count,
                fraction=f"{float(r.fraction):.2f}",
                K=r.k,
                mode=r.mode,
                trials=r.trials,
                successes=r.successes,
                overflows=r.overflows,
                ratio=round(r.ratio, 4),
            )
            for r in rows
        ]
    )
