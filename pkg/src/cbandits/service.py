"""HTTP service wrapping the library: lower-bound reports, experiment runs,
and plot-data extraction.

The CLI talks to this app (in-process by default); any HTTP client can use
it directly.  Instances travel inline as their JSON document, so the service
itself never touches the caller's filesystem except to write result bundles
when asked to.
"""

from __future__ import annotations

from typing import Any, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import analysis, harness
from .environment import BudgetViolation, parse_instance

app = FastAPI(
    title="cbandits",
    description="Constrained bandits with budget replenishment: LP lower "
    "bounds and block-UCB policy simulation",
)


class LowerBoundRequest(BaseModel):
    instance: dict[str, Any]


class LowerBoundResponse(BaseModel):
    z_star: float
    optimal_bases: list[list[int]]
    D: list[int]
    phi: dict[str, float]
    K: dict[str, float]
    M: float


class RunRequest(BaseModel):
    instance: dict[str, Any]
    horizon: int = Field(gt=0)
    replications: int = Field(ge=1)
    base_seed: int
    n0: int = 1
    mean_floor: float = 1e-6
    checkpoints: list[int] = Field(default_factory=list)
    check_identity_every_block: bool = False
    output_dir: Optional[str] = None
    instance_path: str = "<inline>"


class RunResponse(BaseModel):
    summary: dict[str, Any]
    raw_csv: str


class PlotDataRequest(BaseModel):
    summary: dict[str, Any]


class PlotDataResponse(BaseModel):
    csv: str
    rows: list[dict[str, float]]


def _parse_or_422(doc: dict):
    try:
        return parse_instance(doc)
    except (KeyError, ValueError, TypeError) as exc:
        raise HTTPException(status_code=422, detail=f"invalid instance: {exc}") from exc


@app.get("/health")
def health() -> dict[str, str]:
    return {"status": "ok"}


@app.post("/lower-bound", response_model=LowerBoundResponse)
def lower_bound(req: LowerBoundRequest) -> LowerBoundResponse:
    spec = _parse_or_422(req.instance)
    try:
        report = analysis.lower_bound_M(spec.instance, spec.family, spec.truth)
    except analysis.AmbiguousPhi as exc:
        raise HTTPException(status_code=409, detail=str(exc)) from exc
    doc = report.to_dict()
    return LowerBoundResponse(**doc)


@app.post("/run", response_model=RunResponse)
def run(req: RunRequest) -> RunResponse:
    spec = _parse_or_422(req.instance)
    config = harness.ExperimentConfig(
        instance_path=req.instance_path,
        horizon=req.horizon,
        replications=req.replications,
        base_seed=req.base_seed,
        n0=req.n0,
        mean_floor=req.mean_floor,
        checkpoints=tuple(req.checkpoints),
        output_dir=req.output_dir or "results",
        check_identity_every_block=req.check_identity_every_block,
    )
    try:
        bundle = harness.run_experiment(config, spec)
    except BudgetViolation as exc:
        raise HTTPException(
            status_code=500, detail=f"budget violation during simulation: {exc}"
        ) from exc
    if req.output_dir is not None:
        harness.write_bundle(bundle, req.output_dir)
    return RunResponse(summary=bundle.summary_doc(), raw_csv=harness.raw_csv_text(bundle))


@app.post("/plot-data", response_model=PlotDataResponse)
def plot_data(req: PlotDataRequest) -> PlotDataResponse:
    try:
        rows = harness.plot_data_rows(req.summary)
        text = harness.plot_data_csv(req.summary)
    except (KeyError, TypeError) as exc:
        raise HTTPException(status_code=422, detail=f"invalid bundle: {exc}") from exc
    return PlotDataResponse(csv=text, rows=rows)
