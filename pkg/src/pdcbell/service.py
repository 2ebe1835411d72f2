"""HTTP service wrapping the toolkit: simulation, analysis, bound
evaluation and the LHV conformance verifier."""
from __future__ import annotations

from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import lhv
from .core import DetectionEfficiency, ExperimentConfig, UncertainValue
from .errors import PdcBellError
from .inequalities import (bound_D, bound_F, evaluate_santos1,
                           evaluate_santos2, santos1_from_visibilities,
                           sinc2_threshold)
from .pipeline import (CSV_HEADER, IngestedRecords, parse_rows, round_sig,
                       run_report, simulate_records)

app = FastAPI(title="pdcbell", version="0.1.0")


class ExperimentConfigModel(BaseModel):
    pair_rate_R0: float = 2000.0
    eta_t: float = 0.62
    eta_r: float = 0.62
    state_visibility_V: float = 0.978
    repetition_rate: float = 70e6
    window_ns: float = 20.0
    acquisitions: int = 30
    acquisition_duration_s: float = 30.0
    background_rate: float = 0.0
    seed: int = 0

    def to_config(self) -> ExperimentConfig:
        data = self.model_dump()
        data["eta_t"] = DetectionEfficiency(data["eta_t"])
        data["eta_r"] = DetectionEfficiency(data["eta_r"])
        return ExperimentConfig(**data)


class CountRecordModel(BaseModel):
    angle_rad: float
    label: Literal["signal", "background"]
    singles_t: int
    singles_r: int
    coincidences: int
    valid_starts: int
    duration_s: float


class SimulateRequest(BaseModel):
    config: ExperimentConfigModel = Field(default_factory=ExperimentConfigModel)
    n: int = 8
    seed: Optional[int] = None  # overrides config.seed when given
    workers: int = 1


class SimulateResponse(BaseModel):
    records: list[CountRecordModel]


class AnalyzeRequest(BaseModel):
    records: list[CountRecordModel]
    eta: float = 0.62
    r_tot: Optional[float] = None
    r_tot_sigma: float = 0.0
    provenance: dict = Field(default_factory=dict)


class UncertainModel(BaseModel):
    value: float
    sigma: float = 0.0


class BoundsRequest(BaseModel):
    eta: float
    vb: Optional[UncertainModel] = None   # visibility feeding F
    v: Optional[UncertainModel] = None    # fringe parameter feeding D


class Santos1Request(BaseModel):
    va: float
    va_sigma: float = 0.0
    vb: float
    vb_sigma: float = 0.0
    eta: float = 0.62


class VerifyLhvRequest(BaseModel):
    family: Literal["one-tier", "two-tier"] = "one-tier"
    etas: list[float] = Field(default_factory=lambda: [0.4, 0.62, 0.9])
    models: int = 200
    seed0: int = 0
    n: int = 8
    nodes_per_axis: int = 256
    tolerance_violation: float = 1e-6


def _fail(exc: Exception, status: int = 422):
    raise HTTPException(status_code=status,
                        detail={"error": type(exc).__name__, "message": str(exc)})


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest):
    try:
        cfg = req.config.to_config()
        seed = req.seed if req.seed is not None else cfg.seed
        rows = simulate_records(cfg, req.n, seed, workers=req.workers)
    except PdcBellError as exc:
        _fail(exc)
    return SimulateResponse(records=[CountRecordModel(**row) for row in rows])


@app.post("/analyze")
def analyze(req: AnalyzeRequest):
    try:
        ingested = parse_rows([r.model_dump() for r in req.records])
        r_tot = None
        if req.r_tot is not None:
            r_tot = UncertainValue(req.r_tot, req.r_tot_sigma)
        report = run_report(ingested, req.eta, r_tot=r_tot,
                            provenance=req.provenance)
    except PdcBellError as exc:
        _fail(exc)
    return round_sig(report)


@app.post("/bounds")
def bounds(req: BoundsRequest):
    try:
        eta = DetectionEfficiency(req.eta)
        out = {"eta": eta.eta, "threshold_sinc2": sinc2_threshold(eta)}
        if req.vb is not None:
            f = bound_F(eta, UncertainValue(req.vb.value, req.vb.sigma))
            out["F"] = {"value": f.value, "sigma": f.sigma, "vb": req.vb.value}
        if req.v is not None:
            d = bound_D(eta, UncertainValue(req.v.value, req.v.sigma))
            out["D"] = {"value": d.value, "sigma": d.sigma, "v": req.v.value}
    except PdcBellError as exc:
        _fail(exc)
    return round_sig(out, 9)


@app.post("/santos1")
def santos1(req: Santos1Request):
    try:
        res = santos1_from_visibilities(
            UncertainValue(req.va, req.va_sigma),
            UncertainValue(req.vb, req.vb_sigma),
            DetectionEfficiency(req.eta))
    except PdcBellError as exc:
        _fail(exc)
    return round_sig(res.to_dict())


@app.post("/verify-lhv")
def verify_lhv(req: VerifyLhvRequest):
    try:
        summary = run_lhv_verification(
            family=req.family, etas=req.etas, models=req.models,
            seed0=req.seed0, n=req.n, nodes_per_axis=req.nodes_per_axis,
            tol=req.tolerance_violation)
    except PdcBellError as exc:
        _fail(exc)
    return round_sig(summary, 9)


def run_lhv_verification(family: str, etas: list[float], models: int,
                         seed0: int = 0, n: int = 8,
                         nodes_per_axis: int = 256,
                         tol: float = 1e-6) -> dict:
    """Sample admissible models and check the matching inequality bound
    on each; violations beyond tol are findings, reported, never hidden."""
    quad = lhv.QuadratureSpec(nodes_per_axis=nodes_per_axis)
    findings = []
    checked = 0
    worst = -float("inf")
    for eta in etas:
        for i in range(models):
            seed = seed0 + i
            model = lhv.sample_admissible_model(seed, eta, family=family)
            if family == "two-tier":
                scan = lhv.model_scan(lhv.effective_response(model, quad), n, quad)
                res = evaluate_santos2(scan, eta)
            else:
                scan = lhv.model_scan(model, n, quad)
                res = evaluate_santos1(scan, eta)
            v = res.violation.value
            checked += 1
            worst = max(worst, v)
            if v > tol:
                findings.append({"seed": seed, "eta": eta, "violation": v})
    return {"family": family, "models_checked": checked,
            "etas": list(etas),
            "max_violation": worst,
            "tolerance": tol,
            "violations": findings,
            "conforms": not findings}
