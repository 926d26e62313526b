"""FastAPI service exposing the simulator to HTTP clients.

The CLI drives this app in-process by default; ``beamalign serve`` publishes
it on a socket for remote clients.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..errors import BeamAlignError
from ..experiments import (
    dump_channel_grids,
    dump_transform_data,
    load_config,
    run_experiment,
    run_gradient_check,
)
from ..geometry import SceneConfig
from .schemas import (
    ChannelDumpRequest,
    ChannelDumpResponse,
    ExperimentRequest,
    ExperimentResponse,
    GradientCheckRequest,
    GradientCheckResponse,
    HealthResponse,
    ResultRowModel,
    SceneRequest,
    TransformDumpResponse,
)

app = FastAPI(
    title="beamalign",
    description="Near-field MIMO beam alignment experiments",
    version=__version__,
)


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/experiments/run", response_model=ExperimentResponse)
def experiments_run(request: ExperimentRequest) -> ExperimentResponse:
    payload = request.model_dump()
    try:
        config = load_config(payload)
        result = run_experiment(config)
    except BeamAlignError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    rows = [
        ResultRowModel(
            sweep_variable=r.sweep_variable,
            sweep_value=r.sweep_value,
            policy=r.policy,
            round=r.round,
            mean_throughput=r.mean_throughput,
            std_throughput=r.std_throughput,
            n=r.n,
        )
        for r in result.rows
    ]
    return ExperimentResponse(base_seed=result.base_seed, config=result.config, rows=rows)


def _scene_from(request: SceneRequest) -> SceneConfig:
    return SceneConfig(
        carrier_frequency=request.carrier_frequency,
        distance=request.distance,
        angle=request.angle,
        bs_antennas=request.bs_antennas,
        ue_antennas=request.ue_antennas,
        spacing_fraction=request.spacing_fraction,
    )


@app.post("/dumps/channel", response_model=ChannelDumpResponse)
def dumps_channel(request: ChannelDumpRequest) -> ChannelDumpResponse:
    try:
        scene = _scene_from(request)
        data = dump_channel_grids(
            scene, request.scatterer_count, request.scatterer_variance, request.seed
        )
    except BeamAlignError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return ChannelDumpResponse(**data)


@app.post("/dumps/transform", response_model=TransformDumpResponse)
def dumps_transform(request: SceneRequest) -> TransformDumpResponse:
    try:
        data = dump_transform_data(_scene_from(request))
    except BeamAlignError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return TransformDumpResponse(**data)


@app.post("/checks/gradients", response_model=GradientCheckResponse)
def checks_gradients(request: GradientCheckRequest) -> GradientCheckResponse:
    report = run_gradient_check(
        trials=request.trials,
        seed=request.seed,
        step=request.step,
        threshold=request.threshold,
    )
    return GradientCheckResponse(**report)
