"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class SweepModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    variable: Literal["distance", "angle", "scatterers", "rounds"]
    values: list[float] = Field(min_length=1)


class ExperimentRequest(BaseModel):
    """Flat experiment configuration; defaults reproduce the stock scene."""

    model_config = ConfigDict(extra="forbid")

    carrier_frequency: float = 28e9
    distance: float = 15.0
    angle: float = math.pi / 2
    bs_antennas: int = 201
    ue_antennas: int = 201
    spacing_fraction: float = 0.5
    bs_power: float | str = "20dBm"
    ue_power: float | str = "20dBm"
    bs_noise_power: float | str = "-60dBm"
    ue_noise_power: float | str = "-60dBm"
    pilot_phase: float = 0.0
    rounds: int = 15
    scatterer_count: int = 3
    scatterer_variance: float = 0.01
    use_wtm: bool = True
    localization_error: float = 0.0
    bs_learning_rate: float = 0.005
    ue_learning_rate: float = 0.005
    seed: int = 0
    repeats: int = 20
    policies: list[str] = ["active", "ablation", "random", "svd-bound"]
    sweep: SweepModel | None = None


class ResultRowModel(BaseModel):
    sweep_variable: str
    sweep_value: float
    policy: str
    round: int
    mean_throughput: float
    std_throughput: float
    n: int


class ExperimentResponse(BaseModel):
    base_seed: int
    config: dict
    rows: list[ResultRowModel]


class SceneRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    carrier_frequency: float = 28e9
    distance: float = 15.0
    angle: float = math.pi / 2
    bs_antennas: int = 201
    ue_antennas: int = 201
    spacing_fraction: float = 0.5


class ChannelDumpRequest(SceneRequest):
    scatterer_count: int = 0
    scatterer_variance: float = 0.01
    seed: int = 0


class TransformDumpResponse(BaseModel):
    seed: int
    config: dict
    bs_full_indices: list[int]
    ue_full_indices: list[int]
    bs_truncated_indices: list[int]
    ue_truncated_indices: list[int]
    bs_bounds: list[float]
    ue_bounds: list[float]
    wavenumber_magnitude: list[list[float]]
    truncated_magnitude: list[list[float]]


class ChannelDumpResponse(TransformDumpResponse):
    antenna_magnitude: list[list[float]]


class GradientCheckRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    trials: int = 5
    seed: int = 7
    step: float = 1e-6
    threshold: float = 1e-5


class GradientCheckResponse(BaseModel):
    trials: int
    max_relative_error: float
    threshold: float
    passed: bool


class HealthResponse(BaseModel):
    status: str
    version: str
