"""Experiment orchestration: seeded repetitions, parameter sweeps, output files.

Every run is reproducible from its base seed: repeat ``r`` draws its channel
from seed ``base + r`` and feeds the same seed to the alignment loop, so all
policies of a repeat see identical channels and noise.  Aggregation is keyed
by repeat index, making the result independent of execution order.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .alignment import AlignmentConfig, run_alignment, throughput
from .baselines import random_beams, svd_optimal_bound
from .channel import PilotConfig, assemble_channel, dbm_to_watts
from .errors import ConfigError
from .geometry import SceneConfig, build_scene
from .mapper import (
    finite_difference_gradients,
    init_params,
    loss_and_gradient,
    max_relative_gradient_error,
)
from .wavenumber import (
    TransformOperator,
    WavenumberIndexSet,
    build_transform,
    full_index_set,
    los_truncated_index_set,
    project_to_wavenumber,
)

TRACE_POLICIES = ("active", "ablation")
SCALAR_POLICIES = ("random", "svd-bound")
ALL_POLICIES = TRACE_POLICIES + SCALAR_POLICIES
SWEEP_VARIABLES = ("distance", "angle", "scatterers", "rounds")

# rng stream offset for the random-beam policy (the alignment loop owns 1-3)
_RANDOM_POLICY_STREAM = 4


@dataclass
class SweepSpec:
    variable: str
    values: list

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(
                f"sweep variable must be one of {SWEEP_VARIABLES}, got {self.variable!r}"
            )
        if not self.values:
            raise ConfigError("sweep values must be a non-empty list")
        for v in self.values:
            if self.variable == "distance" and v <= 0:
                raise ConfigError(f"sweep distance must be positive, got {v}")
            if self.variable == "angle" and not 0 < v < math.pi:
                raise ConfigError(f"sweep angle must lie in (0, pi), got {v}")
            if self.variable == "scatterers" and (int(v) != v or v < 0):
                raise ConfigError(f"scatterer counts must be non-negative integers, got {v}")
            if self.variable == "rounds" and (int(v) != v or v < 1):
                raise ConfigError(f"round counts must be positive integers, got {v}")


@dataclass
class ExperimentConfig:
    alignment: AlignmentConfig = field(default_factory=AlignmentConfig)
    repeats: int = 20
    policies: list = field(default_factory=lambda: list(ALL_POLICIES))
    sweep: SweepSpec | None = None
    output_path: str | None = None
    output_format: str = "csv"

    def __post_init__(self):
        if self.repeats < 1:
            raise ConfigError(f"repeats must be at least 1, got {self.repeats}")
        if not self.policies:
            raise ConfigError("at least one policy is required")
        for p in self.policies:
            if p not in ALL_POLICIES:
                raise ConfigError(f"unknown policy {p!r}; choose from {ALL_POLICIES}")
        if self.output_format not in ("csv", "json"):
            raise ConfigError(f"output_format must be 'csv' or 'json', got {self.output_format}")


@dataclass
class ResultRow:
    sweep_variable: str
    sweep_value: float
    policy: str
    round: int
    mean_throughput: float
    std_throughput: float
    n: int


@dataclass
class AggregateResult:
    base_seed: int
    config: dict
    rows: list


def parse_power(value) -> float:
    """Power in watts from a number or a '<x>dBm' string."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if value < 0:
            raise ConfigError(f"power in watts must be non-negative, got {value}")
        return float(value)
    if isinstance(value, str):
        text = value.strip().lower()
        if text.endswith("dbm"):
            try:
                return dbm_to_watts(float(text[:-3]))
            except ValueError:
                raise ConfigError(f"malformed dBm value {value!r}") from None
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"malformed power value {value!r}") from None
    raise ConfigError(f"power must be a number or dBm string, got {value!r}")


_SCENE_KEYS = (
    "carrier_frequency", "distance", "angle", "bs_antennas", "ue_antennas",
    "spacing_fraction",
)
_POWER_KEYS = ("bs_power", "ue_power", "bs_noise_power", "ue_noise_power")
_PILOT_KEYS = _POWER_KEYS + ("pilot_phase",)
_ALIGNMENT_KEYS = (
    "rounds", "scatterer_count", "scatterer_variance", "use_wtm",
    "localization_error", "bs_learning_rate", "ue_learning_rate", "seed",
)
_EXPERIMENT_KEYS = ("repeats", "policies", "sweep", "output_path", "output_format")
KNOWN_KEYS = _SCENE_KEYS + _PILOT_KEYS + _ALIGNMENT_KEYS + _EXPERIMENT_KEYS


def load_config(data: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from a flat key-value mapping.

    Unknown keys are rejected; absent keys fall back to the stock setup
    (201/201 antennas at 28 GHz, 15 m broadside, 20 dBm pilots, -60 dBm
    noise, 3 scatterers, 15 rounds).
    """
    unknown = set(data) - set(KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        scene = SceneConfig(**{k: data[k] for k in _SCENE_KEYS if k in data})
        pilot_kwargs = {k: parse_power(data[k]) for k in _POWER_KEYS if k in data}
        if "pilot_phase" in data:
            pilot_kwargs["pilot_phase"] = float(data["pilot_phase"])
        pilot = PilotConfig(**pilot_kwargs)
        alignment = AlignmentConfig(
            scene=scene,
            pilot=pilot,
            **{k: data[k] for k in _ALIGNMENT_KEYS if k in data},
        )
        sweep = None
        if data.get("sweep") is not None:
            raw = data["sweep"]
            if not isinstance(raw, dict) or set(raw) - {"variable", "values"}:
                raise ConfigError("sweep must be {'variable': ..., 'values': [...]}")
            sweep = SweepSpec(variable=raw.get("variable"), values=list(raw.get("values", [])))
        return ExperimentConfig(
            alignment=alignment,
            repeats=int(data.get("repeats", 20)),
            policies=list(data.get("policies", ALL_POLICIES)),
            sweep=sweep,
            output_path=data.get("output_path"),
            output_format=data.get("output_format", "csv"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def resolved_config(config: ExperimentConfig) -> dict:
    """Flat, fully-resolved view of a config (the seed ledger payload)."""
    a, s, p = config.alignment, config.alignment.scene, config.alignment.pilot
    out = {
        "carrier_frequency": s.carrier_frequency,
        "distance": s.distance,
        "angle": s.angle,
        "bs_antennas": s.bs_antennas,
        "ue_antennas": s.ue_antennas,
        "spacing_fraction": s.spacing_fraction,
        "bs_power": p.bs_power,
        "ue_power": p.ue_power,
        "bs_noise_power": p.bs_noise_power,
        "ue_noise_power": p.ue_noise_power,
        "pilot_phase": p.pilot_phase,
        "rounds": a.rounds,
        "scatterer_count": a.scatterer_count,
        "scatterer_variance": a.scatterer_variance,
        "use_wtm": a.use_wtm,
        "localization_error": a.localization_error,
        "bs_learning_rate": a.bs_learning_rate,
        "ue_learning_rate": a.ue_learning_rate,
        "seed": a.seed,
        "repeats": config.repeats,
        "policies": list(config.policies),
        "sweep": None
        if config.sweep is None
        else {"variable": config.sweep.variable, "values": list(config.sweep.values)},
    }
    return out


def _apply_sweep(alignment: AlignmentConfig, variable: str, value) -> AlignmentConfig:
    if variable == "distance":
        scene = replace(alignment.scene, distance=float(value))
        return replace(alignment, scene=scene)
    if variable == "angle":
        scene = replace(alignment.scene, angle=float(value))
        return replace(alignment, scene=scene)
    if variable == "scatterers":
        return replace(alignment, scatterer_count=int(value))
    return replace(alignment, rounds=int(value))


def _scalar_policy_throughput(policy, channel, alignment, seed):
    p_cfg = alignment.pilot
    if policy == "svd-bound":
        return svd_optimal_bound(channel.matrix, p_cfg.bs_power, p_cfg.ue_noise_power)
    rng = np.random.default_rng([seed, _RANDOM_POLICY_STREAM])
    m, n = channel.shape
    probing, sensing = random_beams(n, m, rng)
    return throughput(channel.matrix, sensing, probing, p_cfg.bs_power, p_cfg.ue_noise_power)


def collect_runs(config: ExperimentConfig):
    """Raw per-run throughputs keyed by (sweep value, policy, repeat index).

    Trace policies map to the per-round throughput list; scalar policies to a
    single value.
    """
    base = config.alignment.seed
    sweep = config.sweep or SweepSpec(variable="rounds", values=[config.alignment.rounds])
    variable, values = sweep.variable, sweep.values
    raw = {(v, p): {} for v in values for p in config.policies}

    if variable == "rounds":
        t_values = [int(v) for v in values]
        t_max = max(t_values)
        for repeat in range(config.repeats):
            seed = base + repeat
            align = config.alignment
            channel = assemble_channel(
                align.scene, align.scatterer_count, align.scatterer_variance, seed
            )
            for policy in config.policies:
                if policy in TRACE_POLICIES:
                    cfg = replace(
                        align, rounds=t_max, seed=seed, use_wtm=policy == "active"
                    )
                    trace = run_alignment(cfg, channel)
                    curve = trace.throughputs
                    for v in values:
                        raw[(v, policy)][repeat] = curve[: int(v)]
                else:
                    value = _scalar_policy_throughput(policy, channel, align, seed)
                    for v in values:
                        raw[(v, policy)][repeat] = value
    else:
        for value in values:
            align = _apply_sweep(config.alignment, variable, value)
            for repeat in range(config.repeats):
                seed = base + repeat
                channel = assemble_channel(
                    align.scene, align.scatterer_count, align.scatterer_variance, seed
                )
                for policy in config.policies:
                    if policy in TRACE_POLICIES:
                        cfg = replace(align, seed=seed, use_wtm=policy == "active")
                        raw[(value, policy)][repeat] = run_alignment(cfg, channel).throughputs
                    else:
                        raw[(value, policy)][repeat] = _scalar_policy_throughput(
                            policy, channel, align, seed
                        )
    return variable, values, raw


def aggregate_runs(config: ExperimentConfig, variable, values, raw) -> list:
    """Reduce raw runs to mean/std rows, ordered by value, policy, round."""
    rows = []
    for value in values:
        rounds_here = int(value) if variable == "rounds" else config.alignment.rounds
        for policy in config.policies:
            by_repeat = raw[(value, policy)]
            ordered = [by_repeat[r] for r in sorted(by_repeat)]
            n = len(ordered)
            if policy in TRACE_POLICIES:
                stacked = np.array(ordered)  # (repeats, rounds)
                for idx in range(stacked.shape[1]):
                    col = stacked[:, idx]
                    rows.append(
                        ResultRow(
                            sweep_variable=variable,
                            sweep_value=value,
                            policy=policy,
                            round=idx + 1,
                            mean_throughput=float(np.mean(col)),
                            std_throughput=float(np.std(col)),
                            n=n,
                        )
                    )
            else:
                vals = np.array(ordered)
                rows.append(
                    ResultRow(
                        sweep_variable=variable,
                        sweep_value=value,
                        policy=policy,
                        round=rounds_here,
                        mean_throughput=float(np.mean(vals)),
                        std_throughput=float(np.std(vals)),
                        n=n,
                    )
                )
    return rows


def run_experiment(config: ExperimentConfig) -> AggregateResult:
    variable, values, raw = collect_runs(config)
    rows = aggregate_runs(config, variable, values, raw)
    return AggregateResult(
        base_seed=config.alignment.seed,
        config=resolved_config(config),
        rows=rows,
    )


ROW_FIELDS = (
    "sweep_variable", "sweep_value", "policy", "round",
    "mean_throughput", "std_throughput", "n",
)


def _row_dicts(result: AggregateResult) -> list[dict]:
    return [
        {f: getattr(row, f) for f in ROW_FIELDS} for row in result.rows
    ]


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_rows_csv(base_seed: int, config: dict, rows: list[dict]) -> str:
    """CSV text with the base seed and resolved config as header comments."""
    buffer = io.StringIO()
    buffer.write("# beamalign experiment\n")
    buffer.write(f"# base_seed: {base_seed}\n")
    buffer.write(f"# config: {json.dumps(config, sort_keys=True)}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(ROW_FIELDS)
    for row in rows:
        writer.writerow([_format_cell(row[f]) for f in ROW_FIELDS])
    return buffer.getvalue()


def render_rows_json(base_seed: int, config: dict, rows: list[dict]) -> str:
    payload = {"base_seed": base_seed, "config": config, "rows": rows}
    return json.dumps(payload, sort_keys=True) + "\n"


def render_result(result: AggregateResult, output_format: str) -> str:
    rows = _row_dicts(result)
    if output_format == "csv":
        return render_rows_csv(result.base_seed, result.config, rows)
    if output_format == "json":
        return render_rows_json(result.base_seed, result.config, rows)
    raise ConfigError(f"output format must be 'csv' or 'json', got {output_format!r}")


def emit_output(result: AggregateResult, output_format: str, path) -> None:
    """Write the aggregate to disk; I/O failures propagate as OSError."""
    text = render_result(result, output_format)
    Path(path).write_text(text, encoding="utf-8")


def grid_to_csv(grid, comments: list[str]) -> str:
    buffer = io.StringIO()
    for line in comments:
        buffer.write(f"# {line}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    for row in np.asarray(grid):
        writer.writerow([repr(float(x)) for x in row])
    return buffer.getvalue()


def _transform_pieces(scene: SceneConfig):
    bs, ue = build_scene(scene)
    wl = scene.wavelength
    sets = {
        "bs_full": full_index_set(bs.aperture, wl),
        "ue_full": full_index_set(ue.aperture, wl),
        "bs_truncated": los_truncated_index_set(bs, ue, wl, side="bs"),
        "ue_truncated": los_truncated_index_set(ue, bs, wl, side="ue"),
    }
    transforms = {
        "bs_full": build_transform(bs, sets["bs_full"], side="bs"),
        "ue_full": build_transform(ue, sets["ue_full"], side="ue"),
        "bs_truncated": build_transform(bs, sets["bs_truncated"], side="bs"),
        "ue_truncated": build_transform(ue, sets["ue_truncated"], side="ue"),
    }
    return sets, transforms


def dump_channel_grids(
    scene: SceneConfig, scatterer_count: int, scatterer_variance: float, seed: int
) -> dict:
    """Magnitude grids of one channel in the antenna, wavenumber, and
    truncated wavenumber domains, plus the index sets used."""
    channel = assemble_channel(scene, scatterer_count, scatterer_variance, seed)
    sets, transforms = _transform_pieces(scene)
    full = project_to_wavenumber(channel.matrix, transforms["ue_full"], transforms["bs_full"])
    truncated = project_to_wavenumber(
        channel.matrix, transforms["ue_truncated"], transforms["bs_truncated"]
    )
    return {
        "seed": seed,
        "config": {
            **scene.to_dict(),
            "scatterer_count": scatterer_count,
            "scatterer_variance": scatterer_variance,
        },
        "bs_full_indices": sets["bs_full"].indices.tolist(),
        "ue_full_indices": sets["ue_full"].indices.tolist(),
        "bs_truncated_indices": sets["bs_truncated"].indices.tolist(),
        "ue_truncated_indices": sets["ue_truncated"].indices.tolist(),
        "bs_bounds": list(sets["bs_truncated"].bounds),
        "ue_bounds": list(sets["ue_truncated"].bounds),
        "antenna_magnitude": np.abs(channel.matrix).tolist(),
        "wavenumber_magnitude": np.abs(full.matrix).tolist(),
        "truncated_magnitude": np.abs(truncated.matrix).tolist(),
    }


def dump_transform_data(scene: SceneConfig) -> dict:
    """Index sets plus the wavenumber-domain views of the direct-path channel."""
    data = dump_channel_grids(scene, scatterer_count=0, scatterer_variance=0.0, seed=0)
    del data["antenna_magnitude"]
    return data


def _differentiable_instance(rng, transform, conjugate):
    """Draw a received vector keeping the loss away from its kinks.

    Central differences are only meaningful where the loss is smooth: away
    from rectifier zero crossings and from raw-beam elements near zero, where
    the phase normalization is non-differentiable by construction.
    """
    from .mapper import forward_trace, init_params as _init

    while True:
        params = _init([8, 8, 6, 8], rng)
        received = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        stacked = np.concatenate([received.real, received.imag])
        pre, activations = forward_trace(params, stacked)
        if min(float(np.min(np.abs(z))) for z in pre[:-1]) < 1e-4:
            continue
        out = activations[-1]
        raw = out[:4] + 1j * out[4:]
        if transform is not None:
            mapping = transform.matrix.conj() if conjugate else transform.matrix
            raw = mapping @ raw
        if float(np.min(np.abs(raw))) < 1e-2:
            continue
        return params, received


def run_gradient_check(
    trials: int = 5, seed: int = 7, step: float = 1e-6, threshold: float = 1e-5
) -> dict:
    """Compare reverse-mode and central-difference gradients on small mappers.

    Each trial checks a 4-complex-in / 8 / 6 / 4-complex-out mapper in all
    three wirings: no transform, transform, and conjugated transform.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        for mode in ("identity", "bs", "ue"):
            if mode == "identity":
                transform, conj = None, False
            else:
                cols = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
                cols /= np.linalg.norm(cols, axis=0)
                index_set = WavenumberIndexSet(indices=np.arange(-1, 3), aperture=1.0)
                transform = TransformOperator(matrix=cols, index_set=index_set, side=mode)
                conj = mode == "ue"
            params, received = _differentiable_instance(rng, transform, conj)
            _, analytic = loss_and_gradient(params, received, transform, conj)
            numeric = finite_difference_gradients(params, received, transform, conj, step)
            worst = max(worst, max_relative_gradient_error(analytic, numeric))
    return {
        "trials": trials,
        "max_relative_error": worst,
        "threshold": threshold,
        "passed": worst < threshold,
    }
