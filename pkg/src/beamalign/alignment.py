"""Ping-pong beam alignment between a BS and a UE mapper.

Each round: the UE receives a downlink pilot, forms its next sensing beam,
takes one ascent step, and transmits; the BS receives the uplink pilot, forms
its next probing beam, and takes its own ascent step.  The per-round record
holds the beams produced in that round and the gain/throughput the pair would
deliver if training stopped there.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import mapper
from .baselines import perturb_geometry, svd_optimal_bound
from .channel import ChannelRealization, PilotConfig, transmit_receive
from .errors import ConfigError, DimensionMismatchError
from .geometry import SceneConfig, build_scene
from .mapper import ZERO_MODULUS
from .wavenumber import beam_to_antenna, build_transform, los_truncated_index_set

# Offsets mixed into the run seed so noise, initialization, and geometry
# perturbation draw from independent streams (noise stays identical across
# policy variants that share a seed).
_INIT_STREAM = 1
_NOISE_STREAM = 2
_PERTURB_STREAM = 3


@dataclass
class AlignmentConfig:
    """Everything one alignment run needs besides the channel itself."""

    scene: SceneConfig = field(default_factory=SceneConfig)
    pilot: PilotConfig = field(default_factory=PilotConfig)
    rounds: int = 15
    scatterer_count: int = 3
    scatterer_variance: float = 0.01
    use_wtm: bool = True
    localization_error: float = 0.0  # fraction of the BS-UE distance
    bs_learning_rate: float = 0.005
    ue_learning_rate: float = 0.005
    seed: int = 0

    def __post_init__(self):
        if self.rounds < 1:
            raise ConfigError(f"rounds must be at least 1, got {self.rounds}")
        if self.bs_learning_rate <= 0 or self.ue_learning_rate <= 0:
            raise ConfigError("learning rates must be positive")
        if self.scatterer_count < 0:
            raise ConfigError("scatterer_count must be non-negative")
        if self.localization_error < 0:
            raise ConfigError("localization_error must be non-negative")


@dataclass(eq=False)
class RoundRecord:
    """State after one full round: beams formed in it and their pair metrics."""

    round: int
    probing_beam: np.ndarray
    sensing_beam: np.ndarray
    bs_loss: float
    ue_loss: float
    beam_gain: float
    throughput: float
    # ascent steps each mapper had absorbed when its beam was formed
    bs_updates_at_beam: int
    ue_updates_at_beam: int


@dataclass(eq=False)
class AlignmentTrace:
    records: list[RoundRecord]
    initial_probing_beam: np.ndarray
    svd_bound: float

    @property
    def final_probing_beam(self) -> np.ndarray:
        return self.records[-1].probing_beam

    @property
    def final_sensing_beam(self) -> np.ndarray:
        return self.records[-1].sensing_beam

    @property
    def throughputs(self) -> list[float]:
        return [r.throughput for r in self.records]


def normalize_constant_modulus(v: np.ndarray) -> np.ndarray:
    """Scale every element to modulus 1/sqrt(K); zero elements get zero phase."""
    k = v.size
    moduli = np.abs(v)
    mask = moduli < ZERO_MODULUS
    safe = np.where(mask, 1.0, moduli)
    unit = np.where(mask, 1.0 + 0.0j, v / safe)
    return unit / math.sqrt(k)


def beam_gain(H: np.ndarray, s: np.ndarray, p: np.ndarray) -> float:
    """|s^T H p|^2 (plain transposes on both beams)."""
    return float(abs(s @ H @ p) ** 2)


def gain_to_throughput(gain: float, power: float, noise_power: float) -> float:
    if noise_power == 0.0:
        return math.inf if gain > 0.0 else 0.0
    return math.log2(1.0 + power * gain / noise_power)


def throughput(
    H: np.ndarray, s: np.ndarray, p: np.ndarray, power: float, noise_power: float
) -> float:
    """Achieved rate of a beam pair, bits/s/Hz."""
    return gain_to_throughput(beam_gain(H, s, p), power, noise_power)


def run_alignment(config: AlignmentConfig, channel: ChannelRealization) -> AlignmentTrace:
    """Execute the full ping-pong protocol and record every round."""
    bs, ue = build_scene(config.scene)
    n, m = bs.num_antennas, ue.num_antennas
    if channel.shape != (m, n):
        raise DimensionMismatchError(
            f"channel shape {channel.shape} does not match scene ({m}, {n})"
        )
    H = channel.matrix
    pilot = config.pilot

    rng_init = np.random.default_rng([config.seed, _INIT_STREAM])
    rng_noise = np.random.default_rng([config.seed, _NOISE_STREAM])

    if config.use_wtm:
        # Transforms come from the *estimated* geometry; the channel itself
        # always uses the true one.
        est_bs, est_ue = bs, ue
        if config.localization_error > 0:
            rng_perturb = np.random.default_rng([config.seed, _PERTURB_STREAM])
            magnitude = config.localization_error * config.scene.distance
            est_bs = perturb_geometry(bs, magnitude, rng_perturb)
            est_ue = perturb_geometry(ue, magnitude, rng_perturb)
        wl = config.scene.wavelength
        phi_bs = build_transform(
            est_bs, los_truncated_index_set(est_bs, est_ue, wl, side="bs"), side="bs"
        )
        phi_ue = build_transform(
            est_ue, los_truncated_index_set(est_ue, est_bs, wl, side="ue"), side="ue"
        )
        bs_out, ue_out = phi_bs.num_indices, phi_ue.num_indices
    else:
        phi_bs = phi_ue = None
        bs_out, ue_out = n, m

    bs_params = mapper.init_params(mapper.mapper_layer_dims(n, bs_out), rng_init)
    ue_params = mapper.init_params(mapper.mapper_layer_dims(m, ue_out), rng_init)
    bs_state = mapper.init_optimizer(bs_params, config.bs_learning_rate)
    ue_state = mapper.init_optimizer(ue_params, config.ue_learning_rate)

    def bs_beam(received):
        raw = mapper.forward(bs_params, received)
        if phi_bs is not None:
            raw = beam_to_antenna(phi_bs, raw)
        return normalize_constant_modulus(raw)

    def ue_beam(received):
        raw = mapper.forward(ue_params, received)
        if phi_ue is not None:
            raw = beam_to_antenna(phi_ue, raw, conjugate=True)
        return normalize_constant_modulus(raw)

    initial_probing = bs_beam(np.zeros(n, dtype=complex))
    probing = initial_probing

    records = []
    bs_updates = ue_updates = 0
    for t in range(1, config.rounds + 1):
        received_ue = transmit_receive(
            H, probing, pilot.bs_pilot, pilot.ue_noise_power, "downlink", rng_noise
        )
        sensing = ue_beam(received_ue)
        ue_updates_at_beam = ue_updates
        ue_loss, ue_grads = mapper.loss_and_gradient(
            ue_params, received_ue, phi_ue, conjugate=True
        )
        ue_params, ue_state = mapper.ascent_step(ue_params, ue_state, ue_grads)
        ue_updates += 1

        received_bs = transmit_receive(
            H, sensing, pilot.ue_pilot, pilot.bs_noise_power, "uplink", rng_noise
        )
        next_probing = bs_beam(received_bs)
        bs_updates_at_beam = bs_updates
        bs_loss, bs_grads = mapper.loss_and_gradient(bs_params, received_bs, phi_bs)
        bs_params, bs_state = mapper.ascent_step(bs_params, bs_state, bs_grads)
        bs_updates += 1

        gain = beam_gain(H, sensing, next_probing)
        records.append(
            RoundRecord(
                round=t,
                probing_beam=next_probing,
                sensing_beam=sensing,
                bs_loss=bs_loss,
                ue_loss=ue_loss,
                beam_gain=gain,
                throughput=gain_to_throughput(gain, pilot.bs_power, pilot.ue_noise_power),
                bs_updates_at_beam=bs_updates_at_beam,
                ue_updates_at_beam=ue_updates_at_beam,
            )
        )
        probing = next_probing

    bound = svd_optimal_bound(H, pilot.bs_power, pilot.ue_noise_power)
    return AlignmentTrace(
        records=records, initial_probing_beam=initial_probing, svd_bound=bound
    )


def _complex_pairs(v: np.ndarray) -> list[list[float]]:
    return [[float(c.real), float(c.imag)] for c in v]


def trace_to_json(trace: AlignmentTrace) -> str:
    """Serialize a trace: one object per round plus the channel's bound."""
    payload = {
        "svd_bound": trace.svd_bound,
        "rounds": [
            {
                "round": r.round,
                "bs_loss": r.bs_loss,
                "ue_loss": r.ue_loss,
                "beam_gain": r.beam_gain,
                "throughput": r.throughput,
                "probing_beam": _complex_pairs(r.probing_beam),
                "sensing_beam": _complex_pairs(r.sensing_beam),
            }
            for r in trace.records
        ],
    }
    return json.dumps(payload, sort_keys=True) + "\n"


def trace_to_csv(trace: AlignmentTrace) -> str:
    """One row per round: round, bs_loss, ue_loss, beam_gain, throughput."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["round", "bs_loss", "ue_loss", "beam_gain", "throughput"])
    for r in trace.records:
        writer.writerow(
            [r.round, repr(r.bs_loss), repr(r.ue_loss), repr(r.beam_gain), repr(r.throughput)]
        )
    return buffer.getvalue()
