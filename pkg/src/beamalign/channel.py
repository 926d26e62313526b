"""Non-uniform spherical-wave channel synthesis and noisy pilot transmission.

The channel is the sum of a direct (line-of-sight) matrix, whose entries carry
the exact per-pair amplitude and phase, and a scattered part built from point
scatterers placed between the arrays.  Pilot transmission applies the channel
matrix (downlink) or its plain transpose (uplink) and adds circularly
symmetric complex Gaussian noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, SingularGeometryError
from .geometry import ArrayGeometry, SceneConfig, build_scene


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def complex_normal(rng: np.random.Generator, size: int, variance: float) -> np.ndarray:
    """CSCG vector: real and imaginary parts i.i.d. N(0, variance/2)."""
    draws = rng.standard_normal((2, size))
    scale = math.sqrt(variance / 2.0)
    return scale * (draws[0] + 1j * draws[1])


@dataclass(frozen=True, eq=False)
class Scatterer:
    """A point scatterer on the xz-plane with its complex path coefficient."""

    position: np.ndarray
    coefficient: complex


@dataclass(eq=False)
class ChannelRealization:
    """One drawn channel: full matrix, its LoS/NLoS split, and provenance."""

    matrix: np.ndarray      # (M, N) complex
    los_part: np.ndarray
    nlos_part: np.ndarray
    scatterers: list[Scatterer]
    seed: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass
class PilotConfig:
    """Transmit powers, receiver noise powers, and the pilot symbol phase."""

    bs_power: float = 0.1          # W (20 dBm)
    ue_power: float = 0.1
    bs_noise_power: float = 1e-9   # W (-60 dBm), noise at the BS receiver
    ue_noise_power: float = 1e-9   # W, noise at the UE receiver
    pilot_phase: float = 0.0       # rad

    def __post_init__(self):
        for name in ("bs_power", "ue_power", "bs_noise_power", "ue_noise_power"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def bs_pilot(self) -> complex:
        return math.sqrt(self.bs_power) * np.exp(1j * self.pilot_phase)

    @property
    def ue_pilot(self) -> complex:
        return math.sqrt(self.ue_power) * np.exp(1j * self.pilot_phase)


def los_channel(bs: ArrayGeometry, ue: ArrayGeometry, wavelength: float) -> np.ndarray:
    """Direct-path matrix, entry (m, n) = amplitude(m, n) * exp(-j k0 dist(m, n))."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    diff = ue.positions[:, None, :] - bs.positions[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    if np.any(dist == 0.0):
        raise SingularGeometryError("BS and UE antennas coincide")
    k0 = 2.0 * math.pi / wavelength
    return wavelength / (4.0 * math.pi * dist) * np.exp(-1j * k0 * dist)


def sample_scatterers(
    count: int, scene: SceneConfig, variance: float, rng: np.random.Generator
) -> list[Scatterer]:
    """Drop scatterers uniformly in the propagation volume between the arrays.

    Positions are uniform on the xz-rectangle x in [-d/2, d/2],
    z in [0.1 d, 0.9 d].  Coefficients are CSCG with variance ``variance``
    relative to the line-of-sight reference power (amplitude
    wavelength / (4 pi d)), keeping the scattered paths subordinate to the
    direct path.
    """
    if count < 0:
        raise ValueError(f"scatterer count must be non-negative, got {count}")
    if variance < 0:
        raise ValueError(f"scatterer variance must be non-negative, got {variance}")
    d = scene.distance
    reference_amplitude = scene.wavelength / (4.0 * math.pi * d)
    scatterers = []
    # One scatterer at a time, so for a fixed rng stream the first L draws
    # are shared by every realization with count >= L.
    for _ in range(count):
        x = rng.uniform(-d / 2.0, d / 2.0)
        z = rng.uniform(0.1 * d, 0.9 * d)
        coefficient = complex(complex_normal(rng, 1, variance)[0]) * reference_amplitude
        scatterers.append(Scatterer(position=np.array([x, 0.0, z]), coefficient=coefficient))
    return scatterers


def nlos_channel(
    bs: ArrayGeometry,
    ue: ArrayGeometry,
    scatterers: list[Scatterer],
    wavenumber: float,
) -> np.ndarray:
    """Scattered matrix: sum over scatterers of coefficient times the outer
    product of the UE and BS array responses, oriented (M, N)."""
    matrix = np.zeros((ue.num_antennas, bs.num_antennas), dtype=complex)
    for scatterer in scatterers:
        to_ue = np.linalg.norm(ue.positions - scatterer.position, axis=1)
        to_bs = np.linalg.norm(bs.positions - scatterer.position, axis=1)
        if np.any(to_ue == 0.0) or np.any(to_bs == 0.0):
            raise SingularGeometryError("scatterer coincides with an antenna")
        response_ue = np.exp(-1j * wavenumber * to_ue)
        response_bs = np.exp(-1j * wavenumber * to_bs)
        matrix += scatterer.coefficient * np.outer(response_ue, response_bs)
    return matrix


def assemble_channel(
    scene: SceneConfig,
    scatterer_count: int,
    scatterer_variance: float,
    seed: int,
) -> ChannelRealization:
    """Draw one channel realization from the given seed."""
    rng = np.random.default_rng(seed)
    bs, ue = build_scene(scene)
    scatterers = sample_scatterers(scatterer_count, scene, scatterer_variance, rng)
    los = los_channel(bs, ue, scene.wavelength)
    nlos = nlos_channel(bs, ue, scatterers, scene.wavenumber)
    return ChannelRealization(
        matrix=los + nlos,
        los_part=los,
        nlos_part=nlos,
        scatterers=scatterers,
        seed=seed,
    )


def transmit_receive(
    H: np.ndarray,
    beam: np.ndarray,
    pilot: complex,
    noise_power: float,
    direction: str,
    rng: np.random.Generator,
) -> np.ndarray:
    """One pilot transmission: y = H beam pilot + noise (downlink) or
    y = H^T beam pilot + noise (uplink)."""
    m, n = H.shape
    if direction == "downlink":
        if beam.shape != (n,):
            raise DimensionMismatchError(
                f"downlink beam must have length {n}, got {beam.shape}"
            )
        signal = H @ beam * pilot
    elif direction == "uplink":
        if beam.shape != (m,):
            raise DimensionMismatchError(
                f"uplink beam must have length {m}, got {beam.shape}"
            )
        signal = H.T @ beam * pilot
    else:
        raise ValueError(f"direction must be 'downlink' or 'uplink', got {direction!r}")
    return signal + complex_normal(rng, signal.size, noise_power)
