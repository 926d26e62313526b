"""Physical scene: two parallel uniform linear arrays on the xz-plane.

The base-station array is centered at the origin, the user array at distance
``d`` and elevation angle ``theta`` from the x-axis.  Both arrays run along
the x-axis, so every antenna has a y-coordinate of zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import InvalidGeometryError

SPEED_OF_LIGHT = 299_792_458.0  # m/s

X_AXIS = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """One ULA: element count, spacing, center, and derived element positions."""

    num_antennas: int
    spacing: float
    center: np.ndarray
    axis: np.ndarray
    positions: np.ndarray  # (num_antennas, 3), symmetric about center

    @property
    def aperture(self) -> float:
        return (self.num_antennas - 1) * self.spacing

    @property
    def x_coordinates(self) -> np.ndarray:
        return self.positions[:, 0]


@dataclass
class SceneConfig:
    """Carrier and placement parameters for one BS/UE scene."""

    carrier_frequency: float = 28e9  # Hz
    distance: float = 15.0          # m, BS center to UE center
    angle: float = math.pi / 2      # rad, UE direction measured from the x-axis
    bs_antennas: int = 201
    ue_antennas: int = 201
    spacing_fraction: float = 0.5   # antenna spacing as a fraction of wavelength

    def __post_init__(self):
        if self.carrier_frequency <= 0:
            raise InvalidGeometryError("carrier_frequency must be positive")
        if self.distance <= 0:
            raise InvalidGeometryError("distance must be positive")
        if not 0 < self.angle < math.pi:
            raise InvalidGeometryError("angle must lie strictly between 0 and pi")
        if self.spacing_fraction <= 0:
            raise InvalidGeometryError("spacing_fraction must be positive")
        for name in ("bs_antennas", "ue_antennas"):
            count = getattr(self, name)
            if count < 1 or count % 2 == 0:
                raise InvalidGeometryError(f"{name} must be a positive odd integer, got {count}")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def spacing(self) -> float:
        return self.spacing_fraction * self.wavelength

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SceneConfig":
        return cls(**data)


def build_ula(count: int, spacing: float, center) -> ArrayGeometry:
    """Place ``count`` antennas along the x-axis, symmetric about ``center``."""
    if count < 1 or count % 2 == 0:
        raise InvalidGeometryError(f"antenna count must be a positive odd integer, got {count}")
    if spacing <= 0:
        raise InvalidGeometryError(f"antenna spacing must be positive, got {spacing}")
    center = np.asarray(center, dtype=float)
    if center.shape != (3,):
        raise InvalidGeometryError("center must be a 3-vector")
    half = (count - 1) // 2
    offsets = np.arange(-half, half + 1, dtype=float) * spacing
    positions = np.tile(center, (count, 1))
    positions[:, 0] += offsets
    positions.setflags(write=False)
    return ArrayGeometry(
        num_antennas=count,
        spacing=spacing,
        center=center,
        axis=X_AXIS.copy(),
        positions=positions,
    )


def build_scene(config: SceneConfig) -> tuple[ArrayGeometry, ArrayGeometry]:
    """Return (BS array, UE array): BS at the origin, UE at distance/angle."""
    bs = build_ula(config.bs_antennas, config.spacing, np.zeros(3))
    ue_center = config.distance * np.array(
        [math.cos(config.angle), 0.0, math.sin(config.angle)]
    )
    ue = build_ula(config.ue_antennas, config.spacing, ue_center)
    return bs, ue


def rayleigh_distance(bs_aperture: float, ue_aperture: float, wavelength: float) -> float:
    return 2.0 * (bs_aperture + ue_aperture) ** 2 / wavelength


def near_field_check(config: SceneConfig) -> bool:
    """True iff the scene sits inside the radiating near field of the two arrays."""
    bs, ue = build_scene(config)
    return config.distance < rayleigh_distance(bs.aperture, ue.aperture, config.wavelength)
