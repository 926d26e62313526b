"""Wavenumber-domain transforms: discrete plane-wave bases for a ULA.

A transform matrix maps between the antenna domain and a set of integer
spatial frequencies.  The full set covers every propagating plane wave the
aperture can resolve; the truncated set keeps only the frequencies whose
directions connect the two arrays, found by brute force over all antenna
pairs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import SingularGeometryError
from .geometry import ArrayGeometry

# Slack for floor/ceil on index bounds that land on (or within rounding of)
# an integer.
_INDEX_EPS = 1e-9


@dataclass(eq=False)
class WavenumberIndexSet:
    """Sorted integer spatial-frequency indices for one aperture."""

    indices: np.ndarray
    aperture: float
    truncated: bool = False
    bounds: tuple[float, float] | None = None  # (k_min, k_max) in rad/m when truncated

    @property
    def size(self) -> int:
        return int(self.indices.size)


@dataclass(eq=False)
class TransformOperator:
    """Antenna-domain <-> wavenumber-domain transform for one array.

    Column for index j holds (1/sqrt(K)) * exp(j 2 pi j x_n / D) over the
    array's antenna x-coordinates; every column has unit Euclidean norm.
    """

    matrix: np.ndarray  # (num_antennas, num_indices)
    index_set: WavenumberIndexSet
    side: str = "bs"

    @property
    def num_antennas(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_indices(self) -> int:
        return self.matrix.shape[1]


@dataclass(eq=False)
class WavenumberChannel:
    """A channel projected onto two wavenumber bases, with its scaling."""

    matrix: np.ndarray
    scaling: float  # constant applied to Phi_U^H H Phi_B to produce `matrix`


def full_index_set(aperture: float, wavelength: float) -> WavenumberIndexSet:
    """All integer indices j with |j| <= aperture / wavelength."""
    if aperture <= 0:
        raise ValueError(f"aperture must be positive, got {aperture}")
    if wavelength <= 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    j_max = int(math.floor(aperture / wavelength + _INDEX_EPS))
    indices = np.arange(-j_max, j_max + 1)
    return WavenumberIndexSet(indices=indices, aperture=aperture)


def los_truncated_index_set(
    own: ArrayGeometry, other: ArrayGeometry, wavelength: float, side: str = "bs"
) -> WavenumberIndexSet:
    """Indices whose plane-wave directions connect the two arrays.

    The direction bounds are the extreme x-components of the normalized
    vectors between every antenna pair, scaled by the carrier wavenumber.
    With the e^{+j 2 pi j x / D} column convention used on both sides, the
    direct-path energy of an off-broadside link sits at indices oriented by
    the *other-to-own* direction on the departure (BS) side and by the
    *own-to-other* direction mirrored on the arrival (UE) side, so the cone
    flips between the two roles; ``side`` selects the orientation.
    """
    if side not in ("bs", "ue"):
        raise ValueError(f"side must be 'bs' or 'ue', got {side!r}")
    diff = own.positions[:, None, :] - other.positions[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    if np.any(dist == 0.0):
        raise SingularGeometryError("arrays coincide; direction bounds undefined")
    cosines = diff[:, :, 0] / dist
    if side == "ue":
        cosines = -cosines
    k0 = 2.0 * math.pi / wavelength
    k_min = k0 * float(cosines.min())
    k_max = k0 * float(cosines.max())

    d = own.aperture
    lo = int(math.ceil(k_min * d / (2.0 * math.pi) - _INDEX_EPS))
    hi = int(math.floor(k_max * d / (2.0 * math.pi) + _INDEX_EPS))
    indices = np.arange(lo, hi + 1)
    full = full_index_set(d, wavelength).indices
    indices = np.intersect1d(indices, full)
    if indices.size == 0:
        warnings.warn(
            "direction bounds admit no integer index; falling back to {0}",
            stacklevel=2,
        )
        indices = np.array([0])
    return WavenumberIndexSet(
        indices=indices, aperture=d, truncated=True, bounds=(k_min, k_max)
    )


def build_transform(
    geom: ArrayGeometry, index_set: WavenumberIndexSet, side: str = "bs"
) -> TransformOperator:
    """Assemble the transform matrix for one array and one index set."""
    if not math.isclose(geom.aperture, index_set.aperture, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError(
            f"index set aperture {index_set.aperture} does not match "
            f"geometry aperture {geom.aperture}"
        )
    k = geom.num_antennas
    phases = 2.0 * math.pi / index_set.aperture * np.outer(
        geom.x_coordinates, index_set.indices
    )
    matrix = np.exp(1j * phases) / math.sqrt(k)
    return TransformOperator(matrix=matrix, index_set=index_set, side=side)


def project_to_wavenumber(
    H: np.ndarray, phi_ue: TransformOperator, phi_bs: TransformOperator
) -> WavenumberChannel:
    """Project an antenna-domain channel onto the two wavenumber bases."""
    m, n = H.shape
    if phi_ue.num_antennas != m or phi_bs.num_antennas != n:
        raise ValueError(
            f"channel shape {H.shape} incompatible with transforms "
            f"({phi_ue.num_antennas}, {phi_bs.num_antennas})"
        )
    scaling = 1.0 / math.sqrt(m * n)
    projected = scaling * (phi_ue.matrix.conj().T @ H @ phi_bs.matrix)
    return WavenumberChannel(matrix=projected, scaling=scaling)


def beam_to_antenna(
    phi: TransformOperator, wavenumber_beam: np.ndarray, conjugate: bool = False
) -> np.ndarray:
    """Map a wavenumber-domain beam to the antenna domain.

    BS side uses the transform directly; the UE side (conjugate=True) uses its
    element-wise conjugate.
    """
    if wavenumber_beam.shape != (phi.num_indices,):
        raise ValueError(
            f"beam length {wavenumber_beam.shape} does not match "
            f"{phi.num_indices} wavenumber indices"
        )
    matrix = phi.matrix.conj() if conjugate else phi.matrix
    return matrix @ wavenumber_beam
