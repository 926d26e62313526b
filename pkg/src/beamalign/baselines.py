"""Comparison policies: SVD throughput bound, random beams, perturbed geometry."""

from __future__ import annotations

import math

import numpy as np

from .geometry import ArrayGeometry, build_ula


def svd_optimal_bound(H: np.ndarray, power: float, noise_power: float) -> float:
    """Throughput of the best unit-norm beam pair under perfect CSI, bits/s/Hz."""
    singular_values = np.linalg.svd(H, compute_uv=False)
    lambda_max = float(singular_values[0] ** 2) if singular_values.size else 0.0
    if noise_power == 0.0:
        return math.inf if lambda_max > 0.0 else 0.0
    return math.log2(1.0 + power * lambda_max / noise_power)


def random_beams(
    bs_size: int, ue_size: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Constant-modulus beams with i.i.d. uniform phases: (probing, sensing)."""
    if bs_size < 1 or ue_size < 1:
        raise ValueError("array sizes must be at least 1")
    phases_p = rng.uniform(0.0, 2.0 * math.pi, bs_size)
    phases_s = rng.uniform(0.0, 2.0 * math.pi, ue_size)
    p = np.exp(1j * phases_p) / math.sqrt(bs_size)
    s = np.exp(1j * phases_s) / math.sqrt(ue_size)
    return p, s


def perturb_geometry(
    geom: ArrayGeometry, error_magnitude: float, rng: np.random.Generator
) -> ArrayGeometry:
    """Rigidly displace an array's center on the xz-plane.

    The displacement magnitude is uniform in [0, error_magnitude] with a
    uniform direction; zero magnitude returns the geometry unchanged.
    """
    if error_magnitude < 0:
        raise ValueError("error magnitude must be non-negative")
    if error_magnitude == 0:
        return geom
    direction = rng.uniform(0.0, 2.0 * math.pi)
    radius = rng.uniform(0.0, error_magnitude)
    offset = radius * np.array([math.cos(direction), 0.0, math.sin(direction)])
    return build_ula(geom.num_antennas, geom.spacing, geom.center + offset)
