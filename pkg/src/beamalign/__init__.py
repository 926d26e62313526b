"""Near-field MIMO beam alignment via active sensing in the wavenumber domain."""

__version__ = "0.1.0"

from .alignment import (
    AlignmentConfig,
    AlignmentTrace,
    normalize_constant_modulus,
    run_alignment,
    throughput,
)
from .channel import ChannelRealization, PilotConfig, assemble_channel, transmit_receive
from .geometry import ArrayGeometry, SceneConfig, build_scene, build_ula, near_field_check
from .wavenumber import (
    TransformOperator,
    WavenumberIndexSet,
    beam_to_antenna,
    build_transform,
    full_index_set,
    los_truncated_index_set,
    project_to_wavenumber,
)

__all__ = [
    "AlignmentConfig",
    "AlignmentTrace",
    "ArrayGeometry",
    "ChannelRealization",
    "PilotConfig",
    "SceneConfig",
    "TransformOperator",
    "WavenumberIndexSet",
    "assemble_channel",
    "beam_to_antenna",
    "build_scene",
    "build_transform",
    "build_ula",
    "full_index_set",
    "los_truncated_index_set",
    "near_field_check",
    "normalize_constant_modulus",
    "project_to_wavenumber",
    "run_alignment",
    "throughput",
    "transmit_receive",
]
