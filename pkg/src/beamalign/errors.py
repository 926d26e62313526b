"""Exception types shared across the package."""


class BeamAlignError(Exception):
    """Base class for all package errors."""


class InvalidGeometryError(BeamAlignError, ValueError):
    """Array construction request violates geometry rules (even count, bad spacing, ...)."""


class SingularGeometryError(BeamAlignError, ValueError):
    """Two points that must be distinct coincide (antenna on antenna, scatterer on antenna)."""


class DimensionMismatchError(BeamAlignError, ValueError):
    """Vector/matrix shapes are incompatible for the requested operation."""


class ConfigError(BeamAlignError, ValueError):
    """A configuration value is missing, malformed, or out of range."""
