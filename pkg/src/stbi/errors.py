"""Exception types raised by the toolkit.

Every validation failure derives from :class:`StbiError`, which is itself a
``ValueError`` so callers that only care about bad input can catch that.
"""


class StbiError(ValueError):
    """Base class for all validation errors."""


class InvalidDimensionError(StbiError):
    """A grid axis is smaller than 2 pixels."""


class ShapeError(StbiError):
    """Two grids that must agree in shape do not."""


class EmptyInputError(StbiError):
    """An operation received nothing to work on (empty stack, empty mask)."""


class SceneError(StbiError):
    """A smear scene violates the periphery constraint or is malformed."""


class ShearRuleError(StbiError):
    """Lateral shear exceeds half of the field of view."""


class OverlapError(StbiError):
    """Object support and its sheared copy overlap (duplicate-image condition)."""


class NoCarrierError(StbiError):
    """No fringe carrier could be found in the hologram spectrum."""


class WindowOverlapError(StbiError):
    """The order-isolation window would reach the DC term."""


class RangeError(StbiError):
    """An intensity display range is empty or inverted."""


class FileFormatError(StbiError):
    """A binary field file is truncated, corrupt or of unknown kind."""
