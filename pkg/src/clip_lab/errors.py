"""Exception hierarchy shared across the package."""


class ClipLabError(Exception):
    """Base class for all errors raised by clip_lab."""


class ConfigurationError(ClipLabError):
    """Invalid configuration: unknown preset, bad field combination, malformed config file."""


class ShapeError(ClipLabError):
    """An array/tensor has the wrong shape for the requested operation."""


class ValidationError(ClipLabError):
    """An input violates a documented precondition."""


class NumericError(ClipLabError):
    """Non-finite values or other numeric failures."""


class FormatError(ClipLabError):
    """Malformed file or record (shards, images, manifests)."""


class AccountingError(ClipLabError):
    """FLOPs accounting encountered a layer or family it cannot cost."""


class PlanningError(ClipLabError):
    """Sweep planning produced no runnable plan."""


class ReportingError(ClipLabError):
    """A report was requested over records that do not support it."""
