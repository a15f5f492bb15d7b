"""Exception hierarchy shared by all pipeline stages."""


class PadmonError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(PadmonError):
    """A setting or parameter combination is unusable."""


class DataError(PadmonError):
    """Input data violates a precondition: missing, degenerate, or corrupt."""


class DecompositionError(DataError):
    """Mode decomposition could not be carried out on this signal."""


class IdentificationError(DataError):
    """No acceptable oscillatory model could be identified."""


class EstimationError(DataError):
    """A passage yielded no usable per-segment frequency estimates."""


class FitError(DataError):
    """A distribution or regression fit failed or did not converge."""


class DetectorError(DataError):
    """Detector state is unusable for the requested operation."""
