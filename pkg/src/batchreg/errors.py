"""Exception types shared across the package."""


class DegenerateWeightsError(ValueError):
    """A weighted statistic was requested for a weight vector with zero total weight."""


class DataFormatError(ValueError):
    """A data or config file does not conform to the documented format."""


class NoProgressError(RuntimeError):
    """Downweighting cannot zero out any batch (all supported scores inside the band)."""


class SplitSearchError(RuntimeError):
    """No (center, radius) candidate satisfies both split conditions."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class FilterPreconditionError(ValueError):
    """Multifilter was invoked without its variance precondition holding."""


class StationaryNotConvergedError(RuntimeError):
    """The stationary-point solver exhausted its budget above tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ClippingLoopError(RuntimeError):
    """The clipping-parameter loop exceeded its provable iteration bound."""
