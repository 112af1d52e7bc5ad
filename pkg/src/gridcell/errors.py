"""Exception hierarchy shared across the package."""


class GridcellError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(GridcellError):
    """Invalid configuration document."""


class PriceOrderError(ConfigError):
    """Buying price must strictly exceed selling price."""


class DimensionError(ConfigError):
    """A per-UE or per-ScBS field has the wrong shape."""


class NonPositiveError(ConfigError):
    """A physical parameter that must be strictly positive is not."""


class RateExceedsBacklogError(GridcellError):
    """A service rate larger than the access backlog was requested."""


class IncompleteFrameError(GridcellError):
    """A frame record does not contain exactly T slot entries."""


class NoScheduledUesError(GridcellError):
    """An operation requiring at least one scheduled UE got none."""


class InfeasibleError(GridcellError):
    """SINR targets unattainable under the per-ScBS power budgets."""


class SolverFailureError(GridcellError):
    """The conic solver broke down (not a legitimate infeasibility)."""


class TraceError(GridcellError):
    """Invalid irradiance trace file."""


class ParseError(TraceError):
    """Trace file does not parse as the expected CSV."""


class NonMonotoneTimestampsError(TraceError):
    """Trace timestamps are not strictly increasing."""


class NegativeIrradianceError(TraceError):
    """Trace contains a negative irradiance sample."""


class OutOfRangeError(GridcellError):
    """Requested time lies outside the trace span."""


class ZeroArrivalsError(GridcellError):
    """Delay is undefined when the total arrival rate is zero."""
