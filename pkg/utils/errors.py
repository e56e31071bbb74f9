class TimeChangeError(Exception):
    """Base class for every error raised by the toolkit"""


class ConfigError(TimeChangeError, ValueError):
    """Malformed experiment config or time-change record"""


class LeafError(TimeChangeError, ValueError):
    """A leaf point was not presented as a leg image of the anchor"""


class NonLocalDistanceError(TimeChangeError, ValueError):
    """No deck representative within the local metric radius"""


class PathEndpointError(TimeChangeError, ValueError):
    """An su-path does not end where the caller claims it does"""


class ToleranceError(TimeChangeError, ArithmeticError):
    """A quadrature or root error bound exceeds the caller tolerance"""


class DegenerateFitError(TimeChangeError, ArithmeticError):
    """Contraction fit reached the floating-point floor"""


class OutputError(TimeChangeError, OSError):
    """Results could not be written"""
