"""Exception hierarchy for besovlab."""


class BesovLabError(Exception):
    """Base class for all errors raised by this package."""


class EmptyDomain(BesovLabError):
    pass


class InvalidExponent(BesovLabError, ValueError):
    pass


class MaskFormatError(BesovLabError, ValueError):
    pass


class NotSymmetric(BesovLabError):
    pass


class ConvergenceFailure(BesovLabError):
    pass


class NonFiniteSymbol(BesovLabError, ValueError):
    pass


class NegativeTime(BesovLabError, ValueError):
    pass


class DomainMismatch(BesovLabError, ValueError):
    pass


class GridTooSmall(BesovLabError):
    """Raised when a 1-D Sobolev grid does not resolve the symbol."""


class QuadratureUnresolved(BesovLabError):
    """Raised when doubling the quadrature density moves the value too much."""


class WindowTooNarrow(BesovLabError):
    pass


class GridNotSorted(BesovLabError, ValueError):
    pass


class TooFewPoints(BesovLabError, ValueError):
    pass


class NonPositiveValue(BesovLabError, ValueError):
    pass


class ConfigError(BesovLabError):
    """Invalid experiment configuration.

    ``problems`` holds one human-readable line per offending key.
    """

    def __init__(self, message, problems=None):
        super().__init__(message)
        self.problems = list(problems or [])
