"""Exception types shared across the package."""


class DiscfluxError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(DiscfluxError, ValueError):
    """Malformed or inconsistent configuration input."""


class DomainError(DiscfluxError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class RootBracketError(DiscfluxError, RuntimeError):
    """No sign-changing bracket could be found for a root solve."""


class SupportError(DiscfluxError, ValueError):
    """Datum activity plus its influence cone leaves the computational domain."""


class CflError(DiscfluxError, ValueError):
    """Time step ratio violates the stability restriction."""


class GridMismatchError(DiscfluxError, ValueError):
    """Two states that must share a grid do not."""


class AlignmentError(DiscfluxError, ValueError):
    """Fine and coarse grids are not nested for restriction."""
