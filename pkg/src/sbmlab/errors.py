"""Exception types shared across the package."""


class SbmlabError(Exception):
    """Base class for all package errors."""


class DomainError(SbmlabError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(SbmlabError, ValueError):
    """Requested value outside the range of an invertible function."""


class ArgumentError(SbmlabError, ValueError):
    """Malformed or inconsistent arguments."""


class IntegrabilityError(SbmlabError, ArithmeticError):
    """A defining integral fails to converge."""


class ConsistencyError(SbmlabError, ArithmeticError):
    """A computed quantity violates a structural identity beyond tolerance."""


class SpecError(SbmlabError, ValueError):
    """An exponent specification is unusable for the requested operation."""


class CapabilityError(SbmlabError, NotImplementedError):
    """The requested route is not available for this spec or domain kind."""


class SingularityError(SbmlabError, ValueError):
    """Evaluation requested on the singular set of a kernel."""


class InsufficientDataError(SbmlabError, RuntimeError):
    """Too few Monte Carlo samples survive to form an estimate."""
