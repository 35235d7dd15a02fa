"""Exception hierarchy shared by all modules."""


class WienerLabError(Exception):
    """Base class for every error raised by the package."""


class StructuralError(WienerLabError, ValueError):
    """An element, measure or sequence does not fit the dual pair it is used with."""


class OscillationError(WienerLabError):
    """A Fourier evaluation was requested beyond the declared band limit of a density."""


class UnboundedFunctionError(WienerLabError):
    """An integrand produced a non-finite or overflowing value."""


class BoundViolationError(WienerLabError):
    """A function exceeded its declared bound, or went negative where it must not."""


class NotGoodError(WienerLabError):
    """A required c-value did not converge on the schedule."""


class SupportViolationError(WienerLabError):
    """A measure of the sequence charges points outside the acting semigroup."""


class NumericalInstabilityError(WienerLabError):
    """Two independent constructions of the same object disagree."""


class ClusterAmbiguityError(WienerLabError):
    """Eigenvalue clusters are too close to be separated at the chosen tolerance."""


class PreconditionError(WienerLabError):
    """A probe that a theorem relies on did not pass."""


class ConfigError(WienerLabError, ValueError):
    """An experiment file failed to parse or validate."""
