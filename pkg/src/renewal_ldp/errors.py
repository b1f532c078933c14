"""Exception hierarchy shared by all modules."""


class RenewalLDPError(Exception):
    """Base class for every error raised by :mod:`renewal_ldp`."""


class DomainError(RenewalLDPError, ValueError):
    """Argument outside the support or domain of a law."""


class QuadratureError(RenewalLDPError):
    """Adaptive quadrature failed to reach the requested accuracy.

    ``estimate`` and ``abserr`` carry the partial result.
    """

    def __init__(self, message, estimate=None, abserr=None):
        super().__init__(message)
        self.estimate = estimate
        self.abserr = abserr


class UnsupportedTiltError(RenewalLDPError):
    """The tilted sampler cannot bound its rejection envelope."""


class RateUndefinedError(RenewalLDPError):
    """No root of E[exp(tY - sX)] = 1 could be bracketed."""


class RegularityError(RenewalLDPError):
    """A quantity that must be positive (tilted mean, h'', B) was not."""


class NoTiltError(RenewalLDPError):
    """Requested slope ``c`` is not attained by h' on the admissible range."""

    def __init__(self, message, attainable=None):
        super().__init__(message)
        self.attainable = attainable


class RegimeError(RenewalLDPError):
    """Tail formula requested outside its regime (tau <= 0, missing span, ...)."""


class UnsupportedModelError(RenewalLDPError):
    """Model lacks a capability needed by the requested operation."""


class ConfigurationError(RenewalLDPError, ValueError):
    """Bad user configuration (model spec, CLI flags, missing inputs)."""


class RenewalDivergenceError(RenewalLDPError):
    """Fixed-point iteration for a two-sided renewal equation is not contracting."""


class NonTerminationError(RenewalLDPError):
    """A simulated path exceeded the step cap without crossing the level."""
