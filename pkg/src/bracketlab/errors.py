"""Exception types raised across bracketlab."""


class BracketLabError(Exception):
    """Base class for all library errors."""


class NotUnimodular(BracketLabError, ValueError):
    pass


class DimensionMismatch(BracketLabError, ValueError):
    pass


class NonFiniteInput(BracketLabError, ValueError):
    pass


class ZeroGap(BracketLabError, ValueError):
    pass


class QuantileFailure(BracketLabError, RuntimeError):
    pass


class TailUnbounded(BracketLabError, ValueError):
    pass


class MonotonicityViolation(BracketLabError, ValueError):
    pass


class OutOfDomain(BracketLabError, ValueError):
    pass


class InsufficientCurve(BracketLabError, ValueError):
    pass


class GammaTooSmall(BracketLabError, ValueError):
    pass


class DomainError(BracketLabError, ValueError):
    pass


class DegenerateSample(BracketLabError, ValueError):
    pass


class UnstableEstimate(BracketLabError, RuntimeError):
    pass


class ConfigError(BracketLabError, ValueError):
    """Invalid run configuration; ``key`` names the offending entry."""

    def __init__(self, key, reason):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}")
