"""Exception hierarchy shared across the package."""


class DustLabError(Exception):
    """Base class for all package errors."""


class ValidationError(DustLabError):
    """Scenario failed validation. Carries a list of (code, field, message)."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(f"{code}[{field}]: {msg}" for code, field, msg in self.violations)
        super().__init__(lines or "invalid scenario")


class EmptyState(DustLabError):
    pass


class CrossedMarkers(DustLabError):
    pass


class CrossedShells(CrossedMarkers):
    pass


class ZeroRadius(DustLabError):
    pass


class StepUnderflow(DustLabError):
    pass


class MaxStepsExceeded(DustLabError):
    pass


class BracketStall(DustLabError):
    pass


class HypothesisViolated(DustLabError):
    """Support volume exceeded the assumed bound; the inequality is not asserted."""


class NoCertificateError(DustLabError):
    """A blowup-time bound was requested for parameters that certify nothing."""


class BeyondBlowup(DustLabError):
    """Comparison solution evaluated at or past its pole."""


class NoPoleInHorizon(DustLabError):
    """Comparison ODE integration reached the horizon without blowing up."""

    def __init__(self, message, times=None, values=None):
        super().__init__(message)
        self.times = times
        self.values = values
