"""
core/errors.py - Exception hierarchy for the passive decoy simulator

Library code raises these; the CLI maps them onto its exit-code contract
(1 for usage/config problems, 2 for validity failures).
"""


class PassiveDecoyError(Exception):
    """Base class for every error raised by the simulator."""


class DomainError(PassiveDecoyError, ValueError):
    """An argument lies outside the domain of the requested function."""


class ConfigError(PassiveDecoyError, ValueError):
    """A run configuration could not be parsed or failed validation."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(PassiveDecoyError, ArithmeticError):
    """Floating-point evaluation produced a value that cannot be clamped away."""


class TruncationError(PassiveDecoyError):
    """Probability mass beyond the truncation order exceeds the tolerance."""


class DegenerateBranchError(PassiveDecoyError):
    """A detector branch never (or always) occurs, so its conditional law is undefined."""


class DegenerateRatesError(PassiveDecoyError):
    """A QBER was requested for a gain that is exactly zero."""


class CertificateError(PassiveDecoyError):
    """An estimation denominator vanishes for the given source statistics."""


class NoPositiveRateError(PassiveDecoyError):
    """The optimised key rate is already zero at the origin of the distance axis."""
