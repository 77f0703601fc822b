"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration / usage problems exit 1,
numerical non-convergence exits 2, a spike below its detectability
threshold exits 3.
"""

from __future__ import annotations


class ElliprmtError(Exception):
    """Base class for all package errors."""


class ConfigError(ElliprmtError):
    """Invalid configuration, measure file, or argument combination."""


class DomainError(ElliprmtError):
    """Input outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """Evaluation requested at (or numerically on top of) a pole."""


class ConvergenceError(ElliprmtError):
    """Iterative scheme failed to reach its tolerance."""

    def __init__(self, message: str, residual: float | None = None,
                 iterations: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SubcriticalSpikeError(ElliprmtError):
    """Population spike below the phase-transition threshold.

    ``threshold`` is the numerically estimated smallest detectable spike.
    """

    def __init__(self, message: str, threshold: float):
        super().__init__(message)
        self.threshold = threshold
