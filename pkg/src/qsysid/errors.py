"""Exception types shared across the package.

Every error raised by library code derives from :class:`QsysidError` so
callers can catch one base class. The CLI maps subfamilies onto exit codes.
"""

from __future__ import annotations


class QsysidError(Exception):
    """Base class for all package errors."""


class DomainError(QsysidError, ValueError):
    """A parameter is outside its mathematical domain (non-finite, wrong sign,
    out of the open interval it must live in)."""


class FactorizationError(QsysidError):
    """A Cholesky factorization failed even after the permitted jitter retry."""


class ConditioningError(FactorizationError):
    """A posterior or marginal-covariance factorization failed; carries the
    hyperparameters at which it happened."""

    def __init__(self, message: str, lam: float | None = None,
                 beta: float | None = None, sigma2: float | None = None):
        super().__init__(message)
        self.lam = lam
        self.beta = beta
        self.sigma2 = sigma2


class OutOfRangeError(QsysidError, ValueError):
    """A value falls outside the coverage of a finite-threshold quantizer."""


class InvalidLevelError(QsysidError, ValueError):
    """An observed level does not belong to the quantizer's level set."""

    def __init__(self, message: str, level: object = None, index: int | None = None):
        super().__init__(message)
        self.level = level
        self.index = index


class DegenerateSignalError(QsysidError):
    """The noise-free output has zero empirical variance, so no noise level
    can be derived from a signal-to-noise ratio."""


class DegenerateIntervalError(QsysidError):
    """A truncation interval has zero width."""


class DegeneratePriorError(QsysidError):
    """The quadratic form defining a conditional is numerically zero, leaving
    the draw undefined."""


class DegenerateResidualError(QsysidError):
    """The residual entering the noise-variance conditional is numerically
    zero, leaving the draw undefined."""


class InsufficientDataError(QsysidError):
    """Fewer output samples than the estimator needs for its matrix shapes."""


class InsufficientDrawsError(QsysidError):
    """Too few retained draws to split into meaningful diagnostic halves."""


class EstimationFailureError(QsysidError):
    """Every point of a hyperparameter grid failed to evaluate."""


class EmptySummaryError(QsysidError):
    """A summary was requested over a record set with no successful runs."""


class UndefinedScoreError(QsysidError):
    """The fit score denominator is zero (constant reference response)."""


class IterationBudgetError(QsysidError):
    """A single sampler iteration exceeded the configured wall-clock cap."""


class ChainError(QsysidError):
    """An error occurred inside the sampling loop; carries the iteration
    index and chains the underlying cause."""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


class ConfigError(QsysidError):
    """A CLI configuration file or flag value is invalid."""


class IdentifiabilityWarning(UserWarning):
    """The requested setup leaves part of the model unidentifiable."""
