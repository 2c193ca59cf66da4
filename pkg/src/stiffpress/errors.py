"""Exception hierarchy.

Every error carries a short machine-readable ``tag`` that the command line
prints on stderr.
"""

from __future__ import annotations


class StiffPressError(Exception):
    tag = "ERROR"


class InvalidGrid(StiffPressError, ValueError):
    tag = "INVALID_GRID"


class DomainError(StiffPressError, ValueError):
    """Argument outside the domain of a constitutive function."""

    tag = "DOMAIN_ERROR"


class ConfigError(StiffPressError, ValueError):
    tag = "CONFIG_ERROR"


class SolverError(StiffPressError, RuntimeError):
    tag = "SOLVER_ERROR"


class NonFiniteState(SolverError):
    tag = "NON_FINITE_STATE"


class DomainViolation(SolverError):
    tag = "DOMAIN_VIOLATION"


class BoundaryTouched(SolverError):
    tag = "BOUNDARY_TOUCHED"


class NegativeDensity(SolverError):
    tag = "NEGATIVE_DENSITY"


class MaximumPrincipleViolation(SolverError):
    tag = "MAX_PRINCIPLE_VIOLATION"


class TimeoutExceeded(SolverError):
    tag = "TIMEOUT_EXCEEDED"


class MetricError(StiffPressError, ValueError):
    tag = "METRIC_ERROR"


class NonZeroMean(MetricError):
    tag = "NONZERO_MEAN"


class MassMismatch(MetricError):
    tag = "MASS_MISMATCH"
