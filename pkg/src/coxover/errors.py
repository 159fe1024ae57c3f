"""Exception types shared across the package.

Validation problems (bad arguments, bad input data) derive from
``ValueError`` so callers can treat them uniformly; numerical failures
during a run derive from ``RuntimeError`` or ``ArithmeticError``.
"""


class CoxoverError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(CoxoverError, ValueError):
    """An argument is outside its documented range."""


class DomainError(CoxoverError, ValueError):
    """A mathematical function was evaluated outside its domain."""


class DataError(CoxoverError, ValueError):
    """Input data violates a structural precondition (ties, shapes, ...)."""


class MatrixError(CoxoverError, ValueError):
    """A matrix argument is not symmetric positive definite."""


class RangeError(CoxoverError, ArithmeticError):
    """A quantity left the numerically representable / bracketed range."""


class NumericOverflowError(CoxoverError, ArithmeticError):
    """A non-finite intermediate appeared during accumulation."""


class SolverError(CoxoverError, RuntimeError):
    """An iterative solver failed to converge."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = dict(residuals) if residuals else {}


class PhaseBoundaryError(SolverError):
    """The solver hit the phase boundary (covariate ratio >= 1)."""


class SeparationError(CoxoverError, RuntimeError):
    """Monotone partial likelihood or degenerate covariates: no finite maximizer."""


class ConvergenceError(CoxoverError, RuntimeError):
    """Iteration limit exceeded before reaching tolerance."""


class ExperimentError(CoxoverError, RuntimeError):
    """Too many replicate failures to produce a trustworthy summary."""
