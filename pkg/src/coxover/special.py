"""Scalar special functions and quadrature rules used by the solvers.

All operations are pure; quadrature rules are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._kern import backend
from .errors import DomainError, ParameterError

#: Euler-Mascheroni constant to full double precision.
EULER_GAMMA = float(np.euler_gamma)


def euler_gamma() -> float:
    """Return the Euler-Mascheroni constant 0.5772156649015..."""
    return EULER_GAMMA


def lambert_w0(z):
    """Principal-branch Lambert W for nonnegative real arguments.

    Solves ``w * exp(w) = z`` by Halley iteration with branch-appropriate
    seeds (series-like seed near 0, ``log z - log log z`` for large ``z``),
    accurate to ~1e-14 relative across the representable range. Accepts a
    scalar or array; returns the matching shape.

    Raises
    ------
    DomainError
        If any entry is negative or non-finite.
    """
    arr = np.asarray(z, dtype=np.float64)
    if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr < 0.0)):
        raise DomainError("lambert_w0 requires finite nonnegative arguments")
    flat = np.ascontiguousarray(arr.reshape(-1))
    out = np.asarray(backend.lambert_w0(flat)).reshape(arr.shape)
    if arr.ndim == 0:
        return float(out)
    return out


def lambert_w0_derivative(z):
    """Derivative of the principal branch: W(z) / (z * (1 + W(z))).

    Raises
    ------
    DomainError
        If any entry is <= 0 or non-finite.
    """
    arr = np.asarray(z, dtype=np.float64)
    if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr <= 0.0)):
        raise DomainError("lambert_w0_derivative requires arguments > 0")
    w = np.asarray(lambert_w0(arr))
    out = w / (arr * (1.0 + w))
    if arr.ndim == 0:
        return float(out)
    return out


class QuadratureKind(str, Enum):
    GAUSS_HERMITE_PROBABILIST = "gauss_hermite_probabilist"
    GAUSS_LAGUERRE = "gauss_laguerre"


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for a fixed-order Gaussian quadrature rule.

    For ``gauss_hermite_probabilist`` the weight function is the standard
    normal density; for ``gauss_laguerre`` it is ``exp(-x)`` on [0, inf).
    Weights sum to one in both cases.
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: QuadratureKind

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ParameterError("nodes and weights must be 1-D and equal length")
        if np.any(np.diff(nodes) <= 0.0):
            raise ParameterError("nodes must be strictly increasing")
        if np.any(weights < 0.0):
            raise ParameterError("weights must be nonnegative")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def order(self) -> int:
        return self.nodes.shape[0]

    def integrate(self, f) -> float:
        """Apply the rule to a callable evaluated on the nodes."""
        return float(np.sum(self.weights * f(self.nodes)))


def _golub_welsch(diag, offdiag):
    # Nodes are the eigenvalues of the Jacobi matrix; each weight is the
    # squared first component of the matching normalized eigenvector
    # (unit total mass). Stable for every order this package accepts.
    import scipy.linalg

    vals, vecs = scipy.linalg.eigh_tridiagonal(diag, offdiag)
    weights = vecs[0, :] ** 2
    return vals, weights


def make_quadrature(kind, n: int) -> QuadratureRule:
    """Build a Gauss-Hermite (probabilist) or Gauss-Laguerre rule.

    The rule integrates polynomials of degree <= 2n-1 exactly against its
    weight function. Orders 1..512 are supported; note that for very high
    orders the outermost weights underflow to zero in double precision.
    """
    kind = QuadratureKind(kind)
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise ParameterError("quadrature order must be an integer")
    if not 1 <= int(n) <= 512:
        raise ParameterError(f"quadrature order must be in [1, 512], got {n}")
    n = int(n)
    if kind is QuadratureKind.GAUSS_HERMITE_PROBABILIST:
        if n == 1:
            nodes, weights = np.array([0.0]), np.array([1.0])
        else:
            k = np.arange(1, n, dtype=float)
            nodes, weights = _golub_welsch(np.zeros(n), np.sqrt(k))
    else:
        k = np.arange(n, dtype=float)
        nodes, weights = _golub_welsch(2.0 * k + 1.0, k[1:] if n > 1 else np.empty(0))
        nodes = np.maximum(nodes, np.finfo(float).tiny)  # guard rounding at 0+
    weights = weights / weights.sum()
    return QuadratureRule(nodes=nodes, weights=weights, kind=kind)


#: Default orders used by the saddle-point solvers; overridable per call.
DEFAULT_HERMITE_ORDER = 40
DEFAULT_LAGUERRE_ORDER = 320
