"""Dense complex matrix kernels shared by the rest of the package.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  The helpers here
add the input checks and tolerances the physics code relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

HERMITIAN_RTOL = 1e-10

# Gauss-Hermite weights from numpy underflow to nan beyond ~400 nodes.
MAX_QUADRATURE_NODES = 321
DEFAULT_QUADRATURE_NODES = 41

_TAYLOR_ORDER = 18
_SCALE_THRESHOLD = 0.5


class NotHermitianError(ValueError):
    """Raised when a matrix expected to be Hermitian is not."""


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def max_asymmetry(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def is_hermitian(m, tol: float = HERMITIAN_RTOL) -> bool:
    """True when ``max|m - m^dagger| <= tol * max(1, ||m||_F)``."""
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        return False
    scale = max(1.0, float(np.linalg.norm(a)))
    return max_asymmetry(a) <= tol * scale


def is_unitary(m, tol: float = 1e-10) -> bool:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        return False
    eye = np.eye(a.shape[0])
    return float(np.max(np.abs(a.conj().T @ a - eye))) <= tol


def _check_hermitian(a: np.ndarray) -> None:
    if a.shape[0] != a.shape[1]:
        raise NotHermitianError(f"matrix is not square: shape {a.shape}")
    scale = max(1.0, float(np.linalg.norm(a)))
    asym = max_asymmetry(a)
    if asym > HERMITIAN_RTOL * scale:
        raise NotHermitianError(
            f"matrix is not Hermitian: max |m - m^dagger| = {asym:.3e} "
            f"(allowed {HERMITIAN_RTOL * scale:.3e})"
        )


def hermitian_eigen(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns ascending real eigenvalues and the matrix whose columns are the
    corresponding orthonormal eigenvectors.
    """
    a = as_matrix(m)
    _check_hermitian(a)
    # eigh reads one triangle only; symmetrise so round-off in the other is not dropped
    h = 0.5 * (a + a.conj().T)
    return np.linalg.eigh(h)


def hermitian_eigvals(m) -> np.ndarray:
    a = as_matrix(m)
    _check_hermitian(a)
    return np.linalg.eigvalsh(0.5 * (a + a.conj().T))


def trace_norm(m) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.sum(np.abs(hermitian_eigvals(m))))


def matrix_exp(m) -> np.ndarray:
    """Matrix exponential by scaling and squaring a fixed-order Taylor series.

    The input is scaled by ``2**-s`` until its 1-norm is at most 0.5, where an
    order-18 Taylor polynomial is accurate to well below double precision, and
    the result is squared ``s`` times.
    """
    a = as_matrix(m)
    n, k = a.shape
    if n != k:
        raise ValueError(f"matrix_exp needs a square matrix, got shape {a.shape}")
    norm = float(np.max(np.sum(np.abs(a), axis=0))) if n else 0.0
    s = 0
    if norm > _SCALE_THRESHOLD:
        s = int(np.ceil(np.log2(norm / _SCALE_THRESHOLD)))
    x = a / (2.0**s)

    # Horner form of sum_k x^k / k!
    result = np.eye(n, dtype=np.complex128)
    for j in range(_TAYLOR_ORDER, 0, -1):
        result = np.eye(n, dtype=np.complex128) + (x @ result) / j
    for _ in range(s):
        result = result @ result
    return result


@dataclass(frozen=True)
class QuadratureRule:
    """Discrete approximation of a phase distribution: nodes (rad) and weights."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        if nodes.shape != weights.shape or nodes.size == 0:
            raise ValueError("nodes and weights must be non-empty and of equal length")
        if np.any(weights < 0):
            raise ValueError("quadrature weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"quadrature weights sum to {weights.sum()!r}, not 1")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.nodes.size

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.sum(self.weights * f(self.nodes)))


def gaussian_quadrature(variance: float, n_nodes: int = DEFAULT_QUADRATURE_NODES) -> QuadratureRule:
    """Gauss-Hermite rule for a zero-mean Gaussian of the given variance (rad^2).

    Exact for polynomials of degree up to ``2 * n_nodes - 1``.  Zero variance
    gives the delta distribution: a single node at 0.
    """
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    if n_nodes < 1:
        raise ValueError(f"n_nodes must be >= 1, got {n_nodes}")
    if n_nodes > MAX_QUADRATURE_NODES:
        raise ValueError(f"n_nodes above {MAX_QUADRATURE_NODES} is not supported")
    if variance == 0:
        return QuadratureRule(np.zeros(1), np.ones(1))
    x, w = hermegauss(n_nodes)
    w = w / w.sum()
    return QuadratureRule(np.sqrt(variance) * x, w / w.sum())


def wrapped_gaussian_quadrature(variance: float, n_nodes: int) -> QuadratureRule:
    """Trapezoid rule on ``[-pi, pi)`` weighted by the Gaussian wrapped onto the circle.

    Equivalent to the Gaussian average for any 2*pi-periodic integrand, and
    converges exponentially for smooth ones where Gauss-Hermite stalls.
    """
    if variance <= 0:
        return gaussian_quadrature(0.0)
    sigma = np.sqrt(variance)
    nodes = -np.pi + 2 * np.pi * np.arange(n_nodes) / n_nodes
    images = int(np.ceil(12 * sigma / (2 * np.pi))) + 1
    shifts = 2 * np.pi * np.arange(-images, images + 1)
    dens = np.exp(-0.5 * (nodes[:, None] + shifts[None, :]) ** 2 / variance).sum(axis=1)
    return QuadratureRule(nodes, dens / dens.sum())


def refine_node_count(n_nodes: int) -> int:
    """Next node count in the doubling sequence 41, 81, 161, 321."""
    return 2 * n_nodes - 1


MAX_WRAPPED_NODES = 8192


def gaussian_rule_sequence(variance: float, n_nodes: int = DEFAULT_QUADRATURE_NODES):
    """Successively finer rules for a Gaussian phase average.

    Gauss-Hermite rules with the node count doubled each step up to
    ``MAX_QUADRATURE_NODES``, then wrapped-Gaussian trapezoid rules from 512
    up to ``MAX_WRAPPED_NODES`` nodes.  Zero variance yields the single delta
    rule.
    """
    if variance == 0:
        yield gaussian_quadrature(0.0)
        return
    n = n_nodes
    while n <= MAX_QUADRATURE_NODES:
        yield gaussian_quadrature(variance, n)
        n = refine_node_count(n)
    n = 512
    while n <= MAX_WRAPPED_NODES:
        yield wrapped_gaussian_quadrature(variance, n)
        n *= 2


def adaptive_gaussian_integral(
    fn: Callable[[QuadratureRule], float],
    variance: float,
    n_nodes: int = DEFAULT_QUADRATURE_NODES,
    tol: float = 1e-9,
) -> tuple[float, QuadratureRule, bool]:
    """Evaluate ``fn(rule)`` on finer and finer rules until it settles.

    Stops when two successive values differ by less than ``tol``.  Returns
    ``(value, rule, converged)``.
    """
    value, rule = None, None
    for finer in gaussian_rule_sequence(variance, n_nodes):
        new_value = fn(finer)
        if value is not None and abs(new_value - value) < tol:
            return new_value, finer, True
        value, rule = new_value, finer
    return value, rule, variance == 0
