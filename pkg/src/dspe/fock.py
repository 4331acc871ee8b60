"""Truncated single- and two-mode Fock spaces.

Two-mode vectors and matrices are flattened with mode A as the major index:
``|n_A, n_B>`` sits at position ``n_A * dim_B + n_B``.  The partial transpose
and the partial trace below depend on that ordering.

Beam-splitter convention: the creation operators are mapped as
``a^dag -> (a^dag - b^dag)/sqrt(2)`` and ``b^dag -> (a^dag + b^dag)/sqrt(2)``,
so that a single photon in A mixed with a coherent state in B produces

    (D_a(alpha)|1>|alpha> - |alpha>D_b(alpha)|1>) / sqrt(2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .numerics import hermitian_eigvals, is_hermitian, matrix_exp

LEAKAGE_BOUND = 1e-8
# extra Fock levels used when a displaced vector is computed by matrix exponential
DISPLACEMENT_PADDING = 24
SCHEMA_VERSION = 1

A, B = "A", "B"


class TruncationError(ValueError):
    """The truncated basis misses more probability than allowed."""

    def __init__(self, message: str, leakage: float):
        super().__init__(message)
        self.leakage = leakage


def _mode_index(mode: str) -> int:
    if mode not in (A, B):
        raise ValueError(f"mode must be 'A' or 'B', got {mode!r}")
    return 0 if mode == A else 1


def _check_dim(dim: int) -> int:
    dim = int(dim)
    if dim < 2:
        raise ValueError(f"Fock cutoff must be >= 2, got {dim}")
    return dim


# ---------------------------------------------------------------------------
# Single-mode operators and states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModeOperator:
    matrix: np.ndarray
    label: str = "custom"
    # truncation defect reported by the builder (0 when exact)
    defect: float = 0.0

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other):
        if isinstance(other, ModeOperator):
            return ModeOperator(self.matrix @ other.matrix, "custom", self.defect + other.defect)
        return self.matrix @ other


def annihilation(dim: int) -> ModeOperator:
    dim = _check_dim(dim)
    return ModeOperator(np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(np.complex128), "a")


def creation(dim: int) -> ModeOperator:
    return ModeOperator(annihilation(dim).matrix.T.copy(), "a_dag")


def number_operator(dim: int) -> ModeOperator:
    return ModeOperator(np.diag(np.arange(_check_dim(dim))).astype(np.complex128), "n")


def phase_rotation(phi: float, dim: int) -> ModeOperator:
    """``U_phi = exp(i phi a^dag a)``; exact on the truncated space."""
    return ModeOperator(np.diag(np.exp(1j * phi * np.arange(_check_dim(dim)))), "U_phi")


def fock_vector(n: int, dim: int) -> np.ndarray:
    v = np.zeros(_check_dim(dim), dtype=np.complex128)
    v[n] = 1.0
    return v


def coherent_state(alpha: complex, dim: int) -> np.ndarray:
    """Truncated coherent-state amplitudes ``alpha^n e^{-|alpha|^2/2} / sqrt(n!)``.

    The vector is *not* renormalised; ``1 - ||v||^2`` is the truncation leakage.
    """
    return coherent_states(np.array([alpha]), dim)[:, 0]


def coherent_states(alphas, dim: int) -> np.ndarray:
    """Columns of truncated coherent states, one per amplitude, built in log space."""
    dim = _check_dim(dim)
    alphas = np.asarray(alphas, dtype=np.complex128).ravel()
    n = np.arange(dim)[:, None]
    r = np.abs(alphas)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_mag = -0.5 * r**2 + n * np.log(r) - 0.5 * gammaln(n + 1)
    # 0 ** 0 = 1 for the vacuum component of alpha = 0
    log_mag = np.where((n == 0) & (r == 0), 0.0, log_mag)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alphas)[None, :])


def displaced_single_photon(alpha: complex, dim: int) -> np.ndarray:
    """Closed-form amplitudes of ``D(alpha)|1> = (a^dag - alpha^*)|alpha>``, truncated."""
    return displaced_single_photons(np.array([alpha]), dim)[:, 0]


def displaced_single_photons(alphas, dim: int) -> np.ndarray:
    alphas = np.asarray(alphas, dtype=np.complex128).ravel()
    c = coherent_states(alphas, dim)
    out = -np.conj(alphas)[None, :] * c
    out[1:] += np.sqrt(np.arange(1, dim))[:, None] * c[:-1]
    return out


def displacement(alpha: complex, dim: int) -> ModeOperator:
    """``D(alpha) = exp(alpha a^dag - alpha^* a)`` on the truncated space.

    The truncated generator is anti-Hermitian, so the result is exactly unitary;
    ``defect`` reports how far its vacuum column is from the true coherent
    state (including the probability mass above the cutoff).
    """
    dim = _check_dim(dim)
    a = annihilation(dim).matrix
    gen = alpha * a.conj().T - np.conj(alpha) * a
    mat = matrix_exp(gen)
    exact = coherent_state(alpha, dim)
    leak = max(0.0, 1.0 - float(np.vdot(exact, exact).real))
    defect = float(np.linalg.norm(mat[:, 0] - exact)) + leak
    return ModeOperator(mat, "D", defect)


def displaced_fock(alpha: complex, n: int, dim: int, padding: int = DISPLACEMENT_PADDING) -> np.ndarray:
    """``D(alpha)|n>`` restricted to the lowest ``dim`` levels.

    Computed by matrix exponential on a padded space so that the retained
    amplitudes are not distorted by the truncation of the generator.
    """
    big = displacement(alpha, dim + padding).matrix
    return big[:dim, n].copy()


def recommended_cutoff(alpha: complex) -> int:
    """Starting cutoff ``ceil(|alpha|^2 + 6|alpha| + 12)``."""
    r = abs(alpha)
    return int(math.ceil(r * r + 6 * r + 12))


# ---------------------------------------------------------------------------
# Two-mode states and densities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoModeState:
    """Pure two-mode state; ``amplitudes[n_A, n_B]``."""

    amplitudes: np.ndarray
    leakage: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 2 or min(amps.shape) < 2:
            raise ValueError(f"amplitudes must be a (dim_A, dim_B) array with dims >= 2, got {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vec, mode_dims: Sequence[int], leakage: float = 0.0, normalize: bool = True):
        v = np.asarray(vec, dtype=np.complex128).reshape(tuple(mode_dims))
        if normalize:
            v = v / np.linalg.norm(v)
        return cls(v, leakage)

    @property
    def mode_dims(self) -> tuple[int, int]:
        return self.amplitudes.shape

    @property
    def vector(self) -> np.ndarray:
        return self.amplitudes.ravel()

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "TwoModeState") -> complex:
        return complex(np.vdot(self.vector, other.vector))

    def density(self) -> "DensityOperator":
        v = self.vector
        return DensityOperator(np.outer(v, v.conj()), self.mode_dims, self.leakage)

    def to_dict(self) -> dict:
        v = self.vector
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "two_mode_state",
            "mode_dims": list(self.mode_dims),
            "amplitudes": [[float(z.real), float(z.imag)] for z in v],
            "leakage": float(self.leakage),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TwoModeState":
        if d.get("kind") != "two_mode_state":
            raise ValueError(f"not a two_mode_state document: kind={d.get('kind')!r}")
        v = np.array([complex(re, im) for re, im in d["amplitudes"]])
        return cls(v.reshape(tuple(d["mode_dims"])), float(d.get("leakage", 0.0)))


@dataclass(frozen=True)
class DensityOperator:
    """Density matrix over the flattened (n_A, n_B) basis, or a single mode.

    ``mode_dims`` is ``(dim_A, dim_B)`` for two modes and ``(dim,)`` for one.
    """

    matrix: np.ndarray
    mode_dims: tuple = field(default=())
    leakage: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        dims = tuple(int(d) for d in self.mode_dims) or (m.shape[0],)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != math.prod(dims):
            raise ValueError(f"matrix shape {m.shape} does not match mode_dims {dims}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "mode_dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def is_valid(self, tol: float = 1e-10, psd_tol: float = 1e-9) -> bool:
        if not is_hermitian(self.matrix, tol):
            return False
        if abs(self.trace() - 1.0) > tol:
            return False
        return float(hermitian_eigvals(self.matrix)[0]) >= -psd_tol

    def normalized(self) -> "DensityOperator":
        return DensityOperator(self.matrix / self.trace(), self.mode_dims, self.leakage)

    def tensor(self) -> np.ndarray:
        """View as ``rho[a, b, a', b']``."""
        return self.matrix.reshape(self.mode_dims + self.mode_dims)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "density_operator",
            "mode_dims": list(self.mode_dims),
            "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix],
            "leakage": float(self.leakage),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DensityOperator":
        if d.get("kind") != "density_operator":
            raise ValueError(f"not a density_operator document: kind={d.get('kind')!r}")
        m = np.array([[complex(re, im) for re, im in row] for row in d["matrix"]])
        return cls(m, tuple(d["mode_dims"]), float(d.get("leakage", 0.0)))


def product_state(psi_a, psi_b, leakage: float = 0.0) -> TwoModeState:
    return TwoModeState(np.outer(psi_a, psi_b), leakage)


def two_mode(terms: dict, mode_dims: Sequence[int]) -> TwoModeState:
    """Normalised state from ``{(n_A, n_B): amplitude}``."""
    amps = np.zeros(tuple(mode_dims), dtype=np.complex128)
    for (na, nb), c in terms.items():
        amps[na, nb] = c
    return TwoModeState(amps / np.linalg.norm(amps))


def kron_density(rho_a: DensityOperator, rho_b: DensityOperator) -> DensityOperator:
    return DensityOperator(
        np.kron(rho_a.matrix, rho_b.matrix),
        (rho_a.dim, rho_b.dim),
        rho_a.leakage + rho_b.leakage,
    )


# ---------------------------------------------------------------------------
# Two-mode operations
# ---------------------------------------------------------------------------


def beam_splitter_50_50(dims: Sequence[int]) -> np.ndarray:
    """Unitary of the 50:50 beam-splitter on ``dim_A x dim_B``.

    ``U = exp(pi/4 (a^dag b - a b^dag))``, which maps ``a^dag`` to
    ``(a^dag - b^dag)/sqrt(2)`` and ``b^dag`` to ``(a^dag + b^dag)/sqrt(2)``.
    The generator conserves the total photon number, so it is exponentiated
    block by block; blocks with total photon number below the cutoff are exact.
    """
    dim_a, dim_b = (_check_dim(d) for d in dims)
    if dim_a != dim_b:
        raise ValueError(f"beam splitter needs equal cutoffs, got {dim_a} and {dim_b}")
    d = dim_a
    u = np.zeros((d * d, d * d), dtype=np.complex128)
    for total in range(2 * d - 1):
        ks = np.arange(max(0, total - d + 1), min(total, d - 1) + 1)
        idx = ks * d + (total - ks)
        gen = np.zeros((ks.size, ks.size))
        # a^dag b |k, N-k> = sqrt(k+1) sqrt(N-k) |k+1, N-k-1>
        for i in range(ks.size - 1):
            k = ks[i]
            amp = math.sqrt((k + 1) * (total - k))
            gen[i + 1, i] += amp
            gen[i, i + 1] -= amp
        u[np.ix_(idx, idx)] = matrix_exp(0.25 * math.pi * gen)
    return u


def _state_leakage(amps: np.ndarray) -> float:
    return max(0.0, 1.0 - float(np.sum(np.abs(amps) ** 2)))


def output_state_exact(alpha: complex, dims: Sequence[int]) -> TwoModeState:
    """Closed-form amplitudes of the displaced single-photon state, truncated.

    Independent of the matrix-exponential path; the state is renormalised and
    the lost mass stored as ``leakage``.
    """
    dim_a, dim_b = dims
    amps = (
        np.outer(displaced_single_photon(alpha, dim_a), coherent_state(alpha, dim_b))
        - np.outer(coherent_state(alpha, dim_a), displaced_single_photon(alpha, dim_b))
    ) / math.sqrt(2)
    leak = _state_leakage(amps)
    return TwoModeState(amps / np.linalg.norm(amps), leak)


def output_state_leakage(alpha: complex, dim: int) -> float:
    amps = (
        np.outer(displaced_single_photon(alpha, dim), coherent_state(alpha, dim))
        - np.outer(coherent_state(alpha, dim), displaced_single_photon(alpha, dim))
    ) / math.sqrt(2)
    return _state_leakage(amps)


def adaptive_cutoff(alpha: complex, bound: float = LEAKAGE_BOUND, max_dim: int = 400) -> int:
    """Smallest cutoff (from :func:`recommended_cutoff` up) with output-state leakage below ``bound``."""
    dim = recommended_cutoff(alpha)
    while output_state_leakage(alpha, dim) >= bound:
        dim += 1
        if dim > max_dim:
            raise TruncationError(f"no cutoff up to {max_dim} reaches leakage {bound}", output_state_leakage(alpha, max_dim))
    return dim


def build_output_state(alpha: complex, dims: Sequence[int] | None = None, bound: float = LEAKAGE_BOUND) -> TwoModeState:
    """``(D_a(alpha)|1>|alpha> - |alpha>D_b(alpha)|1>)/sqrt(2)`` from displacement operators."""
    if dims is None:
        dim = adaptive_cutoff(alpha, bound)
        dims = (dim, dim)
    dim_a, dim_b = (_check_dim(d) for d in dims)
    one_a = displaced_fock(alpha, 1, dim_a)
    vac_a = displaced_fock(alpha, 0, dim_a)
    one_b = displaced_fock(alpha, 1, dim_b)
    vac_b = displaced_fock(alpha, 0, dim_b)
    amps = (np.outer(one_a, vac_b) - np.outer(vac_a, one_b)) / math.sqrt(2)
    leak = _state_leakage(amps)
    if leak > bound:
        raise TruncationError(f"cutoffs {(dim_a, dim_b)} leak {leak:.3e} > {bound:.1e} at alpha={alpha}", leak)
    return TwoModeState(amps / np.linalg.norm(amps), leak)


def input_state(alpha: complex, dims: Sequence[int]) -> TwoModeState:
    """``a^dag|0>_A (x) D_b(sqrt(2) alpha)|0>_B``."""
    dim_a, dim_b = (_check_dim(d) for d in dims)
    coh = displaced_fock(math.sqrt(2) * alpha, 0, dim_b)
    leak = _state_leakage(coh)
    return TwoModeState(np.outer(fock_vector(1, dim_a), coh / np.linalg.norm(coh)), leak)


def build_output_state_sequential(
    alpha: complex, dims: Sequence[int] | None = None, padding: int = DISPLACEMENT_PADDING
) -> TwoModeState:
    """Same state as :func:`build_output_state`, built as input state followed by the beam splitter.

    The beam splitter acts on a space padded by ``padding`` levels per mode and
    the result is truncated back to ``dims``.
    """
    if dims is None:
        dim = adaptive_cutoff(alpha)
        dims = (dim, dim)
    dim_a, dim_b = (_check_dim(d) for d in dims)
    big = max(dim_a, dim_b) + padding
    psi_in = input_state(alpha, (big, big))
    out = (beam_splitter_50_50((big, big)) @ psi_in.vector).reshape(big, big)[:dim_a, :dim_b]
    leak = _state_leakage(out)
    return TwoModeState(out / np.linalg.norm(out), leak)


def apply_local(op_a, op_b, target):
    """Apply ``op_A (x) op_B`` to a :class:`TwoModeState` or conjugate a :class:`DensityOperator`.

    ``None`` stands for the identity on that mode.
    """
    dims = target.mode_dims
    ma = np.eye(dims[0]) if op_a is None else getattr(op_a, "matrix", op_a)
    mb = np.eye(dims[1]) if op_b is None else getattr(op_b, "matrix", op_b)
    if ma.shape != (dims[0], dims[0]) or mb.shape != (dims[1], dims[1]):
        raise ValueError(f"operator shapes {ma.shape}, {mb.shape} do not match mode dims {dims}")
    if isinstance(target, TwoModeState):
        return TwoModeState(ma @ target.amplitudes @ mb.T, target.leakage)
    t = target.tensor()
    t = np.einsum("ia,jb,abcd->ijcd", ma, mb, t, optimize=True)
    t = np.einsum("ijcd,kc,ld->ijkl", t, ma.conj(), mb.conj(), optimize=True)
    return DensityOperator(t.reshape(target.matrix.shape), dims, target.leakage)


def partial_trace(rho: DensityOperator, keep: str) -> DensityOperator:
    t = rho.tensor()
    if _mode_index(keep) == 0:
        m = np.einsum("abcb->ac", t)
    else:
        m = np.einsum("abad->bd", t)
    return DensityOperator(m, (m.shape[0],), rho.leakage)


def partial_transpose(rho: DensityOperator, mode: str = B) -> np.ndarray:
    """Matrix of ``rho^Gamma`` with the transpose taken on ``mode``."""
    t = rho.tensor()
    if _mode_index(mode) == 1:
        t = t.transpose(0, 3, 2, 1)
    else:
        t = t.transpose(2, 1, 0, 3)
    return t.reshape(rho.matrix.shape)


def expectation(rho: DensityOperator, op: np.ndarray) -> complex:
    return complex(np.trace(rho.matrix @ op))


def mode_number_operator(mode_dims: Sequence[int], mode: str | None = None) -> np.ndarray:
    """Photon-number operator of one mode (or both, ``mode=None``) on the joint space."""
    if len(mode_dims) == 1:
        return number_operator(mode_dims[0]).matrix
    n_a = np.kron(np.diag(np.arange(mode_dims[0])), np.eye(mode_dims[1]))
    n_b = np.kron(np.eye(mode_dims[0]), np.diag(np.arange(mode_dims[1])))
    if mode is None:
        return (n_a + n_b).astype(np.complex128)
    return (n_a if _mode_index(mode) == 0 else n_b).astype(np.complex128)


def photon_number_moments(rho: DensityOperator, mode: str | None = None) -> tuple[float, float]:
    """Mean and variance of a photon number (diagonal, so no matrix products needed)."""
    diag = np.diag(mode_number_operator(rho.mode_dims, mode)).real
    p = np.diag(rho.matrix).real
    mean = float(np.dot(p, diag))
    return mean, float(np.dot(p, diag**2) - mean**2)


def vector_moments(psi: np.ndarray) -> tuple[float, float]:
    """Photon-number mean and variance of a single-mode vector (renormalised)."""
    p = np.abs(psi) ** 2
    p = p / p.sum()
    n = np.arange(p.size)
    mean = float(np.dot(p, n))
    return mean, float(np.dot(p, n**2) - mean**2)
