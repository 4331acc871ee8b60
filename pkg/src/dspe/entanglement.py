"""Entanglement quantifiers: negativity, witness overlaps, concurrence, and the
detection-based concurrence bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import B, DensityOperator, TwoModeState, partial_transpose
from .numerics import hermitian_eigen, hermitian_eigvals

NEGATIVE_EIGENVALUE_THRESHOLD = 1e-12
VISIBILITY_STEPS = 256

_SY_SY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))
# (n_A, n_B) labels of the two-qubit subspace, in tomogram order
_QUBIT_LABELS = ((0, 0), (0, 1), (1, 0), (1, 1))


class VisibilityUndefinedError(ValueError):
    """The state has no population in the one-photon subspace."""


def negativity(rho: DensityOperator) -> float:
    """Sum of the magnitudes of the negative eigenvalues of the partial transpose."""
    ev = hermitian_eigvals(partial_transpose(rho, B))
    neg = ev[ev < -NEGATIVE_EIGENVALUE_THRESHOLD]
    return float(-neg.sum())


def min_pt_eigenvalue(rho: DensityOperator) -> float:
    return float(hermitian_eigvals(partial_transpose(rho, B))[0])


def witness_overlap(rho: DensityOperator, v: TwoModeState) -> float:
    """``<v| rho^Gamma |v>``; its negative is a lower bound on the negativity."""
    if tuple(v.mode_dims) != tuple(rho.mode_dims):
        raise ValueError(f"witness dims {v.mode_dims} do not match density dims {rho.mode_dims}")
    vec = v.vector / np.linalg.norm(v.vector)
    return float(np.vdot(vec, partial_transpose(rho, B) @ vec).real)


def _qubit_indices(mode_dims) -> list[int]:
    d_b = mode_dims[1]
    return [m * d_b + n for m, n in _QUBIT_LABELS]


@dataclass(frozen=True)
class QubitSubspaceTomogram:
    """Populations of ``{|00>, |01>, |10>, |11>}`` plus the renormalised 4x4 block.

    ``captured_mass`` is the trace of the block; the rest of the state lives
    above one photon per mode.
    """

    p00: float
    p01: float
    p10: float
    p11: float
    visibility: float
    block: np.ndarray
    captured_mass: float

    def to_dict(self) -> dict:
        return {
            "p00": self.p00,
            "p01": self.p01,
            "p10": self.p10,
            "p11": self.p11,
            "V": self.visibility,
            "captured_mass": self.captured_mass,
        }


def project_qubit_subspace(rho: DensityOperator, visibility: float | None = None) -> QubitSubspaceTomogram:
    """Extract ``p_mn = <mn|rho|mn>`` for ``m, n in {0, 1}`` and the normalised block.

    The visibility is measured with :func:`interference_visibility` unless
    given; it is 0 when there is no one-photon population.
    """
    idx = _qubit_indices(rho.mode_dims)
    block = rho.matrix[np.ix_(idx, idx)]
    mass = float(np.trace(block).real)
    p = np.clip(np.diag(block).real, 0.0, 1.0)
    if visibility is None:
        try:
            visibility = interference_visibility(rho)
        except VisibilityUndefinedError:
            visibility = 0.0
    normalized = block / mass if mass > 0 else block
    return QubitSubspaceTomogram(
        float(p[0]), float(p[1]), float(p[2]), float(p[3]), float(visibility), normalized, mass
    )


def wootters_concurrence(rho4) -> float:
    """Concurrence of a two-qubit density matrix.

    Uses the Hermitian form: the ``lambda_i`` are square roots of the
    eigenvalues of ``sqrt(rho) rho~ sqrt(rho)``, where
    ``rho~ = (sy x sy) rho^* (sy x sy)``.
    """
    r = np.asarray(rho4, dtype=np.complex128)
    if r.shape != (4, 4):
        raise ValueError(f"need a 4x4 density matrix, got {r.shape}")
    r = r / np.trace(r).real
    w, v = hermitian_eigen(r)
    sqrt_r = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    tilde = _SY_SY @ r.conj() @ _SY_SY
    m = sqrt_r @ tilde @ sqrt_r
    lam = np.sqrt(np.clip(hermitian_eigvals(0.5 * (m + m.conj().T)), 0.0, None))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def chou_concurrence_bound(t: QubitSubspaceTomogram) -> float:
    """``max(0, V (p01 + p10) - 2 sqrt(p00 p11))``."""
    return max(0.0, t.visibility * (t.p01 + t.p10) - 2.0 * math.sqrt(t.p00 * t.p11))


def interference_visibility(rho: DensityOperator, steps: int = VISIBILITY_STEPS) -> float:
    """Contrast of the one-photon interference when A and B are recombined.

    Mode A gets a phase ``theta`` (``steps`` values over ``[0, 2 pi)``), the two
    modes are mixed on the 50:50 beam splitter, and the probability of the
    photon leaving through port A is recorded.  ``V = (max - min)/(max + min)``.
    """
    d_b = rho.mode_dims[1]
    i10, i01 = 1 * d_b + 0, 0 * d_b + 1
    sub = rho.matrix[np.ix_([i10, i01], [i10, i01])]
    if float(np.trace(sub).real) <= 1e-300:
        raise VisibilityUndefinedError("no population in the one-photon subspace {|10>, |01>}")
    # one-photon block of the beam splitter in the (|10>, |01>) basis
    bs = np.array([[1.0, 1.0], [-1.0, 1.0]]) / math.sqrt(2)
    thetas = 2 * math.pi * np.arange(steps) / steps
    probs = np.empty(steps)
    for j, th in enumerate(thetas):
        u = bs @ np.diag([np.exp(1j * th), 1.0])
        probs[j] = (u @ sub @ u.conj().T)[0, 0].real
    hi, lo = probs.max(), probs.min()
    return float(np.clip((hi - lo) / (hi + lo), 0.0, 1.0))
