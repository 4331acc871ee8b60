"""Phase sensitivity and the comparisons with coherent, N00N and cloner-based states."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import channels, fock
from .fock import DensityOperator

SENSITIVITY_LEAKAGE_BOUND = 1e-7


@dataclass(frozen=True)
class SensitivityReport:
    s: float
    mean_n: float
    var_n: float
    # 2 <n>: a coherent state with the same mean photon number
    classical_s: float

    def to_dict(self) -> dict:
        return asdict(self)


def sensitivity(rho: DensityOperator, mode: str | None = fock.A) -> SensitivityReport:
    """Squared Frobenius norm of ``d rho_phi / d phi`` for ``U_phi = exp(i phi n)``.

    Evaluated as ``-tr [n, rho]^2``, which holds for mixed states as well; the
    rotation is on ``mode`` (ignored for single-mode densities).
    """
    if rho.leakage > SENSITIVITY_LEAKAGE_BOUND:
        raise fock.TruncationError(
            f"state leaks {rho.leakage:.3e} above the cutoff (allowed {SENSITIVITY_LEAKAGE_BOUND:.0e})",
            rho.leakage,
        )
    n_op = fock.mode_number_operator(rho.mode_dims, mode)
    comm = n_op @ rho.matrix - rho.matrix @ n_op
    s = -float(np.trace(comm @ comm).real)
    mean, var = fock.photon_number_moments(rho, mode)
    return SensitivityReport(s=max(s, 0.0), mean_n=mean, var_n=var, classical_s=2.0 * mean)


def lossy_dse_sensitivity(alpha2: float, eta: float) -> float:
    """Amplitude-dependent part ``2 eta a^2 (1 - 3 eta + 4 eta^2)`` of the lossy sensitivity.

    The additive constant of the full expression is not known and is left out;
    the comparison with the classical slope ``2 eta a^2`` only involves this part.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    return 2.0 * eta * alpha2 * (1.0 - 3.0 * eta + 4.0 * eta * eta)


def classical_sensitivity(alpha2: float, eta: float) -> float:
    return 2.0 * eta * alpha2


def noon_loss_threshold(n_photons: int) -> float:
    """Transmission below which a lossy N00N state loses to the coherent state: ``(2/N)^(1/(2N-1))``."""
    if n_photons < 1:
        raise ValueError(f"N must be >= 1, got {n_photons}")
    return (2.0 / n_photons) ** (1.0 / (2 * n_photons - 1))


def cloner_separability_threshold(n_macro: float) -> float:
    """Coupling efficiency ``n/(n+1)`` below which the cloned micro-macro state is separable."""
    if n_macro < 0:
        raise ValueError(f"n must be >= 0, got {n_macro}")
    return n_macro / (n_macro + 1.0)


def lossy_output_state(alpha: complex, eta: float, dims=None) -> DensityOperator:
    """Output state with the same loss ``eta`` on both modes."""
    rho = fock.build_output_state(alpha, dims).density()
    rho = channels.apply_loss(rho, eta, fock.A)
    return channels.apply_loss(rho, eta, fock.B)


def simulated_lossy_sensitivity(alpha: complex, eta: float, dims=None) -> SensitivityReport:
    return sensitivity(lossy_output_state(alpha, eta, dims), fock.A)


def variance_ratio(alpha: complex, dim: int | None = None) -> float:
    """Photon-number variance of ``D(alpha)|1>`` over that of ``|alpha>`` (3 exactly)."""
    dim = dim or fock.recommended_cutoff(alpha) + 10
    _, var_one = fock.vector_moments(fock.displaced_fock(alpha, 1, dim))
    _, var_coh = fock.vector_moments(fock.displaced_fock(alpha, 0, dim))
    return var_one / var_coh

