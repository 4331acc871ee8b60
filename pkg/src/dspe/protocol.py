"""End-to-end pipelines and closed-form bounds for displaced single-photon entanglement.

Every closed form here has a full-simulation counterpart that can be run at
small amplitudes; the ``simulate_*`` helpers are those counterparts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import channels, fock
from .channels import PhaseNoiseModel
from .entanglement import (
    QubitSubspaceTomogram,
    chou_concurrence_bound,
    interference_visibility,
    negativity,
    project_qubit_subspace,
    VisibilityUndefinedError,
    witness_overlap,
    wootters_concurrence,
)
from .fock import DensityOperator, TwoModeState
from .numerics import DEFAULT_QUADRATURE_NODES, gaussian_rule_sequence

ALPHA_CAP = 200.0
DEFAULT_MAX_SIM_ALPHA2 = 16.0


# ---------------------------------------------------------------------------
# Loss
# ---------------------------------------------------------------------------


def _check_unit(name: str, x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {x}")
    return float(x)


def negativity_after_transmission_loss(eta_t: float) -> float:
    """Negativity after loss ``eta_t`` on mode B; independent of the amplitude."""
    return _check_unit("eta_t", eta_t) / 2.0


def negativity_after_coupling_loss(eta_c: float) -> float:
    """Negativity when the single photon crosses loss ``eta_c`` before the beam splitter.

    ``-(1 - eta_c - sqrt(1 - 2 (1 - eta_c) eta_c)) / 2``, which behaves as
    ``eta_c**2 / 4`` for small ``eta_c``.
    """
    e = _check_unit("eta_c", eta_c)
    return max(0.0, -0.5 * (1.0 - e - math.sqrt(1.0 - 2.0 * (1.0 - e) * e)))


def coherent_entanglement_negativity(alpha2: float, eta_t: float) -> float:
    """Baseline: negativity of ``|a>|a> + |-a>|-a>`` after loss on one mode."""
    if alpha2 < 0:
        raise ValueError(f"alpha2 must be >= 0, got {alpha2}")
    return 0.5 * math.exp(-2.0 * (1.0 - _check_unit("eta_t", eta_t)) * alpha2)


def simulate_transmission_loss(alpha: complex, eta_t: float, dims=None) -> DensityOperator:
    """Output state with loss on mode B, displaced back by ``D_a(-alpha) D_b(-sqrt(eta_t) alpha)``."""
    psi = fock.build_output_state(alpha, dims)
    rho = channels.apply_loss(psi.density(), eta_t, fock.B)
    d_a, d_b = rho.mode_dims
    return fock.apply_local(
        fock.displacement(-alpha, d_a), fock.displacement(-math.sqrt(eta_t) * alpha, d_b), rho
    )


def simulate_coupling_loss(alpha: complex, eta_c: float, dims=None) -> DensityOperator:
    """Coupling-loss output state displaced back by ``D_a(-alpha) D_b(-alpha)``."""
    rho = channels.coupling_loss_state(alpha, eta_c, dims)
    d_a, d_b = rho.mode_dims
    return fock.apply_local(fock.displacement(-alpha, d_a), fock.displacement(-alpha, d_b), rho)


# ---------------------------------------------------------------------------
# Phase noise
# ---------------------------------------------------------------------------


def saturating_vector(alpha: complex, dims: Sequence[int]) -> TwoModeState:
    """``(D_a(alpha) (x) D_b(alpha^*)) (|00> + |11>)/sqrt(2)``.

    This is the eigenvector of the partial transpose (taken on B) of the ideal
    output state for the eigenvalue -1/2.  The relative ``+`` sign follows from
    the ``-`` between the two branches of the output state; with the opposite
    sign the overlap would be +1/2.
    """
    d_a, d_b = dims
    amps = (
        np.outer(fock.displaced_fock(alpha, 0, d_a), fock.displaced_fock(np.conj(alpha), 0, d_b))
        + np.outer(fock.displaced_fock(alpha, 1, d_a), fock.displaced_fock(np.conj(alpha), 1, d_b))
    ) / math.sqrt(2)
    return TwoModeState(amps / np.linalg.norm(amps))


def displaced_frame_witness(dims: Sequence[int]) -> TwoModeState:
    """Saturating vector as seen in the displaced frame: ``(|00> + |11>)/sqrt(2)``."""
    return fock.two_mode({(0, 0): 1.0, (1, 1): 1.0}, dims)


def printed_phase_integrand(alpha2: float, phi):
    """Integrand of the semi-analytic bound in its originally stated form.

    ``e^{-2 a^2 (2 - cos phi)} / 2 * (a^2 (1 - cos 2 phi) - cos phi)``.  At zero
    noise it gives ``-e^{-2 a^2}/2``, not the ideal negativity 1/2.
    """
    phi = np.asarray(phi, dtype=float)
    return 0.5 * np.exp(-2 * alpha2 * (2 - np.cos(phi))) * (alpha2 * (1 - np.cos(2 * phi)) - np.cos(phi))


def witness_phase_integrand(alpha2: float, phi):
    """``-<v|rho_phi^Gamma|v>`` for the saturating vector, derived in closed form.

    ``-e^{-2 a^2 (1 - cos phi)} / 2 * (a^2 (1 - cos 2 phi) - cos phi)``; equals
    1/2 at ``phi = 0`` and its Gaussian average reduces, to first order in the
    variance, to :func:`gaussian_phase_bound_approx`.
    """
    phi = np.asarray(phi, dtype=float)
    return -0.5 * np.exp(-2 * alpha2 * (1 - np.cos(phi))) * (alpha2 * (1 - np.cos(2 * phi)) - np.cos(phi))


@dataclass(frozen=True)
class PhaseBound:
    printed: float  # quadrature of the printed integrand
    closed_form: float  # quadrature of the derived witness integrand
    oracle: float  # -<v|rho^Gamma|v> evaluated on the simulated mixture
    cutoff: int
    leakage: float


def semi_analytic_phase_bound(
    alpha2: float, noise: PhaseNoiseModel, max_cutoff: int = channels.MAX_DISPLACED_CUTOFF, strict: bool = True
) -> PhaseBound:
    """Witness lower bound on the negativity of the phase-averaged state.

    Returns the printed-formula value, the derived closed-form value, and the
    oracle ``-<v|rho^Gamma|v>`` computed on the simulated state.
    """
    alpha = math.sqrt(alpha2)
    rho = channels.dephased_state(alpha, noise, frame="displaced", max_cutoff=max_cutoff, strict=strict)
    oracle = -witness_overlap(rho, displaced_frame_witness(rho.mode_dims))
    return PhaseBound(
        printed=noise.rule.integrate(lambda p: printed_phase_integrand(alpha2, p)),
        closed_form=noise.rule.integrate(lambda p: witness_phase_integrand(alpha2, p)),
        oracle=oracle,
        cutoff=rho.mode_dims[0],
        leakage=rho.leakage,
    )


def gaussian_phase_bound_approx(alpha2: float, variance: float) -> float:
    """``(2 - v) / (4 (1 + 2 a^2 v)^(3/2))`` with ``v`` the phase variance in rad^2."""
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    return (2.0 - variance) / (4.0 * (1.0 + 2.0 * alpha2 * variance) ** 1.5)


@dataclass(frozen=True)
class DephasedPoint:
    alpha2: float
    variance: float
    negativity: float
    bound_oracle: float
    bound_gaussian: float
    cutoff: int
    nodes: int
    leakage: float
    converged: bool
    flagged: bool


def dephased_negativity(
    alpha2: float,
    variance: float,
    n_nodes: int = DEFAULT_QUADRATURE_NODES,
    tol: float = 1e-9,
    max_cutoff: int = channels.MAX_DISPLACED_CUTOFF,
) -> DephasedPoint:
    """Displaced-frame negativity of the phase-averaged state with node doubling.

    The node count starts at ``n_nodes`` and doubles until the negativity moves
    by less than ``tol`` (see :func:`~dspe.numerics.gaussian_rule_sequence`).
    A point is flagged when the cutoff cap is hit or the quadrature does not
    settle.
    """
    alpha = math.sqrt(alpha2)

    def evaluate(noise):
        rho = channels.dephased_state(alpha, noise, frame="displaced", max_cutoff=max_cutoff, strict=False)
        oracle = -witness_overlap(rho, displaced_frame_witness(rho.mode_dims))
        return negativity(rho), oracle, rho

    neg = oracle = rho = noise = None
    converged = variance == 0
    for rule in gaussian_rule_sequence(variance, n_nodes):
        noise = PhaseNoiseModel.from_rule(variance, rule)
        new_neg, oracle, rho = evaluate(noise)
        if neg is not None and abs(new_neg - neg) < tol:
            neg, converged = new_neg, True
            break
        neg = new_neg
    flagged = (rho.leakage > channels.DEPHASING_LEAKAGE_BOUND) or not converged
    return DephasedPoint(
        alpha2=float(alpha2),
        variance=float(variance),
        negativity=neg,
        bound_oracle=oracle,
        bound_gaussian=gaussian_phase_bound_approx(alpha2, variance),
        cutoff=rho.mode_dims[0],
        nodes=len(noise.rule),
        leakage=rho.leakage,
        converged=converged,
        flagged=flagged,
    )


def fig2_sweep(
    alpha2_list: Iterable[float],
    variance_grid: Iterable[float],
    n_nodes: int = DEFAULT_QUADRATURE_NODES,
    max_cutoff: int = channels.MAX_DISPLACED_CUTOFF,
) -> list[DephasedPoint]:
    """Negativity and both lower bounds over ``alpha2 x variance``, in grid order."""
    alpha2_list = list(alpha2_list)
    variance_grid = list(variance_grid)
    if not alpha2_list or not variance_grid:
        raise ValueError("fig2_sweep needs nonempty alpha2 and variance grids")
    return [
        dephased_negativity(a2, v, n_nodes=n_nodes, max_cutoff=max_cutoff)
        for a2 in alpha2_list
        for v in variance_grid
    ]


# ---------------------------------------------------------------------------
# Detection bounds
# ---------------------------------------------------------------------------


def lo_noise_concurrence_bound(alpha2: float, v_bar: float) -> float:
    """``max(0, 1 - 10 (1 - V_bar) |alpha|^2)`` for local-oscillator phase noise."""
    _check_unit("v_bar", v_bar)
    return max(0.0, 1.0 - 10.0 * (1.0 - v_bar) * alpha2)


@dataclass(frozen=True)
class ExperimentParams:
    """Coupling and detection efficiencies, phase-stability defect ``1 - V`` and ``|alpha|^2``."""

    eta_c: float
    eta_t: float
    epsilon: float
    alpha2: float = 0.0

    def __post_init__(self):
        for name in ("eta_c", "eta_t", "epsilon"):
            _check_unit(name, getattr(self, name))
        if self.alpha2 < 0:
            raise ValueError(f"alpha2 must be >= 0, got {self.alpha2}")

    @classmethod
    def from_visibility(cls, eta_c: float, eta_t: float, visibility: float, alpha: float = 0.0):
        return cls(eta_c, eta_t, 1.0 - _check_unit("visibility", visibility), alpha * alpha)

    @property
    def eta(self) -> float:
        return self.eta_c * self.eta_t

    @property
    def visibility(self) -> float:
        return 1.0 - self.epsilon

    @property
    def photons(self) -> float:
        return 2.0 * self.alpha2 + 1.0


def _experiment_expression(eta_c, eta_t, epsilon, alpha2) -> float:
    eta = eta_c * eta_t
    x = epsilon * eta_t * alpha2
    return eta - 2.0 * math.sqrt(2.0 * eta * (1.0 - eta)) * math.sqrt(x) - 2.0 * (2.0 + 3.0 * eta) * x


def experiment_concurrence_bound(p: ExperimentParams) -> float:
    """``max(0, eta - 2 sqrt(2 eta (1-eta)) sqrt(eps eta_t a^2) - 2 (2 + 3 eta) eps eta_t a^2)``.

    Stated for a weakly pumped heralded source with small heralding
    efficiency; no thresholds for those premises are applied here.
    """
    return max(0.0, _experiment_expression(p.eta_c, p.eta_t, p.epsilon, p.alpha2))


def max_alpha_for_positive_bound(eta_c: float, eta_t: float, epsilon: float, rtol: float = 1e-6) -> float:
    """Largest ``|alpha|`` keeping the experiment bound positive (``inf`` above the cap)."""
    ExperimentParams(eta_c, eta_t, epsilon)

    def f(a):
        return _experiment_expression(eta_c, eta_t, epsilon, a * a)

    if f(0.0) <= 0.0:
        raise ValueError("experiment bound is not positive even at alpha = 0")
    if f(ALPHA_CAP) > 0.0:
        return math.inf
    lo, hi = 0.0, ALPHA_CAP
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# Measurement pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasurementResult:
    tomogram: QubitSubspaceTomogram
    visibility: float
    chou_bound: float
    concurrence: float
    negativity: float
    mode_dims: tuple
    state: DensityOperator = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "tomogram": self.tomogram.to_dict(),
            "visibility": self.visibility,
            "chou_bound": self.chou_bound,
            "wootters_concurrence": self.concurrence,
            "negativity": self.negativity,
            "mode_dims": list(self.mode_dims),
            "leakage": self.state.leakage,
        }


def _dephase_mode_a(rho: DensityOperator, noise: PhaseNoiseModel) -> DensityOperator:
    d_a, d_b = rho.mode_dims
    n_a = np.repeat(np.arange(d_a), d_b)
    char = channels._characteristic(noise.rule, np.arange(-(d_a - 1), d_a))
    mix = char[np.subtract.outer(n_a, n_a) + d_a - 1]
    return DensityOperator(rho.matrix * mix, rho.mode_dims, rho.leakage)


def measurement_pipeline(
    alpha: complex,
    eta_c: float = 1.0,
    eta_t: float = 1.0,
    noise: PhaseNoiseModel | None = None,
    path_noise: PhaseNoiseModel | None = None,
    loss_modes: str = "B",
    dims: Sequence[int] | None = None,
    max_alpha2: float = DEFAULT_MAX_SIM_ALPHA2,
) -> MeasurementResult:
    """Simulate creation, loss, noise and the displacement measurement.

    1. single photon through coupling loss ``eta_c``, mixed with ``|sqrt(2) alpha>``;
    2. optional path phase noise on mode A;
    3. transmission loss ``eta_t`` on mode B (``loss_modes="B"``) or on both
       modes (``"AB"``);
    4. displacement of each mode by minus its mean field, ``-sqrt(eta) alpha``,
       driven by a common local oscillator whose phase follows ``noise``;
    5. tomogram on the two-qubit subspace, visibility, the detection bound,
       the concurrence of the projected block and the full negativity.
    """
    if abs(alpha) ** 2 > max_alpha2:
        raise ValueError(f"|alpha|^2 = {abs(alpha) ** 2:g} exceeds the simulation cap {max_alpha2:g}")
    if loss_modes not in ("A", "B", "AB"):
        raise ValueError(f"loss_modes must be 'A', 'B' or 'AB', got {loss_modes!r}")
    rho = channels.coupling_loss_state(alpha, eta_c, dims)
    if path_noise is not None and path_noise.kind != "delta":
        rho = _dephase_mode_a(rho, path_noise)
    eta_mode = {"A": 1.0, "B": 1.0}
    if eta_t < 1.0:
        for mode in loss_modes:
            rho = channels.apply_loss(rho, eta_t, mode)
            eta_mode[mode] = eta_t
    d_a, d_b = rho.mode_dims
    amp_a = math.sqrt(eta_mode["A"]) * alpha
    amp_b = math.sqrt(eta_mode["B"]) * alpha
    noise = noise or PhaseNoiseModel.delta()
    measured = np.zeros_like(rho.matrix)
    for phi, w in zip(noise.rule.nodes, noise.rule.weights):
        rot = np.exp(1j * phi)
        out = fock.apply_local(
            fock.displacement(-amp_a * rot, d_a), fock.displacement(-amp_b * rot, d_b), rho
        )
        measured += w * out.matrix
    state = DensityOperator(measured, rho.mode_dims, rho.leakage)
    try:
        vis = interference_visibility(state)
    except VisibilityUndefinedError:
        vis = 0.0
    tomo = project_qubit_subspace(state, visibility=vis)
    return MeasurementResult(
        tomogram=tomo,
        visibility=vis,
        chou_bound=chou_concurrence_bound(tomo),
        concurrence=wootters_concurrence(tomo.block),
        negativity=negativity(state),
        mode_dims=rho.mode_dims,
        state=state,
    )
