import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dspe import channels, fock, metrology
from dspe.fock import A, DensityOperator, TruncationError, TwoModeState

from conftest import random_density


def finite_difference_sensitivity(rho, h=1e-4):
    """||d rho_phi / d phi||_F^2 by central differences of the rotated state."""
    d_a = rho.mode_dims[0]
    plus = fock.apply_local(fock.phase_rotation(h, d_a), None, rho).matrix
    minus = fock.apply_local(fock.phase_rotation(-h, d_a), None, rho).matrix
    deriv = (plus - minus) / (2 * h)
    return float(np.sum(np.abs(deriv) ** 2))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_pure_state_sensitivity_is_twice_variance(seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=(5, 4)) + 1j * rng.normal(size=(5, 4))
    psi = TwoModeState(amps / np.linalg.norm(amps))
    rep = metrology.sensitivity(psi.density(), A)
    assert rep.s == pytest.approx(2 * rep.var_n, abs=1e-8)


def test_sensitivity_matches_derivative_on_mixed_states(rng):
    rho = DensityOperator(random_density(rng, 16, 3), (4, 4))
    assert metrology.sensitivity(rho).s == pytest.approx(finite_difference_sensitivity(rho), rel=1e-6)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_coherent_state_sensitivity(alpha):
    c = fock.coherent_state(alpha, 60)
    rep = metrology.sensitivity(DensityOperator(np.outer(c, c.conj()), (60,)))
    assert rep.s == pytest.approx(2 * alpha**2, abs=1e-10)
    assert rep.classical_s == pytest.approx(rep.s, abs=1e-10)


def test_noon_state_sensitivity():
    n = 6
    psi = fock.two_mode({(n, 0): 1, (0, n): 1}, (n + 1, n + 1))
    assert metrology.sensitivity(psi.density()).s == pytest.approx(n * n / 2, abs=1e-12)


def test_ideal_state_sensitivity():
    # 2 Var(n_A) = 4 a^2 + 1/2
    for alpha in (0.5, 1.5):
        rep = metrology.sensitivity(fock.build_output_state(alpha).density())
        assert rep.s == pytest.approx(4 * alpha**2 + 0.5, abs=1e-8)


@pytest.mark.parametrize("eta", [1.0, 0.9, 0.75, 0.5])
def test_lossy_slope_matches_closed_form(eta):
    # the amplitude-dependent part is linear in |alpha|^2
    s1 = metrology.simulated_lossy_sensitivity(1.0, eta).s
    s2 = metrology.simulated_lossy_sensitivity(math.sqrt(2.0), eta).s
    assert s2 - s1 == pytest.approx(metrology.lossy_dse_sensitivity(1.0, eta), abs=1e-7)


def test_crossover_at_three_quarters():
    for a2 in (1.0, 10.0, 1000.0):
        assert metrology.lossy_dse_sensitivity(a2, 0.75) == metrology.classical_sensitivity(a2, 0.75)
        assert metrology.lossy_dse_sensitivity(a2, 0.8) > metrology.classical_sensitivity(a2, 0.8)
        assert metrology.lossy_dse_sensitivity(a2, 0.7) < metrology.classical_sensitivity(a2, 0.7)
    with pytest.raises(ValueError):
        metrology.lossy_dse_sensitivity(1.0, 1.1)


def test_noon_thresholds():
    assert metrology.noon_loss_threshold(2) == 1.0
    assert 1 - metrology.noon_loss_threshold(100) == pytest.approx(1 - (2 / 100) ** (1 / 199))
    # lossy N00N sensitivity eta^(2N) N^2 / 2 equals the classical 2 eta N/2 at the threshold
    for n in (10, 100):
        eta = metrology.noon_loss_threshold(n)
        assert eta ** (2 * n) * n * n / 2 == pytest.approx(metrology.classical_sensitivity(n / 2, eta), rel=1e-12)
    with pytest.raises(ValueError):
        metrology.noon_loss_threshold(0)


@pytest.mark.parametrize("eta", [1.0, 0.9, 0.6])
def test_lossy_noon_sensitivity(eta):
    n = 6
    rho = fock.two_mode({(n, 0): 1, (0, n): 1}, (n + 1, n + 1)).density()
    rho = channels.apply_loss(channels.apply_loss(rho, eta, A), eta, fock.B)
    assert metrology.sensitivity(rho).s == pytest.approx(eta ** (2 * n) * n * n / 2, abs=1e-12)


def test_cloner_threshold():
    assert metrology.cloner_separability_threshold(0) == 0.0
    assert metrology.cloner_separability_threshold(1000) == pytest.approx(1000 / 1001)
    with pytest.raises(ValueError):
        metrology.cloner_separability_threshold(-1)


@pytest.mark.parametrize("alpha", [0.5, 2.0, 4.0])
def test_variance_ratio(alpha):
    assert metrology.variance_ratio(alpha) == pytest.approx(3.0, abs=1e-9)


def test_leaky_state_rejected():
    psi = fock.build_output_state(1.0)
    leaky = DensityOperator(psi.density().matrix, psi.mode_dims, leakage=1e-3)
    with pytest.raises(TruncationError):
        metrology.sensitivity(leaky)
    assert metrology.SensitivityReport(1.0, 2.0, 3.0, 4.0).to_dict()["classical_s"] == 4.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.floats(-math.pi, math.pi))
def test_sensitivity_invariant_under_rotation(seed, phi):
    rng = np.random.default_rng(seed)
    rho = DensityOperator(random_density(rng, 12, 2), (4, 3))
    rotated = fock.apply_local(fock.phase_rotation(phi, 4), None, rho)
    assert metrology.sensitivity(rotated).s == pytest.approx(metrology.sensitivity(rho).s, abs=1e-9)


def test_fock_state_has_zero_sensitivity():
    d = 6
    rho = DensityOperator(np.outer(fock.fock_vector(3, d), fock.fock_vector(3, d)).astype(complex), (d,))
    assert metrology.sensitivity(rho).s == 0.0


@pytest.mark.parametrize("alpha", [1.0, 3.0, 6.0])
def test_variance_against_coherent_reference(alpha):
    # Var(total) = 2 a^2 against 2 a^2 + 1 for a coherent state of equal mean, while the
    # per-mode ratio (2 a^2 + 1/4) / (a^2 + 1/2) only tends to 2 for large amplitudes
    rho = fock.build_output_state(alpha, bound=1e-14).density()
    a2 = alpha**2
    mean_t, var_t = fock.photon_number_moments(rho)
    assert var_t == pytest.approx(2 * a2, abs=1e-7)
    assert var_t / mean_t == pytest.approx(2 * a2 / (2 * a2 + 1), abs=1e-9)
    mean_a, var_a = fock.photon_number_moments(rho, A)
    assert var_a / mean_a == pytest.approx((2 * a2 + 0.25) / (a2 + 0.5), abs=1e-9)
    assert abs(var_a / mean_a - 2) < 0.75 / (a2 + 0.5) + 1e-9
