import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dspe import channels, fock, protocol
from dspe.channels import PhaseNoiseModel
from dspe.entanglement import negativity
from dspe.numerics import gaussian_quadrature


def test_closed_form_loss_limits():
    assert protocol.negativity_after_transmission_loss(0.6) == pytest.approx(0.3)
    assert protocol.negativity_after_coupling_loss(1.0) == pytest.approx(0.5)
    assert protocol.negativity_after_coupling_loss(0.0) == pytest.approx(0.0)
    for eta in (1e-3, 1e-2):
        assert protocol.negativity_after_coupling_loss(eta) == pytest.approx(eta**2 / 4, rel=0.02)
    with pytest.raises(ValueError):
        protocol.negativity_after_transmission_loss(1.5)
    assert protocol.coherent_entanglement_negativity(0.0, 0.3) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        protocol.coherent_entanglement_negativity(-1.0, 0.3)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_loss_simulations_match_closed_forms(eta, r):
    assert negativity(protocol.simulate_transmission_loss(r, eta)) == pytest.approx(
        protocol.negativity_after_transmission_loss(eta), abs=1e-8
    )
    assert negativity(protocol.simulate_coupling_loss(r, eta)) == pytest.approx(
        protocol.negativity_after_coupling_loss(eta), abs=1e-8
    )


def test_coupling_negativity_monotone_in_eta():
    grid = np.linspace(0, 1, 101)
    vals = [protocol.negativity_after_coupling_loss(e) for e in grid]
    assert np.all(np.diff(vals) >= -1e-15)


def test_witness_integrands():
    for a2 in (0.5, 3.0, 50.0):
        assert protocol.witness_phase_integrand(a2, 0.0) == pytest.approx(0.5)
        assert protocol.printed_phase_integrand(a2, 0.0) == pytest.approx(-0.5 * math.exp(-2 * a2))


@pytest.mark.parametrize("alpha2", [0.5, 1.0, 3.0])
@pytest.mark.parametrize("variance", [0.01, 0.1, 0.4])
def test_derived_integrand_matches_simulated_witness(alpha2, variance):
    noise = PhaseNoiseModel.gaussian(variance, 61)
    b = protocol.semi_analytic_phase_bound(alpha2, noise)
    assert b.closed_form == pytest.approx(b.oracle, abs=1e-7)
    assert b.oracle <= negativity(channels.dephased_state(math.sqrt(alpha2), noise, frame="displaced")) + 1e-9


def test_gaussian_approximation_is_second_order():
    # error of the closed-form approximation shrinks as variance^2
    def err(v):
        avg = gaussian_quadrature(v, 161).integrate(lambda p: protocol.witness_phase_integrand(1.0, p))
        return avg - protocol.gaussian_phase_bound_approx(1.0, v)

    ratio = err(0.01) / err(0.005)
    assert 3.5 < ratio < 4.5
    assert protocol.gaussian_phase_bound_approx(5.0, 0.0) == 0.5
    with pytest.raises(ValueError):
        protocol.gaussian_phase_bound_approx(1.0, -0.1)


def test_dephased_point_properties():
    pts = [protocol.dephased_negativity(2.0, v) for v in (0.0, 0.02, 0.05)]
    assert pts[0].negativity == pytest.approx(0.5, abs=1e-10)
    assert all(p.converged and not p.flagged for p in pts)
    assert pts[0].nodes == 1
    for p in pts:
        assert p.negativity >= p.bound_oracle - 1e-9
    assert pts[1].negativity > pts[2].negativity


def test_dephased_point_flagged_at_low_cap():
    p = protocol.dephased_negativity(100.0, 0.1, max_cutoff=40)
    assert p.flagged and p.cutoff == 40


def test_fig2_sweep_order_and_errors():
    pts = protocol.fig2_sweep([1.0, 2.0], [0.0, 0.01])
    assert [(p.alpha2, p.variance) for p in pts] == [(1.0, 0.0), (1.0, 0.01), (2.0, 0.0), (2.0, 0.01)]
    with pytest.raises(ValueError):
        protocol.fig2_sweep([], [0.1])


def test_experiment_bound():
    p = protocol.ExperimentParams.from_visibility(0.5, 0.6, 0.99996, 28.0)
    assert p.eta == pytest.approx(0.3)
    assert p.photons == 1569
    c = protocol.experiment_concurrence_bound(p)
    assert c == pytest.approx(0.0130727, abs=1e-6)
    # direct evaluation of the expression
    x = 4e-5 * 0.6 * 784
    assert c == pytest.approx(0.3 - 2 * math.sqrt(2 * 0.3 * 0.7) * math.sqrt(x) - 2 * 2.9 * x, abs=1e-9)
    assert protocol.experiment_concurrence_bound(protocol.ExperimentParams(0.5, 0.6, 0.0, 1e4)) == pytest.approx(0.3)


def test_max_alpha_threshold():
    a = protocol.max_alpha_for_positive_bound(0.5, 0.6, 4e-5)
    assert a == pytest.approx(28.9159, abs=1e-3)
    f = lambda al: protocol.experiment_concurrence_bound(protocol.ExperimentParams(0.5, 0.6, 4e-5, al * al))
    assert f(a * (1 - 1e-4)) > 0 and f(a * (1 + 1e-4)) == 0.0
    assert protocol.max_alpha_for_positive_bound(0.5, 0.6, 0.0) == math.inf
    with pytest.raises(ValueError):
        protocol.max_alpha_for_positive_bound(0.0, 0.6, 4e-5)


def test_experiment_params_validation():
    with pytest.raises(ValueError):
        protocol.ExperimentParams(1.2, 0.5, 0.0)
    with pytest.raises(ValueError):
        protocol.ExperimentParams(0.5, 0.5, 0.0, -1.0)


def test_lo_noise_bound():
    assert protocol.lo_noise_concurrence_bound(100.0, 1.0) == 1.0
    assert protocol.lo_noise_concurrence_bound(100.0, 0.9999) == pytest.approx(0.9)
    assert protocol.lo_noise_concurrence_bound(1e6, 0.99) == 0.0


def test_pipeline_ideal():
    r = protocol.measurement_pipeline(0.5)
    t = r.tomogram
    assert (t.p01, t.p10) == pytest.approx((0.5, 0.5), abs=1e-10)
    assert r.visibility == pytest.approx(1.0, abs=1e-9)
    assert r.chou_bound == pytest.approx(1.0, abs=1e-9)
    assert r.concurrence == pytest.approx(1.0, abs=1e-7)
    assert r.negativity == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("eta_t", [0.3, 0.6, 0.9])
def test_pipeline_transmission_loss_closed_form(eta_t):
    # after displacing back, the state is (|10> - sqrt(eta)|01>) plus vacuum: C = sqrt(eta)
    r = protocol.measurement_pipeline(0.8, eta_t=eta_t)
    assert r.chou_bound == pytest.approx(math.sqrt(eta_t), abs=1e-6)
    assert r.concurrence == pytest.approx(math.sqrt(eta_t), abs=1e-6)
    assert r.negativity == pytest.approx(eta_t / 2, abs=1e-8)
    assert r.tomogram.captured_mass == pytest.approx(1.0, abs=1e-9)


def test_pipeline_noise_and_argument_checks():
    noisy = protocol.measurement_pipeline(
        1.0, 0.8, 0.7, noise=PhaseNoiseModel.gaussian(0.05, 21), path_noise=PhaseNoiseModel.gaussian(0.05, 21),
        loss_modes="AB",
    )
    assert 0 <= noisy.chou_bound <= noisy.concurrence + 1e-8
    assert noisy.concurrence < 1
    d = noisy.to_dict()
    assert {"tomogram", "visibility", "chou_bound", "wootters_concurrence", "negativity"} <= set(d)
    with pytest.raises(ValueError):
        protocol.measurement_pipeline(5.0)
    with pytest.raises(ValueError):
        protocol.measurement_pipeline(0.5, loss_modes="C")
