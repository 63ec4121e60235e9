#!/usr/bin/env python3
"""
Tests for the auxiliary solves, the exact gradient of J and the stationarity deviations
"""

import numpy as np
import pytest

from relmor.dense_solvers import trace_exchange_gap
from relmor.errors import NotMinimumPhaseError, UnsupportedModelError
from relmor.lti_model import StateSpaceModel, TimeInterval
from relmor.optimality import (
    GradientForm,
    compute_auxiliaries,
    condition_gradient,
    finite_difference_gradient,
    gradient_J,
    objective_J,
    realization_gradient,
    stationarity_deviation,
)
from relmor.relerr_system import h2tau_relative_error


def gradient_mismatch(exact, approx):
    """Worst componentwise max(|Δ| / (1e-5 |fd| + 1e-8)) over dA, dB, dC"""
    worst = 0.0
    for G, F in zip(exact, approx):
        worst = max(worst, float(np.max(np.abs(G - F) / (1e-5 * np.abs(F) + 1e-8))))
    return worst


def gradient_norm(gradient):
    return float(np.sqrt(sum(np.linalg.norm(G) ** 2 for G in gradient)))


@pytest.mark.unit
class TestAuxiliaries:
    def test_residuals(self, minimum_phase_model, unit_interval):
        aux = compute_auxiliaries(minimum_phase_model(100, 6), minimum_phase_model(600, 2), unit_interval)
        for name, residual in aux.residuals().items():
            assert residual <= 1e-9, f"{name} residual {residual:.2e}"
        assert set(aux.residuals()) >= {"X11", "X12", "X13", "X22", "X23", "X33", "Y13", "Y23", "Y33", "xi1"}

    def test_trace_exchange_on_auxiliary_operators(self, minimum_phase_model, unit_interval):
        aux = compute_auxiliaries(minimum_phase_model(104, 5), minimum_phase_model(604, 2), unit_interval)
        rng = np.random.default_rng(104)
        for name in ("X11", "X12", "X13", "X22", "X23", "X33", "Y13", "Y23", "Y33"):
            K, _, L, W = aux.equations[name]
            Z = rng.standard_normal((L.shape[0], K.shape[0]))
            gap = trace_exchange_gap(K, L, W, Z)
            assert gap <= 1e-9, f"{name}: trace exchange gap {gap:.2e}"

    def test_zero_input_matrix_zeroes_first_row(self, minimum_phase_model, unit_interval):
        H = minimum_phase_model(101, 5)
        H0 = StateSpaceModel(H.A, np.zeros_like(H.B), H.C, H.D)
        aux = compute_auxiliaries(H0, minimum_phase_model(601, 2), unit_interval)
        for block in (aux.X11, aux.X12, aux.X13):
            assert not block.any()

    def test_non_minimum_phase_rejected(self, minimum_phase_model, non_minimum_phase_model, unit_interval):
        with pytest.raises(NotMinimumPhaseError):
            compute_auxiliaries(minimum_phase_model(102, 4), non_minimum_phase_model(602, 2), unit_interval)

    def test_singular_feedthrough_rejected(self, minimum_phase_model, unit_interval):
        H = minimum_phase_model(103, 4)
        H_hat = StateSpaceModel([[-1.0]], [[1.0]], [[1.0]], [[0.0]])
        with pytest.raises(NotMinimumPhaseError):
            gradient_J(H, H_hat, unit_interval)


@pytest.mark.unit
class TestGradient:
    """Adjoint gradient of J against central differences"""

    @pytest.mark.parametrize("m,interval", [
        (1, TimeInterval(0.0, 1.0)),
        (2, TimeInterval(0.0, 1.0)),
        (1, TimeInterval(0.2, 0.9)),
    ])
    def test_matches_finite_differences(self, minimum_phase_model, m, interval):
        H = minimum_phase_model(110 + m, 5, m)
        H_hat = minimum_phase_model(610 + m, 2, m)
        exact = gradient_J(H, H_hat, interval)
        fd = finite_difference_gradient(H, H_hat, interval)
        assert gradient_mismatch(exact, fd) <= 1.0

    def test_vanishes_at_the_full_model(self, minimum_phase_model, unit_interval):
        H = minimum_phase_model(112, 3)
        assert gradient_norm(gradient_J(H, H, unit_interval)) <= 1e-7

    def test_p_and_q_forms_agree(self, minimum_phase_model, shifted_interval):
        H = minimum_phase_model(113, 6, 2)
        H_hat = minimum_phase_model(613, 2, 2)
        gp = gradient_J(H, H_hat, shifted_interval, form=GradientForm.P)
        gq = gradient_J(H, H_hat, shifted_interval, form=GradientForm.Q)
        for a, b in zip(gp, gq):
            assert np.linalg.norm(a - b) <= 1e-7 * max(np.linalg.norm(a), 1.0)

    def test_shapes(self, minimum_phase_model, unit_interval):
        H_hat = minimum_phase_model(614, 3, 2)
        g = gradient_J(minimum_phase_model(114, 6, 2), H_hat, unit_interval)
        assert g.dA.shape == H_hat.A.shape
        assert g.dB.shape == H_hat.B.shape
        assert g.dC.shape == H_hat.C.shape

    def test_objective_is_squared_relative_error(self, minimum_phase_model, unit_interval):
        H = minimum_phase_model(115, 6)
        H_hat = minimum_phase_model(615, 2)
        J = objective_J(H, H_hat, unit_interval)
        assert J == pytest.approx(h2tau_relative_error(H, H_hat, unit_interval) ** 2, rel=1e-8)

    def test_realization_gradient_of_scalar(self, scalar_model):
        # ‖1/(s+a)‖² on [0, T] is (1 - e^{-2aT})/(2a); at a = 1, T = 1 its a-derivative is
        # -(1 - e^{-2})/2 + e^{-2}
        g = realization_gradient(scalar_model, TimeInterval(0.0, 1.0))
        expected = -(1.0 - np.exp(-2.0)) / 2.0 + np.exp(-2.0)
        assert g.dA[0, 0] == pytest.approx(-expected, rel=1e-10)
        assert g.dB[0, 0] == pytest.approx(1.0 - np.exp(-2.0), rel=1e-10)
        assert g.dC[0, 0] == pytest.approx(1.0 - np.exp(-2.0), rel=1e-10)

    def test_thread_pool_gives_identical_differences(self, minimum_phase_model, unit_interval):
        H = minimum_phase_model(116, 4)
        H_hat = minimum_phase_model(616, 2)
        serial = finite_difference_gradient(H, H_hat, unit_interval, workers=1)
        pooled = finite_difference_gradient(H, H_hat, unit_interval, workers=3)
        for a, b in zip(serial, pooled):
            assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


@pytest.mark.property
class TestGradientSweep:
    """Twenty seeded instances, n ≤ 6, r = 2"""

    def test_twenty_instances(self, minimum_phase_model):
        intervals = [TimeInterval(0.0, 1.0), TimeInterval(0.1, 0.6)]
        for seed in range(20):
            m = 1 + seed % 2
            n = 3 + seed % 4
            H = minimum_phase_model(4000 + seed, n, m)
            H_hat = minimum_phase_model(5000 + seed, 2, m)
            interval = intervals[seed % 2]
            mismatch = gradient_mismatch(gradient_J(H, H_hat, interval),
                                         finite_difference_gradient(H, H_hat, interval))
            assert mismatch <= 1.0, f"seed {seed}: gradient mismatch {mismatch:.2f}"


@pytest.mark.unit
class TestClosedFormConditions:
    @pytest.mark.parametrize("m", [1, 2])
    def test_conditions_are_half_the_gradient(self, minimum_phase_model, unit_interval, m):
        H = minimum_phase_model(120 + m, 5, m)
        H_hat = minimum_phase_model(620 + m, 2, m)
        result = condition_gradient(H, H_hat, unit_interval)
        for name in ("P", "Q"):
            exact = gradient_J(H, H_hat, unit_interval, form=GradientForm(name))
            for G, E in zip((result.G_A, result.G_B, result.G_C), exact):
                assert G.shape == E.shape
                assert np.linalg.norm(2.0 * G - E) <= 1e-7 * max(np.linalg.norm(E), 1.0)

    def test_conditions_track_finite_differences(self, minimum_phase_model, unit_interval):
        H = minimum_phase_model(123, 4)
        H_hat = minimum_phase_model(623, 2)
        result = condition_gradient(H, H_hat, unit_interval)
        doubled = [2.0 * G for G in (result.G_A, result.G_B, result.G_C)]
        assert gradient_mismatch(doubled, finite_difference_gradient(H, H_hat, unit_interval)) <= 1.0

    def test_conditions_vanish_at_the_full_model(self, minimum_phase_model, unit_interval):
        H = minimum_phase_model(124, 4)
        result = condition_gradient(H, H, unit_interval)
        assert max(result.norms) <= 1e-7
        assert len(result.printed_gaps()) == 3
        assert all(np.isfinite(v) for v in result.printed_gaps())

    def test_shifted_interval_unsupported(self, minimum_phase_model, shifted_interval):
        with pytest.raises(UnsupportedModelError):
            condition_gradient(minimum_phase_model(121, 4), minimum_phase_model(621, 2), shifted_interval)
        with pytest.raises(UnsupportedModelError):
            stationarity_deviation(minimum_phase_model(121, 4), minimum_phase_model(621, 2), shifted_interval)

    def test_deviation_vanishes_at_the_full_model(self, minimum_phase_model):
        H = minimum_phase_model(3, 4)
        result = stationarity_deviation(H, H, TimeInterval(0.0, 1.0))
        assert max(result.as_tuple()) <= 1e-7, result.as_tuple()

    def test_deviation_of_a_generic_model(self, minimum_phase_model, unit_interval):
        H = minimum_phase_model(122, 5)
        H_hat = minimum_phase_model(622, 2)
        result = stationarity_deviation(H, H_hat, unit_interval)
        values = result.as_tuple()
        assert all(np.isfinite(v) and v >= 0.0 for v in values)
        conditions = condition_gradient(H, H_hat, unit_interval)
        assert values[1] == pytest.approx(float(np.linalg.norm(conditions.zeta2)), rel=1e-10, abs=1e-14)
        assert values[2] == pytest.approx(float(np.linalg.norm(conditions.zeta3)), rel=1e-10, abs=1e-14)
        assert gradient_norm(gradient_J(H, H_hat, unit_interval)) > 0.0
