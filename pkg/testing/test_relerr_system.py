#!/usr/bin/env python3
"""
Tests for the relative-error realization, its block gramians and the error norms
"""

import numpy as np
import pytest

from relmor.errors import ModelDimensionError, UnsupportedModelError
from relmor.gramians import quadrature_h2tau_oracle
from relmor.lti_model import StateSpaceModel, TimeInterval, sample_frequencies
from relmor.relerr_system import (
    FeedthroughConvention,
    FullOrderCache,
    WeightKind,
    build_relerr,
    evaluate_relative_error,
    h2tau_additive_error,
    h2tau_relative_error,
    monolithic_gramians,
    relerr_gramian_blocks,
    relerr_projection_blocks,
)


def rel_pair(factory, seed, n=6, r=2, m=1):
    return factory(seed, n, m), factory(seed + 500, r, m)


@pytest.mark.unit
class TestBuildRelerr:
    """Assembly of Δ_rel and the endpoint coupling blocks"""

    def test_self_reduction_has_zero_transfer(self, minimum_phase_model, unit_interval):
        H = minimum_phase_model(30, 4, 2)
        system = build_relerr(H, H, unit_interval)
        worst = max(np.linalg.norm(system.transfer(1j * w)) for w in sample_frequencies(20))
        assert worst <= 1e-9, f"Δ_rel(jω) of H against itself reached {worst:.2e}"

    def test_scalar_shapes(self, unit_interval):
        H = StateSpaceModel([[-1.0]], [[1.0]], [[1.0]], [[1.0]])
        H_hat = StateSpaceModel([[-2.0]], [[1.0]], [[1.0]], [[1.0]])
        system = build_relerr(H, H_hat, unit_interval)
        assert system.A_rel.shape == (3, 3)
        assert system.B_rel.shape == (3, 1)
        assert system.C_rel.shape == (1, 3)
        assert system.weight_kind is WeightKind.INVERSE

    @pytest.mark.parametrize("interval", [TimeInterval(0.0, 1.0), TimeInterval(0.2, 0.9)])
    def test_coupling_matches_closed_form(self, minimum_phase_model, interval):
        H, H_hat = rel_pair(minimum_phase_model, 31)
        system = build_relerr(H, H_hat, interval)
        gap = system.inverse_identity_gap()
        assert gap is not None and gap <= 1e-8, f"E2 closed-form gap {gap}"
        assert system.diagnostics == []

    def test_zero_lower_limit_couplings_vanish(self, minimum_phase_model, unit_interval):
        H, H_hat = rel_pair(minimum_phase_model, 32)
        start = build_relerr(H, H_hat, unit_interval).couplings[0]
        assert start.t == 0.0
        assert not start.E1.any() and not start.E2.any()

    def test_coupling_blocks_match_exponential_of_a_rel(self, minimum_phase_model, shifted_interval):
        from scipy import linalg

        H, H_hat = rel_pair(minimum_phase_model, 33)
        system = build_relerr(H, H_hat, shifted_interval)
        n, r = H.n, H_hat.n
        for coupling in system.couplings:
            full = linalg.expm(system.A_rel * coupling.t)
            assert np.allclose(coupling.E1, full[n + r:, :n], atol=1e-10)
            assert np.allclose(coupling.E2, full[n + r:, n:n + r], atol=1e-10)

    def test_coupling_blocks_solve_their_sylvester_equations(self, minimum_phase_model, shifted_interval):
        H, H_hat = rel_pair(minimum_phase_model, 38)
        system = build_relerr(H, H_hat, shifted_interval)
        Aw = system.weight.A_i
        BwC, BwC_hat = system.weight.B_i @ H.C, system.weight.B_i @ H_hat.C
        for c in system.couplings:
            R1 = Aw @ c.E1 - c.E1 @ H.A + BwC @ c.exp_A - c.exp_w @ BwC
            R2 = Aw @ c.E2 - c.E2 @ H_hat.A - BwC_hat @ c.exp_hat + c.exp_w @ BwC_hat
            assert np.linalg.norm(R1) <= 1e-10 * max(np.linalg.norm(BwC), 1.0)
            assert np.linalg.norm(R2) <= 1e-10 * max(np.linalg.norm(BwC_hat), 1.0)

    def test_dimension_mismatch(self, minimum_phase_model, unit_interval):
        with pytest.raises(ModelDimensionError):
            build_relerr(minimum_phase_model(34, 4, 2), minimum_phase_model(35, 2, 1), unit_interval)

    def test_non_square_rejected(self, stable_model, unit_interval):
        with pytest.raises(UnsupportedModelError):
            build_relerr(stable_model(36, 4, 1, 2), stable_model(37, 2, 1, 2), unit_interval)

    def test_unstable_reduced_model_rejected(self, minimum_phase_model, unit_interval):
        H = minimum_phase_model(38, 3)
        unstable = StateSpaceModel([[0.5]], [[1.0]], [[1.0]], [[1.0]])
        with pytest.raises(UnsupportedModelError):
            build_relerr(H, unstable, unit_interval)

    def test_cache_for_other_model_rejected(self, minimum_phase_model, unit_interval):
        H, H_hat = rel_pair(minimum_phase_model, 39)
        cache = FullOrderCache(minimum_phase_model(40, 6), unit_interval)
        with pytest.raises(ValueError):
            build_relerr(H, H_hat, unit_interval, cache=cache)


@pytest.mark.unit
class TestRelGramianBlocks:
    """Block-by-block gramians against identities and the monolithic solve"""

    @pytest.mark.parametrize("interval", [TimeInterval(0.0, 1.0), TimeInterval(0.2, 0.9)])
    def test_block_identities(self, minimum_phase_model, interval):
        H, H_hat = rel_pair(minimum_phase_model, 41, m=2)
        blocks = relerr_gramian_blocks(build_relerr(H, H_hat, interval))
        for name, gap in blocks.identity_gaps().items():
            assert gap <= 1e-8, f"{name} identity violated by {gap:.2e}"

    def test_block_residuals(self, minimum_phase_model, unit_interval):
        H, H_hat = rel_pair(minimum_phase_model, 42)
        blocks = relerr_gramian_blocks(build_relerr(H, H_hat, unit_interval))
        for name, residual in blocks.residuals().items():
            assert residual <= 1e-9, f"{name} residual {residual:.2e}"

    def test_self_reduction_norm_is_zero(self, minimum_phase_model, unit_interval):
        H = minimum_phase_model(43, 4)
        result = relerr_gramian_blocks(build_relerr(H, H, unit_interval)).evaluate()
        assert result.value <= 1e-8
        assert result.dual_value <= 1e-8

    def test_trace_duality(self, minimum_phase_model, unit_interval):
        H, H_hat = rel_pair(minimum_phase_model, 44)
        result = relerr_gramian_blocks(build_relerr(H, H_hat, unit_interval)).evaluate()
        assert result.relative_gap <= 1e-7

    @pytest.mark.parametrize("interval", [TimeInterval(0.0, 1.0), TimeInterval(0.2, 0.9)])
    def test_matches_monolithic_solve(self, minimum_phase_model, interval):
        H, H_hat = rel_pair(minimum_phase_model, 45)
        system = build_relerr(H, H_hat, interval)
        blocks = relerr_gramian_blocks(system)
        mono = monolithic_gramians(system)
        for label, ours, theirs in (("P", blocks.p_matrix(), mono.P), ("Q", blocks.q_matrix(), mono.Q)):
            rel = np.linalg.norm(ours - theirs) / np.linalg.norm(theirs)
            assert rel <= 1e-8, f"{label} blocks vs monolithic: {rel:.2e}"

    def test_projection_blocks_agree_with_full_chain(self, minimum_phase_model, shifted_interval):
        H, H_hat = rel_pair(minimum_phase_model, 46)
        system = build_relerr(H, H_hat, shifted_interval)
        blocks = relerr_gramian_blocks(system)
        P12, Q12 = relerr_projection_blocks(system)
        assert np.allclose(P12, blocks.P12, atol=1e-13)
        assert np.allclose(Q12, blocks.Q12, atol=1e-13)

    def test_spectral_weight_has_no_identity_check(self, minimum_phase_model, unit_interval):
        H, H_hat = rel_pair(minimum_phase_model, 47)
        system = build_relerr(H, H_hat, unit_interval, weight_kind=WeightKind.SPECTRAL)
        assert system.inverse_identity_gap() is None
        assert relerr_gramian_blocks(system).identity_gaps() is None


@pytest.mark.property
class TestBlockIdentitySweep:
    """Identities and monolithic agreement on 50 random pairs"""

    def test_fifty_random_pairs(self, minimum_phase_model):
        intervals = [TimeInterval(0.0, 1.0), TimeInterval(0.1, 0.7)]
        for seed in range(50):
            n = 3 + seed % 6
            r = 1 + seed % 3
            m = 1 + seed % 2
            H = minimum_phase_model(2000 + seed, n, m)
            H_hat = minimum_phase_model(3000 + seed, r, m)
            interval = intervals[seed % 2]
            system = build_relerr(H, H_hat, interval)
            gap = system.inverse_identity_gap()
            assert gap <= 1e-8, f"seed {seed}: E2 gap {gap:.2e}"
            blocks = relerr_gramian_blocks(system)
            for name, value in blocks.identity_gaps().items():
                assert value <= 1e-8, f"seed {seed}: {name} gap {value:.2e}"
            mono = monolithic_gramians(system)
            rel = np.linalg.norm(blocks.p_matrix() - mono.P) / np.linalg.norm(mono.P)
            assert rel <= 1e-8, f"seed {seed}: monolithic mismatch {rel:.2e}"


@pytest.mark.unit
class TestRelativeErrorNorm:
    def test_self_reduction(self, minimum_phase_model, unit_interval):
        H = minimum_phase_model(50, 4)
        assert h2tau_relative_error(H, H, unit_interval) <= 1e-8

    def test_matches_quadrature_of_assembled_realization(self, minimum_phase_model, unit_interval):
        H, H_hat = rel_pair(minimum_phase_model, 51)
        value = h2tau_relative_error(H, H_hat, unit_interval)
        oracle = quadrature_h2tau_oracle(build_relerr(H, H_hat, unit_interval).assembled_model(), unit_interval, 2000)
        assert value == pytest.approx(oracle, rel=1e-4)

    def test_scaling_invariance(self, minimum_phase_model, shifted_interval):
        H, H_hat = rel_pair(minimum_phase_model, 52, m=2)
        base = h2tau_relative_error(H, H_hat, shifted_interval)
        scaled = h2tau_relative_error(H.scaled(3.7), H_hat.scaled(3.7), shifted_interval)
        assert scaled == pytest.approx(base, rel=1e-9)

    def test_regularization_is_recorded(self, unit_interval):
        H = StateSpaceModel([[-1.0]], [[1.0]], [[1.0]], [[0.0]])
        H_hat = StateSpaceModel([[-2.0]], [[1.0]], [[1.0]], [[0.0]])
        for convention in FeedthroughConvention:
            result = evaluate_relative_error(H, H_hat, unit_interval, epsilon=1e-4, convention=convention)
            assert result.regularized
            assert result.convention is convention
            assert np.isfinite(result.value)
            assert any("regularized" in note for note in result.diagnostics)

    def test_conventions_differ_only_when_h_is_singular(self, minimum_phase_model, unit_interval):
        H, H_hat = rel_pair(minimum_phase_model, 53)
        values = [evaluate_relative_error(H, H_hat, unit_interval, convention=c).value for c in FeedthroughConvention]
        assert values[0] == values[1]

    def test_cache_gives_same_value(self, minimum_phase_model, unit_interval):
        H, H_hat = rel_pair(minimum_phase_model, 54)
        cache = FullOrderCache(H, unit_interval)
        plain = evaluate_relative_error(H, H_hat, unit_interval).value
        cached = evaluate_relative_error(H, H_hat, unit_interval, cache=cache).value
        assert cached == pytest.approx(plain, rel=1e-10)


@pytest.mark.unit
class TestAdditiveErrorNorm:
    def test_self_reduction(self, stable_model, unit_interval):
        H = stable_model(60, 5, 2, 2)
        assert h2tau_additive_error(H, H, unit_interval) <= 1e-8

    def test_long_interval_scalar(self, scalar_model):
        value = h2tau_additive_error(scalar_model, StateSpaceModel.pure_gain(0.0), TimeInterval(0.0, 20.0))
        assert value == pytest.approx(np.sqrt(0.5), rel=1e-12)

    def test_random_pair_matches_quadrature(self, stable_model, shifted_interval):
        H = stable_model(61, 6, 2, 2)
        H_hat = stable_model(62, 2, 2, 2)
        value = h2tau_additive_error(H, H_hat, shifted_interval)
        oracle = quadrature_h2tau_oracle(H.parallel_difference(H_hat), shifted_interval, 2000)
        assert value == pytest.approx(oracle, rel=1e-5)

    def test_unstable_pair_rejected(self, stable_model, unit_interval):
        unstable = StateSpaceModel([[0.5]], [[1.0]], [[1.0]], [[0.0]])
        with pytest.raises(UnsupportedModelError):
            h2tau_additive_error(stable_model(63, 3), unstable, unit_interval)
        assert np.isfinite(h2tau_additive_error(stable_model(63, 3), unstable, unit_interval, require_stable=False))


@pytest.mark.unit
class TestFullOrderCache:
    def test_matching_rules(self, stable_model, unit_interval):
        H = stable_model(70, 4, 1, 1)
        cache = FullOrderCache(H, unit_interval)
        assert cache.matches(H, unit_interval)
        assert cache.matches(H.with_feedthrough([[5.0]]), unit_interval)
        assert cache.matches(StateSpaceModel(H.A, H.B, 2 * H.C, H.D), unit_interval)
        assert not cache.matches(H, TimeInterval(0.0, 2.0))
        assert not cache.matches(stable_model(71, 4, 1, 1), unit_interval)

    def test_controllability_matches_direct_gramian(self, stable_model, shifted_interval):
        from relmor.gramians import tl_gramians

        H = stable_model(72, 5, 2, 2)
        cache = FullOrderCache(H, shifted_interval)
        direct = tl_gramians(H, shifted_interval, clip=False).P
        assert np.allclose(cache.controllability(), direct, atol=1e-13)
        assert cache.exponential(0.9) is cache.exponential(0.9)
