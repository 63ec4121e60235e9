#!/usr/bin/env python3
"""
Reference runs on the ingested benchmark packages.

Each package lives in its own directory under RELMOR_BENCHMARK_DIR
(beam/, artificial/, iss/), as written by `relmor convert`.
"""

import numpy as np
import pytest

from relmor.harness.model_package import load_model
from relmor.lti_model import IssueCode, TimeInterval, validate
from relmor.reductors import ReductorConfig, tlbst, tlbt, tlrhmora

RELATIVE_BAND = 0.05


def package(benchmark_dir, name):
    path = benchmark_dir / name
    if not path.is_dir():
        pytest.skip(f"benchmark package {name} not ingested under {benchmark_dir}")
    return load_model(path).model


@pytest.mark.benchmark
class TestBenchmarkPackages:
    def test_iss_shape_and_issues(self, benchmark_dir):
        H = package(benchmark_dir, "iss")
        assert (H.n, H.m, H.p) == (270, 3, 3)
        codes = {issue.code for issue in validate(H)}
        assert IssueCode.D_RANK_DEFICIENT in codes
        assert H.is_stable()

    def test_beam_is_stable(self, benchmark_dir):
        H = package(benchmark_dir, "beam")
        assert H.n == 348
        assert H.is_stable()


@pytest.mark.benchmark
@pytest.mark.slow
class TestDeterministicReferenceValues:
    @pytest.mark.parametrize("name,interval,order,method,expected", [
        ("beam", (0.0, 0.5), 10, "tlbt", 0.5775),
        ("beam", (0.0, 0.5), 7, "tlbst", 10.4421),
        ("artificial", (0.0, 1.0), 11, "tlbt", 0.8117),
        ("iss", (0.0, 2.0), 6, "tlbst", 1.9597),
    ])
    def test_relative_error_within_band(self, benchmark_dir, name, interval, order, method, expected):
        H = package(benchmark_dir, name)
        reductor = {"tlbt": tlbt, "tlbst": tlbst}[method]
        result = reductor(H, ReductorConfig(order=order, interval=TimeInterval(*interval)))
        value = result.errors.relative
        assert abs(value - expected) <= RELATIVE_BAND * expected, (
            f"{method} on {name} r={order}: {value:.4f} vs reference {expected:.4f}"
        )


@pytest.mark.benchmark
@pytest.mark.slow
class TestIterativeBand:
    @pytest.mark.parametrize("name,interval,order", [
        ("beam", (0.0, 0.5), 6),
        ("artificial", (0.0, 1.0), 11),
    ])
    def test_best_of_seeds_beats_tlbt(self, benchmark_dir, name, interval, order):
        H = package(benchmark_dir, name)
        tau = TimeInterval(*interval)
        baseline = tlbt(H, ReductorConfig(order=order, interval=tau)).errors.relative
        runs = [tlrhmora(H, ReductorConfig(order=order, interval=tau, rng_seed=seed)) for seed in range(5)]
        best = np.nanmin([run.errors.relative for run in runs])
        histories = {seed: run.history[-3:] for seed, run in enumerate(runs)}
        assert best <= baseline, f"best TLRHMORA {best:.4f} above TLBT {baseline:.4f}; tails {histories}"
