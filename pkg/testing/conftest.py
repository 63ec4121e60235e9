#!/usr/bin/env python3
"""
Pytest configuration and shared fixtures for the relmor test suite
"""

import logging
import os
import sys
from pathlib import Path
from typing import Callable, List

import numpy as np
import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

from relmor.config import get_settings  # noqa: E402
from relmor.dense_solvers import spectral_abscissa  # noqa: E402
from relmor.lti_model import StateSpaceModel, TimeInterval, is_minimum_phase  # noqa: E402
from relmor.reductors.projection import ProjectionPair  # noqa: E402

logger = logging.getLogger(__name__)

PROJECTION_GAP_LIMIT = 1e-8


# ================================================================
# PYTEST CONFIGURATION
# ================================================================

def pytest_configure(config):
    """Configure pytest with custom markers"""
    config.addinivalue_line("markers", "slow: mark test as slow running")
    config.addinivalue_line("markers", "unit: single-function checks against closed forms")
    config.addinivalue_line("markers", "integration: end-to-end runs through reductors or the harness")
    config.addinivalue_line("markers", "benchmark: needs ingested benchmark packages (RELMOR_BENCHMARK_DIR)")
    config.addinivalue_line("markers", "property: seeded sweeps over random instances")


def pytest_addoption(parser):
    """Add custom command line options"""
    parser.addoption("--runslow", action="store_true", default=False, help="run slow tests")


def pytest_collection_modifyitems(config, items):
    """Skip slow tests unless explicitly requested"""
    if config.getoption("-m") != "slow" and not config.getoption("--runslow"):
        skip_slow = pytest.mark.skip(reason="need --runslow option to run")
        for item in items:
            if "slow" in item.keywords:
                item.add_marker(skip_slow)


# ================================================================
# MODEL FACTORIES
# ================================================================

def make_stable_model(seed: int, n: int, m: int = 1, p: int = 1, *, feedthrough: str = "random",
                      margin: float = 0.5) -> StateSpaceModel:
    """
    Random Hurwitz model with spectral abscissa exactly -margin.

    feedthrough is "random", "identity" or "zero".
    """
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) / np.sqrt(n)
    A = A - (spectral_abscissa(A) + margin) * np.eye(n)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((p, n))
    if feedthrough == "identity":
        D = np.eye(p, m)
    elif feedthrough == "zero":
        D = np.zeros((p, m))
    else:
        D = rng.standard_normal((p, m))
    return StateSpaceModel(A, B, C, D)


def make_minimum_phase_model(seed: int, n: int, m: int = 1, *, attempts: int = 200) -> StateSpaceModel:
    """Square stable model with a Hurwitz inverse; redraws until one is found"""
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        A = rng.standard_normal((n, n)) / np.sqrt(n)
        A = A - (spectral_abscissa(A) + 0.5) * np.eye(n)
        B = 0.5 * rng.standard_normal((n, m))
        C = 0.5 * rng.standard_normal((m, n))
        D = 2.0 * np.eye(m) + 0.2 * rng.standard_normal((m, m))
        model = StateSpaceModel(A, B, C, D)
        if is_minimum_phase(model):
            return model
    raise RuntimeError(f"no minimum-phase draw for seed {seed} after {attempts} attempts")


def make_non_minimum_phase_model(seed: int, n: int, m: int = 1, *, attempts: int = 200) -> StateSpaceModel:
    """Square stable model with invertible D whose inverse is not Hurwitz"""
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        A = rng.standard_normal((n, n)) / np.sqrt(n)
        A = A - (spectral_abscissa(A) + 0.5) * np.eye(n)
        B = rng.standard_normal((n, m))
        C = rng.standard_normal((m, n))
        D = 0.2 * np.eye(m)
        model = StateSpaceModel(A, B, C, D)
        if not is_minimum_phase(model):
            return model
    raise RuntimeError(f"no non-minimum-phase draw for seed {seed} after {attempts} attempts")


@pytest.fixture
def stable_model() -> Callable[..., StateSpaceModel]:
    return make_stable_model


@pytest.fixture
def minimum_phase_model() -> Callable[..., StateSpaceModel]:
    return make_minimum_phase_model


@pytest.fixture
def non_minimum_phase_model() -> Callable[..., StateSpaceModel]:
    return make_non_minimum_phase_model


@pytest.fixture
def scalar_model() -> StateSpaceModel:
    """H(s) = 1/(s+1)"""
    return StateSpaceModel([[-1.0]], [[1.0]], [[1.0]], [[0.0]])


@pytest.fixture
def unit_interval() -> TimeInterval:
    return TimeInterval(0.0, 1.0)


@pytest.fixture
def shifted_interval() -> TimeInterval:
    return TimeInterval(0.2, 0.9)


# ================================================================
# SETTINGS AND BENCHMARK DATA
# ================================================================

@pytest.fixture
def fresh_settings():
    """Clear the cached settings so RELMOR_* variables set by the test take effect"""
    get_settings.cache_clear()
    yield get_settings
    get_settings.cache_clear()


@pytest.fixture
def benchmark_dir() -> Path:
    raw = os.getenv("RELMOR_BENCHMARK_DIR")
    if not raw:
        pytest.skip("RELMOR_BENCHMARK_DIR not set; benchmark packages unavailable")
    path = Path(raw)
    if not path.is_dir():
        pytest.skip(f"RELMOR_BENCHMARK_DIR {path} is not a directory")
    return path


# ================================================================
# PROJECTION INVARIANT
# ================================================================

@pytest.fixture(autouse=True)
def projection_pair_hook(monkeypatch) -> List[ProjectionPair]:
    """
    Record every ProjectionPair constructed during a test and check
    ‖WᵀV - I‖_F on teardown. Pairs rejected by their own validation never
    reach the record.
    """
    created: List[ProjectionPair] = []
    original = ProjectionPair.__post_init__

    def recording_post_init(self):
        original(self)
        created.append(self)

    monkeypatch.setattr(ProjectionPair, "__post_init__", recording_post_init)
    yield created
    for pair in created:
        gap = pair.oblique_gap()
        assert gap <= PROJECTION_GAP_LIMIT, f"projection pair with r={pair.r} has ‖WᵀV - I‖_F = {gap:.3e}"
