#!/usr/bin/env python3
"""
Reductor Configuration and Results
Shared settings, result records and error bookkeeping for every reduction method
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from relmor.errors import ConfigurationError, RelmorError
from relmor.lti_model import StateSpaceModel, TimeInterval
from relmor.reductors.projection import ProjectionPair
from relmor.relerr_system import (
    FeedthroughConvention,
    FullOrderCache,
    evaluate_relative_error,
    h2tau_additive_error,
)
from relmor.spectral_factor import FactorOrientation

logger = logging.getLogger(__name__)


class Method(str, Enum):
    TLBT = "tlbt"
    TLBST = "tlbst"
    TLIRKA = "tlirka"
    TLRHMORA = "tlrhmora"

    @property
    def iterative(self) -> bool:
        return self in (Method.TLIRKA, Method.TLRHMORA)


class InitStrategy(str, Enum):
    RANDOM_STABLE = "random-stable"
    DOMINANT_EIGS = "dominant-eigs"


class ReductorConfig(BaseModel):
    """Settings for a single reduction; immutable once validated"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    order: int
    interval: TimeInterval
    epsilon: float = 1e-4
    max_iter: int = 50
    conv_tol: float = 1e-6
    init_strategy: InitStrategy = InitStrategy.RANDOM_STABLE
    rng_seed: int = 0
    restarts: int = 3
    orientation: FactorOrientation = FactorOrientation.RIGHT
    convention: FeedthroughConvention = FeedthroughConvention.REGULARIZED

    @field_validator("order", "max_iter")
    @classmethod
    def check_count(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"must be at least 1, got {v}")
        return v

    @field_validator("epsilon", "conv_tol")
    @classmethod
    def check_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError(f"must be strictly positive, got {v}")
        return v

    @field_validator("restarts")
    @classmethod
    def check_restarts(cls, v: int) -> int:
        if v < 0:
            raise ValueError(f"restart budget cannot be negative, got {v}")
        return v


def check_order(model: StateSpaceModel, cfg: ReductorConfig) -> None:
    """r may equal n (self-reduction); larger orders are rejected"""
    if cfg.order > model.n:
        raise ConfigurationError(f"order {cfg.order} exceeds model order {model.n}")


@dataclass
class ErrorSummary:
    relative: float
    additive: float
    rom_stable: bool
    relative_dual: float = float("nan")
    diagnostics: List[str] = field(default_factory=list)


@dataclass(eq=False)
class ReductionResult:
    """A reduced model with its convergence record and error norms"""
    method: Method
    rom: StateSpaceModel
    projection: Optional[ProjectionPair] = None
    iterations: int = 0
    converged: bool = True
    history: List[float] = field(default_factory=list)
    singular_values: Optional[np.ndarray] = None
    errors: Optional[ErrorSummary] = None
    restarts: List[str] = field(default_factory=list)
    diagnostics: List[str] = field(default_factory=list)
    stationarity: Optional[Tuple[float, float, float]] = None


def eigenvalue_change(old: StateSpaceModel, new: StateSpaceModel) -> float:
    """Max relative change of the sorted eigenvalues of Â"""
    before = np.sort(np.linalg.eigvals(old.A))
    after = np.sort(np.linalg.eigvals(new.A))
    scale = np.maximum(np.abs(before), np.finfo(float).tiny)
    return float(np.max(np.abs(after - before) / scale))


def perturbed(model: StateSpaceModel, rng: np.random.Generator, size: float = 1e-3) -> StateSpaceModel:
    """Random relative perturbation of Â, used to leave a degenerate iterate"""
    scale = size * max(np.linalg.norm(model.A), 1.0)
    return StateSpaceModel(model.A + scale * rng.standard_normal(model.A.shape), model.B, model.C, model.D)


def is_finite(model: StateSpaceModel) -> bool:
    return all(np.all(np.isfinite(getattr(model, name))) for name in "ABC")


class RestartBudget:
    """Counts automatic restarts of an iterative reductor and keeps their log"""

    def __init__(self, method: Method, cfg: ReductorConfig):
        self.method = method
        self.limit = cfg.restarts
        self.seed = cfg.rng_seed
        self.used = 0
        self.log: List[str] = []
        self.rng = np.random.default_rng(cfg.rng_seed)

    @property
    def exhausted(self) -> bool:
        return self.used > self.limit

    def spend(self, iteration: int, reason: str) -> bool:
        """Record a restart; False once the budget is used up"""
        self.used += 1
        entry = f"iteration {iteration}: {reason}"
        self.log.append(entry)
        if self.exhausted:
            logger.warning(f"{self.method.value}: restart budget of {self.limit} exhausted ({reason})")
            return False
        logger.warning(f"{self.method.value}: restart {self.used}/{self.limit} at {entry}")
        return True

    def fresh_seed(self) -> int:
        return self.seed + self.used


def evaluate_errors(
    H: StateSpaceModel,
    rom: StateSpaceModel,
    cfg: ReductorConfig,
    cache: Optional[FullOrderCache] = None,
) -> ErrorSummary:
    """Both error norms of a ROM; unstable ROMs are evaluated and flagged, never skipped"""
    stable = rom.is_stable()
    diagnostics: List[str] = []
    if cache is not None and not cache.matches(H, cfg.interval):
        cache = None
    if not stable:
        message = f"reduced model is unstable (spectral abscissa {rom.spectral_abscissa():.4g})"
        diagnostics.append(message)
        logger.warning(message)

    try:
        additive = h2tau_additive_error(H, rom, cfg.interval, strict=False, require_stable=False)
    except (RelmorError, np.linalg.LinAlgError) as exc:
        additive = float("nan")
        diagnostics.append(f"additive error failed: {exc}")
        logger.error(f"additive error evaluation failed: {exc}")

    relative = relative_dual = float("nan")
    if H.is_square:
        try:
            result = evaluate_relative_error(
                H, rom, cfg.interval, epsilon=cfg.epsilon, convention=cfg.convention,
                cache=cache, require_stable=False,
            )
            relative, relative_dual = result.value, result.dual_value
            diagnostics.extend(result.diagnostics)
        except (RelmorError, np.linalg.LinAlgError) as exc:
            diagnostics.append(f"relative error failed: {exc}")
            logger.error(f"relative error evaluation failed: {exc}")
    return ErrorSummary(relative, additive, stable, relative_dual, diagnostics)


def finalize(
    method: Method,
    H: StateSpaceModel,
    rom: StateSpaceModel,
    cfg: ReductorConfig,
    *,
    cache: Optional[FullOrderCache] = None,
    **details,
) -> ReductionResult:
    result = ReductionResult(method=method, rom=rom, **details)
    result.errors = evaluate_errors(H, rom, cfg, cache)
    result.diagnostics.extend(result.errors.diagnostics)
    logger.info(
        f"{method.value} r={cfg.order}: rel={result.errors.relative:.6g} add={result.errors.additive:.6g} "
        f"iterations={result.iterations} converged={result.converged}"
    )
    return result
