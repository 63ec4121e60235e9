#!/usr/bin/env python3
"""
Time-Limited Relative-Error H2 Model Order Reduction
Oblique projection iteration driven by the relative-error gramian blocks
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from relmor.errors import IterationError, RelmorError, UnsupportedModelError
from relmor.lti_model import StateSpaceModel, epsilon_regularize, is_minimum_phase
from relmor.optimality import stationarity_deviation
from relmor.reductors.base import (
    Method,
    ReductionResult,
    ReductorConfig,
    RestartBudget,
    check_order,
    eigenvalue_change,
    finalize,
    is_finite,
    perturbed,
)
from relmor.reductors.initial_guess import initial_guess
from relmor.reductors.projection import ProjectionPair, biorthogonal_gram_schmidt
from relmor.relerr_system import (
    FullOrderCache,
    WeightKind,
    build_relerr,
    relerr_projection_blocks,
)
from relmor.spectral_factor import build_spectral_factor_inverse

logger = logging.getLogger(__name__)


def tlrhmora_step(
    H_reg: StateSpaceModel,
    rom: StateSpaceModel,
    cfg: ReductorConfig,
    cache: Optional[FullOrderCache] = None,
) -> Tuple[StateSpaceModel, ProjectionPair, List[str]]:
    """
    One update: weight the error with the stable inverse spectral factor of
    the iterate, take P12 and Q12 of the weighted error system and
    bi-orthogonalize them into the next projection.
    """
    factor = build_spectral_factor_inverse(rom, cfg.orientation)
    system = build_relerr(
        H_reg, rom, cfg.interval,
        weight=factor.as_inverse(), weight_kind=WeightKind.SPECTRAL, cache=cache,
    )
    P12, Q12 = relerr_projection_blocks(system)
    pair = biorthogonal_gram_schmidt(P12, Q12)
    return H_reg.project(pair.V, pair.W, D=H_reg.D), pair, list(system.diagnostics)


def _stationarity(H_reg: StateSpaceModel, rom: StateSpaceModel, cfg: ReductorConfig, notes: List[str]):
    if cfg.interval.t1 != 0.0:
        notes.append("stationarity deviations are only defined for intervals starting at 0")
        return None
    if not is_minimum_phase(rom):
        notes.append("final iterate is not minimum-phase; stationarity deviations skipped")
        return None
    try:
        deviation = stationarity_deviation(H_reg, rom, cfg.interval)
    except (RelmorError, np.linalg.LinAlgError) as exc:
        notes.append(f"stationarity deviation failed: {exc}")
        return None
    notes.extend(deviation.diagnostics)
    return deviation.as_tuple()


def tlrhmora(
    H: StateSpaceModel,
    cfg: ReductorConfig,
    *,
    initial_rom: Optional[StateSpaceModel] = None,
    cache: Optional[FullOrderCache] = None,
) -> ReductionResult:
    """
    Relative-error reduction of a square model. D is ε-regularized during
    the iteration and the returned ROM carries the original D.
    """
    H.require_consistent()
    check_order(H, cfg)
    if not H.is_square:
        raise UnsupportedModelError(f"tlrhmora needs a square system, got {H.p}x{H.m}")

    D_reg = epsilon_regularize(H.D, cfg.epsilon)
    H_reg = H if np.array_equal(D_reg, H.D) else H.with_feedthrough(D_reg)
    if cache is None or not cache.matches(H_reg, cfg.interval):
        cache = FullOrderCache(H_reg, cfg.interval)

    start = initial_rom if initial_rom is not None else initial_guess(H, cfg.order, cfg.init_strategy, cfg.rng_seed)
    rom = start.with_feedthrough(D_reg)
    budget = RestartBudget(Method.TLRHMORA, cfg)

    history: List[float] = []
    notes: List[str] = []
    projection: Optional[ProjectionPair] = None
    last_good = rom
    converged = False
    iteration = 0
    while iteration < cfg.max_iter:
        iteration += 1
        if not rom.is_stable():
            if not budget.spend(iteration, "unstable iterate; fresh seeded guess"):
                break
            rom = initial_guess(H, cfg.order, cfg.init_strategy, budget.fresh_seed()).with_feedthrough(D_reg)
            continue
        try:
            new_rom, pair, step_notes = tlrhmora_step(H_reg, rom, cfg, cache)
        except (RelmorError, np.linalg.LinAlgError) as exc:
            if not budget.spend(iteration, f"{type(exc).__name__}: {exc}; perturbing iterate"):
                break
            rom = perturbed(rom, budget.rng)
            continue

        if not is_finite(new_rom):
            raise IterationError(f"tlrhmora produced a non-finite iterate at iteration {iteration}", history)
        change = eigenvalue_change(rom, new_rom)
        history.append(change)
        logger.info(f"tlrhmora iteration {iteration}: eigenvalue change {change:.3e}")
        for note in step_notes:
            if note not in notes:
                notes.append(note)
        rom, projection = new_rom, pair
        if rom.is_stable():
            last_good = rom
        if change < cfg.conv_tol:
            converged = True
            break

    if not converged:
        logger.warning(f"tlrhmora stopped after {iteration} iterations without convergence")
    stationarity = _stationarity(H_reg, last_good, cfg, notes)
    return finalize(
        Method.TLRHMORA, H, last_good.with_feedthrough(H.D), cfg, cache=cache,
        projection=projection,
        iterations=iteration,
        converged=converged,
        history=history,
        restarts=list(budget.log),
        diagnostics=notes,
        stationarity=stationarity,
    )
