#!/usr/bin/env python3
"""
Time-Limited Iterative Rational Krylov Algorithm
"""

import logging
from typing import Optional, Tuple

import numpy as np

from relmor.dense_solvers import matrix_exponential, real_schur, solve_sylvester
from relmor.errors import RelmorError
from relmor.gramians import signed_outer
from relmor.lti_model import StateSpaceModel, TimeInterval
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
from relmor.reductors.projection import ProjectionPair, petrov_galerkin_pair
from relmor.relerr_system import FullOrderCache

logger = logging.getLogger(__name__)


def eigenvector_condition(A_hat: np.ndarray) -> float:
    """Condition number of the eigenvector matrix Ŝ; infinite for defective Â"""
    _, S = np.linalg.eig(A_hat)
    return float(np.linalg.cond(S))


def interpolation_bases(
    H: StateSpaceModel,
    rom: StateSpaceModel,
    interval: TimeInterval,
    cache: Optional[FullOrderCache] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    P12 and Y_τ from
      A P12 + P12 Âᵀ + Σ s e^{At}B (e^{Ât}B̂)ᵀ = 0,
      Aᵀ Y + Y Â - Σ s (Ce^{At})ᵀ Ĉe^{Ât} = 0,
    with s = +1 at t1 and -1 at t2.
    """
    use_cache = cache is not None and cache.matches(H, interval)
    full_schur = cache.schur if use_cache else real_schur(H.A)
    hat_schur = real_schur(rom.A)

    inputs, outputs = [], []
    for t, sign in interval.endpoints():
        eA = cache.exponential(t) if use_cache else matrix_exponential(H.A, t)
        eAh = matrix_exponential(rom.A, t)
        inputs.append((sign, eA @ H.B, eAh @ rom.B))
        outputs.append((-sign, (H.C @ eA).T, (rom.C @ eAh).T))

    P12 = solve_sylvester(H.A, rom.A.T, signed_outer(inputs), k_schur=full_schur, l_schur=hat_schur.transpose())
    Y = solve_sylvester(H.A.T, rom.A, signed_outer(outputs), k_schur=full_schur.transpose(), l_schur=hat_schur)
    return P12, Y


def tlirka_step(
    H: StateSpaceModel,
    rom: StateSpaceModel,
    interval: TimeInterval,
    cache: Optional[FullOrderCache] = None,
) -> Tuple[StateSpaceModel, ProjectionPair]:
    """
    One fixed-point update. span(P12 Ŝ⁻ᴴ) = span(P12) and span(Y_τ Ŝ M⁻¹) = span(Y_τ)
    for invertible Ŝ, so the real bases come straight from P12 and Y_τ.
    """
    P12, Y = interpolation_bases(H, rom, interval, cache)
    pair, cond = petrov_galerkin_pair(P12, Y)
    logger.debug(f"tlirka: coupling condition {cond:.3e}")
    return H.project(pair.V, pair.W), pair


def tlirka(
    H: StateSpaceModel,
    cfg: ReductorConfig,
    *,
    initial_rom: Optional[StateSpaceModel] = None,
    cache: Optional[FullOrderCache] = None,
) -> ReductionResult:
    """Iterate until the relative change of Â's eigenvalues drops below cfg.conv_tol"""
    H.require_consistent()
    check_order(H, cfg)
    rom = initial_rom if initial_rom is not None else initial_guess(H, cfg.order, cfg.init_strategy, cfg.rng_seed)
    rom = rom.with_feedthrough(H.D)
    if cache is None or not cache.matches(H, cfg.interval):
        cache = FullOrderCache(H, cfg.interval)
    budget = RestartBudget(Method.TLIRKA, cfg)
    defect_limit = 1.0 / np.sqrt(np.finfo(float).eps)

    history = []
    projection: Optional[ProjectionPair] = None
    last_good = rom
    converged = False
    iteration = 0
    while iteration < cfg.max_iter:
        iteration += 1
        if not is_finite(rom):
            if not budget.spend(iteration, "non-finite iterate; fresh seeded guess"):
                break
            rom = initial_guess(H, cfg.order, cfg.init_strategy, budget.fresh_seed()).with_feedthrough(H.D)
            continue
        if eigenvector_condition(rom.A) > defect_limit:
            if not budget.spend(iteration, "defective Â; perturbing iterate"):
                break
            rom = perturbed(rom, budget.rng)
            continue
        try:
            new_rom, pair = tlirka_step(H, rom, cfg.interval, cache)
        except (RelmorError, np.linalg.LinAlgError) as exc:
            if not budget.spend(iteration, f"{type(exc).__name__}: {exc}; perturbing iterate"):
                break
            rom = perturbed(rom, budget.rng)
            continue

        change = eigenvalue_change(rom, new_rom)
        history.append(change)
        logger.info(f"tlirka iteration {iteration}: eigenvalue change {change:.3e}")
        rom, projection, last_good = new_rom, pair, new_rom
        if change < cfg.conv_tol:
            converged = True
            break

    if not converged:
        logger.warning(f"tlirka stopped after {iteration} iterations without convergence")
    return finalize(
        Method.TLIRKA, H, last_good, cfg, cache=cache,
        projection=projection,
        iterations=iteration,
        converged=converged,
        history=history,
        restarts=list(budget.log),
    )
