#!/usr/bin/env python3
"""
Time-Limited Balanced Stochastic Truncation
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy import linalg

from relmor.dense_solvers import care_residual, matrix_exponential, solve_care
from relmor.errors import UnsupportedModelError
from relmor.gramians import infinite_gramians, tl_gramians
from relmor.lti_model import StateSpaceModel, TimeInterval, epsilon_regularize
from relmor.reductors.base import Method, ReductionResult, ReductorConfig, check_order, finalize
from relmor.reductors.projection import contragradient_projection
from relmor.relerr_system import FullOrderCache

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class StochasticGramians:
    """Every intermediate of the stochastic balancing, kept for inspection"""
    D_reg: np.ndarray
    W_c: np.ndarray
    B_s: np.ndarray
    A_s: np.ndarray
    X_s: np.ndarray
    C_w: np.ndarray
    P: np.ndarray
    X_tau: np.ndarray
    diagnostics: List[str] = field(default_factory=list)

    def residuals(self, H: StateSpaceModel, interval: TimeInterval) -> Dict[str, float]:
        """Relative residuals of the controllability, Riccati and X_τ equations"""
        A, C = H.A, H.C
        R = linalg.inv(self.D_reg @ self.D_reg.T)
        Wc_res = A @ self.W_c + self.W_c @ A.T + H.B @ H.B.T
        _, care_rel = care_residual(self.A_s.T, self.B_s @ R @ self.B_s.T, C.T @ R @ C, self.X_s)

        forcing = np.zeros_like(self.X_tau)
        for t, sign in interval.endpoints():
            F = self.C_w @ matrix_exponential(A, t)
            forcing += sign * (F.T @ F)
        Xt_res = A.T @ self.X_tau + self.X_tau @ A + forcing

        def rel(res, X, W):
            return float(np.linalg.norm(res) / max(2 * np.linalg.norm(A) * np.linalg.norm(X) + np.linalg.norm(W), 1e-300))

        return {
            "W_c": rel(Wc_res, self.W_c, H.B @ H.B.T),
            "X_s": care_rel,
            "X_tau": rel(Xt_res, self.X_tau, forcing),
        }


def tlbst_data(H: StateSpaceModel, interval: TimeInterval, epsilon: float = 1e-4) -> StochasticGramians:
    """
    W_c from A W_c + W_c Aᵀ + BBᵀ = 0, B_s = W_c Cᵀ + B Dᵀ, A_s = A - B_s (DDᵀ)⁻¹ C,
    X_s stabilizing for A_sᵀX + XA_s + X B_s(DDᵀ)⁻¹B_sᵀ X + Cᵀ(DDᵀ)⁻¹C = 0, and X_τ
    the time-limited observability gramian of (A, D⁻¹(C - B_sᵀX_s)).
    """
    H.require_consistent()
    if not H.is_square:
        raise UnsupportedModelError(f"tlbst needs a square system, got {H.p}x{H.m}")
    D_reg = epsilon_regularize(H.D, epsilon)
    R = linalg.inv(D_reg @ D_reg.T)

    W_c = infinite_gramians(H).P
    B_s = W_c @ H.C.T + H.B @ D_reg.T
    A_s = H.A - B_s @ R @ H.C
    X_s = solve_care(A_s.T, B_s @ R @ B_s.T, H.C.T @ R @ H.C)
    C_w = linalg.solve(D_reg, H.C - B_s.T @ X_s)

    weighted = tl_gramians(StateSpaceModel(H.A, H.B, C_w, D_reg), interval)
    diagnostics = list(weighted.diagnostics)
    for note in diagnostics:
        logger.warning(f"tlbst: {note}")
    return StochasticGramians(D_reg, W_c, B_s, A_s, X_s, C_w, weighted.P, weighted.Q, diagnostics)


def tlbst(H: StateSpaceModel, cfg: ReductorConfig, *, cache: Optional[FullOrderCache] = None) -> ReductionResult:
    """Contragradient truncation of P and X_τ; the ROM keeps the original D"""
    check_order(H, cfg)
    data = tlbst_data(H, cfg.interval, cfg.epsilon)
    projection = contragradient_projection(data.P, data.X_tau, cfg.order)
    rom = H.project(projection.V, projection.W)
    return finalize(
        Method.TLBST, H, rom, cfg, cache=cache,
        projection=projection,
        singular_values=projection.singular_values,
        diagnostics=list(data.diagnostics),
    )
