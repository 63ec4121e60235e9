#!/usr/bin/env python3
"""
Stable Inverse Spectral Factor
Builds a Hurwitz realization that can stand in for Ĥ⁻¹ when the ROM iterate
is not minimum-phase
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from relmor.dense_solvers import SolverTolerances, solve_care, solve_lyapunov, spectral_abscissa
from relmor.errors import (
    InversionError,
    NoStabilizingSolutionError,
    ResidualToleranceError,
    SpectralFactorError,
    UnsupportedModelError,
)
from relmor.lti_model import InverseRealization, StateSpaceModel, numerical_rank, sample_frequencies

logger = logging.getLogger(__name__)


class FactorOrientation(str, Enum):
    """
    LEFT builds M with Mᴴ M = Ĥᴴ Ĥ directly from Ĥ.
    RIGHT builds N with N Nᴴ = Ĥ Ĥᴴ (LEFT applied to Ĥᵀ, then transposed);
    only this one keeps ‖N⁻¹Δ‖_H2 = ‖Ĥ⁻¹Δ‖_H2 for MIMO Ĥ. Both coincide for SISO.
    """
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True, eq=False)
class SpectralFactorInverse:
    A_xi: np.ndarray
    B_xi: np.ndarray
    C_xi: np.ndarray
    D_xi: np.ndarray
    factor: StateSpaceModel
    X_s: np.ndarray
    orientation: FactorOrientation

    def as_inverse(self) -> InverseRealization:
        return InverseRealization(self.A_xi, self.B_xi, self.C_xi, self.D_xi)

    def inverse_model(self) -> StateSpaceModel:
        return StateSpaceModel(self.A_xi, self.B_xi, self.C_xi, self.D_xi)

    def spectral_gap(self, H_hat: StateSpaceModel, omegas: Optional[Sequence[float]] = None) -> float:
        """Largest relative mismatch of the factorization identity over the sampled frequencies"""
        omegas = sample_frequencies() if omegas is None else omegas
        worst = 0.0
        for w in omegas:
            G = self.factor.transfer(1j * w)
            H = H_hat.transfer(1j * w)
            if self.orientation is FactorOrientation.LEFT:
                lhs, rhs = G.conj().T @ G, H.conj().T @ H
            else:
                lhs, rhs = G @ G.conj().T, H @ H.conj().T
            worst = max(worst, float(np.linalg.norm(lhs - rhs) / max(np.linalg.norm(rhs), 1e-300)))
        return worst


def _left_factor(A, B, C, D, tol: Optional[SolverTolerances]):
    """Minimum-phase M with Mᴴ M = Hᴴ H and its inverse realization"""
    Q_hat = solve_lyapunov(A.T, C.T @ C, tol)
    R = linalg.inv(D.T @ D)
    B_s = -Q_hat @ B - C.T @ D
    A_s = -A - B @ R @ B_s.T
    S = B_s @ R @ B_s.T
    G = B @ R @ B.T

    def assemble(X_s):
        A_x = -A.T
        C_x = linalg.solve(D.T, B.T - B_s.T @ X_s)
        D_inv = linalg.inv(D)
        A_xi = A_x - B_s @ D_inv @ C_x
        return A_x, C_x, A_xi, -B_s @ D_inv, D_inv @ C_x, D_inv

    X_s = solve_care(A_s, S, G, tol)
    A_x, C_x, A_xi, B_xi, C_xi, D_xi = assemble(X_s)
    if spectral_abscissa(A_xi) >= 0.0:
        logger.warning("Riccati solution gave non-Hurwitz A_xi; trying complementary invariant subspace")
        X_s = solve_care(A_s, S, G, tol, stabilizing=False)
        A_x, C_x, A_xi, B_xi, C_xi, D_xi = assemble(X_s)
        if spectral_abscissa(A_xi) >= 0.0:
            raise SpectralFactorError("no Riccati branch yields a Hurwitz A_xi", np.linalg.eigvals(A_xi))

    factor = StateSpaceModel(A_x, B_s, C_x, D)
    return factor, X_s, A_xi, B_xi, C_xi, D_xi


def build_spectral_factor_inverse(
    H_hat: StateSpaceModel,
    orientation: FactorOrientation = FactorOrientation.LEFT,
    tol: Optional[SolverTolerances] = None,
) -> SpectralFactorInverse:
    """Stable realization (A_xi, B_xi, C_xi, D_xi) of the inverse spectral factor of Ĥ"""
    H_hat.require_consistent()
    orientation = FactorOrientation(orientation)
    if not H_hat.is_square:
        raise UnsupportedModelError(f"spectral factor needs a square system, got {H_hat.p}x{H_hat.m}")
    if not H_hat.is_stable():
        raise UnsupportedModelError(
            f"spectral factor needs a stable Ĥ (spectral abscissa {H_hat.spectral_abscissa():.4g})"
        )
    if numerical_rank(H_hat.D) < H_hat.m:
        raise InversionError("spectral factor needs an invertible D; epsilon-regularize first")

    source = H_hat if orientation is FactorOrientation.LEFT else H_hat.transposed()
    try:
        factor, X_s, A_xi, B_xi, C_xi, D_xi = _left_factor(source.A, source.B, source.C, source.D, tol)
    except (NoStabilizingSolutionError, ResidualToleranceError) as exc:
        raise SpectralFactorError(f"Riccati solve failed: {exc}", H_hat.poles()) from exc

    if orientation is FactorOrientation.RIGHT:
        factor = factor.transposed()
        A_xi, B_xi, C_xi, D_xi = A_xi.T, C_xi.T, B_xi.T, D_xi.T

    logger.debug(f"spectral factor ({orientation.value}): abscissa of A_xi {spectral_abscissa(A_xi):.4g}")
    return SpectralFactorInverse(A_xi, B_xi, C_xi, D_xi, factor, X_s, orientation)
