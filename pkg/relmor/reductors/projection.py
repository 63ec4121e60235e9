#!/usr/bin/env python3
"""
Oblique Projections
Petrov-Galerkin bases (V, W) with WᵀV = I: balancing by contragradient
transformation and bi-orthogonal Gram-Schmidt
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from relmor.config import get_settings
from relmor.errors import BiorthogonalBreakdownError, ProjectionError, RankError

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class ProjectionPair:
    """Bases V, W (n x r) of the oblique projector Π = V Wᵀ"""
    V: np.ndarray
    W: np.ndarray
    singular_values: Optional[np.ndarray] = None

    def __post_init__(self):
        self.V = np.asarray(self.V, dtype=float)
        self.W = np.asarray(self.W, dtype=float)
        if self.V.ndim != 2 or self.V.shape != self.W.shape:
            raise ProjectionError(f"V {self.V.shape} and W {self.W.shape} must be matching n x r arrays")
        if not (np.all(np.isfinite(self.V)) and np.all(np.isfinite(self.W))):
            raise ProjectionError("projection bases contain non-finite entries")
        gap = self.oblique_gap()
        atol = get_settings().projection_atol
        if gap > atol:
            raise ProjectionError(f"‖WᵀV - I‖_F = {gap:.3e} exceeds {atol:.0e}")

    @property
    def r(self) -> int:
        return self.V.shape[1]

    def oblique_gap(self) -> float:
        return float(np.linalg.norm(self.W.T @ self.V - np.eye(self.V.shape[1])))

    def projector(self) -> np.ndarray:
        return self.V @ self.W.T


def _square_root_factor(M: np.ndarray) -> np.ndarray:
    """Cholesky factor of a symmetric PSD matrix, eigen-factor when it is singular"""
    M = 0.5 * (M + M.T)
    try:
        return linalg.cholesky(M, lower=True)
    except linalg.LinAlgError:
        eigvals, eigvecs = linalg.eigh(M)
        logger.debug(f"Cholesky failed (min eigenvalue {eigvals[0]:.3e}); using eigen-factor")
        return eigvecs * np.sqrt(np.maximum(eigvals, 0.0))


def contragradient_projection(P, Q, r: int, rank_rtol: Optional[float] = None) -> ProjectionPair:
    """
    Square-root balancing of (P, Q): with P = L_P L_Pᵀ, Q = L_Q L_Qᵀ and
    L_Qᵀ L_P = U Σ Zᵀ, V = L_P Z_r Σ_r^{-1/2} and W = L_Q U_r Σ_r^{-1/2}, so that
    WᵀPW = VᵀQV = Σ_r and WᵀV = I. Ties in Σ keep the SVD order.
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.shape != Q.shape or P.shape[0] != P.shape[1]:
        raise ProjectionError(f"P {P.shape} and Q {Q.shape} must be square of equal size")
    if not 1 <= r <= P.shape[0]:
        raise ProjectionError(f"order {r} outside 1..{P.shape[0]}")

    L_P = _square_root_factor(P)
    L_Q = _square_root_factor(Q)
    U, sigma, Zt = linalg.svd(L_Q.T @ L_P)
    rtol = get_settings().rank_rtol if rank_rtol is None else rank_rtol
    rank = int(np.sum(sigma > rtol * sigma[0])) if sigma.size and sigma[0] > 0 else 0
    if r > rank:
        raise RankError(r, rank)

    scale = 1.0 / np.sqrt(sigma[:r])
    V = (L_P @ Zt[:r].T) * scale
    W = (L_Q @ U[:, :r]) * scale
    logger.debug(f"contragradient projection r={r}: σ_r/σ_1 = {sigma[r - 1] / sigma[0]:.3e}")
    return ProjectionPair(V, W, singular_values=sigma)


def _deflate(x: np.ndarray, left: np.ndarray, right: np.ndarray, count: int) -> np.ndarray:
    """Apply (I - left_k right_kᵀ) for k < count, one factor at a time"""
    for k in range(count):
        x = x - left[:, k] * (right[:, k] @ x)
    return x


def biorthogonal_gram_schmidt(P12, Q12, breakdown_tol: Optional[float] = None) -> ProjectionPair:
    """
    Column-by-column bi-orthogonalization of (P12, Q12):
    deflate v against built pairs with (I - v_k w_kᵀ) and w with (I - w_k v_kᵀ),
    normalize both, then scale v by 1 / (wᵀv).
    """
    V = np.array(P12, dtype=float, copy=True)
    W = np.array(Q12, dtype=float, copy=True)
    if V.ndim != 2 or V.shape != W.shape:
        raise ProjectionError(f"P12 {V.shape} and Q12 {W.shape} must be matching n x r arrays")
    tol = get_settings().breakdown_tol if breakdown_tol is None else breakdown_tol

    for i in range(V.shape[1]):
        v0, w0 = V[:, i].copy(), W[:, i].copy()
        v = _deflate(v0, V, W, i)
        w = _deflate(w0, W, V, i)
        nv, nw = np.linalg.norm(v), np.linalg.norm(w)
        if nv <= tol * np.linalg.norm(v0) or nw <= tol * np.linalg.norm(w0) or nv == 0.0 or nw == 0.0:
            raise BiorthogonalBreakdownError(i, min(nv, nw))
        v, w = v / nv, w / nw
        pivot = float(w @ v)
        if abs(pivot) < tol:
            raise BiorthogonalBreakdownError(i, pivot)
        V[:, i] = v / pivot
        W[:, i] = w

    gap = float(np.linalg.norm(W.T @ V - np.eye(V.shape[1])))
    if gap > get_settings().projection_atol:
        # one re-biorthogonalization sweep
        logger.debug(f"bi-orthogonality gap {gap:.2e} after first sweep; repeating")
        for i in range(V.shape[1]):
            V[:, i] = _deflate(V[:, i], V, W, i)
            W[:, i] = _deflate(W[:, i], W, V, i)
            V[:, i] /= W[:, i] @ V[:, i]
    return ProjectionPair(V, W)


def petrov_galerkin_pair(V_basis: np.ndarray, W_basis: np.ndarray) -> Tuple[ProjectionPair, float]:
    """
    Orthonormalize both bases and rescale W so that WᵀV = I.

    Returns the pair and the condition number of the coupling matrix.
    """
    V, _ = linalg.qr(V_basis, mode="economic")
    Wq, _ = linalg.qr(W_basis, mode="economic")
    M = Wq.T @ V
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > 1.0 / np.sqrt(np.finfo(float).eps):
        raise ProjectionError(f"coupling matrix WᵀV is singular (condition {cond:.2e})")
    W = linalg.solve(M, Wq.T).T
    return ProjectionPair(V, W), cond
