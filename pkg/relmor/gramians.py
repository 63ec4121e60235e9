#!/usr/bin/env python3
"""
Time-Limited Gramians
Controllability/observability gramians over [t1, t2] and the H2,τ norm
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import integrate

from relmor.config import get_settings
from relmor.dense_solvers import RealSchurForm, SolverTolerances, matrix_exponential, real_schur, solve_lyapunov
from relmor.errors import NormDualityError, UnsupportedModelError
from relmor.lti_model import StateSpaceModel, TimeInterval, impulse_response

logger = logging.getLogger(__name__)


@dataclass
class GramianPair:
    """Time-limited gramians; interval None means [0, ∞)"""
    P: np.ndarray
    Q: np.ndarray
    interval: Optional[TimeInterval]
    diagnostics: List[str] = field(default_factory=list)


@dataclass
class H2TauEvaluation:
    value: float
    dual_value: float
    relative_gap: float
    resolution: float = 0.0


def _require_hurwitz(model: StateSpaceModel) -> None:
    if not model.is_stable():
        raise UnsupportedModelError(
            f"time-limited gramians require Hurwitz A (spectral abscissa {model.spectral_abscissa():.4g})"
        )


def signed_outer(terms) -> np.ndarray:
    """Σ s_k a_k b_kᵀ over (sign, a_k, b_k) triples"""
    terms = list(terms)
    total = np.zeros((terms[0][1].shape[0], terms[0][2].shape[0]))
    for sign, a, b in terms:
        total += sign * (a @ b.T)
    return total


def clip_psd(M: np.ndarray, label: str, diagnostics: List[str]) -> np.ndarray:
    """Clip negative eigenvalues of a symmetric matrix at zero, recording large ones"""
    if M.size == 0:
        return M
    eigvals, eigvecs = np.linalg.eigh(M)
    if eigvals[0] >= 0.0:
        return M
    trace = float(np.trace(M))
    threshold = -get_settings().psd_clip_rel * max(abs(trace), np.finfo(float).tiny)
    if eigvals[0] < threshold:
        message = f"{label}: eigenvalue {eigvals[0]:.3e} below -{get_settings().psd_clip_rel:g}*trace; clipped"
        diagnostics.append(message)
        logger.warning(message)
    clipped = (eigvecs * np.maximum(eigvals, 0.0)) @ eigvecs.T
    return 0.5 * (clipped + clipped.T)


def tl_gramians(
    model: StateSpaceModel,
    interval: TimeInterval,
    tol: Optional[SolverTolerances] = None,
    *,
    schur: Optional[RealSchurForm] = None,
    require_stable: bool = True,
    clip: bool = True,
) -> GramianPair:
    """
    Solve A P + P Aᵀ + e^{At1}BBᵀe^{Aᵀt1} - e^{At2}BBᵀe^{Aᵀt2} = 0 and
    Aᵀ Q + Q A + e^{Aᵀt1}CᵀCe^{At1} - e^{Aᵀt2}CᵀCe^{At2} = 0.
    """
    model.require_consistent()
    if require_stable:
        _require_hurwitz(model)
    A, B, C = model.A, model.B, model.C
    n = model.n
    if n == 0:
        return GramianPair(np.zeros((0, 0)), np.zeros((0, 0)), interval)

    sa = schur if schur is not None else real_schur(A, tol)
    exps = [(sign, matrix_exponential(A, t)) for t, sign in interval.endpoints()]

    inputs = [(s, F @ B, F @ B) for s, F in exps]
    outputs = [(s, (C @ F).T, (C @ F).T) for s, F in exps]
    Wc = signed_outer(inputs)
    Wo = signed_outer(outputs)

    P = solve_lyapunov(A, Wc, tol, schur=sa)
    Q = solve_lyapunov(A.T, Wo, tol, schur=sa.transpose())

    diagnostics: List[str] = []
    note = sa.reconstruction_note((tol or SolverTolerances()).schur_rel)
    if note:
        diagnostics.append(note)
    if clip:
        P = clip_psd(P, "controllability gramian", diagnostics)
        Q = clip_psd(Q, "observability gramian", diagnostics)
    return GramianPair(P, Q, interval, diagnostics)


def infinite_gramians(model: StateSpaceModel, tol: Optional[SolverTolerances] = None) -> GramianPair:
    """Infinite-horizon gramians: AP + PAᵀ + BBᵀ = 0, AᵀQ + QA + CᵀC = 0"""
    model.require_consistent()
    _require_hurwitz(model)
    if model.n == 0:
        return GramianPair(np.zeros((0, 0)), np.zeros((0, 0)), None)
    sa = real_schur(model.A, tol)
    P = solve_lyapunov(model.A, model.B @ model.B.T, tol, schur=sa)
    Q = solve_lyapunov(model.A.T, model.C.T @ model.C, tol, schur=sa.transpose())
    return GramianPair(P, Q, None)


def gramian_factor(M: np.ndarray) -> np.ndarray:
    """
    L with L Lᵀ ≈ M for a symmetric PSD gramian.

    Eigenvalues at or below factor_rtol * λ_max are dropped; at that level
    they are indistinguishable from rounding in the gramian solve.
    """
    if M.size == 0:
        return np.zeros((M.shape[0], 0))
    eigvals, eigvecs = np.linalg.eigh(0.5 * (M + M.T))
    top = eigvals[-1]
    if top <= 0.0:
        return np.zeros((M.shape[0], 0))
    keep = eigvals > get_settings().factor_rtol * top
    return eigvecs[:, keep] * np.sqrt(eigvals[keep])


def factored_trace_norm(X: np.ndarray, M: np.ndarray) -> Tuple[float, float]:
    """
    sqrt(trace(X M Xᵀ)) evaluated as ‖X L‖_F, plus the resolution below
    which the value is rounding noise.
    """
    if M.size == 0 or X.size == 0:
        return 0.0, 0.0
    L = gramian_factor(M)
    value = float(np.linalg.norm(X @ L, "fro"))
    resolution = float(np.sqrt(np.finfo(float).eps) * np.linalg.norm(X, "fro") * np.linalg.norm(L, "fro"))
    return value, resolution


def compare_forms(value: float, dual: float, resolution: float) -> H2TauEvaluation:
    """Relative P-form/Q-form gap; two values under the resolution agree trivially"""
    top = max(value, dual)
    gap = abs(value - dual) / top if top > resolution else 0.0
    return H2TauEvaluation(value, dual, gap, resolution)


def norm_from_gramians(model: StateSpaceModel, gramians: GramianPair) -> H2TauEvaluation:
    p_form, p_res = factored_trace_norm(model.C, gramians.P)
    q_form, q_res = factored_trace_norm(model.B.T, gramians.Q)
    return compare_forms(p_form, q_form, max(p_res, q_res))


def evaluate_h2tau(
    model: StateSpaceModel,
    interval: TimeInterval,
    tol: Optional[SolverTolerances] = None,
    *,
    require_stable: bool = True,
) -> H2TauEvaluation:
    """P-form and Q-form of the H2,τ norm with their relative gap"""
    gramians = tl_gramians(model, interval, tol, require_stable=require_stable, clip=False)
    return norm_from_gramians(model, gramians)


def h2tau_norm(
    model: StateSpaceModel,
    interval: TimeInterval,
    tol: Optional[SolverTolerances] = None,
    *,
    strict: bool = True,
    require_stable: bool = True,
) -> float:
    """sqrt(trace(C P Cᵀ)), cross-checked against sqrt(trace(Bᵀ Q B))"""
    result = evaluate_h2tau(model, interval, tol, require_stable=require_stable)
    rtol = get_settings().duality_rtol
    if result.relative_gap > rtol:
        if strict:
            raise NormDualityError(result.value, result.dual_value, rtol)
        logger.warning(f"H2,tau duality gap {result.relative_gap:.2e} above {rtol:.0e} on {interval}")
    return result.value


def quadrature_h2tau_oracle(model: StateSpaceModel, interval: TimeInterval, panels: int) -> float:
    """
    Composite Simpson estimate of sqrt(∫ trace(h hᵀ) dτ) over the interval.

    Odd panel counts are rounded up to the next even count.
    """
    if panels < 2:
        raise ValueError(f"panels must be at least 2, got {panels}")
    if panels % 2:
        panels += 1
    if interval.length == 0.0 or model.n == 0:
        return 0.0
    grid = np.linspace(interval.t1, interval.t2, panels + 1)
    samples = impulse_response(model, grid)
    integrand = np.sum(samples ** 2, axis=(1, 2))
    value = integrate.simpson(integrand, x=grid)
    return float(np.sqrt(max(value, 0.0)))


def simpson_gramian_oracle(model: StateSpaceModel, interval: TimeInterval, panels: int) -> np.ndarray:
    """Composite Simpson estimate of ∫ e^{Aτ}BBᵀe^{Aᵀτ} dτ"""
    if panels % 2:
        panels += 1
    grid = np.linspace(interval.t1, interval.t2, panels + 1)
    step = matrix_exponential(model.A, grid[1] - grid[0])
    state = matrix_exponential(model.A, grid[0]) @ model.B
    values = np.empty((grid.size, model.n, model.n))
    for k in range(grid.size):
        values[k] = state @ state.T
        state = step @ state
    return integrate.simpson(values, x=grid, axis=0)
