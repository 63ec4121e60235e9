#!/usr/bin/env python3
"""
Optimality Conditions
Auxiliary solves behind the first-order conditions of J(Ĥ) = ‖Ĥ⁻¹(H - Ĥ)‖²_{H2,τ},
the exact gradient of J by the adjoint method, and a finite-difference
verifier.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from relmor.config import get_settings
from relmor.dense_solvers import (
    SolverTolerances,
    exponential_frechet,
    matrix_exponential,
    solve_lyapunov,
    solve_sylvester,
)
from relmor.errors import InversionError, NotMinimumPhaseError, UnsupportedModelError
from relmor.lti_model import StateSpaceModel, TimeInterval, inverse_realization, is_minimum_phase
from relmor.relerr_system import RelErrorSystem, RelGramianBlocks, build_relerr, relerr_gramian_blocks

logger = logging.getLogger(__name__)


class GradientForm(str, Enum):
    """Which trace expression of J the adjoint gradient differentiates"""
    P = "P"
    Q = "Q"


class JGradient(NamedTuple):
    dA: np.ndarray
    dB: np.ndarray
    dC: np.ndarray


def _require_minimum_phase(H_hat: StateSpaceModel) -> None:
    try:
        inverse_realization(H_hat)
    except InversionError as exc:
        raise NotMinimumPhaseError(f"reduced model has no inverse: {exc}") from exc
    if not is_minimum_phase(H_hat):
        raise NotMinimumPhaseError("reduced model must be stable and minimum-phase (A - B D⁻¹C Hurwitz)")


def _relative_residual(K, J, L, W) -> float:
    R = K @ J + J @ L + W
    denom = np.linalg.norm(K) * np.linalg.norm(J) + np.linalg.norm(J) * np.linalg.norm(L) + np.linalg.norm(W)
    return float(np.linalg.norm(R) / denom) if denom > 0 else 0.0


@dataclass(eq=False)
class AuxiliaryQuantities:
    """Infinite-horizon X/Y solves and the ξ Sylvester solutions at t_d"""
    system: RelErrorSystem
    X11: np.ndarray
    X12: np.ndarray
    X13: np.ndarray
    X22: np.ndarray
    X23: np.ndarray
    X33: np.ndarray
    Y13: np.ndarray
    Y23: np.ndarray
    Y33: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    xi3: np.ndarray
    O1: np.ndarray
    O2: np.ndarray
    O3: np.ndarray
    equations: Dict[str, Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = field(default_factory=dict)

    def residuals(self) -> Dict[str, float]:
        return {name: _relative_residual(*eq) for name, eq in self.equations.items()}


def compute_auxiliaries(
    H: StateSpaceModel,
    H_hat: StateSpaceModel,
    interval: TimeInterval,
    tol: Optional[SolverTolerances] = None,
    *,
    system: Optional[RelErrorSystem] = None,
) -> AuxiliaryQuantities:
    """
    Solve, in order, X11, X12 -> X13 -> X22 -> X23 -> X33, then Y33 -> Y13, Y23,
    then ξ1, ξ2, ξ3 with t_d the upper interval limit. ξ equations
    A_iᵀ ξ - ξ Aᵀ + O = 0 are solved as Sylvester equations with K = A_iᵀ, L = -Aᵀ.
    """
    _require_minimum_phase(H_hat)
    system = system or build_relerr(H, H_hat, interval, tol)
    A, B, C = H.A, H.B, H.C
    Ah, Bh, Ch = H_hat.A, H_hat.B, H_hat.C
    W = system.weight
    Ai, Bi, Ci, Di = W.A_i, W.B_i, W.C_i, W.D_i
    fs, hs, ws = system.full_schur, system.hat_schur, system.weight_schur
    td = interval.t2
    end = system.couplings[-1]
    E1, E2, eA, eAh, eAi = end.E1, end.E2, end.exp_A, end.exp_hat, end.exp_w

    eqs: Dict[str, Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = {}

    X11 = solve_lyapunov(A, B @ B.T, tol, schur=fs)
    eqs["X11"] = (A, X11, A.T, B @ B.T)
    X12 = solve_sylvester(A, Ah.T, B @ Bh.T, tol, k_schur=fs, l_schur=hs.transpose())
    eqs["X12"] = (A, X12, Ah.T, B @ Bh.T)
    rhs = X11 @ C.T @ Bi.T - X12 @ Ch.T @ Bi.T
    X13 = solve_sylvester(A, Ai.T, rhs, tol, k_schur=fs, l_schur=ws.transpose())
    eqs["X13"] = (A, X13, Ai.T, rhs)
    X22 = solve_lyapunov(Ah, Bh @ Bh.T, tol, schur=hs)
    eqs["X22"] = (Ah, X22, Ah.T, Bh @ Bh.T)
    rhs = X12.T @ C.T @ Bi.T - X22 @ Ch.T @ Bi.T
    X23 = solve_sylvester(Ah, Ai.T, rhs, tol, k_schur=hs, l_schur=ws.transpose())
    eqs["X23"] = (Ah, X23, Ai.T, rhs)
    coupling = Bi @ C @ X13 - Bi @ Ch @ X23
    rhs = coupling + coupling.T
    X33 = solve_lyapunov(Ai, rhs, tol, schur=ws)
    eqs["X33"] = (Ai, X33, Ai.T, rhs)

    Y33 = solve_lyapunov(Ai.T, Ci.T @ Ci, tol, schur=ws.transpose())
    eqs["Y33"] = (Ai.T, Y33, Ai, Ci.T @ Ci)
    rhs = C.T @ Bi.T @ Y33 + C.T @ Di.T @ Ci
    Y13 = solve_sylvester(A.T, Ai, rhs, tol, k_schur=fs.transpose(), l_schur=ws)
    eqs["Y13"] = (A.T, Y13, Ai, rhs)
    rhs = -Ch.T @ Bi.T @ Y33 - Ch.T @ Di.T @ Ci
    Y23 = solve_sylvester(Ah.T, Ai, rhs, tol, k_schur=hs.transpose(), l_schur=ws)
    eqs["Y23"] = (Ah.T, Y23, Ai, rhs)

    CiCi = Ci.T @ Ci
    O1 = (-CiCi @ E1 @ X11 - CiCi @ E2 @ X12.T
          - Ci.T @ Di @ C @ eA @ X11 + Ci.T @ Di @ Ch @ eAh @ X12.T)
    O2 = (-CiCi @ eAi @ X13.T - Ci.T @ Di @ C @ eA @ X11 - CiCi @ E1 @ X11
          + Ci.T @ Di @ Ch @ eAh @ X12.T - 2.0 * CiCi @ E2 @ X12.T)
    O3 = (Y13.T @ eA @ B @ B.T - Y23.T @ eAh @ Bh @ B.T
          - Y33 @ E1 @ B @ B.T - Y33 @ E2 @ Bh @ B.T)
    xi_schur = (ws.transpose(), fs.transpose().negate())
    xi1 = solve_sylvester(Ai.T, -A.T, O1, tol, k_schur=xi_schur[0], l_schur=xi_schur[1])
    eqs["xi1"] = (Ai.T, xi1, -A.T, O1)
    xi2 = solve_sylvester(Ai.T, -A.T, O2, tol, k_schur=xi_schur[0], l_schur=xi_schur[1])
    eqs["xi2"] = (Ai.T, xi2, -A.T, O2)
    xi3 = solve_sylvester(Ai.T, -A.T, -O3, tol, k_schur=xi_schur[0], l_schur=xi_schur[1])
    eqs["xi3"] = (Ai.T, xi3, -A.T, -O3)

    logger.debug(f"auxiliary solves done (n={H.n}, r={H_hat.n}, t_d={td:g})")
    return AuxiliaryQuantities(
        system=system, X11=X11, X12=X12, X13=X13, X22=X22, X23=X23, X33=X33,
        Y13=Y13, Y23=Y23, Y33=Y33, xi1=xi1, xi2=xi2, xi3=xi3, O1=O1, O2=O2, O3=O3,
        equations=eqs,
    )


@dataclass(eq=False)
class OptimalityResidual:
    """
    Left-hand sides of the closed-form first-order conditions. 2·(G_A, G_B, G_C)
    is the gradient of J; printed holds the ζ's transcribed as usually stated.
    """
    G_A: np.ndarray
    G_B: np.ndarray
    G_C: np.ndarray
    zeta1: np.ndarray
    zeta2: np.ndarray
    zeta3: np.ndarray
    printed: Tuple[np.ndarray, np.ndarray, np.ndarray] = ()

    @property
    def norms(self) -> Tuple[float, float, float]:
        return tuple(float(np.linalg.norm(G)) for G in (self.G_A, self.G_B, self.G_C))

    def printed_gaps(self) -> Tuple[float, ...]:
        """‖ζ_k - printed ζ_k‖ for k = 1, 2, 3"""
        return tuple(float(np.linalg.norm(z - p))
                     for z, p in zip((self.zeta1, self.zeta2, self.zeta3), self.printed))


def _pull_back(system: RelErrorSystem, G: JGradient) -> JGradient:
    """
    Chain rule from a gradient over (𝒜, ℬ, 𝒞) of Δ_rel to (Â, B̂, Ĉ) through
    A_i = Â - B̂D̂⁻¹Ĉ, B_i = -B̂D̂⁻¹, C_i = D̂⁻¹Ĉ.
    """
    n, r = system.H.n, system.H_hat.n
    a, b, c = slice(0, n), slice(n, n + r), slice(n + r, n + 2 * r)
    Dinv = system.weight.D_i
    Bh, Ch = system.H_hat.B, system.H_hat.C
    DinvC, DinvCh, BhDinv = Dinv @ system.H.C, Dinv @ Ch, Bh @ Dinv
    G31, G32, G33 = G.dA[c, a], G.dA[c, b], G.dA[c, c]
    Gb2, Gb3 = G.dB[b], G.dB[c]
    Gc2, Gc3 = G.dC[:, b], G.dC[:, c]

    dA = G.dA[b, b] + G33
    dB = (-G31 @ DinvC.T + G32 @ DinvCh.T - G33 @ DinvCh.T + Gb2
          - Gb3 @ (Dinv @ system.D_add).T)
    dC = BhDinv.T @ (G32 - G33) - Dinv.T @ Gc2 + Dinv.T @ Gc3
    return JGradient(dA, dB, dC)


def _block_zetas(system: RelErrorSystem, blocks: RelGramianBlocks, interval: TimeInterval,
                 tol: Optional[SolverTolerances] = None):
    """
    ζ1, ζ2 from the Q-form split 𝒬𝒳 + L(𝒜ᵀ, 𝒞ᵀ𝒞e^{𝒜t}𝒳, t) of the state gradient, ζ3 from
    the P-form split 𝒴𝒫 + L(𝒜ᵀ, 𝒴e^{𝒜t}ℬℬᵀ, t), each less the explicit terms of its condition.
    𝒳, 𝒴 are the infinite-horizon gramians of Δ_rel, 𝒫, 𝒬 the time-limited ones.
    """
    model = system.assembled_model()
    A, B, C = model.A, model.B, model.C
    S, R = B @ B.T, C.T @ C
    P, Q = blocks.p_matrix(), blocks.q_matrix()
    X = solve_lyapunov(A, S, tol)
    Y = solve_lyapunov(A.T, R, tol)
    terms = _tl_terms(A, interval)
    q_state = Q @ X + sum(sign * exponential_frechet(A.T, R @ F @ X, t)[1] for t, sign, F in terms)
    p_state = Y @ P + sum(sign * exponential_frechet(A.T, Y @ F @ S, t)[1] for t, sign, F in terms)

    q_half = _pull_back(system, JGradient(q_state, Q @ B, C @ P))
    p_half = _pull_back(system, JGradient(p_state, np.zeros_like(B), C @ P))

    n, r = system.H.n, system.H_hat.n
    b = slice(n, n + r)
    X12, X22 = X[:n, b], X[b, b]
    Di = system.weight.D_i
    DD = Di.T @ Di
    Q12, Q22 = blocks.Q12, blocks.Q22
    zeta1 = q_half.dA - (Q12.T @ X12 + Q22 @ X22)
    zeta2 = q_half.dB - (Q12.T @ system.H.B + Q22 @ system.H_hat.B)
    zeta3 = p_half.dC - (-DD @ system.H.C @ blocks.P12 + DD @ system.H_hat.C @ blocks.P22)
    return zeta1, zeta2, zeta3


def _printed_zetas(aux: AuxiliaryQuantities, blocks: RelGramianBlocks, td: float):
    s = aux.system
    C, B = s.H.C, s.H.B
    Ch, Bh = s.H_hat.C, s.H_hat.B
    W = s.weight
    Bi, Ci, Di = W.B_i, W.C_i, W.D_i
    end = s.couplings[-1]
    E1, E2, eA, eAh, eAi = end.E1, end.E2, end.exp_A, end.exp_hat, end.exp_w
    eAiT = eAi.T
    X11, X12, X13, X22, X23, X33 = aux.X11, aux.X12, aux.X13, aux.X22, aux.X23, aux.X33
    Y13, Y23, Y33 = aux.Y13, aux.Y23, aux.Y33
    xi1, xi2, xi3 = aux.xi1, aux.xi2, aux.xi3
    Q13, Q23, Q33 = blocks.Q13, blocks.Q23, blocks.Q33
    P12, P13, P22, P23, P33 = blocks.P12, blocks.P13, blocks.P22, blocks.P23, blocks.P33

    CiDiC = Ci.T @ Di @ C @ eA
    CiCiE1 = Ci.T @ Ci @ E1
    CiCieAi = Ci.T @ Ci @ eAi

    zeta1 = (Q13.T @ X13 + 2.0 * Q23 @ X23 + Q23 @ X23.T + Q33 @ X33
             + td * eAiT @ CiDiC @ X12 + td * eAiT @ CiCiE1 @ X12
             - td * eAiT @ CiDiC @ X13 - td * eAiT @ CiCiE1 @ X13
             - td * eAiT @ CiCieAi @ X22 + td * eAiT @ CiCieAi @ X23.T
             + td * eAiT @ CiCieAi @ X23 - td * eAiT @ CiCieAi @ X33
             + xi1 @ E1.T - 2.0 * td * eAiT @ xi1 @ C.T @ Bi.T)

    CDi = C.T @ Di.T
    zeta2 = (-2.0 * Q13.T @ X11 @ CDi + Q23 @ X22 @ Ci.T - Q23 @ X12.T @ CDi + Q13.T @ X12 @ Ci.T
             - Q33 @ X13.T @ CDi - Q13.T @ X13 @ Ci.T - Q23 @ X23 @ Ci.T + Q33 @ X23.T @ Ci.T
             - Q33 @ X33 @ Ci.T
             - td * eAiT @ CiDiC @ X12 @ Ci.T - td * eAiT @ CiCiE1 @ X12 @ Ci.T
             + td * eAiT @ CiDiC @ X13 @ Ci.T + td * eAiT @ CiCiE1 @ X13 @ Ci.T
             + td * eAiT @ CiCieAi @ X22 @ Ci.T - td * eAiT @ CiCieAi @ X23 @ Ci.T
             - td * eAiT @ CiCieAi @ X23.T @ Ci.T + td * eAiT @ CiCieAi @ X33 @ Ci.T
             - xi2 @ E1.T @ Ci.T - xi2 @ eA.T @ CDi + eAiT @ xi2 @ CDi
             + td * eAiT @ xi2 @ C.T @ Bi.T @ Ci.T)

    DD = Di.T @ Di
    BiT = Bi.T
    # the ξ3 Ĉᵀ product as usually stated is dimensionally inconsistent (ξ3 is r x n); Cᵀ is used
    zeta3 = (DD @ C @ P13 - DD @ Ch @ P23 - Di.T @ Ci @ P23.T + Di.T @ Ci @ P33 + BiT @ Y13.T @ P13
             + 2.0 * BiT @ Y13.T @ P12 + BiT @ Y23 @ P23 - BiT @ Y23 @ P22 - BiT @ Y33 @ P23.T
             + td * BiT @ eAiT @ Y13.T @ eA @ B @ Bh.T + td * BiT @ eAiT @ Y23 @ eAh @ Bh @ Bh.T
             + td * BiT @ eAiT @ Y33 @ E2 @ Bh @ Bh.T + td * BiT @ eAiT @ Y33 @ E1 @ B @ Bh.T
             - td * BiT @ eAiT @ xi3 @ C.T @ BiT + BiT @ xi3 @ E1.T)
    return zeta1, zeta2, zeta3


def _condition_inputs(H, H_hat, interval, tol):
    if interval.t1 != 0.0:
        raise UnsupportedModelError("closed-form optimality conditions are stated for intervals starting at 0")
    aux = compute_auxiliaries(H, H_hat, interval, tol)
    blocks = relerr_gramian_blocks(aux.system, tol)
    return aux, blocks


def condition_gradient(
    H: StateSpaceModel,
    H_hat: StateSpaceModel,
    interval: TimeInterval,
    tol: Optional[SolverTolerances] = None,
) -> OptimalityResidual:
    """
    G_A = Q12ᵀX12 + Q22X22 + ζ1, G_B = Q12ᵀB + Q22B̂ + ζ2,
    G_C = -D_iᵀD_iCP12 + D_iᵀD_iĈP22 + ζ3, so that 2·G is the gradient of J.

    The ζ's come from the block gramians and the exact exponential terms; the
    term-by-term transcription is returned alongside in ``printed``.
    """
    aux, blocks = _condition_inputs(H, H_hat, interval, tol)
    zeta1, zeta2, zeta3 = _block_zetas(aux.system, blocks, interval, tol)
    printed = _printed_zetas(aux, blocks, interval.t2)
    Di = aux.system.weight.D_i
    DD = Di.T @ Di
    G_A = blocks.Q12.T @ aux.X12 + blocks.Q22 @ aux.X22 + zeta1
    G_B = blocks.Q12.T @ H.B + blocks.Q22 @ H_hat.B + zeta2
    G_C = -DD @ H.C @ blocks.P12 + DD @ H_hat.C @ blocks.P22 + zeta3
    gaps = tuple(float(np.linalg.norm(z - p)) for z, p in zip((zeta1, zeta2, zeta3), printed))
    logger.debug(f"ζ gaps to the printed forms: {gaps[0]:.3e}, {gaps[1]:.3e}, {gaps[2]:.3e}")
    return OptimalityResidual(G_A, G_B, G_C, zeta1, zeta2, zeta3, printed)


def _tl_terms(A: np.ndarray, interval: TimeInterval) -> List[Tuple[float, float, np.ndarray]]:
    return [(t, sign, matrix_exponential(A, t)) for t, sign in interval.endpoints()]


def realization_gradient(
    model: StateSpaceModel,
    interval: TimeInterval,
    tol: Optional[SolverTolerances] = None,
    form: GradientForm = GradientForm.P,
) -> JGradient:
    """
    Gradient of ‖(𝒜, ℬ, 𝒞)‖²_{H2,τ} with respect to the realization matrices.

    P-form: J = tr(𝒞P𝒞ᵀ), adjoint Y of 𝒜ᵀY + Y𝒜 + 𝒞ᵀ𝒞 = 0.
    Q-form: J = tr(ℬᵀQℬ), adjoint X of 𝒜X + X𝒜ᵀ + ℬℬᵀ = 0.
    Exponential endpoints contribute through the Fréchet derivative of e^{𝒜t}.
    """
    A, B, C = model.A, model.B, model.C
    terms = _tl_terms(A, interval)
    S = B @ B.T
    R = C.T @ C
    form = GradientForm(form)
    if form is GradientForm.P:
        forcing = sum(sign * F @ S @ F.T for _, sign, F in terms)
        P = solve_lyapunov(A, forcing, tol)
        Y = solve_lyapunov(A.T, R, tol)
        dA = 2.0 * Y @ P
        dB = np.zeros_like(B)
        for t, sign, F in terms:
            dA = dA + 2.0 * sign * exponential_frechet(A.T, Y @ F @ S, t)[1]
            dB = dB + 2.0 * sign * F.T @ Y @ F @ B
        dC = 2.0 * C @ P
    else:
        forcing = sum(sign * F.T @ R @ F for _, sign, F in terms)
        Q = solve_lyapunov(A.T, forcing, tol)
        X = solve_lyapunov(A, S, tol)
        dA = 2.0 * Q @ X
        dC = np.zeros_like(C)
        for t, sign, F in terms:
            dA = dA + 2.0 * sign * exponential_frechet(A.T, R @ F @ X, t)[1]
            dC = dC + 2.0 * sign * C @ F @ X @ F.T
        dB = 2.0 * Q @ B
    return JGradient(dA, dB, dC)


def gradient_J(
    H: StateSpaceModel,
    H_hat: StateSpaceModel,
    interval: TimeInterval,
    tol: Optional[SolverTolerances] = None,
    *,
    form: GradientForm = GradientForm.P,
) -> JGradient:
    """
    (∂J/∂Â, ∂J/∂B̂, ∂J/∂Ĉ) with D̂ held fixed, for any interval [t1, t2].

    The realization gradient of Δ_rel is pulled back through
    A_i = Â - B̂D̂⁻¹Ĉ, B_i = -B̂D̂⁻¹, C_i = D̂⁻¹Ĉ.
    """
    _require_minimum_phase(H_hat)
    system = build_relerr(H, H_hat, interval, tol)
    G = realization_gradient(system.assembled_model(), interval, tol, form)
    return _pull_back(system, G)


def objective_J(
    H: StateSpaceModel,
    H_hat: StateSpaceModel,
    interval: TimeInterval,
    tol: Optional[SolverTolerances] = None,
) -> float:
    """tr(C_rel P_rel C_relᵀ) from the block gramians, unrooted and unclipped"""
    system = build_relerr(H, H_hat, interval, tol)
    blocks = relerr_gramian_blocks(system, tol)
    C_rel = system.C_rel
    return float(np.trace(C_rel @ blocks.p_matrix() @ C_rel.T))


def finite_difference_gradient(
    H: StateSpaceModel,
    H_hat: StateSpaceModel,
    interval: TimeInterval,
    step: float = 1e-5,
    tol: Optional[SolverTolerances] = None,
    workers: Optional[int] = None,
) -> JGradient:
    """Central differences of objective_J over every entry of Â, B̂, Ĉ"""
    workers = workers or get_settings().workers
    entries = [(name, idx) for name in ("A", "B", "C") for idx in np.ndindex(getattr(H_hat, name).shape)]

    def perturbed(name, idx, delta):
        mats = {key: np.array(getattr(H_hat, key)) for key in "ABCD"}
        mats[name][idx] += delta
        return objective_J(H, StateSpaceModel(mats["A"], mats["B"], mats["C"], mats["D"]), interval, tol)

    def slope(entry):
        name, idx = entry
        return (perturbed(name, idx, step) - perturbed(name, idx, -step)) / (2.0 * step)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(slope, entries))
    else:
        values = [slope(entry) for entry in entries]

    out = {key: np.zeros(getattr(H_hat, key).shape) for key in "ABC"}
    for (name, idx), value in zip(entries, values):
        out[name][idx] = value
    return JGradient(out["A"], out["B"], out["C"])


@dataclass
class StationarityDeviation:
    xi1_bar: float
    xi2: float
    xi3: float
    diagnostics: List[str] = field(default_factory=list)

    def as_tuple(self) -> Tuple[float, float, float]:
        return self.xi1_bar, self.xi2, self.xi3


def stationarity_deviation(
    H: StateSpaceModel,
    H_hat: StateSpaceModel,
    interval: TimeInterval,
    tol: Optional[SolverTolerances] = None,
) -> StationarityDeviation:
    """
    Norms of ξ̄1 = ζ1 + Q12ᵀe^{At_d}X12e^{Âᵀt_d} + Q22e^{Ât_d}X22e^{Âᵀt_d}, ξ2 = ζ2 and ξ3 = ζ3:
    with P12 = X12 - e^{At_d}X12e^{Âᵀt_d} the conditions read Q12ᵀP12 + Q22P22 + ξ̄1 = 0,
    B̂ = -Q22⁻¹Q12ᵀB - Q22⁻¹ξ2 and Ĉ = CP12P22⁻¹ - (D_iᵀD_i)⁻¹ξ3P22⁻¹, so these are the
    amounts a projection ROM with V = P12P22⁻¹, W = -Q12Q22⁻¹ misses them by.
    All three vanish at Ĥ = H.
    """
    aux, blocks = _condition_inputs(H, H_hat, interval, tol)
    zeta1, zeta2, zeta3 = _block_zetas(aux.system, blocks, interval, tol)
    end = aux.system.couplings[-1]
    eA, eAh = end.exp_A, end.exp_hat
    xi1_bar = zeta1 + blocks.Q12.T @ eA @ aux.X12 @ eAh.T + blocks.Q22 @ eAh @ aux.X22 @ eAh.T

    diagnostics: List[str] = []
    limit = 1.0 / np.sqrt(np.finfo(float).eps)
    for name, M in (("P22", blocks.P22), ("Q22", blocks.Q22)):
        cond = np.linalg.cond(M)
        if not np.isfinite(cond) or cond > limit:
            message = f"{name} is numerically singular (condition {cond:.2e})"
            diagnostics.append(message)
            logger.warning(message)

    result = StationarityDeviation(
        float(np.linalg.norm(xi1_bar)), float(np.linalg.norm(zeta2)), float(np.linalg.norm(zeta3)),
        diagnostics,
    )
    logger.info(f"stationarity deviations: {result.xi1_bar:.3e}, {result.xi2:.3e}, {result.xi3:.3e}")
    return result
