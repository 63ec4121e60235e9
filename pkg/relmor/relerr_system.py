#!/usr/bin/env python3
"""
Relative-Error System
Block realization of Δ_rel = W (H - Ĥ) with W = Ĥ⁻¹ or a stable inverse
spectral factor, its time-limited block gramians, and the H2,τ norms of the
relative and additive errors
"""

import logging
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from relmor.config import get_settings
from relmor.dense_solvers import (
    RealSchurForm,
    SolverTolerances,
    matrix_exponential,
    real_schur,
    solve_lyapunov,
    solve_sylvester,
    spectral_abscissa,
)
from relmor.errors import ModelDimensionError, NormDualityError, UnsupportedModelError
from relmor.gramians import (
    H2TauEvaluation,
    compare_forms,
    evaluate_h2tau,
    factored_trace_norm,
    signed_outer,
    tl_gramians,
)
from relmor.lti_model import (
    InverseRealization,
    StateSpaceModel,
    TimeInterval,
    epsilon_regularize,
    inverse_realization,
    numerical_rank,
)
from relmor.spectral_factor import FactorOrientation, build_spectral_factor_inverse

logger = logging.getLogger(__name__)


class WeightKind(str, Enum):
    """Left weight applied to the additive error"""
    INVERSE = "inverse"
    SPECTRAL = "spectral"


class FeedthroughConvention(str, Enum):
    """
    REGULARIZED: H and Ĥ are both evaluated with the ε-regularized D, so the
    additive error has no feedthrough. ORIGINAL: H keeps its true D and
    D - D̂_reg enters the input matrix of the weight.
    """
    REGULARIZED = "regularized"
    ORIGINAL = "original"


class FullOrderCache:
    """
    Quantities of H that stay fixed while the ROM changes: the real Schur
    form of A, the endpoint exponentials and the time-limited
    controllability gramian. Safe to share between threads.
    """

    def __init__(self, model: StateSpaceModel, interval: TimeInterval, tol: Optional[SolverTolerances] = None):
        model.require_consistent()
        self.model = model
        self.interval = interval
        self.tol = tol
        self._lock = threading.Lock()
        self._schur: Optional[RealSchurForm] = None
        self._exps: Dict[float, np.ndarray] = {}
        self._controllability: Optional[np.ndarray] = None

    def matches(self, model: StateSpaceModel, interval: TimeInterval) -> bool:
        """Same A, B and interval; C and D never enter the cached quantities"""
        if interval != self.interval:
            return False
        if model is self.model:
            return True
        return (model.A.shape == self.model.A.shape and model.B.shape == self.model.B.shape
                and np.array_equal(model.A, self.model.A) and np.array_equal(model.B, self.model.B))

    @property
    def schur(self) -> RealSchurForm:
        with self._lock:
            if self._schur is None:
                logger.debug(f"caching Schur form of full-order A (n={self.model.n})")
                self._schur = real_schur(self.model.A, self.tol)
            return self._schur

    def exponential(self, t: float) -> np.ndarray:
        with self._lock:
            if t not in self._exps:
                self._exps[t] = matrix_exponential(self.model.A, t)
            return self._exps[t]

    def endpoint_inputs(self) -> List[Tuple[float, np.ndarray]]:
        """(sign, e^{At}B) for each interval endpoint"""
        return [(sign, self.exponential(t) @ self.model.B) for t, sign in self.interval.endpoints()]

    def controllability(self) -> np.ndarray:
        """Time-limited controllability gramian of H"""
        schur = self.schur
        inputs = self.endpoint_inputs()
        with self._lock:
            if self._controllability is None:
                forcing = signed_outer((s, f, f) for s, f in inputs)
                self._controllability = solve_lyapunov(self.model.A, forcing, self.tol, schur=schur)
            return self._controllability


@dataclass(eq=False)
class EndpointCoupling:
    """Exponential blocks of e^{A_rel t} at one interval endpoint"""
    t: float
    sign: float
    exp_A: np.ndarray
    exp_hat: np.ndarray
    exp_w: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    E2_closed: Optional[np.ndarray] = None

    def inputs(self, B, B_hat, B_3) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Row blocks of e^{A_rel t} B_rel"""
        return self.exp_A @ B, self.exp_hat @ B_hat, self.E1 @ B + self.E2 @ B_hat + self.exp_w @ B_3

    def outputs(self, DwC, DwC_hat, C_w) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Column blocks of C_rel e^{A_rel t}"""
        return DwC @ self.exp_A + C_w @ self.E1, -DwC_hat @ self.exp_hat + C_w @ self.E2, C_w @ self.exp_w


@dataclass(eq=False)
class RelErrorSystem:
    """
    Δ_rel realization with state (x, x̂, x_w):
        A_rel = [[A, 0, 0], [0, Â, 0], [B_w C, -B_w Ĉ, A_w]]
        B_rel = [B; B̂; B_w D_add],  C_rel = [D_w C, -D_w Ĉ, C_w],  D_rel = D_w D_add
    """
    H: StateSpaceModel
    H_hat: StateSpaceModel
    interval: TimeInterval
    weight: InverseRealization
    weight_kind: WeightKind
    D_add: np.ndarray
    couplings: List[EndpointCoupling]
    full_schur: RealSchurForm
    hat_schur: RealSchurForm
    weight_schur: RealSchurForm
    cache: Optional[FullOrderCache] = None
    diagnostics: List[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.H.n

    @property
    def r(self) -> int:
        return self.H_hat.n

    @property
    def r_w(self) -> int:
        return self.weight.r

    @property
    def B_3(self) -> np.ndarray:
        return self.weight.B_i @ self.D_add

    @property
    def E1(self) -> np.ndarray:
        """E1 at the upper interval limit"""
        return self.couplings[-1].E1

    @property
    def E2(self) -> np.ndarray:
        return self.couplings[-1].E2

    def weighted_outputs(self) -> Tuple[np.ndarray, np.ndarray]:
        """B_w C, B_w Ĉ"""
        return self.weight.B_i @ self.H.C, self.weight.B_i @ self.H_hat.C

    @property
    def A_rel(self) -> np.ndarray:
        BwC, BwC_hat = self.weighted_outputs()
        n, r, rw = self.n, self.r, self.r_w
        A = np.zeros((n + r + rw, n + r + rw))
        A[:n, :n] = self.H.A
        A[n:n + r, n:n + r] = self.H_hat.A
        A[n + r:, :n] = BwC
        A[n + r:, n:n + r] = -BwC_hat
        A[n + r:, n + r:] = self.weight.A_i
        return A

    @property
    def B_rel(self) -> np.ndarray:
        return np.vstack([self.H.B, self.H_hat.B, self.B_3])

    @property
    def C_rel(self) -> np.ndarray:
        D_w = self.weight.D_i
        return np.hstack([D_w @ self.H.C, -D_w @ self.H_hat.C, self.weight.C_i])

    @property
    def D_rel(self) -> np.ndarray:
        return self.weight.D_i @ self.D_add

    def assembled_model(self) -> StateSpaceModel:
        return StateSpaceModel(self.A_rel, self.B_rel, self.C_rel, self.D_rel)

    def transfer(self, s: complex) -> np.ndarray:
        return self.assembled_model().transfer(s)

    def inverse_identity_gap(self) -> Optional[float]:
        """Largest ‖E2 - (e^{Ât} - e^{A_i t})‖ / ‖E2‖ over endpoints; None for spectral weights"""
        gaps = []
        for coupling in self.couplings:
            if coupling.E2_closed is None:
                return None
            scale = max(np.linalg.norm(coupling.E2), np.finfo(float).tiny)
            gaps.append(float(np.linalg.norm(coupling.E2 - coupling.E2_closed) / scale) if coupling.t else 0.0)
        return max(gaps)


def _check_pair(H: StateSpaceModel, H_hat: StateSpaceModel, require_stable: bool) -> None:
    H.require_consistent()
    H_hat.require_consistent()
    if (H.m, H.p) != (H_hat.m, H_hat.p):
        raise ModelDimensionError(
            f"full-order model is {H.p}x{H.m} but reduced model is {H_hat.p}x{H_hat.m}"
        )
    if not H_hat.is_square:
        raise UnsupportedModelError(f"relative error needs a square reduced model, got {H_hat.p}x{H_hat.m}")
    if require_stable:
        for label, model in (("full-order", H), ("reduced", H_hat)):
            if not model.is_stable():
                raise UnsupportedModelError(
                    f"{label} model is not Hurwitz (spectral abscissa {model.spectral_abscissa():.4g})"
                )


def _resolve_weight(
    H_hat: StateSpaceModel,
    weight: Optional[InverseRealization],
    weight_kind: WeightKind,
    orientation: FactorOrientation,
    tol: Optional[SolverTolerances],
) -> InverseRealization:
    if weight is not None:
        return weight
    if weight_kind is WeightKind.INVERSE:
        return inverse_realization(H_hat)
    return build_spectral_factor_inverse(H_hat, orientation, tol).as_inverse()


def build_relerr(
    H: StateSpaceModel,
    H_hat: StateSpaceModel,
    interval: TimeInterval,
    tol: Optional[SolverTolerances] = None,
    *,
    weight: Optional[InverseRealization] = None,
    weight_kind: WeightKind = WeightKind.INVERSE,
    orientation: FactorOrientation = FactorOrientation.RIGHT,
    cache: Optional[FullOrderCache] = None,
    require_stable: bool = True,
) -> RelErrorSystem:
    """
    Assemble Δ_rel and the exponential coupling blocks at both endpoints.

    For each endpoint t > 0, E1 and E2 solve
        A_w E1 - E1 A + B_w C e^{At} - e^{A_w t} B_w C = 0
        A_w E2 - E2 Â - B_w Ĉ e^{Ât} + e^{A_w t} B_w Ĉ = 0
    and vanish at t = 0. With the inverse weight E2 is cross-checked against
    e^{Ât} - e^{A_i t}.
    """
    weight_kind = WeightKind(weight_kind)
    _check_pair(H, H_hat, require_stable)
    W = _resolve_weight(H_hat, weight, weight_kind, FactorOrientation(orientation), tol)
    if W.B_i.shape[1] != H.p or W.C_i.shape[0] != H.p:
        raise ModelDimensionError(f"weight is {W.C_i.shape[0]}x{W.B_i.shape[1]}, expected {H.p}x{H.p}")

    diagnostics: List[str] = []
    if W.r and spectral_abscissa(W.A_i) >= 0.0:
        message = (f"weight state matrix not Hurwitz (abscissa {spectral_abscissa(W.A_i):.4g}); "
                   "time-limited gramians remain defined on the finite interval")
        diagnostics.append(message)
        logger.warning(message)

    if cache is not None and not cache.matches(H, interval):
        raise ValueError("FullOrderCache was built for a different model or interval")
    full_schur = cache.schur if cache is not None else real_schur(H.A, tol)
    hat_schur = real_schur(H_hat.A, tol)
    weight_schur = real_schur(W.A_i, tol)
    schur_limit = (tol or SolverTolerances()).schur_rel
    for form in (full_schur, hat_schur, weight_schur):
        note = form.reconstruction_note(schur_limit)
        if note:
            diagnostics.append(note)

    BwC = W.B_i @ H.C
    BwC_hat = W.B_i @ H_hat.C
    couplings: List[EndpointCoupling] = []
    for t, sign in interval.endpoints():
        exp_A = cache.exponential(t) if cache is not None else matrix_exponential(H.A, t)
        exp_hat = matrix_exponential(H_hat.A, t)
        exp_w = matrix_exponential(W.A_i, t)
        if t == 0.0:
            E1 = np.zeros((W.r, H.n))
            E2 = np.zeros((W.r, H_hat.n))
        else:
            E1 = solve_sylvester(W.A_i, -H.A, BwC @ exp_A - exp_w @ BwC, tol,
                                 k_schur=weight_schur, l_schur=full_schur.negate())
            E2 = solve_sylvester(W.A_i, -H_hat.A, -(BwC_hat @ exp_hat) + exp_w @ BwC_hat, tol,
                                 k_schur=weight_schur, l_schur=hat_schur.negate())
        E2_closed = exp_hat - exp_w if weight_kind is WeightKind.INVERSE and weight is None else None
        couplings.append(EndpointCoupling(t, sign, exp_A, exp_hat, exp_w, E1, E2, E2_closed))

    system = RelErrorSystem(
        H=H, H_hat=H_hat, interval=interval, weight=W, weight_kind=weight_kind,
        D_add=H.D - H_hat.D, couplings=couplings, full_schur=full_schur,
        hat_schur=hat_schur, weight_schur=weight_schur, cache=cache, diagnostics=diagnostics,
    )
    gap = system.inverse_identity_gap()
    if gap is not None:
        logger.debug(f"E2 Sylvester vs closed form: relative gap {gap:.2e}")
        if gap > get_settings().identity_rtol:
            message = f"E2 Sylvester solution deviates from e^(Ât) - e^(A_i t) by {gap:.2e}"
            diagnostics.append(message)
            logger.warning(message)
    return system


@dataclass(eq=False)
class RelGramianBlocks:
    """Blocks of the time-limited gramians of Δ_rel, with their right-hand sides"""
    system: RelErrorSystem
    P: np.ndarray
    P12: np.ndarray
    P13: np.ndarray
    P22: np.ndarray
    P23: np.ndarray
    P33: np.ndarray
    Q11: np.ndarray
    Q12: np.ndarray
    Q13: np.ndarray
    Q22: np.ndarray
    Q23: np.ndarray
    Q33: np.ndarray
    rhs: Dict[str, np.ndarray]

    def p_matrix(self) -> np.ndarray:
        return np.block([
            [self.P, self.P12, self.P13],
            [self.P12.T, self.P22, self.P23],
            [self.P13.T, self.P23.T, self.P33],
        ])

    def q_matrix(self) -> np.ndarray:
        return np.block([
            [self.Q11, self.Q12, self.Q13],
            [self.Q12.T, self.Q22, self.Q23],
            [self.Q13.T, self.Q23.T, self.Q33],
        ])

    def equations(self) -> Dict[str, Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
        """(K, J, L, W) per block with K J + J L + W = 0"""
        s, H, Hh, Wt = self.system, self.system.H, self.system.H_hat, self.system.weight
        return {
            "P11": (H.A, self.P, H.A.T, self.rhs["P11"]),
            "P12": (H.A, self.P12, Hh.A.T, self.rhs["P12"]),
            "P22": (Hh.A, self.P22, Hh.A.T, self.rhs["P22"]),
            "P13": (H.A, self.P13, Wt.A_i.T, self.rhs["P13"]),
            "P23": (Hh.A, self.P23, Wt.A_i.T, self.rhs["P23"]),
            "P33": (Wt.A_i, self.P33, Wt.A_i.T, self.rhs["P33"]),
            "Q33": (Wt.A_i.T, self.Q33, Wt.A_i, self.rhs["Q33"]),
            "Q13": (H.A.T, self.Q13, Wt.A_i, self.rhs["Q13"]),
            "Q23": (Hh.A.T, self.Q23, Wt.A_i, self.rhs["Q23"]),
            "Q22": (Hh.A.T, self.Q22, Hh.A, self.rhs["Q22"]),
            "Q12": (H.A.T, self.Q12, Hh.A, self.rhs["Q12"]),
            "Q11": (H.A.T, self.Q11, H.A, self.rhs["Q11"]),
        }

    def residuals(self) -> Dict[str, float]:
        out = {}
        for name, (K, J, L, W) in self.equations().items():
            R = K @ J + J @ L + W
            denom = np.linalg.norm(K) * np.linalg.norm(J) + np.linalg.norm(J) * np.linalg.norm(L) + np.linalg.norm(W)
            out[name] = float(np.linalg.norm(R) / denom) if denom > 0 else 0.0
        return out

    def identity_gaps(self) -> Optional[Dict[str, float]]:
        """Q12 = -Q13, Q22 = -Q23 = Q33 under the inverse weight"""
        if self.system.weight_kind is not WeightKind.INVERSE:
            return None
        tiny = np.finfo(float).tiny
        q12 = max(np.linalg.norm(self.Q12), tiny)
        q22 = max(np.linalg.norm(self.Q22), tiny)
        return {
            "Q12+Q13": float(np.linalg.norm(self.Q12 + self.Q13) / q12),
            "Q22+Q23": float(np.linalg.norm(self.Q22 + self.Q23) / q22),
            "Q22-Q33": float(np.linalg.norm(self.Q22 - self.Q33) / q22),
        }

    def evaluate(self) -> H2TauEvaluation:
        """P-form sqrt(tr(C_rel P_rel C_relᵀ)) against Q-form sqrt(tr(B_relᵀ Q_rel B_rel))"""
        p_form, p_res = factored_trace_norm(self.system.C_rel, self.p_matrix())
        q_form, q_res = factored_trace_norm(self.system.B_rel.T, self.q_matrix())
        return compare_forms(p_form, q_form, max(p_res, q_res))


def _endpoint_blocks(system: RelErrorSystem):
    H, Hh, Wt = system.H, system.H_hat, system.weight
    D_w = Wt.D_i
    out = []
    for c in system.couplings:
        f = c.inputs(H.B, Hh.B, system.B_3)
        g = c.outputs(D_w @ H.C, D_w @ Hh.C, Wt.C_i)
        out.append((c.sign, f, g))
    return out


def _q_chain(system: RelErrorSystem, ends, tol, *, full: bool):
    """Q33 -> Q13 -> Q23 [-> Q22] -> Q12 [-> Q11]"""
    H, Hh, Wt = system.H, system.H_hat, system.weight
    BwC, BwC_hat = system.weighted_outputs()
    fs, hs, ws = system.full_schur, system.hat_schur, system.weight_schur

    def forcing(a, b):
        return signed_outer((s, g[a].T, g[b].T) for s, _, g in ends)

    rhs = {"Q33": forcing(2, 2)}
    Q33 = solve_lyapunov(Wt.A_i.T, rhs["Q33"], tol, schur=ws.transpose())
    rhs["Q13"] = BwC.T @ Q33 + forcing(0, 2)
    Q13 = solve_sylvester(H.A.T, Wt.A_i, rhs["Q13"], tol, k_schur=fs.transpose(), l_schur=ws)
    rhs["Q23"] = -BwC_hat.T @ Q33 + forcing(1, 2)
    Q23 = solve_sylvester(Hh.A.T, Wt.A_i, rhs["Q23"], tol, k_schur=hs.transpose(), l_schur=ws)
    rhs["Q12"] = BwC.T @ Q23.T - Q13 @ BwC_hat + forcing(0, 1)
    Q12 = solve_sylvester(H.A.T, Hh.A, rhs["Q12"], tol, k_schur=fs.transpose(), l_schur=hs)
    if not full:
        return {"Q33": Q33, "Q13": Q13, "Q23": Q23, "Q12": Q12}, rhs

    rhs["Q22"] = -BwC_hat.T @ Q23.T - Q23 @ BwC_hat + forcing(1, 1)
    Q22 = solve_lyapunov(Hh.A.T, rhs["Q22"], tol, schur=hs.transpose())
    rhs["Q11"] = BwC.T @ Q13.T + Q13 @ BwC + forcing(0, 0)
    Q11 = solve_lyapunov(H.A.T, rhs["Q11"], tol, schur=fs.transpose())
    return {"Q33": Q33, "Q13": Q13, "Q23": Q23, "Q22": Q22, "Q12": Q12, "Q11": Q11}, rhs


def _cross_gramian(system: RelErrorSystem, ends, tol) -> Tuple[np.ndarray, np.ndarray]:
    """A P12 + P12 Âᵀ + Σ s (e^{At}B)(e^{Ât}B̂)ᵀ = 0"""
    rhs = signed_outer((s, f[0], f[1]) for s, f, _ in ends)
    P12 = solve_sylvester(system.H.A, system.H_hat.A.T, rhs, tol,
                          k_schur=system.full_schur, l_schur=system.hat_schur.transpose())
    return P12, rhs


def relerr_gramian_blocks(system: RelErrorSystem, tol: Optional[SolverTolerances] = None) -> RelGramianBlocks:
    """
    Solve the twelve block equations of P_rel and Q_rel in dependency order:
    P11, P12, P22, P13, P23, P33, then Q33, Q13, Q23, Q22, Q12, Q11.
    """
    H, Hh, Wt = system.H, system.H_hat, system.weight
    BwC, BwC_hat = system.weighted_outputs()
    fs, hs, ws = system.full_schur, system.hat_schur, system.weight_schur
    ends = _endpoint_blocks(system)

    def forcing(a, b):
        return signed_outer((s, f[a], f[b]) for s, f, _ in ends)

    rhs: Dict[str, np.ndarray] = {"P11": forcing(0, 0)}
    if system.cache is not None:
        P = system.cache.controllability()
    else:
        P = solve_lyapunov(H.A, rhs["P11"], tol, schur=fs)
    P12, rhs["P12"] = _cross_gramian(system, ends, tol)
    rhs["P22"] = forcing(1, 1)
    P22 = solve_lyapunov(Hh.A, rhs["P22"], tol, schur=hs)

    rhs["P13"] = P @ BwC.T - P12 @ BwC_hat.T + forcing(0, 2)
    P13 = solve_sylvester(H.A, Wt.A_i.T, rhs["P13"], tol, k_schur=fs, l_schur=ws.transpose())
    rhs["P23"] = P12.T @ BwC.T - P22 @ BwC_hat.T + forcing(1, 2)
    P23 = solve_sylvester(Hh.A, Wt.A_i.T, rhs["P23"], tol, k_schur=hs, l_schur=ws.transpose())
    coupling = BwC @ P13 - BwC_hat @ P23
    rhs["P33"] = coupling + coupling.T + forcing(2, 2)
    P33 = solve_lyapunov(Wt.A_i, rhs["P33"], tol, schur=ws)

    q_blocks, q_rhs = _q_chain(system, ends, tol, full=True)
    rhs.update(q_rhs)
    blocks = RelGramianBlocks(system=system, P=P, P12=P12, P13=P13, P22=P22, P23=P23, P33=P33, rhs=rhs, **q_blocks)

    gaps = blocks.identity_gaps()
    if gaps is not None:
        rtol = get_settings().identity_rtol
        for name, gap in gaps.items():
            if gap > rtol:
                message = f"block identity {name} = 0 violated by {gap:.2e}"
                system.diagnostics.append(message)
                logger.warning(message)
    return blocks


def relerr_projection_blocks(system: RelErrorSystem, tol: Optional[SolverTolerances] = None) -> Tuple[np.ndarray, np.ndarray]:
    """P12 and Q12 only, the n x r blocks that span the projection subspaces"""
    ends = _endpoint_blocks(system)
    P12, _ = _cross_gramian(system, ends, tol)
    q_blocks, _ = _q_chain(system, ends, tol, full=False)
    return P12, q_blocks["Q12"]


def monolithic_gramians(system: RelErrorSystem, tol: Optional[SolverTolerances] = None):
    """Full (n + r + r_w) Lyapunov solves on the assembled realization"""
    return tl_gramians(system.assembled_model(), system.interval, tol, require_stable=False, clip=False)


@dataclass
class RelativeErrorEvaluation:
    value: float
    dual_value: float
    relative_gap: float
    regularized: bool
    weight_kind: WeightKind
    convention: FeedthroughConvention
    diagnostics: List[str] = field(default_factory=list)


def regularized_pair(
    H: StateSpaceModel,
    H_hat: StateSpaceModel,
    epsilon: float,
    convention: FeedthroughConvention,
) -> Tuple[StateSpaceModel, StateSpaceModel, bool]:
    """Apply the ε-regularization rule to the pair before inversion"""
    convention = FeedthroughConvention(convention)
    if numerical_rank(H_hat.D) == H_hat.m:
        return H, H_hat, False
    D_hat = epsilon_regularize(H_hat.D, epsilon)
    H_hat = H_hat.with_feedthrough(D_hat)
    if convention is FeedthroughConvention.REGULARIZED:
        H = H.with_feedthrough(epsilon_regularize(H.D, epsilon) if H.is_square else H.D)
    return H, H_hat, True


def evaluate_relative_error(
    H: StateSpaceModel,
    H_hat: StateSpaceModel,
    interval: TimeInterval,
    tol: Optional[SolverTolerances] = None,
    *,
    epsilon: float = 1e-4,
    convention: FeedthroughConvention = FeedthroughConvention.REGULARIZED,
    weight_kind: WeightKind = WeightKind.INVERSE,
    orientation: FactorOrientation = FactorOrientation.RIGHT,
    cache: Optional[FullOrderCache] = None,
    require_stable: bool = True,
) -> RelativeErrorEvaluation:
    """‖Δ_rel‖_{H2,τ} in both trace forms, with the ε and weight choices recorded"""
    convention = FeedthroughConvention(convention)
    H_eval, H_hat_eval, regularized = regularized_pair(H, H_hat, epsilon, convention)
    if cache is not None and not cache.matches(H_eval, interval):
        cache = None
    system = build_relerr(
        H_eval, H_hat_eval, interval, tol, weight_kind=weight_kind, orientation=orientation,
        cache=cache, require_stable=require_stable,
    )
    blocks = relerr_gramian_blocks(system, tol)
    result = blocks.evaluate()
    diagnostics = list(system.diagnostics)
    if regularized:
        diagnostics.append(f"D of reduced model regularized to {epsilon:g}*I ({convention.value} convention)")
    return RelativeErrorEvaluation(
        value=result.value,
        dual_value=result.dual_value,
        relative_gap=result.relative_gap,
        regularized=regularized,
        weight_kind=WeightKind(weight_kind),
        convention=convention,
        diagnostics=diagnostics,
    )


def h2tau_relative_error(
    H: StateSpaceModel,
    H_hat: StateSpaceModel,
    interval: TimeInterval,
    tol: Optional[SolverTolerances] = None,
    *,
    epsilon: float = 1e-4,
    convention: FeedthroughConvention = FeedthroughConvention.REGULARIZED,
    strict: bool = True,
    require_stable: bool = True,
) -> float:
    """P-form ‖Ĥ⁻¹(H - Ĥ)‖_{H2,τ}; the Q-form is the self-check"""
    result = evaluate_relative_error(
        H, H_hat, interval, tol, epsilon=epsilon, convention=convention, require_stable=require_stable,
    )
    rtol = get_settings().relerr_duality_rtol
    if result.relative_gap > rtol:
        if strict:
            raise NormDualityError(result.value, result.dual_value, rtol)
        logger.warning(f"relative-error duality gap {result.relative_gap:.2e} above {rtol:.0e}")
    return result.value


def h2tau_additive_error(
    H: StateSpaceModel,
    H_hat: StateSpaceModel,
    interval: TimeInterval,
    tol: Optional[SolverTolerances] = None,
    *,
    strict: bool = True,
    require_stable: bool = True,
) -> float:
    """‖H - Ĥ‖_{H2,τ} from the parallel difference realization"""
    H.require_consistent()
    H_hat.require_consistent()
    if require_stable and not (H.is_stable() and H_hat.is_stable()):
        raise UnsupportedModelError("additive error requires both models Hurwitz")
    result = evaluate_h2tau(H.parallel_difference(H_hat), interval, tol, require_stable=False)
    rtol = get_settings().duality_rtol
    if result.relative_gap > rtol:
        if strict:
            raise NormDualityError(result.value, result.dual_value, rtol)
        logger.warning(f"additive-error duality gap {result.relative_gap:.2e} above {rtol:.0e}")
    return result.value
