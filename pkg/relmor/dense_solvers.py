#!/usr/bin/env python3
"""
Dense Matrix-Equation Kernels
Real Schur forms, Bartels-Stewart Sylvester/Lyapunov solvers, the Hamiltonian
Riccati solver and matrix exponentials used by every other relmor module
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from relmor.config import get_settings
from relmor.errors import (
    ExponentialOverflowError,
    NoStabilizingSolutionError,
    ResidualToleranceError,
    SchurConvergenceError,
    SpectrumConflictError,
)

logger = logging.getLogger(__name__)

_TINY = np.finfo(float).tiny


def _default_residual_rel() -> float:
    return get_settings().residual_rel


def _default_schur_rel() -> float:
    return get_settings().schur_rel


@dataclass(frozen=True)
class SolverTolerances:
    """Relative tolerances checked after every solve"""
    residual_rel: float = field(default_factory=_default_residual_rel)
    schur_rel: float = field(default_factory=_default_schur_rel)

    def __post_init__(self):
        for name in ("residual_rel", "schur_rel"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value}")


@dataclass(frozen=True)
class RealSchurForm:
    """
    Real Schur factorization Q T Qᵀ.

    With ``transposed`` set the form represents Q Tᵀ Qᵀ, which lets one
    factorization of A serve solves with Aᵀ.
    """
    Q: np.ndarray
    T: np.ndarray
    transposed: bool = False
    residual: float = 0.0

    @property
    def n(self) -> int:
        return self.T.shape[0]

    def matrix(self) -> np.ndarray:
        T = self.T.T if self.transposed else self.T
        return self.Q @ T @ self.Q.T

    def transpose(self) -> "RealSchurForm":
        return RealSchurForm(self.Q, self.T, not self.transposed, self.residual)

    def negate(self) -> "RealSchurForm":
        return RealSchurForm(self.Q, -self.T, self.transposed, self.residual)

    def block_sizes(self) -> list:
        sizes, i = [], 0
        while i < self.n:
            if i + 1 < self.n and self.T[i + 1, i] != 0.0:
                sizes.append(2)
                i += 2
            else:
                sizes.append(1)
                i += 1
        return sizes

    def reconstruction_note(self, limit: float) -> Optional[str]:
        """Message when ‖QTQᵀ - A‖ / ‖A‖ exceeded limit, else None"""
        if self.residual > limit:
            return f"Schur reconstruction residual {self.residual:.2e} above {limit:.0e} (n={self.n})"
        return None

    def eigenvalues(self) -> np.ndarray:
        eigs, i = [], 0
        for size in self.block_sizes():
            if size == 2:
                eigs.extend(np.linalg.eigvals(self.T[i:i + 2, i:i + 2]))
            else:
                eigs.append(complex(self.T[i, i]))
            i += size
        return np.asarray(eigs, dtype=complex)


def _as_matrix(M, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"{name} must be a 2D array, got shape {M.shape}")
    return M


def _as_square(M, name: str) -> np.ndarray:
    M = _as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    return M


def _fro(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, "fro")) if M.size else 0.0


def spectral_abscissa(A: np.ndarray) -> float:
    A = _as_square(A, "A")
    if A.shape[0] == 0:
        return -np.inf
    return float(np.max(np.linalg.eigvals(A).real))


def is_hurwitz(A: np.ndarray) -> bool:
    return spectral_abscissa(A) < 0.0


def real_schur(A, tol: Optional[SolverTolerances] = None) -> RealSchurForm:
    """Real Schur form of A, checked by reconstruction"""
    tol = tol or SolverTolerances()
    A = _as_square(A, "A")
    if not np.all(np.isfinite(A)):
        raise ValueError("real_schur requires finite entries")
    n = A.shape[0]
    if n == 0:
        return RealSchurForm(np.eye(0), np.zeros((0, 0)))

    try:
        T, Q = linalg.schur(A, output="real")
    except linalg.LinAlgError as exc:
        raise SchurConvergenceError(f"QR iteration failed on {n}x{n} matrix: {exc}", 30 * max(10, n)) from exc

    if not (np.all(np.isfinite(T)) and np.all(np.isfinite(Q))):
        raise SchurConvergenceError(f"non-finite Schur factors for {n}x{n} matrix", 30 * max(10, n))

    rel = _fro(Q @ T @ Q.T - A) / max(_fro(A), _TINY)
    if rel > tol.schur_rel:
        logger.warning(f"Schur reconstruction residual {rel:.2e} above {tol.schur_rel:.0e} (n={n})")
    return RealSchurForm(Q, T, residual=rel)


def _check_separation(sk: RealSchurForm, sl: RealSchurForm, scale: float) -> None:
    if sk.n == 0 or sl.n == 0:
        return
    gaps = np.abs(np.add.outer(sk.eigenvalues(), sl.eigenvalues()))
    separation = float(gaps.min())
    threshold = get_settings().spectrum_conflict_rel * max(scale, _TINY)
    if separation <= threshold:
        raise SpectrumConflictError("spectra of K and -L (nearly) intersect; Sylvester operator singular", separation)


def _trsyl(TA: np.ndarray, TB: np.ndarray, F: np.ndarray, trana: str, tranb: str) -> np.ndarray:
    trsyl, = linalg.get_lapack_funcs(("trsyl",), (TA, TB, F))
    Y, scale, info = trsyl(TA, TB, F, trana=trana, tranb=tranb)
    if info < 0:
        raise ValueError(f"trsyl rejected argument {-info}")
    if info == 1:
        logger.debug("trsyl perturbed close eigenvalues while solving")
    return Y / scale


def _sylvester_core(sk: RealSchurForm, sl: RealSchurForm, W: np.ndarray) -> np.ndarray:
    F = sk.Q.T @ (-W) @ sl.Q
    Y = _trsyl(sk.T, sl.T, F, "T" if sk.transposed else "N", "T" if sl.transposed else "N")
    return sk.Q @ Y @ sl.Q.T


def _sylvester_residual(K, L, J, W) -> Tuple[np.ndarray, float]:
    R = K @ J + J @ L + W
    denom = _fro(K) * _fro(J) + _fro(J) * _fro(L) + _fro(W)
    return R, _fro(R) / max(denom, _TINY)


def solve_sylvester(
    K,
    L,
    W,
    tol: Optional[SolverTolerances] = None,
    *,
    k_schur: Optional[RealSchurForm] = None,
    l_schur: Optional[RealSchurForm] = None,
) -> np.ndarray:
    """
    Solve K J + J L + W = 0 by Bartels-Stewart.

    Precomputed Schur forms of K and L may be passed to skip the
    factorizations; the residual is always checked against K and L.
    """
    tol = tol or SolverTolerances()
    K = _as_square(K, "K")
    L = _as_square(L, "L")
    W = _as_matrix(W, "W")
    if W.shape != (K.shape[0], L.shape[0]):
        raise ValueError(f"W has shape {W.shape}, expected {(K.shape[0], L.shape[0])} from K {K.shape} and L {L.shape}")
    if W.size == 0:
        return np.zeros(W.shape)

    sk = k_schur if k_schur is not None else real_schur(K, tol)
    sl = l_schur if l_schur is not None else real_schur(L, tol)
    _check_separation(sk, sl, max(_fro(K), _fro(L)))

    J = _sylvester_core(sk, sl, W)
    R, rel = _sylvester_residual(K, L, J, W)
    if rel > tol.residual_rel:
        # one step of iterative refinement on the residual equation
        J = J + _sylvester_core(sk, sl, R)
        R, rel = _sylvester_residual(K, L, J, W)
        if rel > tol.residual_rel:
            raise ResidualToleranceError("Sylvester equation KJ + JL + W = 0", rel, tol.residual_rel)
    logger.debug(f"Sylvester solve {K.shape[0]}x{L.shape[0]}: residual {rel:.2e}")
    return J


def _lyapunov_core(sa: RealSchurForm, W: np.ndarray) -> np.ndarray:
    F = sa.Q.T @ (-W) @ sa.Q
    trana, tranb = ("T", "N") if sa.transposed else ("N", "T")
    Y = _trsyl(sa.T, sa.T, F, trana, tranb)
    return sa.Q @ Y @ sa.Q.T


def _lyapunov_residual(A, X, W) -> Tuple[np.ndarray, float]:
    R = A @ X + X @ A.T + W
    denom = 2.0 * _fro(A) * _fro(X) + _fro(W)
    return R, _fro(R) / max(denom, _TINY)


def solve_lyapunov(
    A,
    W,
    tol: Optional[SolverTolerances] = None,
    *,
    schur: Optional[RealSchurForm] = None,
) -> np.ndarray:
    """Solve A X + X Aᵀ + W = 0 for symmetric W; X is symmetrized"""
    tol = tol or SolverTolerances()
    A = _as_square(A, "A")
    W = _as_square(W, "W")
    if W.shape != A.shape:
        raise ValueError(f"W has shape {W.shape}, expected {A.shape}")
    if A.shape[0] == 0:
        return np.zeros((0, 0))
    W = 0.5 * (W + W.T)

    sa = schur if schur is not None else real_schur(A, tol)
    _check_separation(sa, sa, _fro(A))

    X = _lyapunov_core(sa, W)
    X = 0.5 * (X + X.T)
    R, rel = _lyapunov_residual(A, X, W)
    if rel > tol.residual_rel:
        X = X + _lyapunov_core(sa, 0.5 * (R + R.T))
        X = 0.5 * (X + X.T)
        R, rel = _lyapunov_residual(A, X, W)
        if rel > tol.residual_rel:
            raise ResidualToleranceError("Lyapunov equation AX + XAᵀ + W = 0", rel, tol.residual_rel)
    logger.debug(f"Lyapunov solve n={A.shape[0]}: residual {rel:.2e}")
    return X


def care_residual(A, S, G, X) -> Tuple[np.ndarray, float]:
    R = A @ X + X @ A.T + X @ S @ X + G
    denom = 2.0 * _fro(A) * _fro(X) + _fro(S) * _fro(X) ** 2 + _fro(G)
    return R, _fro(R) / max(denom, _TINY)


def solve_care(A, S, G, tol: Optional[SolverTolerances] = None, *, stabilizing: bool = True) -> np.ndarray:
    """
    Solve A X + X Aᵀ + X S X + G = 0.

    X spans the stable invariant subspace of the Hamiltonian
    [[Aᵀ, S], [-G, -A]], so A + X S is Hurwitz. ``stabilizing=False`` picks
    the complementary (anti-stable) subspace instead.
    """
    tol = tol or SolverTolerances()
    settings = get_settings()
    A = _as_square(A, "A")
    S = _as_square(S, "S")
    G = _as_square(G, "G")
    r = A.shape[0]
    if S.shape != A.shape or G.shape != A.shape:
        raise ValueError(f"S {S.shape} and G {G.shape} must match A {A.shape}")
    if r == 0:
        return np.zeros((0, 0))
    S = 0.5 * (S + S.T)
    G = 0.5 * (G + G.T)

    H = np.block([[A.T, S], [-G, -A]])
    try:
        T, Z, sdim = linalg.schur(H, output="real", sort="lhp" if stabilizing else "rhp")
    except linalg.LinAlgError as exc:
        raise SchurConvergenceError(f"Hamiltonian Schur form failed: {exc}", 30 * max(10, 2 * r)) from exc

    eigs = RealSchurForm(Z, T).eigenvalues()
    axis_gap = float(np.min(np.abs(eigs.real)))
    if axis_gap <= 1e-10 * max(1.0, _fro(H)):
        raise NoStabilizingSolutionError(
            f"Hamiltonian has eigenvalues on the imaginary axis (min |Re| = {axis_gap:.3e})"
        )
    if sdim != r:
        raise NoStabilizingSolutionError(f"stable invariant subspace has dimension {sdim}, expected {r}")

    U1, U2 = Z[:r, :r], Z[r:, :r]
    if np.linalg.cond(U1) > 1.0 / np.finfo(float).eps:
        raise NoStabilizingSolutionError("invariant subspace basis is singular; no graph-form solution")
    X = linalg.solve(U1.T, U2.T).T
    X = 0.5 * (X + X.T)

    R, rel = care_residual(A, S, G, X)
    steps = 0
    while rel > settings.care_residual_rel * 1e-2 and steps < settings.newton_steps:
        # Newton step: (A + XS) dX + dX (A + XS)ᵀ + R = 0
        dX = solve_lyapunov(A + X @ S, R, SolverTolerances(residual_rel=1e-6, schur_rel=tol.schur_rel))
        X = X + dX
        X = 0.5 * (X + X.T)
        R, rel = care_residual(A, S, G, X)
        steps += 1

    if rel > settings.care_residual_rel:
        raise ResidualToleranceError("Riccati equation AX + XAᵀ + XSX + G = 0", rel, settings.care_residual_rel)
    logger.debug(f"CARE solve r={r}: residual {rel:.2e} after {steps} Newton steps")
    return X


def matrix_exponential(A, t: float) -> np.ndarray:
    """e^{At} by scaling and squaring with a degree-13 Padé approximant"""
    A = _as_square(A, "A")
    t = float(t)
    if not np.isfinite(t):
        raise ValueError(f"t must be finite, got {t}")
    n = A.shape[0]
    if t == 0.0 or n == 0:
        return np.eye(n)
    At = A * t
    with np.errstate(over="ignore", invalid="ignore"):
        E = linalg.expm(At)
    if not np.all(np.isfinite(E)):
        raise ExponentialOverflowError(float(np.linalg.norm(At, 1)))
    return E


def exponential_frechet(A, E, t: float) -> Tuple[np.ndarray, np.ndarray]:
    """e^{At} and its directional derivative along A -> A + εE"""
    A = _as_square(A, "A")
    E = _as_square(E, "E")
    n = A.shape[0]
    if t == 0.0 or n == 0:
        return np.eye(n), np.zeros((n, n))
    with np.errstate(over="ignore", invalid="ignore"):
        expAt, L = linalg.expm_frechet(A * t, E * t, compute_expm=True)
    if not (np.all(np.isfinite(expAt)) and np.all(np.isfinite(L))):
        raise ExponentialOverflowError(float(np.linalg.norm(A * t, 1)))
    return expAt, L


def trace_exchange_gap(X, Y, W, Z) -> float:
    """
    Relative gap |tr(WV) - tr(ZU)| / (|tr(WV)| + 1) where
    XU + UY + W = 0 and YV + VX + Z = 0.
    """
    U = solve_sylvester(X, Y, W)
    V = solve_sylvester(Y, X, Z)
    twv = float(np.trace(np.asarray(W) @ V))
    tzu = float(np.trace(np.asarray(Z) @ U))
    return abs(twv - tzu) / (abs(twv) + 1.0)
