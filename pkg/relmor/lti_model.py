#!/usr/bin/env python3
"""
State-Space Models
Dense LTI realizations, time intervals, inverse realizations, validation
and impulse responses
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, List, Optional, Sequence

import numpy as np
from scipy import linalg

from relmor.config import get_settings
from relmor.dense_solvers import matrix_exponential, spectral_abscissa
from relmor.errors import InvalidIntervalError, InversionError, ModelDimensionError

logger = logging.getLogger(__name__)


def _frozen(M, shape_hint=None) -> np.ndarray:
    arr = np.array(M, dtype=float, copy=True)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(shape_hint if shape_hint is not None else (-1, 1))
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """
    Dense realization H(s) = C (sI - A)^{-1} B + D.

    Construction never rejects inconsistent shapes; validate() reports
    them and operations call require_consistent().
    """
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", _frozen(self.A))
        object.__setattr__(self, "B", _frozen(self.B))
        object.__setattr__(self, "C", _frozen(self.C, (1, -1)))
        object.__setattr__(self, "D", _frozen(self.D))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def is_square(self) -> bool:
        return self.m == self.p

    @classmethod
    def pure_gain(cls, D) -> "StateSpaceModel":
        D = np.atleast_2d(np.asarray(D, dtype=float))
        p, m = D.shape
        return cls(np.zeros((0, 0)), np.zeros((0, m)), np.zeros((p, 0)), D)

    def dimension_errors(self) -> List[str]:
        errors = []
        A, B, C, D = self.A, self.B, self.C, self.D
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            errors.append(f"A must be square, got {A.shape}")
        n = A.shape[0]
        if B.shape[0] != n:
            errors.append(f"B has {B.shape[0]} rows but A is {n}x{n}")
        if C.shape[1] != n:
            errors.append(f"C has {C.shape[1]} columns but A is {n}x{n}")
        if D.shape != (C.shape[0], B.shape[1]):
            errors.append(f"D is {D.shape} but C and B imply {(C.shape[0], B.shape[1])}")
        return errors

    def require_consistent(self) -> "StateSpaceModel":
        errors = self.dimension_errors()
        if errors:
            raise ModelDimensionError("; ".join(errors))
        if not all(np.all(np.isfinite(M)) for M in (self.A, self.B, self.C, self.D)):
            raise ModelDimensionError("model has non-finite entries")
        return self

    def spectral_abscissa(self) -> float:
        return spectral_abscissa(self.A)

    def is_stable(self) -> bool:
        return self.n == 0 or self.spectral_abscissa() < 0.0

    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.A) if self.n else np.zeros(0, dtype=complex)

    def transfer(self, s: complex) -> np.ndarray:
        """Evaluate H(s)"""
        if self.n == 0:
            return self.D.astype(complex)
        resolvent = linalg.solve(s * np.eye(self.n) - self.A, self.B.astype(complex))
        return self.C @ resolvent + self.D

    def with_feedthrough(self, D) -> "StateSpaceModel":
        return StateSpaceModel(self.A, self.B, self.C, D)

    def scaled(self, alpha: float) -> "StateSpaceModel":
        return StateSpaceModel(self.A, self.B, alpha * self.C, alpha * self.D)

    def transposed(self) -> "StateSpaceModel":
        """Dual realization of H(s)ᵀ"""
        return StateSpaceModel(self.A.T, self.C.T, self.B.T, self.D.T)

    def similarity(self, T) -> "StateSpaceModel":
        T = np.asarray(T, dtype=float)
        Tinv = np.linalg.inv(T)
        return StateSpaceModel(Tinv @ self.A @ T, Tinv @ self.B, self.C @ T, self.D)

    def project(self, V, W, D=None) -> "StateSpaceModel":
        """Petrov-Galerkin reduction (WᵀAV, WᵀB, CV)"""
        V = np.asarray(V, dtype=float)
        W = np.asarray(W, dtype=float)
        return StateSpaceModel(W.T @ self.A @ V, W.T @ self.B, self.C @ V, self.D if D is None else D)

    def parallel_difference(self, other: "StateSpaceModel") -> "StateSpaceModel":
        """Realization of self - other"""
        if (self.m, self.p) != (other.m, other.p):
            raise ModelDimensionError(
                f"cannot subtract {other.p}x{other.m} system from {self.p}x{self.m} system"
            )
        A = linalg.block_diag(self.A, other.A)
        B = np.vstack([self.B, other.B])
        C = np.hstack([self.C, -other.C])
        return StateSpaceModel(A, B, C, self.D - other.D)

    def __repr__(self) -> str:
        return f"StateSpaceModel(n={self.n}, m={self.m}, p={self.p})"


@dataclass(frozen=True)
class TimeInterval:
    """Time window [t1, t2] in seconds"""
    t1: float
    t2: float

    def __post_init__(self):
        t1, t2 = float(self.t1), float(self.t2)
        if not (np.isfinite(t1) and np.isfinite(t2)):
            raise InvalidIntervalError(f"interval endpoints must be finite, got [{t1}, {t2}]")
        if t1 < 0.0 or t1 > t2:
            raise InvalidIntervalError(f"interval must satisfy 0 <= t1 <= t2, got [{t1}, {t2}]")
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "t2", t2)

    @classmethod
    def parse(cls, text: str) -> "TimeInterval":
        try:
            t1, t2 = (float(part) for part in text.split(","))
        except ValueError as exc:
            raise InvalidIntervalError(f"interval must read 't1,t2', got {text!r}") from exc
        return cls(t1, t2)

    @property
    def length(self) -> float:
        return self.t2 - self.t1

    def endpoints(self) -> List[tuple]:
        """(time, sign) pairs whose signed exponential terms form the gramian right-hand sides"""
        return [(self.t1, 1.0), (self.t2, -1.0)]

    def __str__(self) -> str:
        return f"[{self.t1:g}, {self.t2:g}]"


@dataclass(frozen=True, eq=False)
class InverseRealization:
    """Realization (A_i, B_i, C_i, D_i) of a square system's inverse"""
    A_i: np.ndarray
    B_i: np.ndarray
    C_i: np.ndarray
    D_i: np.ndarray

    def as_model(self) -> StateSpaceModel:
        return StateSpaceModel(self.A_i, self.B_i, self.C_i, self.D_i)

    @property
    def r(self) -> int:
        return self.A_i.shape[0]


class IssueSeverity(Enum):
    """Severity levels for model diagnostics"""
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"
    CRITICAL = "critical"


class IssueCode(Enum):
    DIMENSION_MISMATCH = "dimension_mismatch"
    NON_FINITE = "non_finite"
    NOT_HURWITZ = "not_hurwitz"
    D_RANK_DEFICIENT = "d_rank_deficient"


@dataclass
class ModelIssue:
    """A diagnostic reported by validate()"""
    code: IssueCode
    severity: IssueSeverity
    message: str
    value: Any = None
    suggested_fix: Optional[str] = None


def numerical_rank(M, rtol: Optional[float] = None) -> int:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    rtol = get_settings().rank_rtol if rtol is None else rtol
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def validate(model: StateSpaceModel) -> List[ModelIssue]:
    """Report dimension mismatches, non-finite entries, instability and rank-deficient D"""
    issues: List[ModelIssue] = []

    dim_errors = model.dimension_errors()
    for message in dim_errors:
        issues.append(ModelIssue(IssueCode.DIMENSION_MISMATCH, IssueSeverity.ERROR, message))

    bad = [name for name in "ABCD" if not np.all(np.isfinite(getattr(model, name)))]
    if bad:
        issues.append(ModelIssue(
            IssueCode.NON_FINITE, IssueSeverity.ERROR,
            f"non-finite entries in {', '.join(bad)}", value=bad,
        ))

    if not dim_errors and not bad:
        if model.n > 0:
            alpha = model.spectral_abscissa()
            if alpha >= 0.0:
                issues.append(ModelIssue(
                    IssueCode.NOT_HURWITZ, IssueSeverity.WARNING,
                    f"A is not Hurwitz (spectral abscissa {alpha:.4g})", value=alpha,
                ))
        rank = numerical_rank(model.D)
        if rank < min(model.p, model.m):
            issues.append(ModelIssue(
                IssueCode.D_RANK_DEFICIENT, IssueSeverity.WARNING,
                f"D has numerical rank {rank} < {min(model.p, model.m)}", value=rank,
                suggested_fix="epsilon_regularize before inverse-based constructions",
            ))

    for issue in issues:
        logger.debug(f"validate: {issue.code.value}: {issue.message}")
    return issues


def _invert_feedthrough(D: np.ndarray) -> np.ndarray:
    if D.shape[0] != D.shape[1]:
        raise InversionError(f"inverse realization needs square D, got {D.shape}")
    if numerical_rank(D) < D.shape[0]:
        raise InversionError(f"D is singular to working tolerance (rank {numerical_rank(D)} of {D.shape[0]})")
    return linalg.inv(D)


def inverse_realization(model: StateSpaceModel) -> InverseRealization:
    """A_i = A - B D⁻¹C, B_i = -B D⁻¹, C_i = D⁻¹C, D_i = D⁻¹"""
    model.require_consistent()
    Dinv = _invert_feedthrough(model.D)
    BDinv = model.B @ Dinv
    return InverseRealization(
        A_i=model.A - BDinv @ model.C,
        B_i=-BDinv,
        C_i=Dinv @ model.C,
        D_i=Dinv,
    )


def is_minimum_phase(model: StateSpaceModel) -> bool:
    """Stable with a Hurwitz inverse realization"""
    if not model.is_stable():
        return False
    try:
        inv = inverse_realization(model)
    except InversionError:
        return False
    return inv.r == 0 or spectral_abscissa(inv.A_i) < 0.0


def _is_uniform(grid: np.ndarray) -> bool:
    if grid.size < 3:
        return False
    steps = np.diff(grid)
    return bool(np.allclose(steps, steps[0], rtol=1e-12, atol=0.0))


def impulse_response(model: StateSpaceModel, grid: Iterable[float]) -> np.ndarray:
    """
    Samples of h(t) = C e^{At} B, shape (len(grid), p, m).

    The D δ(t) term is not part of the samples.
    """
    model.require_consistent()
    grid = np.asarray(list(grid), dtype=float)
    if grid.size and grid.min() < 0.0:
        raise ValueError("impulse_response grid times must be nonnegative")
    out = np.empty((grid.size, model.p, model.m))
    if grid.size == 0:
        return out
    if model.n == 0:
        out[:] = 0.0
        return out

    if _is_uniform(grid):
        step = matrix_exponential(model.A, grid[1] - grid[0])
        state = matrix_exponential(model.A, grid[0]) @ model.B
        for k in range(grid.size):
            out[k] = model.C @ state
            state = step @ state
    else:
        for k, t in enumerate(grid):
            out[k] = model.C @ matrix_exponential(model.A, t) @ model.B
    return out


def epsilon_regularize(D, epsilon: float) -> np.ndarray:
    """εI when D is rank-deficient, else D unchanged"""
    D = np.atleast_2d(np.asarray(D, dtype=float))
    if D.shape[0] != D.shape[1]:
        raise ModelDimensionError(f"epsilon regularization needs square D, got {D.shape}")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    m = D.shape[0]
    if numerical_rank(D) < m:
        logger.info(f"D rank-deficient; using {epsilon:g}*I")
        return epsilon * np.eye(m)
    return D.copy()


def sample_frequencies(count: int = 20, low: float = 1e-2, high: float = 1e3) -> np.ndarray:
    return np.logspace(np.log10(low), np.log10(high), count)


def max_transfer_gap(first: StateSpaceModel, second: StateSpaceModel, omegas: Sequence[float]) -> float:
    return max(float(np.linalg.norm(first.transfer(1j * w) - second.transfer(1j * w))) for w in omegas)
