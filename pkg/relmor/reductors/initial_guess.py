#!/usr/bin/env python3
"""
Initial Guesses
Starting ROMs for the iterative reductors
"""

import logging
from typing import List, Tuple

import numpy as np
from scipy import linalg

from relmor.errors import ConfigurationError
from relmor.lti_model import StateSpaceModel
from relmor.reductors.base import InitStrategy

logger = logging.getLogger(__name__)

POLE_RANGE = (-10.0, -0.1)


def random_stable_guess(H: StateSpaceModel, r: int, seed: int) -> StateSpaceModel:
    """Diagonal Â with poles uniform in POLE_RANGE, Gaussian B̂ and Ĉ"""
    rng = np.random.default_rng(seed)
    poles = rng.uniform(*POLE_RANGE, size=r)
    B = rng.standard_normal((r, H.m))
    C = rng.standard_normal((H.p, r))
    return StateSpaceModel(np.diag(poles), B, C, H.D)


def _modal_data(H: StateSpaceModel):
    """Eigenvalues, right eigenvectors and left eigenvectors scaled to yᴴx = 1"""
    eigvals, vl, vr = linalg.eig(H.A, left=True, right=True)
    scale = np.einsum("ij,ij->j", vl.conj(), vr)
    vl = vl / scale.conj()
    return eigvals, vl, vr


def _dominance(H: StateSpaceModel, eigvals, vl, vr) -> np.ndarray:
    out_dirs = H.C @ vr
    in_dirs = vl.conj().T @ H.B
    scores = np.empty(eigvals.size)
    for i, lam in enumerate(eigvals):
        residue = np.outer(out_dirs[:, i], in_dirs[i])
        scores[i] = np.linalg.norm(residue) / max(abs(lam.real), np.finfo(float).tiny)
    return scores


def _real_block(lam: complex, c: np.ndarray, beta: np.ndarray, paired: bool) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not paired:
        return np.array([[lam.real]]), beta.real[None, :], c.real[:, None] * (2.0 if abs(lam.imag) > 0 else 1.0)
    a, b = lam.real, lam.imag
    A2 = np.array([[a, -b], [b, a]])
    B2 = np.vstack([beta.real, beta.imag])
    C2 = np.column_stack([2.0 * c.real, -2.0 * c.imag])
    return A2, B2, C2


def dominant_modes_guess(H: StateSpaceModel, r: int) -> StateSpaceModel:
    """
    Keep the r modes with the largest ‖(C x)(yᴴ B)‖ / |Re λ|.

    Conjugate pairs enter together as a real 2x2 block. If a pair would
    overflow the last slot, the next real mode is taken instead, and failing
    that the real part of the pair.
    """
    eigvals, vl, vr = _modal_data(H)
    scores = _dominance(H, eigvals, vl, vr)
    out_dirs = H.C @ vr
    in_dirs = vl.conj().T @ H.B
    tol = 1e-10 * max(np.max(np.abs(eigvals)), 1.0)

    order = [i for i in np.argsort(-scores, kind="stable") if eigvals[i].imag >= -tol]
    blocks: List[Tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    filled = 0
    for pos, i in enumerate(order):
        if filled == r:
            break
        lam = eigvals[i]
        complex_mode = abs(lam.imag) > tol
        if not complex_mode:
            blocks.append(_real_block(complex(lam.real, 0.0), out_dirs[:, i], in_dirs[i], paired=False))
            filled += 1
        elif r - filled >= 2:
            blocks.append(_real_block(lam, out_dirs[:, i], in_dirs[i], paired=True))
            filled += 2
        else:
            real_rest = [j for j in order[pos + 1:] if abs(eigvals[j].imag) <= tol]
            if real_rest:
                j = real_rest[0]
                blocks.append(_real_block(complex(eigvals[j].real, 0.0), out_dirs[:, j], in_dirs[j], paired=False))
            else:
                blocks.append(_real_block(lam, out_dirs[:, i], in_dirs[i], paired=False))
            filled += 1

    A = linalg.block_diag(*[blk[0] for blk in blocks])
    B = np.vstack([blk[1] for blk in blocks])
    C = np.hstack([blk[2] for blk in blocks])
    logger.debug(f"dominant-mode guess keeps poles {np.round(np.linalg.eigvals(A), 6)}")
    return StateSpaceModel(A, B, C, H.D)


def initial_guess(H: StateSpaceModel, r: int, strategy: InitStrategy, seed: int = 0) -> StateSpaceModel:
    if not 1 <= r <= H.n:
        raise ConfigurationError(f"initial guess order {r} outside 1..{H.n}")
    strategy = InitStrategy(strategy)
    if strategy is InitStrategy.RANDOM_STABLE:
        return random_stable_guess(H, r, seed)
    return dominant_modes_guess(H, r)
