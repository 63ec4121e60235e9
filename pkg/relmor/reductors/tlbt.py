#!/usr/bin/env python3
"""
Time-Limited Balanced Truncation
"""

import logging
from typing import Optional

from relmor.gramians import tl_gramians
from relmor.lti_model import StateSpaceModel
from relmor.reductors.base import Method, ReductionResult, ReductorConfig, check_order, finalize
from relmor.reductors.projection import contragradient_projection
from relmor.relerr_system import FullOrderCache

logger = logging.getLogger(__name__)


def tlbt(H: StateSpaceModel, cfg: ReductorConfig, *, cache: Optional[FullOrderCache] = None) -> ReductionResult:
    """Balance the time-limited gramians of H and truncate to cfg.order states"""
    H.require_consistent()
    check_order(H, cfg)
    schur = cache.schur if cache is not None and cache.matches(H, cfg.interval) else None
    gramians = tl_gramians(H, cfg.interval, schur=schur)
    for note in gramians.diagnostics:
        logger.warning(f"tlbt: {note}")

    projection = contragradient_projection(gramians.P, gramians.Q, cfg.order)
    rom = H.project(projection.V, projection.W)
    return finalize(
        Method.TLBT, H, rom, cfg, cache=cache,
        projection=projection,
        singular_values=projection.singular_values,
        diagnostics=list(gramians.diagnostics),
    )
