"""
Reduction methods: TLBT, TLBST, TLIRKA and TLRHMORA
"""

from typing import Optional

from relmor.lti_model import StateSpaceModel
from relmor.reductors.base import InitStrategy, Method, ReductionResult, ReductorConfig
from relmor.reductors.initial_guess import initial_guess
from relmor.reductors.projection import ProjectionPair, biorthogonal_gram_schmidt, contragradient_projection
from relmor.reductors.tlbst import tlbst
from relmor.reductors.tlbt import tlbt
from relmor.reductors.tlirka import tlirka
from relmor.reductors.tlrhmora import tlrhmora
from relmor.relerr_system import FullOrderCache


def reduce(
    method: Method,
    H: StateSpaceModel,
    cfg: ReductorConfig,
    *,
    initial_rom: Optional[StateSpaceModel] = None,
    cache: Optional[FullOrderCache] = None,
) -> ReductionResult:
    """Dispatch to one reductor; initial_rom only applies to the iterative methods"""
    method = Method(method)
    if method is Method.TLBT:
        return tlbt(H, cfg, cache=cache)
    if method is Method.TLBST:
        return tlbst(H, cfg, cache=cache)
    if method is Method.TLIRKA:
        return tlirka(H, cfg, initial_rom=initial_rom, cache=cache)
    return tlrhmora(H, cfg, initial_rom=initial_rom, cache=cache)


__all__ = [
    "InitStrategy",
    "Method",
    "ProjectionPair",
    "ReductionResult",
    "ReductorConfig",
    "biorthogonal_gram_schmidt",
    "contragradient_projection",
    "initial_guess",
    "reduce",
    "tlbst",
    "tlbt",
    "tlirka",
    "tlrhmora",
]
