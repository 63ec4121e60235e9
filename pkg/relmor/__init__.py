"""
relmor - time-limited relative-error model order reduction.

Dense kernels, time-limited gramians, the relative-error system and its
gradient, and the TLBT / TLBST / TLIRKA / TLRHMORA reductors.
"""

from relmor.lti_model import StateSpaceModel, TimeInterval, InverseRealization
from relmor.gramians import tl_gramians, h2tau_norm
from relmor.relerr_system import build_relerr, h2tau_relative_error, h2tau_additive_error

__version__ = "0.3.0"

__all__ = [
    "StateSpaceModel",
    "TimeInterval",
    "InverseRealization",
    "tl_gramians",
    "h2tau_norm",
    "build_relerr",
    "h2tau_relative_error",
    "h2tau_additive_error",
    "__version__",
]
