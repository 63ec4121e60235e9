"""
Model packages, experiment grids, reports and the command line
"""

from relmor.harness.experiment import (
    ExperimentConfig,
    ReductionReport,
    ReportEntry,
    emit_impulse_error,
    run_experiment,
)
from relmor.harness.model_package import ModelPackage, convert_benchmark, load_model, save_model_package

__all__ = [
    "ExperimentConfig",
    "ModelPackage",
    "ReductionReport",
    "ReportEntry",
    "convert_benchmark",
    "emit_impulse_error",
    "load_model",
    "run_experiment",
    "save_model_package",
]
