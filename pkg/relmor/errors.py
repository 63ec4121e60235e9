"""Exception hierarchy shared by every relmor module."""

from typing import Any, Optional, Sequence


class RelmorError(Exception):
    """Base class for all relmor failures"""


class SchurConvergenceError(RelmorError, ArithmeticError):
    def __init__(self, message: str, max_iterations: int):
        super().__init__(f"{message} (iteration budget {max_iterations} exhausted)")
        self.max_iterations = max_iterations


class SpectrumConflictError(RelmorError, ArithmeticError):
    def __init__(self, message: str, separation: float):
        super().__init__(f"{message} (separation estimate {separation:.3e})")
        self.separation = separation


class ResidualToleranceError(RelmorError, ArithmeticError):
    def __init__(self, equation: str, residual: float, tolerance: float):
        super().__init__(f"{equation}: relative residual {residual:.3e} exceeds {tolerance:.1e}")
        self.equation = equation
        self.residual = residual
        self.tolerance = tolerance


class NoStabilizingSolutionError(RelmorError, ArithmeticError):
    pass


class ExponentialOverflowError(RelmorError, OverflowError):
    def __init__(self, norm_at: float):
        super().__init__(f"matrix exponential overflows for ||A t|| = {norm_at:.3e}")
        self.norm_at = norm_at


class ModelDimensionError(RelmorError, ValueError):
    pass


class InvalidIntervalError(RelmorError, ValueError):
    pass


class InversionError(RelmorError, ValueError):
    pass


class UnsupportedModelError(RelmorError, ValueError):
    pass


class NormDualityError(RelmorError, ArithmeticError):
    def __init__(self, p_form: float, q_form: float, tolerance: float):
        super().__init__(
            f"P-form {p_form:.12e} and Q-form {q_form:.12e} disagree beyond {tolerance:.1e}"
        )
        self.p_form = p_form
        self.q_form = q_form


class NotMinimumPhaseError(RelmorError, ValueError):
    pass


class SpectralFactorError(RelmorError, ArithmeticError):
    def __init__(self, message: str, spectra: Optional[Sequence[complex]] = None):
        super().__init__(message)
        self.spectra = list(spectra) if spectra is not None else []


class ProjectionError(RelmorError, ValueError):
    pass


class RankError(ProjectionError):
    def __init__(self, requested: int, rank: int):
        super().__init__(f"requested order {requested} exceeds numerical rank {rank}")
        self.requested = requested
        self.rank = rank


class BiorthogonalBreakdownError(RelmorError, ArithmeticError):
    def __init__(self, column: int, pivot: float):
        super().__init__(f"bi-orthogonal Gram-Schmidt breakdown at column {column} (pivot {pivot:.3e})")
        self.column = column
        self.pivot = pivot


class IterationError(RelmorError, ArithmeticError):
    def __init__(self, message: str, history: Optional[Sequence[Any]] = None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class ModelFormatError(RelmorError, ValueError):
    def __init__(self, source: str, line: Optional[int], message: str):
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")
        self.source = source
        self.line = line


class ConfigurationError(RelmorError, ValueError):
    pass
