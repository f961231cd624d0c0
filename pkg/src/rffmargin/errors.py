"""Exception types shared across the package."""


class RffMarginError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(RffMarginError, ValueError):
    """An argument violates a documented precondition."""


class NumericalDegeneracyError(RffMarginError, ArithmeticError):
    """A linear-algebra step failed even after jitter stabilization."""


class DegenerateSliceError(RffMarginError, RuntimeError):
    """Stick breaking exceeded its iteration cap (pathologically small slice)."""


class DataError(RffMarginError, ValueError):
    """Input files or datasets are malformed or inconsistent."""


class SweepError(RffMarginError, RuntimeError):
    """A sampling sweep aborted; carries context about where it failed."""

    def __init__(self, sweep_index, step, cause, diagnostics=None):
        self.sweep_index = sweep_index
        self.step = step
        self.cause = cause
        self.diagnostics = diagnostics or {}
        super().__init__(f"sweep {sweep_index}, step '{step}': {cause}")
