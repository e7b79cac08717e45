"""Exception hierarchy; the CLI maps these onto exit codes."""


class SpectralGateError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SpectralGateError, ValueError):
    """Invalid parameters or configuration (CLI exit code 2)."""


class DimensionError(ConfigError):
    """Point or matrix shape does not match the object it is applied to."""


class NumericalError(SpectralGateError, ArithmeticError):
    """A computation failed numerically (CLI exit code 3)."""


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class HypothesisError(NumericalError):
    """A sampled input violates a hypothesis the operation relies on."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node
