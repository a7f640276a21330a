# services/errors.py
"""Exception types shared by the simulation services."""


class SimulationError(Exception):
    """Base class for every error raised by the simulator."""


class ConfigurationError(SimulationError, ValueError):
    """Invalid parameter or configuration entry."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.message = message
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"{key}: "
        super().__init__(prefix + message)


class LogicError(SimulationError):
    """Operation applied to a field in the wrong domain or with the wrong shape."""


class NumericError(SimulationError, ArithmeticError):
    """NaN or overflow in a numerical kernel."""

    def __init__(self, message, where=None):
        self.where = where
        if where is not None:
            message = f"{message} (at {where})"
        super().__init__(message)


class StatisticsError(SimulationError):
    """Estimator evaluated with too few samples."""


class DomainError(SimulationError, ValueError):
    """Argument outside the domain of a statistical law."""


class BandwidthError(SimulationError):
    """Bandwidth requested from a table with no emission."""
