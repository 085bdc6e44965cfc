"""Simulator error hierarchy.

All errors subclass ValueError so callers (and the CLI) can keep catching
ValueError the way the services always have.
"""


class SimulatorError(ValueError):
    """Base class for every error raised by the simulator."""


class ConfigurationError(SimulatorError):
    """Invalid configuration, database spec or generator parameters."""


class DimensionError(SimulatorError):
    """Array shapes do not line up."""


class NumericError(SimulatorError):
    """A loss, gradient or intermediate value became non-finite."""


class IntegrityError(SimulatorError):
    """A block, partition or encoding reference does not exist."""


class ConversionError(SimulatorError):
    """A cell value could not be converted to a number."""


class TraceParseError(SimulatorError):
    """A trace file line could not be parsed."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")
