"""Exception hierarchy shared by the library and the CLI."""


class LabelmendError(Exception):
    """Base class for all labelmend failures."""
    exit_code: int = 1


class ConfigError(LabelmendError, ValueError):
    """Invalid configuration or arguments."""
    exit_code = 2


class DataError(LabelmendError, ValueError):
    """Malformed or inconsistent dataset content."""
    exit_code = 3


class NumericError(LabelmendError, ArithmeticError):
    """Non-finite values appeared during training or scoring."""
    exit_code = 4


class ShapeError(LabelmendError, ValueError):
    """Tensor shapes violate an operation's contract."""
    exit_code = 3


class GraphError(LabelmendError, RuntimeError):
    """Reverse pass requested without a matching recorded forward pass."""
    exit_code = 4
