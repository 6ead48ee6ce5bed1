"""Exception hierarchy shared across the package."""


class FedAdaptError(Exception):
    """Base class for all package errors."""


class ShapeError(FedAdaptError):
    """Operand dimensions do not conform."""


class ParseError(FedAdaptError):
    """Malformed text input; carries the offending line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class FormatError(FedAdaptError):
    """Corrupt or truncated binary file; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"at byte {offset}: {message}")
        self.offset = offset


class ConfigError(FedAdaptError):
    """Invalid configuration value or unknown key."""


class ProtocolError(FedAdaptError):
    """An operation was invoked outside its protocol contract."""


class DomainError(FedAdaptError):
    """Numeric argument outside the mathematical domain of the operation."""


class MissingItemError(FedAdaptError):
    """Item id not present in the encoder's table or manifest."""


class InsufficientCandidatesError(FedAdaptError):
    """Not enough non-positive items to sample the requested negatives."""


class DivergenceError(FedAdaptError):
    """Training produced a non-finite loss; carries the epoch index."""

    def __init__(self, message: str, epoch: int):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


class NumericError(FedAdaptError):
    """A numeric evaluation produced a non-finite value."""
