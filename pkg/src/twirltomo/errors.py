"""Exception types shared across the package."""


class TwirltomoError(Exception):
    """Base class for package errors."""


class DimensionMismatchError(TwirltomoError, ValueError):
    """Operands act on different numbers of qubits or incompatible dims."""


class CapacityError(TwirltomoError, RuntimeError):
    """A dense computation was requested beyond the configured size cap."""


class ConfigError(TwirltomoError, ValueError):
    """A protocol configuration violates its validity conditions."""


class SpecValidationError(TwirltomoError, ValueError):
    """A channel-spec document failed schema validation.

    ``field`` holds a dotted path into the document naming the offender.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
