"""Exception hierarchy shared across the package."""


class KgsumError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(KgsumError):
    """A line of N-Triples input could not be parsed."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class LoadError(KgsumError):
    """A corpus file is missing or unreadable."""


class IntegrityError(KgsumError):
    """Loaded data violates a documented invariant (e.g. a gold triple
    that does not appear in its entity description)."""


class DimensionError(KgsumError):
    """Operands passed to a numeric operation have incompatible shapes."""


class ContractError(KgsumError):
    """A caller violated an operation's precondition."""


class TrainingError(KgsumError):
    """Optimization failed (non-finite loss or gradient)."""


class ConfigError(KgsumError):
    """An invalid configuration value or unknown variant name."""


class LookupError_(KgsumError):
    """An entity or term was not found; carries close matches if any."""

    def __init__(self, message: str, candidates: list[str] | None = None):
        if candidates:
            message += " (close matches: " + ", ".join(candidates) + ")"
        super().__init__(message)
        self.candidates = candidates or []
