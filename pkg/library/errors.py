"""
Exception hierarchy.

All errors raised by the library derive from PolySSMError so callers (the CLI
in particular) can map them to exit codes. Each subclass also derives from the
closest builtin so plain ``except ValueError`` keeps working.
"""


class PolySSMError(Exception):
    """Base class for every library error."""


class DimensionError(PolySSMError, ValueError):
    """Operand shapes are incompatible."""


class DomainError(PolySSMError, ValueError):
    """An argument lies outside the domain of a mathematical function."""


class NumericError(PolySSMError, ArithmeticError):
    """Non-finite values, diverging losses or non-deterministic objectives."""


class DataError(PolySSMError, ValueError):
    """Malformed input data, impossible splits or generator preconditions."""


class ConfigError(PolySSMError, ValueError):
    """Invalid or inconsistent configuration."""


class CheckpointError(PolySSMError, ValueError):
    """Unreadable or inconsistent checkpoint container."""
