"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, NumericsError
(and subclasses) -> 3. Everything else is a plain bug.
"""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """An experiment configuration is invalid."""


class NumericsError(RuntimeError):
    """A numerical routine failed to meet its own tolerance contract."""


class ConvergenceError(NumericsError):
    """An iteration hit its cap before reaching the requested tolerance."""


class SchemaError(ValueError):
    """An artifact file does not match its documented schema."""
