"""Exception types shared across the package.

The CLI maps these onto process exit codes, so algorithm and oracle code
should raise the most specific type that applies instead of bare
ValueError/RuntimeError.
"""


class RsgBenchError(Exception):
    """Base class for all package errors."""


class InputError(RsgBenchError, ValueError):
    """A caller-supplied value is out of range or inconsistent."""


class DimensionMismatchError(InputError):
    """A point does not match the problem dimension."""


class DegenerateInputError(InputError):
    """Inputs are formally valid but degenerate (e.g. coincident points)."""


class CapabilityError(RsgBenchError):
    """The requested operation needs data the object does not carry
    (e.g. a true gradient on a value-only problem)."""


class ValidityError(InputError):
    """A documented precondition of a formula or sampler is violated."""


class ConfigError(RsgBenchError, ValueError):
    """An experiment configuration failed to parse or validate."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DivergenceError(RsgBenchError, RuntimeError):
    """An iterate became non-finite during a run."""
