"""Exception types raised by lob_bench."""


class LobBenchError(Exception):
    """Base class for all package errors."""


class ParameterError(LobBenchError, ValueError):
    """Invalid parameter, shape, ordering or identifier."""


class IngestError(LobBenchError):
    """A quote file could not be read."""


class ChronologyError(LobBenchError):
    """Quote records are not in chronological order."""

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"Out-of-order timestamp at record index {index}")


class DegenerateInputError(LobBenchError, ValueError):
    """Input that makes a formula undefined (zero denominator, missing history)."""


class SamplingShortageError(LobBenchError):
    """A label class has fewer rows than its sampling quota."""

    def __init__(self, label: str, available: int, required: int):
        self.label = label
        self.available = available
        self.required = required
        super().__init__(
            f"Class '{label}' has {available} row(s) but the sampling plan needs {required}"
        )


class FitError(LobBenchError):
    """A learner cannot be fitted on the given training rows."""


class EnsembleError(LobBenchError):
    """An ensemble has no usable members."""


class ExperimentError(LobBenchError):
    """An experiment cannot be completed."""
