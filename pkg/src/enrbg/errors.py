"""Exception types shared across the pipeline, mapped to CLI exit codes."""

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_FORMAT = 3
EXIT_ENTROPY = 4


class PipelineError(Exception):
    """Base class for errors raised by this package."""

    exit_code = 1


class ValidationError(PipelineError, ValueError):
    """Invalid argument, or a configuration violating its invariants."""

    exit_code = EXIT_VALIDATION


class FormatError(PipelineError):
    """Malformed input file; the message names where parsing failed."""

    exit_code = EXIT_FORMAT


class SourceUnderrunError(PipelineError):
    """The entropy source delivered fewer bits than the consumer needs."""

    exit_code = EXIT_ENTROPY

    def __init__(self, needed: int, got: int):
        self.needed = int(needed)
        self.got = int(got)
        super().__init__(
            f"entropy source underrun: needed {self.needed} bits, "
            f"got {self.got} (short by {self.needed - self.got})"
        )


class InsufficientEntropyError(PipelineError):
    """Entropy input below the minimum assessed-entropy requirement."""

    exit_code = EXIT_ENTROPY


class ReseedRequiredError(PipelineError):
    """The generator exhausted its per-seed request budget."""

    exit_code = EXIT_ENTROPY


class RequestTooLargeError(ValidationError):
    """A single generate request exceeded the per-request bit limit."""


class ZeroVarianceError(ValidationError):
    """A statistic is undefined because the input sequence is constant."""


class InsufficientDataError(ValidationError):
    """Too few samples for the requested estimator."""
