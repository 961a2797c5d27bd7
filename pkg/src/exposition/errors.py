"""Exception hierarchy for the whole package."""


class ExpositionError(Exception):
    """Base class for every error raised by this package."""


class ParseError(ExpositionError):
    """CSV input is structurally malformed (ragged rows, unreadable stream)."""


class MissingValueError(ExpositionError):
    """An empty cell was found; missing values are rejected at load time."""


class SchemaError(ExpositionError):
    """Column names, kinds, or instance shape do not match the schema."""


class LevelError(ExpositionError):
    """A categorical value is not one of the column's known levels."""


class ParameterError(ExpositionError):
    """An operation parameter is missing, out of range, or inconsistent.

    ``field`` names the offending parameter when known, so callers such as
    the HTTP service can report field-level messages.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class RangeError(ExpositionError):
    """A classification score fell outside [0, 1]."""


class NonDeterministicPredictorError(ExpositionError):
    """The predictor returned different scores for identical input rows."""


class PredictorContractError(ExpositionError):
    """The predictor output is not one finite score per input row."""


class DegenerateTargetError(ExpositionError):
    """The target has a single class, so rank-based metrics are undefined."""


class SingularError(ExpositionError):
    """The design matrix is rank deficient beyond the ridge jitter."""


class ProtocolError(ExpositionError):
    """An external predictor broke the line protocol.

    ``stderr`` carries whatever the subprocess wrote to its error stream.
    """

    def __init__(self, message: str, stderr: str = ""):
        super().__init__(message)
        self.stderr = stderr


class ExternalTimeoutError(ExpositionError):
    """An external predictor did not answer within its per-call timeout."""
