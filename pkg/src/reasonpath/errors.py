"""Exception types shared across the package.

The CLI maps these onto exit codes: PathParseError and usage problems
exit 1, DataError exits 2, BackendError exits 3.
"""


class ReasonPathError(Exception):
    """Base class for all errors raised by this package."""


class DataError(ReasonPathError):
    """Bad, missing, or inconsistent input data."""


class BackendError(ReasonPathError):
    """Failure while talking to a model backend."""


class PathParseError(ReasonPathError):
    """A reasoning-path string could not be parsed."""


class EmptyText(DataError):
    """No words survived tokenization."""


class EmptyImage(DataError):
    """An image with zero pixels was supplied."""


class ImageTooSmall(DataError):
    """The image is too small for edge detection."""


class TooFewSamples(DataError):
    """Not enough vectors for the requested statistic."""


class MissingStats(DataError):
    """Normalization statistics are required but absent."""


class EmptyInput(DataError):
    """An operation received an empty collection."""


class EmptyDataset(DataError):
    """A dataset file contained no records."""


class EmptyLibrary(DataError):
    """Retrieval was attempted against a library with no entries."""


class EmptyResults(DataError):
    """Metrics were requested over an empty result set."""


class DimensionMismatch(DataError):
    """Vector dimensions disagree between query and stored data."""


class MissingGroupKey(DataError):
    """A result lacks the grouping key needed for grouped accuracy."""


class SchemaVersionMismatch(DataError):
    """A persisted file carries an unsupported schema version."""


class StorageError(DataError):
    """A persisted file could not be read or written."""


class ExtractionFailed(DataError):
    """No parseable answer was found in the final answer step.

    Carries the transcript produced so far (when available) so batch
    runners can score the record as incorrect instead of aborting.
    """

    def __init__(self, message, transcript=None):
        super().__init__(message)
        self.transcript = transcript


class BackendUnavailable(BackendError):
    """The backend could not be reached or kept failing after retries."""


class MalformedResponse(BackendError):
    """The backend answered with a payload we cannot interpret."""
