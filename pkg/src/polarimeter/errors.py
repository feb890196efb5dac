"""Exception types shared across the pipeline stages."""


class PolarimeterError(Exception):
    """Base class for all pipeline errors."""


class ParseError(PolarimeterError):
    """A JSONL line could not be parsed (strict ingestion mode)."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class EmptyGraphError(PolarimeterError):
    """Operation requires a graph with at least one node."""


class DegenerateGraphError(PolarimeterError):
    """Pruning left too few nodes for the discussion to be scored."""


class UnassignedNodeError(PolarimeterError):
    """A graph node is missing from the community assignment."""


class SingleCommunityError(PolarimeterError):
    """Clustering produced fewer than two communities."""


class EmptyCorpusError(PolarimeterError):
    """Training corpus contains no examples."""


class DegenerateCorpusError(PolarimeterError):
    """All corpus documents are empty after tokenization."""


class EmptySideError(PolarimeterError):
    """A principal community has no usable text."""


class CorruptModelError(PolarimeterError):
    """Model file is truncated or fails integrity checks."""


class ModelVersionError(PolarimeterError):
    """Model file was written by an incompatible format version."""


class NoSeedsError(PolarimeterError):
    """No user was predicted above the characteristic-user threshold."""

    def __init__(self, message: str = "no characteristic users found",
                 n_plus: int = 0, n_minus: int = 0):
        super().__init__(message)
        self.n_plus = n_plus
        self.n_minus = n_minus


class OneSidedSeedsError(NoSeedsError):
    """Characteristic users were found for only one community."""


class NotApplicableError(PolarimeterError):
    """The applicability check failed; the discussion cannot be scored."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class EmptyFieldError(PolarimeterError):
    """Polarity field has no nodes."""


class OneClassOnlyError(PolarimeterError):
    """AUC requires at least one score from each ground-truth class."""


class InvalidParamsError(PolarimeterError):
    """Configuration or generator parameters are out of range."""


class MissingArtifactError(PolarimeterError):
    """A required stage artifact file does not exist.

    The message names the subcommand that produces it.
    """
