"""Exception types shared across the toolkit.

Every error raised on a contract violation derives from :class:`XlexError`
so callers (and the CLI) can map failures to exit codes without string
matching.
"""


class XlexError(Exception):
    """Base class for all toolkit errors."""


class EmptyVocabularyError(XlexError):
    """A corpus produced no vocabulary entries under the given min count."""


class UnknownWordError(XlexError):
    """A word was looked up that is not in the vocabulary."""

    def __init__(self, word: str):
        super().__init__(f"unknown word: {word!r}")
        self.word = word


class FormatError(XlexError):
    """A text file (embedding, dataset, transform) violates its format."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class DuplicateEntryError(FormatError):
    """The same word appears twice in an embedding or vocabulary file."""


class DegenerateVectorError(XlexError):
    """A vector with zero norm cannot be length-normalized."""

    def __init__(self, word: str):
        super().__init__(f"zero-norm vector cannot be normalized: {word!r}")
        self.word = word


class ParameterError(XlexError):
    """A numeric parameter is outside its valid range."""


class RepresentationUnavailableError(XlexError):
    """No subword units could be extracted for an out-of-vocabulary word."""


class UndefinedCorrelationError(XlexError):
    """Spearman correlation is undefined (too few points or zero variance)."""


class DimensionMismatchError(XlexError):
    """Two embedding spaces have incompatible dimensionality."""

    def __init__(self, dim_a: int, dim_b: int):
        super().__init__(f"dimension mismatch {dim_a} vs {dim_b}")
        self.dims = (dim_a, dim_b)
