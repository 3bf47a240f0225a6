"""Exception hierarchy shared by the library and the command line."""


class TaglabError(Exception):
    """Base class for errors that map onto a command-line exit status."""

    exit_code: int = 1


class UsageError(TaglabError):
    """Inconsistent or missing command-line options."""

    exit_code = 2


class StorageError(TaglabError):
    """A path that should exist does not, or cannot be read or written."""

    exit_code = 3


class CorpusFormatError(TaglabError, ValueError):
    """A corpus or split file does not follow the vertical format."""

    exit_code = 4

    def __init__(self, message: str, line_number: int | None = None) -> None:
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ModelFormatError(TaglabError):
    """A model container is corrupt, of another kind, or of another version."""

    exit_code = 4


class NumericError(TaglabError, ValueError):
    """Non-finite scores, loss or gradient."""

    exit_code = 5
