from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Union

from taglab.errors import StorageError


class Storage(ABC):
    """
    Abstract base class for reading and writing project artifacts.

    Subclasses implement ``save`` and ``load`` for one kind of artifact; the
    static helpers give them consistent path handling and error messages.

    Notes
    -----
    - This class cannot be instantiated directly; it is meant to be subclassed.
    - The static helper methods may be reused independently of subclass implementations.
    """

    @abstractmethod
    def save(self, *args, **kwargs) -> Path:
        pass

    @abstractmethod
    def load(self, *args, **kwargs) -> Any:
        pass

    @staticmethod
    def resolve_path(path: Union[Path, str]) -> Path:
        """
        Convert a path-like input into a pathlib.Path instance.

        Examples
        --------
        >>> resolve_path("some/file.txt")
        PosixPath('some/file.txt')
        """
        if isinstance(path, str):
            return Path(path)
        return path

    @staticmethod
    def prepare_target(path: Path) -> Path:
        """Create the parent directory of a file about to be written."""
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise StorageError(f"Cannot create directory {path.parent}: {e}") from e
        return path

    @staticmethod
    def validate_directory(directory: Path) -> Path:
        """
        Validate that the provided Path points to an existing directory.

        Raises
        ------
        StorageError
            If the path does not exist or is not a directory.
        """
        if not directory.exists():
            raise StorageError(f"Provided directory does not exist: {directory}")

        if not directory.is_dir():
            raise StorageError(f"Provided path is not a directory: {directory}")

        return directory

    @staticmethod
    def validate_file(file_path: Path) -> Path:
        """Validate that the provided Path exists and refers to a regular file.

        Raises
        ------
        StorageError
            If the path does not exist or if it exists but is not a file.
        """
        if not file_path.exists():
            raise StorageError(f"Provided file does not exist: {file_path}")

        if not file_path.is_file():
            raise StorageError(f"Provided path is not a file: {file_path}")

        return file_path
