from abc import ABCMeta, abstractmethod
from pathlib import Path
from typing import Any, Union

PathLike = Union[str, Path]


class IRepository(metaclass=ABCMeta):
    """Class representing the file repository interface."""

    @abstractmethod
    def load(self, path: PathLike, **kwargs: Any) -> Any:
        """Read one entity from a file and return the validated instance."""
        raise NotImplementedError

    @abstractmethod
    def save(self, obj: Any, path: PathLike, **kwargs: Any) -> Path:
        """Write an entity and return the path of the main file written."""
        raise NotImplementedError
