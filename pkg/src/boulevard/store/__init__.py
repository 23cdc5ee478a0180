from .base import RunStore
from .files import FileRunStore
from .memory import InMemoryRunStore

__all__ = ["RunStore", "FileRunStore", "InMemoryRunStore"]
