"""Fixed-capacity FIFO memory banks used by both branches."""

from collections import deque
from typing import Generic, Iterator, Protocol, TypeVar


class HasFrameIndex(Protocol):
    frame_index: int


EntryT = TypeVar("EntryT", bound=HasFrameIndex)


class MemoryBank(Generic[EntryT]):
    """
    FIFO of per-frame memory entries.

    Frame indices are strictly increasing; pushing beyond capacity evicts
    the oldest entry.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"Memory capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._entries: deque[EntryT] = deque(maxlen=capacity)

    def push(self, entry: EntryT) -> "MemoryBank[EntryT]":
        if self._entries and entry.frame_index <= self._entries[-1].frame_index:
            raise ValueError(
                f"Frame {entry.frame_index} pushed after frame {self._entries[-1].frame_index}"
            )
        self._entries.append(entry)
        return self

    def reset(self) -> None:
        self._entries.clear()

    @property
    def entries(self) -> list[EntryT]:
        return list(self._entries)

    @property
    def frame_indices(self) -> list[int]:
        return [entry.frame_index for entry in self._entries]

    def get(self, frame_index: int):
        for entry in self._entries:
            if entry.frame_index == frame_index:
                return entry
        return None

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[EntryT]:
        return iter(list(self._entries))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({len(self)}/{self.capacity}, frames={self.frame_indices})"
