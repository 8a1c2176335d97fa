"""In-memory filesystem standing in for the payload's non-volatile storage.

Every mutation bumps a per-path write counter, which lets digest consumers
cache by (path, counter) instead of re-hashing unchanged content on the
60-second integrity cadence.
"""
from .errors import StorageFullError


class SimFilesystem:
    def __init__(self, capacity_bytes: int | None = None):
        self.capacity_bytes = capacity_bytes
        self._files: dict[str, bytearray] = {}
        self._writes: dict[str, int] = {}
        self._used = 0

    def _bump(self, path: str) -> None:
        self._writes[path] = self._writes.get(path, 0) + 1

    def write(self, path: str, content: bytes) -> None:
        new_used = self._used - len(self._files.get(path, b"")) + len(content)
        if self.capacity_bytes is not None and new_used > self.capacity_bytes:
            raise StorageFullError(f"write of {len(content)} bytes exceeds capacity")
        self._files[path] = bytearray(content)
        self._used = new_used
        self._bump(path)

    def read(self, path: str) -> bytes:
        if path not in self._files:
            raise FileNotFoundError(path)
        return bytes(self._files[path])

    def exists(self, path: str) -> bool:
        return path in self._files

    def delete(self, path: str) -> None:
        if path not in self._files:
            raise FileNotFoundError(path)
        self._used -= len(self._files.pop(path))
        self._bump(path)

    def size(self, path: str) -> int:
        if path not in self._files:
            raise FileNotFoundError(path)
        return len(self._files[path])

    def flip_bit(self, path: str, byte_offset: int, bit_index: int) -> None:
        buf = self._files.get(path)
        if buf is None:
            raise FileNotFoundError(path)
        if not 0 <= byte_offset < len(buf):
            raise IndexError(f"offset {byte_offset} outside {path}")
        if not 0 <= bit_index <= 7:
            raise IndexError(f"bit index {bit_index} out of range")
        buf[byte_offset] ^= 1 << bit_index
        self._bump(path)

    def paths(self) -> list[str]:
        return sorted(self._files)

    def write_count(self, path: str) -> int:
        return self._writes.get(path, 0)

    @property
    def used_bytes(self) -> int:
        return self._used
