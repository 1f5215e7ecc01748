"""Cluster-addressed simulated storage.

Storage is a flat array of fixed-size clusters. Files own disjoint cluster
sets; deleting a file releases ownership but leaves the bytes in place, which
is exactly why deletion alone is recoverable and the overwrite/re-delete
actions exist. The tail of the array is a secure region reserved for
partitioned sensitive data.

``scan`` is the forensic ground truth: an exhaustive substring search over
the raw bytes that ignores the file table entirely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

DEFAULT_CLUSTER_SIZE = 256
DEFAULT_CLUSTER_COUNT = 1024
DEFAULT_SECURE_CLUSTERS = 128


class StorageError(Exception):
    pass


@dataclass
class FileEntry:
    clusters: list[int]
    length: int
    sensitive: bool = False
    encrypted: bool = False


@dataclass
class SimStorage:
    cluster_count: int = DEFAULT_CLUSTER_COUNT
    cluster_size: int = DEFAULT_CLUSTER_SIZE
    secure_clusters: int = DEFAULT_SECURE_CLUSTERS
    data: bytearray = field(init=False)
    files: dict[str, FileEntry] = field(init=False, default_factory=dict)
    #: Clusters vacated by deletion or relocation; bytes intact until overwritten.
    freed: set[int] = field(init=False, default_factory=set)

    def __post_init__(self):
        if self.secure_clusters >= self.cluster_count:
            raise StorageError("secure region cannot cover all of storage")
        self.data = bytearray(self.cluster_count * self.cluster_size)

    @property
    def secure_start(self) -> int:
        return self.cluster_count - self.secure_clusters

    def in_secure_region(self, cluster: int) -> bool:
        return cluster >= self.secure_start

    def live_clusters(self) -> set[int]:
        owned: set[int] = set()
        for entry in self.files.values():
            owned.update(entry.clusters)
        return owned

    def clusters_needed(self, nbytes: int) -> int:
        return max(1, -(-nbytes // self.cluster_size))

    def _available(self, secure: bool) -> list[int]:
        live = self.live_clusters()
        if secure:
            span = range(self.secure_start, self.cluster_count)
        else:
            span = range(0, self.secure_start)
        return [c for c in span if c not in live]

    def free_secure_clusters(self) -> int:
        return len(self._available(secure=True))

    def _allocate(self, count: int, secure: bool) -> list[int]:
        available = self._available(secure)
        if len(available) < count:
            region = "secure region" if secure else "storage"
            raise StorageError(f"{region} full: need {count} clusters, {len(available)} free")
        chosen = available[:count]
        self.freed.difference_update(chosen)
        return chosen

    def _write_clusters(self, clusters: list[int], content: bytes) -> None:
        for i, cluster in enumerate(clusters):
            chunk = content[i * self.cluster_size : (i + 1) * self.cluster_size]
            start = cluster * self.cluster_size
            self.data[start : start + len(chunk)] = chunk

    def write_file(self, name: str, content: bytes, sensitive: bool = False, secure: bool = False) -> FileEntry:
        if name in self.files:
            raise StorageError(f"file exists: {name}")
        if not content:
            raise StorageError(f"refusing empty file: {name}")
        clusters = self._allocate(self.clusters_needed(len(content)), secure)
        self._write_clusters(clusters, content)
        entry = FileEntry(clusters, len(content), sensitive=sensitive)
        self.files[name] = entry
        return entry

    def read_file(self, name: str) -> bytes:
        entry = self._entry(name)
        out = bytearray()
        for cluster in entry.clusters:
            start = cluster * self.cluster_size
            out += self.data[start : start + self.cluster_size]
        return bytes(out[: entry.length])

    def _entry(self, name: str) -> FileEntry:
        if name not in self.files:
            raise StorageError(f"no such file: {name}")
        return self.files[name]

    def delete_file(self, name: str) -> list[int]:
        """Release the file's clusters without touching their bytes."""
        entry = self._entry(name)
        del self.files[name]
        self.freed.update(entry.clusters)
        return entry.clusters

    def replace_content(self, name: str, content: bytes) -> None:
        """Rewrite a file in place, growing or shrinking its cluster set.

        Existing clusters are reused in order (every original byte is
        overwritten when the content is at least as long as before); shrink
        releases the tail clusters into the freed set.
        """
        entry = self._entry(name)
        needed = self.clusters_needed(len(content))
        clusters = list(entry.clusters)
        if needed > len(clusters):
            secure = self.in_secure_region(clusters[0])
            clusters += self._allocate(needed - len(clusters), secure)
        elif needed < len(clusters):
            tail = clusters[needed:]
            clusters = clusters[:needed]
            self.freed.update(tail)
        entry.clusters = clusters
        entry.length = len(content)
        self._write_clusters(clusters, content)

    def move_to_secure(self, name: str) -> tuple[list[int], list[int]]:
        """Relocate a file into the secure region; the vacated clusters keep
        their bytes and join the freed set. Returns (old, new) clusters."""
        entry = self._entry(name)
        content = self.read_file(name)
        old = list(entry.clusters)
        new = self._allocate(self.clusters_needed(len(content)), secure=True)
        self._write_clusters(new, content)
        entry.clusters = new
        self.freed.update(old)
        return old, new

    def overwrite_freed(self, pattern: int) -> int:
        """Fill every freed cluster (and only those) with the pattern byte."""
        if not 0 <= pattern <= 255:
            raise StorageError(f"pattern byte out of range: {pattern}")
        fill = bytes([pattern]) * self.cluster_size
        for cluster in sorted(self.freed):
            start = cluster * self.cluster_size
            self.data[start : start + self.cluster_size] = fill
        return len(self.freed)

    def scan(self, needle: bytes) -> list[tuple[int, int]]:
        """Exhaustive raw-byte search, file table ignored. Returns every
        (cluster, offset) where the needle starts, including overlaps."""
        if not needle:
            raise StorageError("empty needle")
        hits = []
        pos = self.data.find(needle)
        while pos != -1:
            hits.append((pos // self.cluster_size, pos % self.cluster_size))
            pos = self.data.find(needle, pos + 1)
        return hits

    def snapshot(self) -> bytes:
        return bytes(self.data)
