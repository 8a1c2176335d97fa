"""File integrity monitoring: MD5 manifest over live+backup copies, periodic
verification, restoration from the first intact copy, unrecoverable logging.

The manifest file protects itself: it is registered as a normal entry with
its own digest line zeroed out (a file cannot contain its own hash), and the
true digest of the written bytes is held as that entry's stored digest.
"""
import hashlib
from dataclasses import dataclass, field
from datetime import datetime

from .errors import DuplicateEntryError, PayloadSimError, RejectedUploadError
from .simfs import SimFilesystem

MANIFEST_NAME = "manifest"
_PLACEHOLDER = "0" * 32


def compute_digest(content: bytes) -> str:
    """Lowercase-hex MD5; error detection per the integrity design, not security."""
    return hashlib.md5(content).hexdigest()


@dataclass(frozen=True)
class ManifestEntry:
    logical_name: str
    copies: tuple
    stored_digest: str

    def __post_init__(self):
        if len(self.copies) < 2:
            raise PayloadSimError("manifest entries need at least 2 copies")
        if len(set(self.copies)) != len(self.copies):
            raise PayloadSimError("copy paths must be distinct")


@dataclass
class ScanReport:
    scan_time: datetime
    files_checked: int = 0
    copies_corrupted: int = 0
    copies_restored: int = 0
    unrecoverable: list = field(default_factory=list)


class IntegrityMonitor:
    def __init__(self, fs: SimFilesystem, manifest_path: str = "/sys/manifest.tsv",
                 manifest_backups: int = 3):
        self.fs = fs
        self.manifest_path = manifest_path
        self.entries: dict[str, ManifestEntry] = {}
        self.unrecoverable: set[str] = set()
        self._digest_cache: dict[str, tuple[int, str]] = {}
        self._manifest_copies = (manifest_path,) + tuple(
            f"{manifest_path}.bak{i}" for i in range(1, manifest_backups + 1))
        self._persist_manifest()

    # -- digests ------------------------------------------------------------

    def _digest_of(self, path: str) -> str | None:
        """Digest of a copy, or None when the file is missing."""
        if not self.fs.exists(path):
            return None
        count = self.fs.write_count(path)
        cached = self._digest_cache.get(path)
        if cached is not None and cached[0] == count:
            return cached[1]
        digest = compute_digest(self.fs.read(path))
        self._digest_cache[path] = (count, digest)
        return digest

    # -- manifest persistence -------------------------------------------------

    def _serialize(self) -> bytes:
        lines = []
        for name in sorted(self.entries):
            e = self.entries[name]
            digest = _PLACEHOLDER if name == MANIFEST_NAME else e.stored_digest
            lines.append("\t".join([name, digest, *e.copies]))
        return ("\n".join(lines) + "\n").encode()

    def _persist_manifest(self) -> None:
        placeholder = ManifestEntry(MANIFEST_NAME, self._manifest_copies, _PLACEHOLDER)
        self.entries[MANIFEST_NAME] = placeholder
        body = self._serialize()
        self.entries[MANIFEST_NAME] = ManifestEntry(
            MANIFEST_NAME, self._manifest_copies, compute_digest(body))
        for path in self._manifest_copies:
            self.fs.write(path, body)

    # -- operations -----------------------------------------------------------

    def register(self, logical_name: str, content: bytes, n_backups: int = 1,
                 path_base: str | None = None) -> ManifestEntry:
        """Write 1 live + n_backups copies and record the digest."""
        if logical_name in self.entries:
            raise DuplicateEntryError(f"{logical_name!r} already registered")
        if n_backups < 1:
            raise PayloadSimError("n_backups must be >= 1")
        base = path_base or f"/data/{logical_name}"
        copies = (base,) + tuple(f"{base}.bak{i}" for i in range(1, n_backups + 1))
        for path in copies:
            self.fs.write(path, content)
        entry = ManifestEntry(logical_name, copies, compute_digest(content))
        self.entries[logical_name] = entry
        self._persist_manifest()
        return entry

    def reregister(self, logical_name: str, content: bytes) -> ManifestEntry:
        """Digest rotation for a legitimate update of a protected file."""
        old = self.entries[logical_name]
        for path in old.copies:
            self.fs.write(path, content)
        entry = ManifestEntry(logical_name, old.copies, compute_digest(content))
        self.entries[logical_name] = entry
        self.unrecoverable.discard(logical_name)
        if logical_name != MANIFEST_NAME:
            self._persist_manifest()
        return entry

    def unregister(self, logical_name: str, delete_files: bool = True) -> None:
        entry = self.entries.pop(logical_name)
        self.unrecoverable.discard(logical_name)
        if delete_files:
            for path in entry.copies:
                if self.fs.exists(path):
                    self.fs.delete(path)
        self._persist_manifest()

    def scan_once(self, scan_time: datetime) -> ScanReport:
        """Digest every copy of every entry; restore from the first intact one."""
        report = ScanReport(scan_time, files_checked=len(self.entries))
        for name in sorted(self.entries):
            entry = self.entries[name]
            digests = [self._digest_of(p) for p in entry.copies]
            bad = [i for i, d in enumerate(digests) if d != entry.stored_digest]
            if not bad:
                continue
            report.copies_corrupted += len(bad)
            good = next((i for i, d in enumerate(digests) if d == entry.stored_digest), None)
            if good is None:
                report.unrecoverable.append(name)
                self.unrecoverable.add(name)
                continue
            content = self.fs.read(entry.copies[good])
            for i in bad:
                self.fs.write(entry.copies[i], content)
            report.copies_restored += len(bad)
            self.unrecoverable.discard(name)
        return report

    def repair_from_uplink(self, logical_name: str, content: bytes) -> ManifestEntry:
        """Rewrite all copies from ground-supplied content matching the digest."""
        entry = self.entries[logical_name]
        if compute_digest(content) != entry.stored_digest:
            raise RejectedUploadError(f"digest mismatch for {logical_name!r}")
        for path in entry.copies:
            self.fs.write(path, content)
        self.unrecoverable.discard(logical_name)
        return entry


def parse_manifest(content: bytes) -> dict[str, ManifestEntry]:
    """Parse the tab-separated persisted form (manifest line keeps the
    placeholder digest; the loader must trust-on-load for that entry)."""
    entries = {}
    for line in content.decode().splitlines():
        if not line.strip():
            continue
        name, digest, *copies = line.split("\t")
        entries[name] = ManifestEntry(name, tuple(copies), digest)
    return entries
