"""Versioned artifact store for one run.

Latest file contents are mirrored under ``<root>/``; every version is kept at
``<root>/.history/<path>/<version>``. Sprint snapshots are manifest documents
written to a separate snapshot directory.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path, PurePosixPath
from typing import Callable, Optional

from .domain import MessageKind
from .errors import DuplicateSnapshot, IoFailure, PathEscape

HISTORY_DIR = ".history"


def digest(content: bytes) -> str:
    return "sha256:" + hashlib.sha256(content).hexdigest()


def count_loc(content: bytes) -> int:
    """Lines holding at least one non-whitespace character."""
    text = content.decode("utf-8", errors="replace")
    return sum(1 for line in text.splitlines() if line.strip())


@dataclass(frozen=True)
class Artifact:
    path: str
    kind: MessageKind
    version: int
    content: bytes
    content_hash: str

    @property
    def is_code(self) -> bool:
        return self.kind is MessageKind.CODE_BUNDLE


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    version: int
    content_hash: str
    kind: MessageKind


@dataclass(frozen=True)
class Snapshot:
    sprint_index: int
    manifest: tuple[ManifestEntry, ...]
    created_at: float

    def to_dict(self) -> dict:
        return {
            "sprint_index": self.sprint_index,
            "created_at": self.created_at,
            "manifest": [
                {"path": e.path, "version": e.version, "content_hash": e.content_hash, "kind": e.kind.value}
                for e in self.manifest
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Snapshot":
        return cls(
            sprint_index=d["sprint_index"],
            created_at=d["created_at"],
            manifest=tuple(
                ManifestEntry(e["path"], e["version"], e["content_hash"], MessageKind(e["kind"]))
                for e in d["manifest"]
            ),
        )


@dataclass(frozen=True)
class SizeReport:
    files: int
    loc: int
    all_files: int


def check_relpath(path: str) -> str:
    p = PurePosixPath(path)
    if (
        not path
        or "\\" in path
        or p.is_absolute()
        or any(part in ("..", "") for part in path.split("/"))
        or ":" in p.parts[0]
        or p.parts[0] == HISTORY_DIR
    ):
        raise PathEscape(f"refusing to write outside the workspace: {path!r}")
    return p.as_posix()


def _atomic_write(target: Path, content: bytes):
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(content)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot write {target}: {exc}") from exc


class Workspace:
    """Append-only artifact history with a latest-version view."""

    def __init__(
        self,
        root: str | Path,
        snapshot_dir: str | Path | None = None,
        clock: Callable[[], float] = time.time,
    ):
        self.root = Path(root)
        self.snapshot_dir = Path(snapshot_dir) if snapshot_dir else self.root.parent / "snapshots"
        self.clock = clock
        self._history: dict[str, list[Artifact]] = {}
        self._snapshots: dict[int, Snapshot] = {}
        self.root.mkdir(parents=True, exist_ok=True)

    # writes

    def write(self, path: str, content: bytes | str, kind: MessageKind) -> Artifact:
        path = check_relpath(path)
        if isinstance(content, str):
            content = content.encode("utf-8")
        versions = self._history.setdefault(path, [])
        art = Artifact(path, kind, len(versions) + 1, content, digest(content))
        _atomic_write(self.root / HISTORY_DIR / path / str(art.version), content)
        _atomic_write(self.root / path, content)
        versions.append(art)
        return art

    def write_bundle(self, bundle, kind: MessageKind = MessageKind.CODE_BUNDLE) -> list[Artifact]:
        items = bundle.items() if hasattr(bundle, "items") else bundle
        items = list(items)
        for path, _ in items:
            check_relpath(path)  # reject the whole bundle before touching disk
        return [self.write(path, content, kind) for path, content in items]

    # reads

    def latest(self, path: str) -> Optional[Artifact]:
        versions = self._history.get(path)
        return versions[-1] if versions else None

    def versions(self, path: str) -> list[Artifact]:
        return list(self._history.get(path, ()))

    def latest_artifacts(self, code_only: bool = False) -> list[Artifact]:
        arts = [v[-1] for _, v in sorted(self._history.items())]
        return [a for a in arts if a.is_code] if code_only else arts

    def measure_size(self) -> SizeReport:
        code = self.latest_artifacts(code_only=True)
        return SizeReport(
            files=len(code),
            loc=sum(count_loc(a.content) for a in code),
            all_files=len(self._history),
        )

    # snapshots

    def snapshot(self, sprint_index: int) -> Snapshot:
        if sprint_index in self._snapshots:
            raise DuplicateSnapshot(sprint_index)
        snap = Snapshot(
            sprint_index=sprint_index,
            manifest=tuple(
                ManifestEntry(a.path, a.version, a.content_hash, a.kind) for a in self.latest_artifacts()
            ),
            created_at=self.clock(),
        )
        self._snapshots[sprint_index] = snap
        doc = json.dumps(snap.to_dict(), indent=2, sort_keys=True) + "\n"
        _atomic_write(self.snapshot_dir / f"sprint-{sprint_index}.json", doc.encode("utf-8"))
        return snap

    @property
    def snapshots(self) -> list[Snapshot]:
        return [self._snapshots[k] for k in sorted(self._snapshots)]

    def restore(self, snap: Snapshot, dest: str | Path) -> "Workspace":
        """Rebuild the snapshot's file set as a fresh workspace at ``dest``."""
        restored = Workspace(dest, snapshot_dir=Path(dest) / HISTORY_DIR / "snapshots", clock=self.clock)
        for entry in snap.manifest:
            blob = self.root / HISTORY_DIR / entry.path / str(entry.version)
            try:
                content = blob.read_bytes()
            except OSError as exc:
                raise IoFailure(f"history blob missing for {entry.path} v{entry.version}") from exc
            if digest(content) != entry.content_hash:
                raise IoFailure(f"history blob for {entry.path} v{entry.version} does not match its hash")
            restored.write(entry.path, content, entry.kind)
        return restored


def load_snapshot(path: str | Path) -> Snapshot:
    with open(path, encoding="utf-8") as fh:
        return Snapshot.from_dict(json.load(fh))
