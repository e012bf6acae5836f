"""Append-only event persistence, one logical table per event family.

Two backends share one interface: MemoryStore for tests and pipelines that
never touch disk, FileStore for the collector. FileStore keeps one JSON-Lines
file per family under its directory; every line is an envelope
``{"recv": <server receive ms or null>, "event": {...}}`` so server-side
diagnostics never leak into the event schema itself.

Query results are ordered by (time, family, arrival-within-family). The
family component (window < session < browsing) makes the ordering a pure
function of store content, which is what lets import(export(S)) reproduce
S's query results exactly; semantic same-millisecond ordering is applied
later, at reconstruction.

The public dataset format is one plain-event JSON-Lines file per family:
window.jsonl, session.jsonl, browsing.jsonl. Import is all-or-nothing: any
malformed or invalid line aborts with its file and line number before a
single record is appended.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from . import events as ev

DATASET_FILES = {
    ev.FAMILY_WINDOW: "window.jsonl",
    ev.FAMILY_SESSION: "session.jsonl",
    ev.FAMILY_BROWSING: "browsing.jsonl",
}

_FAMILY_RANK = {ev.FAMILY_WINDOW: 0, ev.FAMILY_SESSION: 1, ev.FAMILY_BROWSING: 2}


class StorageError(RuntimeError):
    pass


class MalformedLine(ValueError):
    def __init__(self, path: str, line_number: int, reason: str):
        super().__init__(f"{path}:{line_number}: {reason}")
        self.path = path
        self.line_number = line_number
        self.reason = reason


@dataclass(frozen=True)
class EventFilter:
    """Conjunction of optional constraints; None means unconstrained.

    The time range is half-open [start, end).
    """

    user_id: int | None = None
    session_id: int | None = None
    window_id: int | None = None
    family: str | None = None
    start: int | None = None
    end: int | None = None

    def __post_init__(self):
        if self.start is not None and self.end is not None and self.start > self.end:
            raise ValueError(f"time range start {self.start} > end {self.end}")
        if self.family is not None and self.family not in ev.FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")

    def matches(self, record: ev.EventRecord) -> bool:
        core = record.core
        if self.user_id is not None and core.user_id != self.user_id:
            return False
        if self.session_id is not None and core.session_id != self.session_id:
            return False
        if self.window_id is not None and core.window_id != self.window_id:
            return False
        if self.family is not None and ev.family_of(record) != self.family:
            return False
        if self.start is not None and core.time < self.start:
            return False
        if self.end is not None and core.time >= self.end:
            return False
        return True


class MemoryStore:
    """In-memory append-only store."""

    def __init__(self):
        self._rows: dict[str, list[ev.EventRecord]] = {f: [] for f in ev.FAMILIES}

    def append(self, record: ev.EventRecord, recv_time: int | None = None) -> None:
        self._rows[ev.family_of(record)].append(record)

    def count(self) -> int:
        return sum(len(rows) for rows in self._rows.values())

    def _indexed(self) -> Iterable[tuple[tuple[int, int, int], ev.EventRecord]]:
        for family, rows in self._rows.items():
            rank = _FAMILY_RANK[family]
            for i, record in enumerate(rows):
                yield (record.core.time, rank, i), record

    def query(self, flt: EventFilter | None = None) -> list[ev.EventRecord]:
        items = sorted(self._indexed(), key=lambda kv: kv[0])
        if flt is None:
            return [record for _, record in items]
        return [record for _, record in items if flt.matches(record)]

    def export_jsonl(self, out_dir: "str | Path") -> None:
        export_dataset(self, out_dir)

    def import_jsonl(self, in_dir: "str | Path") -> int:
        return import_dataset(self, in_dir)


class FileStore(MemoryStore):
    """File-backed store: one envelope JSON-Lines file per family.

    Appends are flushed line by line, so records survive a process crash.
    Pass fsync=True to also force them through the OS cache; that is the
    safer setting but costs one fsync per append.
    """

    def __init__(self, directory: "str | Path", fsync: bool = False):
        super().__init__()
        self._dir = Path(directory)
        self._dir.mkdir(parents=True, exist_ok=True)
        self._fsync = fsync
        self._handles = {}
        for family in ev.FAMILIES:
            path = self._dir / f"events_{family}.jsonl"
            if path.exists():
                self._load_existing(family, path)
            self._handles[family] = open(path, "ab")

    def _load_existing(self, family: str, path: Path) -> None:
        with open(path, "rb") as fh:
            for line_number, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    envelope = json.loads(line)
                    record = ev.from_wire_dict(envelope["event"])
                except (json.JSONDecodeError, KeyError, TypeError, ev.MalformedPayload) as exc:
                    raise StorageError(f"{path}:{line_number}: corrupt store line: {exc}") from exc
                self._rows[family].append(record)

    def append(self, record: ev.EventRecord, recv_time: int | None = None) -> None:
        family = ev.family_of(record)
        envelope = {"recv": recv_time, "event": ev.to_wire_dict(record)}
        handle = self._handles[family]
        try:
            handle.write(json.dumps(envelope, separators=(",", ":")).encode("utf-8") + b"\n")
            handle.flush()
            if self._fsync:
                os.fsync(handle.fileno())
        except OSError as exc:
            raise StorageError(f"append to {family} table failed: {exc}") from exc
        self._rows[family].append(record)

    def close(self) -> None:
        for handle in self._handles.values():
            handle.close()
        self._handles = {}

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def export_dataset(store: MemoryStore, out_dir: "str | Path") -> None:
    """Write the public three-file dataset (plain events, family order)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for family, filename in DATASET_FILES.items():
        with open(out / filename, "wb") as fh:
            for record in store.query(EventFilter(family=family)):
                fh.write(ev.encode(record) + b"\n")


def read_dataset(in_dir: "str | Path") -> list[ev.EventRecord]:
    """Parse and validate a dataset directory without touching any store.

    Raises MalformedLine (with file and line number) on the first bad line;
    nothing is returned partially.
    """
    records: list[ev.EventRecord] = []
    for family, filename in DATASET_FILES.items():
        path = Path(in_dir) / filename
        if not path.exists():
            raise MalformedLine(str(path), 0, "dataset file missing")
        with open(path, "rb") as fh:
            for line_number, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = ev.decode(line)
                except ev.MalformedPayload as exc:
                    raise MalformedLine(str(path), line_number, str(exc)) from None
                if ev.family_of(record) != family:
                    raise MalformedLine(str(path), line_number, f"event family does not match {filename}")
                result = ev.validate(record)
                if not result.ok:
                    raise MalformedLine(str(path), line_number, result.violations[0].message)
                records.append(record)
    return records


def import_dataset(store: MemoryStore, in_dir: "str | Path") -> int:
    """All-or-nothing import of a dataset directory; returns records added."""
    records = read_dataset(in_dir)
    for record in records:
        store.append(record)
    return len(records)
