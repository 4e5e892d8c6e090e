"""Append-only obligation audit log.

One record per line, tab-separated in field order::

    sequence  timestamp  request-digest  rule-id  obligation-action  params-json

Sequence numbers continue from the last record already in the file, so a
restarted process never reuses one.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from .engine import AccessRequest, Decision
from .errors import LogWriteFailure

Clock = Callable[[], str]


def utc_clock() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def fixed_clock(stamp: str) -> Clock:
    """A clock that always answers ``stamp`` (validated as ISO-8601)."""
    datetime.fromisoformat(stamp)
    return lambda: stamp


@dataclass(frozen=True)
class AuditRecord:
    sequence: int
    timestamp: str
    request_digest: str
    rule_id: str
    obligation_action: str
    params: dict[str, str] = field(default_factory=dict)

    def to_line(self) -> str:
        params = json.dumps(self.params, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return "\t".join([str(self.sequence), self.timestamp, self.request_digest,
                          self.rule_id, self.obligation_action, params])

    @classmethod
    def from_line(cls, line: str) -> "AuditRecord":
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 6:
            raise ValueError(f"audit line has {len(parts)} fields, expected 6")
        seq, stamp, digest, rule_id, action, params = parts
        return cls(int(seq), stamp, digest, rule_id, action, json.loads(params))


def read_records(path: str | os.PathLike) -> list[AuditRecord]:
    """Records in file order. A trailing line without its newline is an
    interrupted write and is not part of the log."""
    text = Path(path).read_text(encoding="utf-8")
    complete = text[: text.rfind("\n") + 1]
    return [AuditRecord.from_line(line) for line in complete.splitlines() if line]


class AuditLog:
    """Single-writer log; ``path=None`` keeps records in memory only."""

    def __init__(self, path: str | os.PathLike | None = None, clock: Clock | None = None) -> None:
        self.path = Path(path) if path is not None else None
        self.clock = clock or utc_clock
        self._lock = threading.Lock()
        self._memory: list[AuditRecord] = []
        self._last = 0
        if self.path is not None and self.path.exists():
            self._recover()

    def _recover(self) -> None:
        try:
            with open(self.path, "rb+") as fh:
                data = fh.read()
                cut = data.rfind(b"\n") + 1
                if cut < len(data):
                    fh.truncate(cut)
        except OSError as exc:
            raise LogWriteFailure(f"cannot open audit log {self.path}: {exc}") from exc
        records = read_records(self.path)
        self._last = records[-1].sequence if records else 0

    @property
    def last_sequence(self) -> int:
        return self._last

    def append(self, request_digest: str, rule_id: str, action: str, params: dict[str, str]) -> AuditRecord:
        with self._lock:
            record = AuditRecord(self._last + 1, self.clock(), request_digest, rule_id, action, dict(params))
            if self.path is None:
                self._memory.append(record)
            else:
                try:
                    with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                        fh.write(record.to_line() + "\n")
                        fh.flush()
                except OSError as exc:
                    raise LogWriteFailure(f"cannot append to audit log {self.path}: {exc}") from exc
            self._last = record.sequence
            return record

    def records(self) -> list[AuditRecord]:
        if self.path is None:
            return list(self._memory)
        return read_records(self.path) if self.path.exists() else []


def record_obligations(decision: Decision, request: AccessRequest, log: AuditLog) -> int:
    """Append one record per obligation of a permit; nothing for a deny."""
    if not decision.permitted:
        return 0
    for rule_id, obligation in decision.obligations:
        log.append(request.digest, rule_id, obligation.action, obligation.record_params())
    return len(decision.obligations)
