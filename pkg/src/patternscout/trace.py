"""Append-only JSON-lines trace log.

Every provider call appends exactly one record per attempt with the fields
``{timestamp, model, schema_id, request_sha256, response, attempt}``.
Pipeline context (pattern name, file path) and dropped-data warnings are
recorded as additional fields / records so that downstream analysis (file
dominance, cost caps) can be computed from the log alone.
"""

from __future__ import annotations

import json
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterator


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class TraceLog:
    """Serialized writer for one trace file; safe for concurrent callers."""

    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._records: list[dict[str, Any]] = []
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("", encoding="utf-8")

    def append(self, record: dict[str, Any]) -> None:
        rec = {"timestamp": _now(), **record}
        line = json.dumps(rec, sort_keys=True, ensure_ascii=False)
        with self._lock:
            self._records.append(rec)
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(line + "\n")

    def call(
        self,
        *,
        kind: str,
        model: str,
        schema_id: str,
        request_sha256: str,
        response: Any,
        attempt: int,
        **context: Any,
    ) -> None:
        self.append(
            {
                "kind": kind,
                "model": model,
                "schema_id": schema_id,
                "request_sha256": request_sha256,
                "response": response,
                "attempt": attempt,
                **context,
            }
        )

    def warning(self, note: str, **context: Any) -> None:
        self.append({"kind": "warning", "note": note, **context})

    @property
    def records(self) -> list[dict[str, Any]]:
        with self._lock:
            return list(self._records)


def read_trace(path: str | Path) -> list[dict[str, Any]]:
    """Load all records from one trace file."""
    return list(iter_trace_lines(Path(path).read_text(encoding="utf-8")))


def iter_trace_lines(text: str) -> Iterator[dict[str, Any]]:
    for line in text.splitlines():
        line = line.strip()
        if line:
            yield json.loads(line)
