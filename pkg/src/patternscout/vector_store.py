"""Flat-file embedding store for profile example snippets.

Record counts are tiny (at most ten examples per pattern across a few
dozen patterns), so search is an exact linear scan: deterministic, no
index, no extra dependencies.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import StoreError
from .profile import PatternProfile
from .provider import EmbeddingVector, Provider

STORE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class StoreRecord:
    pattern_name: str
    example_index: int
    vector: EmbeddingVector
    source_sha256: str


@dataclass(frozen=True)
class SeededStore:
    dimension: int
    records: tuple[StoreRecord, ...]
    degraded: tuple[str, ...]  # patterns that contributed no examples

    def records_for(self, pattern_name: str) -> list[StoreRecord]:
        return [r for r in self.records if r.pattern_name == pattern_name]


def _text_sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def seed(profiles: Sequence[PatternProfile], provider: Provider) -> SeededStore:
    """Embed every profile example; one record per (pattern, example)."""
    records: list[StoreRecord] = []
    degraded: list[str] = []
    dimension = 0
    for profile in sorted(profiles, key=lambda p: p.name):
        if not profile.examples:
            degraded.append(profile.name)
            continue
        vectors = provider.embed(list(profile.examples))
        for index, (example, vector) in enumerate(zip(profile.examples, vectors)):
            if dimension == 0:
                dimension = len(vector)
            elif len(vector) != dimension:
                raise StoreError(f"embedding dimension mismatch: {len(vector)} != {dimension}")
            records.append(
                StoreRecord(
                    pattern_name=profile.name,
                    example_index=index,
                    vector=vector,
                    source_sha256=_text_sha256(example),
                )
            )
    return SeededStore(dimension=dimension, records=tuple(records), degraded=tuple(degraded))


def max_similarity(store: SeededStore, pattern_name: str, query: EmbeddingVector) -> tuple[float, bool]:
    """Best match for the query among one pattern's records.

    Returns ``(similarity, degraded)``: cosine similarity clamped to [-1, 1]
    and mapped onto [0, 1] via (c+1)/2, maximized over the pattern's
    records. Patterns without records yield ``(0.0, True)``. A zero-norm
    vector on either side contributes the floor value 0.0.
    """
    records = store.records_for(pattern_name)
    if not records:
        return 0.0, True
    q = np.asarray(query.values, dtype=float)
    if store.dimension and len(query) != store.dimension:
        raise StoreError(f"query dimension {len(query)} != store dimension {store.dimension}")
    qn = float(np.linalg.norm(q))
    best = 0.0
    for record in records:
        v = np.asarray(record.vector.values, dtype=float)
        vn = float(np.linalg.norm(v))
        if qn == 0.0 or vn == 0.0:
            score = 0.0
        else:
            cosine = float(np.dot(q, v) / (qn * vn))
            cosine = max(-1.0, min(1.0, cosine))
            score = (cosine + 1.0) / 2.0
        best = max(best, score)
    return best, False


def save_store(store: SeededStore, path: str | Path) -> None:
    """Persist to versioned JSON; floats round-trip exactly."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "version": STORE_FORMAT_VERSION,
        "dimension": store.dimension,
        "degraded": list(store.degraded),
        "records": [
            {
                "pattern": r.pattern_name,
                "example_index": r.example_index,
                "sha256": r.source_sha256,
                "values": list(r.vector.values),
            }
            for r in store.records
        ],
    }
    p.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def load_store(path: str | Path) -> SeededStore:
    p = Path(path)
    if not p.is_file():
        raise StoreError(f"store file missing: {p}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise StoreError(f"corrupt store file {p}: {exc}") from exc
    if doc.get("version") != STORE_FORMAT_VERSION:
        raise StoreError(f"unsupported store version {doc.get('version')!r} in {p}")
    records = tuple(
        StoreRecord(
            pattern_name=r["pattern"],
            example_index=int(r["example_index"]),
            vector=EmbeddingVector(tuple(float(x) for x in r["values"])),
            source_sha256=r["sha256"],
        )
        for r in doc["records"]
    )
    seen = {(r.pattern_name, r.example_index) for r in records}
    if len(seen) != len(records):
        raise StoreError(f"duplicate (pattern, example_index) entries in {p}")
    return SeededStore(dimension=int(doc["dimension"]), records=records, degraded=tuple(doc["degraded"]))
