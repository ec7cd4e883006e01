"""Vector store: seeding, similarity queries, and persistence."""

from __future__ import annotations

import math
import random

import pytest

from patternscout.errors import StoreError
from patternscout.profile import PatternProfile
from patternscout.provider import EmbeddingVector, KeywordOracleBackend, Provider
from patternscout.trace import TraceLog
from patternscout.vector_store import (
    SeededStore,
    StoreRecord,
    load_store,
    max_similarity,
    save_store,
    seed,
)


def profile(name: str, examples: tuple[str, ...]) -> PatternProfile:
    return PatternProfile(
        name=name,
        description=f"{name} description.",
        globs=("**/*",),
        keywords=(name.lower().replace(" ", "-"),),
        examples=examples,
    )


def store_of(vectors: dict[str, list[tuple[float, ...]]]) -> SeededStore:
    records = []
    dim = 0
    for pattern, vecs in vectors.items():
        for i, values in enumerate(vecs):
            dim = len(values)
            records.append(
                StoreRecord(pattern_name=pattern, example_index=i, vector=EmbeddingVector(values), source_sha256="0" * 64)
            )
    return SeededStore(dimension=dim, records=tuple(records), degraded=())


@pytest.fixture
def provider():
    return Provider(KeywordOracleBackend(), trace=TraceLog(None))


class TestSeed:
    def test_record_counting(self, provider):
        profiles = [
            profile("A", ("ex one", "ex two", "ex three")),
            profile("B", ("b one", "b two", "b three")),
        ]
        store = seed(profiles, provider)
        assert len(store.records) == 6
        assert store.degraded == ()
        assert {(r.pattern_name, r.example_index) for r in store.records} == {
            (n, i) for n in "AB" for i in range(3)
        }

    def test_zero_example_profile_degraded(self, provider):
        store = seed([profile("Empty", ())], provider)
        assert store.records == ()
        assert store.degraded == ("Empty",)

    def test_reseed_byte_identical(self, provider, tmp_path):
        profiles = [profile("A", ("one two", "three")), profile("B", ())]
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        save_store(seed(profiles, provider), first)
        save_store(seed(profiles, provider), second)
        assert first.read_bytes() == second.read_bytes()


class TestMaxSimilarity:
    def test_identical_vector_scores_one(self):
        v = (1.0, 2.0, 2.0)
        store = store_of({"P": [v]})
        score, degraded = max_similarity(store, "P", EmbeddingVector(v))
        assert math.isclose(score, 1.0)
        assert degraded is False

    def test_orthogonal_maps_to_half(self):
        store = store_of({"P": [(1.0, 0.0)]})
        score, _ = max_similarity(store, "P", EmbeddingVector((0.0, 1.0)))
        assert math.isclose(score, 0.5)

    def test_opposite_maps_to_zero(self):
        store = store_of({"P": [(1.0, 0.0)]})
        score, _ = max_similarity(store, "P", EmbeddingVector((-1.0, 0.0)))
        assert math.isclose(score, 0.0)

    def test_missing_pattern_degraded_zero(self):
        store = store_of({"P": [(1.0, 0.0)]})
        score, degraded = max_similarity(store, "Other", EmbeddingVector((1.0, 0.0)))
        assert score == 0.0 and degraded is True

    def test_matches_linear_scan_oracle(self):
        rng = random.Random(11)
        dim = 8
        vectors = [tuple(rng.uniform(-1, 1) for _ in range(dim)) for _ in range(20)]
        store = store_of({"P": vectors})
        for _ in range(25):
            query = tuple(rng.uniform(-1, 1) for _ in range(dim))
            qn = math.sqrt(sum(x * x for x in query))
            best = 0.0
            for v in vectors:
                vn = math.sqrt(sum(x * x for x in v))
                c = sum(a * b for a, b in zip(query, v)) / (qn * vn)
                best = max(best, (max(-1.0, min(1.0, c)) + 1.0) / 2.0)
            score, _ = max_similarity(store, "P", EmbeddingVector(query))
            assert math.isclose(score, best, rel_tol=1e-12)

    def test_invariant_under_positive_scaling(self):
        rng = random.Random(5)
        vectors = [tuple(rng.uniform(-1, 1) for _ in range(6)) for _ in range(5)]
        store = store_of({"P": vectors})
        query = tuple(rng.uniform(-1, 1) for _ in range(6))
        base, _ = max_similarity(store, "P", EmbeddingVector(query))
        for scale in (0.001, 0.5, 7.0, 1e6):
            scaled, _ = max_similarity(store, "P", EmbeddingVector(tuple(scale * x for x in query)))
            assert math.isclose(scaled, base, rel_tol=1e-9)

    def test_similarity_always_in_unit_interval(self):
        rng = random.Random(3)
        vectors = [tuple(rng.uniform(-10, 10) for _ in range(4)) for _ in range(10)]
        store = store_of({"P": vectors})
        for _ in range(50):
            q = tuple(rng.uniform(-10, 10) for _ in range(4))
            score, _ = max_similarity(store, "P", EmbeddingVector(q))
            assert 0.0 <= score <= 1.0

    def test_dimension_mismatch(self):
        store = store_of({"P": [(1.0, 0.0, 0.0)]})
        with pytest.raises(StoreError, match="dimension"):
            max_similarity(store, "P", EmbeddingVector((1.0, 0.0)))

    def test_zero_norm_query_floors(self):
        store = store_of({"P": [(1.0, 0.0)]})
        score, _ = max_similarity(store, "P", EmbeddingVector((0.0, 0.0)))
        assert score == 0.0


class TestPersistence:
    def test_round_trip_lossless(self, provider, tmp_path):
        store = seed([profile("A", ("alpha beta", "gamma")), profile("B", ())], provider)
        path = tmp_path / "store.json"
        save_store(store, path)
        assert load_store(path) == store

    def test_missing_file(self, tmp_path):
        with pytest.raises(StoreError):
            load_store(tmp_path / "missing.json")

    def test_corrupt_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(StoreError, match="corrupt"):
            load_store(path)

    def test_version_checked(self, tmp_path):
        path = tmp_path / "old.json"
        path.write_text('{"version": 99, "dimension": 2, "degraded": [], "records": []}', encoding="utf-8")
        with pytest.raises(StoreError, match="version"):
            load_store(path)
