"""Signal fusion and file selection: worked examples plus randomized
properties (weight normalization, monotonicity, tie-breaking)."""

from __future__ import annotations

import random

import pytest

from patternscout.config import SignalWeights
from patternscout.errors import ConfigError, PatternScoutError
from patternscout.prioritizer import FileCandidate, build_candidates, fuse, keyword_score, select_top
from patternscout.profile import PatternProfile
from patternscout.provider import KeywordOracleBackend, Provider, TreeFilterEntry, TreeFilterResult
from patternscout.scanner import scan_repo
from patternscout.trace import TraceLog
from patternscout.vector_store import seed

from conftest import write_files


def candidate(path: str, priority: float) -> FileCandidate:
    return FileCandidate(path=path, tree_confidence=0.0, keyword_score=0.0, embed_score=0.0, priority=priority)


class TestKeywordScore:
    KEYWORDS = ("alpha", "beta", "gamma", "delta", "epsilon")

    def test_no_keywords_present(self):
        assert keyword_score("nothing relevant here", self.KEYWORDS) == 0.0

    def test_all_keywords_present(self):
        text = "alpha beta gamma delta epsilon"
        assert keyword_score(text, self.KEYWORDS) == 1.0

    def test_distinct_coverage_ignores_repeats(self):
        # 2 of 5 distinct keywords, one repeated 10 times
        text = "alpha " * 10 + "beta"
        expected = len({"alpha", "beta"} & set(self.KEYWORDS)) / len(self.KEYWORDS)
        assert keyword_score(text, self.KEYWORDS) == expected == 0.4

    def test_case_insensitive(self):
        assert keyword_score("ALPHA Beta", self.KEYWORDS) == 0.4

    def test_word_boundaries(self):
        # 'alpha' embedded in a longer token does not count
        assert keyword_score("alphabet soup", self.KEYWORDS) == 0.0
        assert keyword_score("alpha-bet soup", self.KEYWORDS) == 0.2

    def test_multiword_keyword(self):
        assert keyword_score("uses a service mesh here", ("service mesh",)) == 1.0

    def test_empty_keywords_rejected(self):
        with pytest.raises(PatternScoutError):
            keyword_score("text", ())


class TestFuse:
    def test_all_zero(self):
        assert fuse(0.0, 0.0, 0.0) == 0.0

    def test_all_one_sums_to_one(self):
        assert fuse(1.0, 1.0, 1.0) == pytest.approx(1.0)

    def test_worked_example(self):
        assert fuse(0.8, 0.5, 0.2) == pytest.approx(0.68)

    def test_degraded_folds_embed_into_keyword(self):
        # with embedding disabled, keyword weight becomes 0.3
        assert fuse(0.0, 1.0, 0.0, degraded=True) == pytest.approx(0.3)
        assert fuse(0.0, 1.0, 1.0, degraded=True) == pytest.approx(0.3)

    def test_out_of_range_rejected(self):
        with pytest.raises(PatternScoutError):
            fuse(1.2, 0.0, 0.0)
        with pytest.raises(PatternScoutError):
            fuse(0.0, -0.1, 0.0)

    def test_bad_weights_rejected(self):
        with pytest.raises(ConfigError):
            fuse(0.5, 0.5, 0.5, SignalWeights(tree=0.5, keyword=0.5, embed=0.5))

    def test_tree_signal_dominates_at_defaults(self):
        only_tree = fuse(1.0, 0.0, 0.0)
        others = fuse(0.0, 1.0, 1.0)
        assert only_tree == pytest.approx(0.7)
        assert others == pytest.approx(0.3)
        assert only_tree > others


class TestSelectTop:
    def test_fewer_than_n_returns_all(self):
        cands = [candidate(f"f{i}", i / 10) for i in range(5)]
        assert len(select_top(cands, 20)) == 5

    def test_top_by_priority(self):
        rng = random.Random(1)
        cands = [candidate(f"f{i:02d}", p) for i, p in enumerate(rng.sample(range(100), 30))]
        top = select_top([FileCandidate(c.path, 0, 0, 0, c.priority / 100) for c in cands], 20)
        oracle = sorted(cands, key=lambda c: -c.priority)[:20]
        assert [t.path for t in top] == [o.path for o in oracle]

    def test_tie_breaks_by_path(self):
        cands = [candidate("zebra", 0.5), candidate("apple", 0.5)]
        assert [c.path for c in select_top(cands, 2)] == ["apple", "zebra"]

    def test_idempotent_and_subset(self):
        cands = [candidate(f"p{i}", (i * 37 % 11) / 11) for i in range(40)]
        once = select_top(cands, 15)
        assert select_top(once, 15) == once
        assert set(c.path for c in once) <= set(c.path for c in cands)

    def test_n_precondition(self):
        with pytest.raises(PatternScoutError):
            select_top([], 0)


class TestRandomizedProperties:
    def test_thousand_case_property_suite(self):
        rng = random.Random(987_654)
        for _ in range(1_000):
            t, k, e = (rng.random() for _ in range(3))
            # weights drawn at random but normalized to sum exactly to 1
            a, b = sorted((rng.random(), rng.random()))
            weights = SignalWeights(tree=a, keyword=b - a, embed=1.0 - b)
            weights.validate()
            priority = fuse(t, k, e, weights)
            assert 0.0 <= priority <= 1.0
            # monotonicity in each signal
            bump = rng.uniform(0, 1)
            assert fuse(min(1.0, t + bump), k, e, weights) >= priority - 1e-12
            assert fuse(t, min(1.0, k + bump), e, weights) >= priority - 1e-12
            assert fuse(t, k, min(1.0, e + bump), weights) >= priority - 1e-12
            # recomputation is exact
            assert fuse(t, k, e, weights) == priority

    def test_tiebreak_against_total_order_oracle(self):
        rng = random.Random(24)
        for _ in range(200):
            cands = [
                candidate(f"path_{rng.randint(0, 30):02d}_{i}", rng.choice([0.1, 0.5, 0.9]))
                for i in range(rng.randint(1, 40))
            ]
            n = rng.randint(1, 25)
            oracle = sorted(cands, key=lambda c: (-c.priority, c.path))[:n]
            assert select_top(cands, n) == oracle


class TestBuildCandidates:
    def _profile(self) -> PatternProfile:
        return PatternProfile(
            name="Service Instance Per Container",
            description="Container per instance.",
            globs=("**/*.py",),
            keywords=("dockerfile", "expose"),
            examples=("FROM python\nEXPOSE 80\n",),
        )

    def test_pool_is_union_of_globs_and_tree_paths(self, tmp_path):
        write_files(tmp_path, {"a.py": "x", "b.py": "y", "Dockerfile": "EXPOSE 80", "c.txt": "z"})
        snapshot = scan_repo(tmp_path)
        provider = Provider(KeywordOracleBackend(), trace=TraceLog(None))
        profile = self._profile()
        store = seed([profile], provider)
        tree = TreeFilterResult(entries=(TreeFilterEntry(path="Dockerfile", confidence=0.9),))
        candidates, contents = build_candidates(snapshot, profile, tree, provider, store, SignalWeights())
        assert [c.path for c in candidates] == ["Dockerfile", "a.py", "b.py"]
        # only pool files were content-read
        assert set(contents) == {"Dockerfile", "a.py", "b.py"}

    def test_missing_tree_confidence_is_zero(self, tmp_path):
        write_files(tmp_path, {"a.py": "nothing"})
        snapshot = scan_repo(tmp_path)
        provider = Provider(KeywordOracleBackend(), trace=TraceLog(None))
        profile = self._profile()
        store = seed([profile], provider)
        candidates, _ = build_candidates(snapshot, profile, TreeFilterResult(entries=()), provider, store, SignalWeights())
        assert candidates[0].tree_confidence == 0.0

    def test_priority_recomputable_from_components(self, tmp_path):
        write_files(tmp_path, {"a.py": "EXPOSE 80", "Dockerfile": "dockerfile expose"})
        snapshot = scan_repo(tmp_path)
        provider = Provider(KeywordOracleBackend(), trace=TraceLog(None))
        profile = self._profile()
        store = seed([profile], provider)
        tree = TreeFilterResult(entries=(TreeFilterEntry(path="Dockerfile", confidence=0.9),))
        candidates, _ = build_candidates(snapshot, profile, tree, provider, store, SignalWeights())
        for c in candidates:
            assert c.priority == fuse(c.tree_confidence, c.keyword_score, c.embed_score, SignalWeights())

    def test_degraded_profile_skips_embedding(self, tmp_path):
        write_files(tmp_path, {"a.py": "expose"})
        snapshot = scan_repo(tmp_path)
        trace = TraceLog(None)
        provider = Provider(KeywordOracleBackend(), trace=trace)
        profile = PatternProfile(
            name="Bare", description="No examples.", globs=("**/*.py",), keywords=("expose",), examples=()
        )
        store = seed([profile], provider)
        candidates, _ = build_candidates(snapshot, profile, TreeFilterResult(entries=()), provider, store, SignalWeights())
        assert candidates[0].embed_score == 0.0
        # keyword hit carries the folded 0.3 weight
        assert candidates[0].priority == pytest.approx(0.3)
        assert not any(r.get("kind") == "embed" for r in trace.records)
