"""File prioritization: fuse tree-filter confidence, keyword coverage, and
embedding similarity into one priority per candidate file.

The candidate pool is the union of glob-matched paths and paths returned by
the tree filter; only pool files are ever content-read.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from .config import SignalWeights
from .errors import PatternScoutError, ScanError
from .profile import PatternProfile
from .provider import Provider, TreeFilterResult
from .scanner import FileContent, RepoSnapshot, match_globs, read_truncated
from .vector_store import SeededStore, max_similarity


@dataclass(frozen=True)
class FileCandidate:
    path: str
    tree_confidence: float
    keyword_score: float
    embed_score: float
    priority: float


def keyword_score(content: FileContent | str, keywords: Sequence[str]) -> float:
    """Distinct-keyword coverage of the content, in [0, 1].

    A keyword counts once no matter how often it repeats; matching is
    case-insensitive on word boundaries.
    """
    if not keywords:
        raise PatternScoutError("keyword_score requires at least one keyword")
    text = (content.text if isinstance(content, FileContent) else content).casefold()
    hits = 0
    for kw in keywords:
        pattern = r"(?<![0-9a-z_])" + re.escape(kw.casefold()) + r"(?![0-9a-z_])"
        if re.search(pattern, text):
            hits += 1
    return hits / len(keywords)


def fuse(
    tree_conf: float,
    kw: float,
    emb: float,
    weights: SignalWeights | None = None,
    degraded: bool = False,
) -> float:
    """Weighted sum of the three signals; for degraded patterns the
    embedding weight is folded into keyword matching before fusing."""
    weights = weights or SignalWeights()
    weights.validate()
    for name, value in (("tree_conf", tree_conf), ("kw", kw), ("emb", emb)):
        if not 0.0 <= value <= 1.0:
            raise PatternScoutError(f"signal {name} out of range [0, 1]: {value!r}")
    w_keyword = weights.keyword + (weights.embed if degraded else 0.0)
    w_embed = 0.0 if degraded else weights.embed
    priority = weights.tree * tree_conf + w_keyword * kw + w_embed * emb
    return min(1.0, max(0.0, priority))


def select_top(candidates: Sequence[FileCandidate], n: int = 20) -> list[FileCandidate]:
    """The n highest-priority candidates, ties broken by path ascending."""
    if n < 1:
        raise PatternScoutError(f"selection size must be >= 1, got {n}")
    return sorted(candidates, key=lambda c: (-c.priority, c.path))[:n]


def build_candidates(
    snapshot: RepoSnapshot,
    profile: PatternProfile,
    tree_result: TreeFilterResult,
    provider: Provider,
    store: SeededStore | None,
    weights: SignalWeights,
    truncate_limit: int = 50_000,
) -> tuple[list[FileCandidate], dict[str, FileContent]]:
    """Score the candidate pool for one pattern.

    Returns the fused candidates (path-sorted) together with the truncated
    contents that were read for them, so later steps reuse the same bytes.
    """
    tree_conf: Mapping[str, float] = {e.path: e.confidence for e in tree_result.entries}
    pool = sorted(set(match_globs(snapshot, list(profile.globs))) | set(tree_conf))

    contents: dict[str, FileContent] = {}
    for path in pool:
        try:
            contents[path] = read_truncated(snapshot.root, path, truncate_limit)
        except ScanError as exc:
            provider.trace.warning(f"candidate file unreadable, skipped: {exc}", pattern=profile.name)

    readable = [p for p in pool if p in contents]
    degraded = profile.degraded or store is None or not store.records_for(profile.name)

    embed_scores: dict[str, float] = {p: 0.0 for p in readable}
    if not degraded and readable:
        vectors = provider.embed([contents[p].text for p in readable])
        for path, vector in zip(readable, vectors):
            embed_scores[path], _ = max_similarity(store, profile.name, vector)

    candidates = []
    for path in readable:
        t = tree_conf.get(path, 0.0)
        k = keyword_score(contents[path], profile.keywords)
        e = embed_scores[path]
        candidates.append(
            FileCandidate(
                path=path,
                tree_confidence=t,
                keyword_score=k,
                embed_score=e,
                priority=fuse(t, k, e, weights, degraded=degraded),
            )
        )
    return candidates, contents
