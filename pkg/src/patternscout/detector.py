"""Per-pattern detection: plan, investigate the top files, then deliberate
to a final 0-10 score against the detection threshold."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping, Sequence

from .config import RunConfig
from .errors import PatternScoutError
from .prioritizer import FileCandidate, build_candidates, select_top
from .profile import PatternProfile
from .provider import LlmRequest, Provider, render_prompt
from .scanner import FileContent, RepoSummary, scan_repo, summarize_repo
from .vector_store import SeededStore, seed

EXPLANATION_LIMIT = 220


@dataclass(frozen=True)
class DetectionPlan:
    pattern_name: str
    steps: tuple[str, ...]
    focus_hints: tuple[str, ...]

    def as_text(self) -> str:
        lines = [f"{i}. {step}" for i, step in enumerate(self.steps, start=1)]
        if self.focus_hints:
            lines.append("Focus on: " + ", ".join(self.focus_hints))
        return "\n".join(lines)


@dataclass(frozen=True)
class Evidence:
    path: str
    found: bool
    confidence: float
    reasoning: str
    snippets: tuple[str, ...]


@dataclass(frozen=True)
class Verdict:
    pattern_name: str
    score: int
    detected: bool
    explanation: str
    evidence_paths: tuple[str, ...]
    error: str | None = None


@dataclass(frozen=True)
class DetectionReport:
    repo: str
    verdicts: tuple[Verdict, ...]
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "repo": self.repo,
            "verdicts": [
                {
                    "pattern_name": v.pattern_name,
                    "score": v.score,
                    "detected": v.detected,
                    "explanation": v.explanation,
                    "evidence_paths": list(v.evidence_paths),
                    "error": v.error,
                }
                for v in self.verdicts
            ],
            "metadata": dict(self.metadata),
        }


def _summary_block(summary: RepoSummary) -> dict[str, str]:
    histogram = ", ".join(f"{ext or '(none)'}: {count}" for ext, count in summary.language_histogram.items())
    return {
        "repo_name": summary.name,
        "file_count": str(summary.file_count),
        "histogram": histogram or "(no files)",
        "readme_excerpt": summary.readme_excerpt or "(no README)",
    }


def plan(profile: PatternProfile, summary: RepoSummary, provider: Provider) -> DetectionPlan:
    """Ask the provider a short detection plan for this pattern and repo."""
    request = LlmRequest(
        system_text="You plan how to detect an architectural pattern in a software repository.",
        user_text=render_prompt(
            "plan",
            pattern_name=profile.name,
            description=profile.description,
            keywords=", ".join(profile.keywords),
            **_summary_block(summary),
        ),
        response_schema_id="plan",
        seed=provider.seed,
        context={"pattern": profile.name, "keywords": list(profile.keywords)},
    )
    body = provider.chat(request)
    return DetectionPlan(
        pattern_name=profile.name,
        steps=tuple(body["steps"]),
        focus_hints=tuple(body["focus_hints"]),
    )


def investigate(
    files: Sequence[FileCandidate],
    contents: Mapping[str, FileContent],
    plan_: DetectionPlan,
    profile: PatternProfile,
    summary: RepoSummary,
    provider: Provider,
) -> list[Evidence]:
    """Collect per-file evidence for the selected candidates.

    A provider failure on one file is traced and skipped; the other files
    still yield evidence. Snippets that are not literal substrings of the
    analyzed content are dropped with a traced warning.
    """
    example = profile.examples[0] if profile.examples else "(none available)"
    evidence: list[Evidence] = []
    for candidate in files:
        content = contents[candidate.path]
        request = LlmRequest(
            system_text="You inspect one file for evidence of an architectural pattern.",
            user_text=render_prompt(
                "investigation",
                pattern_name=profile.name,
                description=profile.description,
                keywords=", ".join(profile.keywords),
                plan=plan_.as_text(),
                example=example,
                path=candidate.path,
                content=content.text or "(empty or binary file)",
                **_summary_block(summary),
            ),
            response_schema_id="investigation",
            seed=provider.seed,
            context={
                "pattern": profile.name,
                "path": candidate.path,
                "keywords": list(profile.keywords),
                "content": content.text,
            },
        )
        try:
            body = provider.chat(request)
        except PatternScoutError as exc:
            provider.trace.warning(
                f"investigation failed for {candidate.path}: {exc}",
                pattern=profile.name,
                path=candidate.path,
            )
            continue
        snippets = []
        for snippet in body["snippets"]:
            if snippet in content.text:
                snippets.append(snippet)
            else:
                provider.trace.warning(
                    f"snippet not found in analyzed content of {candidate.path}, dropped",
                    pattern=profile.name,
                    path=candidate.path,
                )
        evidence.append(
            Evidence(
                path=candidate.path,
                found=body["found"],
                confidence=body["confidence"],
                reasoning=body["reasoning"],
                snippets=tuple(snippets),
            )
        )
    return evidence


def deliberate(
    evidence: Sequence[Evidence],
    profile: PatternProfile,
    provider: Provider,
    threshold: int = 5,
) -> Verdict:
    """Cross-file final scoring on the 0-10 scale.

    The provider sees one summary line per evidence item (path, confidence,
    explanation clipped to the explanation limit), in the order collected.
    An empty evidence list short-circuits to score 0 without a call.
    """
    if not 0 <= threshold <= 10:
        raise PatternScoutError(f"threshold must be in [0, 10], got {threshold}")
    if not evidence:
        return Verdict(
            pattern_name=profile.name,
            score=0,
            detected=0 >= threshold,
            explanation="No files yielded evidence.",
            evidence_paths=(),
        )
    lines = [
        f"- {e.path} (confidence {e.confidence:.2f}, found={str(e.found).lower()}): "
        f"{(e.reasoning or '(no reasoning)')[:EXPLANATION_LIMIT]}"
        for e in evidence
    ]
    request = LlmRequest(
        system_text="You weigh collected evidence and score the presence of an architectural pattern.",
        user_text=render_prompt(
            "deliberation",
            pattern_name=profile.name,
            description=profile.description,
            evidence="\n".join(lines),
        ),
        response_schema_id="deliberation",
        seed=provider.seed,
        context={
            "pattern": profile.name,
            "evidence": [
                {"path": e.path, "confidence": e.confidence, "found": e.found} for e in evidence
            ],
        },
    )
    body = provider.chat(request)
    score = body["score"]
    return Verdict(
        pattern_name=profile.name,
        score=score,
        detected=score >= threshold,
        explanation=body["explanation"][:EXPLANATION_LIMIT],
        evidence_paths=tuple(e.path for e in evidence if e.found),
    )


def detect(
    repo_root: str | Path,
    profiles: Sequence[PatternProfile],
    config: RunConfig,
    provider: Provider,
    store: SeededStore | None = None,
) -> DetectionReport:
    """Run the full pipeline over one repository for every profile.

    A failure confined to one pattern degrades that pattern's verdict to
    score 0 with an error note; repository-level failures abort the run.
    """
    started = datetime.now(timezone.utc).isoformat()
    snapshot = scan_repo(repo_root, config.scan, trace=provider.trace)
    summary = summarize_repo(snapshot)
    if store is None:
        store = seed(profiles, provider)

    verdicts: list[Verdict] = []
    for profile in sorted(profiles, key=lambda p: p.name):
        try:
            verdicts.append(_detect_one(snapshot, summary, profile, config, provider, store))
        except PatternScoutError as exc:
            provider.trace.warning(f"pattern {profile.name!r} failed: {exc}", pattern=profile.name)
            verdicts.append(
                Verdict(
                    pattern_name=profile.name,
                    score=0,
                    detected=0 >= config.threshold,
                    explanation="Detection failed; see error note."[:EXPLANATION_LIMIT],
                    evidence_paths=(),
                    error=str(exc),
                )
            )
    finished = datetime.now(timezone.utc).isoformat()
    metadata = {
        "model": provider.model,
        "seed": provider.seed,
        "config_hash": config.config_hash(),
        "repo_path": snapshot.root,
        "tree_trimmed": snapshot.trimmed,
        "started_at": started,
        "finished_at": finished,
    }
    return DetectionReport(repo=Path(snapshot.root).name, verdicts=tuple(verdicts), metadata=metadata)


def _detect_one(
    snapshot,
    summary: RepoSummary,
    profile: PatternProfile,
    config: RunConfig,
    provider: Provider,
    store: SeededStore,
) -> Verdict:
    tree_result = provider.filter_file_tree(snapshot.tree_text, profile)
    candidates, contents = build_candidates(
        snapshot, profile, tree_result, provider, store, config.weights, config.scan.truncate_limit
    )
    top = select_top(candidates, config.top_n)
    if not top:
        return Verdict(
            pattern_name=profile.name,
            score=0,
            detected=0 >= config.threshold,
            explanation="No candidate files matched globs or the tree filter.",
            evidence_paths=(),
        )
    plan_ = plan(profile, summary, provider)
    evidence = investigate(top, contents, plan_, profile, summary, provider)
    return deliberate(evidence, profile, provider, config.threshold)


def save_report(report: DetectionReport, path: str | Path) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_report(path: str | Path) -> DetectionReport:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    verdicts = tuple(
        Verdict(
            pattern_name=v["pattern_name"],
            score=int(v["score"]),
            detected=bool(v["detected"]),
            explanation=v["explanation"],
            evidence_paths=tuple(v["evidence_paths"]),
            error=v.get("error"),
        )
        for v in doc["verdicts"]
    )
    return DetectionReport(repo=doc["repo"], verdicts=verdicts, metadata=doc.get("metadata", {}))
