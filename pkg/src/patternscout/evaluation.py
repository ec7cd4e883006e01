"""Evaluation against annotated ground truth: confusion metrics, the file
dominance index, correlation, and the dataset filter.

All operations are pure functions over in-memory data. Ratios with a zero
denominator are reported as ``None`` (undefined), never silently 0.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import EvaluationError

KB_PER_MB = 1024
MIN_STARS = 10
MIN_AGE_MONTHS = 6.0
MIN_SIZE_KB = 100.0
MAX_SIZE_KB = 100.0 * KB_PER_MB
MIN_MATCHING_ARTIFACTS = 3
MIN_RECENT_COMMITS = 5
MIN_CONTRIBUTORS = 2


# ---------------------------------------------------------------------------
# ground truth and confusion metrics


@dataclass(frozen=True)
class Annotation:
    repo_id: str
    pattern_name: str
    present: bool


@dataclass(frozen=True)
class AnnotationSet:
    records: tuple[Annotation, ...]

    def __post_init__(self) -> None:
        keys = [(r.repo_id, r.pattern_name) for r in self.records]
        if len(set(keys)) != len(keys):
            dupes = sorted({k for k in keys if keys.count(k) > 1})
            raise EvaluationError(f"duplicate (repo, pattern) annotations: {dupes[:5]}")

    def lookup(self, repo_id: str, pattern_name: str) -> bool:
        for r in self.records:
            if r.repo_id == repo_id and r.pattern_name == pattern_name:
                return r.present
        raise EvaluationError(f"no annotation for repo {repo_id!r}, pattern {pattern_name!r}")

    def as_mapping(self) -> dict[tuple[str, str], bool]:
        return {(r.repo_id, r.pattern_name): r.present for r in self.records}

    def prevalence(self) -> dict[str, float]:
        """Fraction of annotated repos where each pattern is marked present."""
        totals: Counter[str] = Counter()
        positives: Counter[str] = Counter()
        for r in self.records:
            totals[r.pattern_name] += 1
            positives[r.pattern_name] += int(r.present)
        return {p: positives[p] / totals[p] for p in sorted(totals)}


def load_annotations(path: str | Path, valid_patterns: Iterable[str] | None = None) -> AnnotationSet:
    """Load the ground-truth CSV with header ``repo_id,pattern,present``."""
    p = Path(path)
    if not p.is_file():
        raise EvaluationError(f"annotation file missing: {p}")
    records: list[Annotation] = []
    valid = set(valid_patterns) if valid_patterns is not None else None
    with p.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = {"repo_id", "pattern", "present"}
        if reader.fieldnames is None or set(reader.fieldnames) != expected:
            raise EvaluationError(f"annotation header must be repo_id,pattern,present (got {reader.fieldnames})")
        for row_number, row in enumerate(reader, start=2):
            raw = row["present"].strip().lower()
            if raw not in ("true", "false"):
                raise EvaluationError(f"{p}:{row_number}: present must be true or false, got {row['present']!r}")
            pattern = row["pattern"].strip()
            if valid is not None and pattern not in valid:
                raise EvaluationError(f"{p}:{row_number}: unknown pattern {pattern!r}")
            records.append(Annotation(repo_id=row["repo_id"].strip(), pattern_name=pattern, present=raw == "true"))
    return AnnotationSet(records=tuple(records))


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise EvaluationError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            tn=self.tn + other.tn,
            fn=self.fn + other.fn,
        )


def confusion(
    verdicts: Iterable[tuple[str, str, bool]],
    truth: AnnotationSet,
) -> tuple[ConfusionMatrix, dict[str, ConfusionMatrix]]:
    """Count TP/FP/TN/FN overall and per pattern.

    ``verdicts`` are (repo_id, pattern_name, detected) triples; each must
    have a matching annotation.
    """
    lookup = truth.as_mapping()
    counts: dict[str, dict[str, int]] = {}
    for repo_id, pattern_name, detected in verdicts:
        key = (repo_id, pattern_name)
        if key not in lookup:
            raise EvaluationError(f"no annotation for repo {repo_id!r}, pattern {pattern_name!r}")
        actual = lookup[key]
        cell = ("tp" if actual else "fp") if detected else ("fn" if actual else "tn")
        counts.setdefault(pattern_name, {"tp": 0, "fp": 0, "tn": 0, "fn": 0})[cell] += 1
    per_pattern = {name: ConfusionMatrix(**cells) for name, cells in sorted(counts.items())}
    overall = ConfusionMatrix()
    for cm in per_pattern.values():
        overall = overall + cm
    return overall, per_pattern


def metrics(cm: ConfusionMatrix) -> dict[str, float | None]:
    """Precision, recall, accuracy, and F1; 0/0 ratios come back as None."""
    if cm.total == 0:
        raise EvaluationError("empty confusion matrix")
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp > 0 else None
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn > 0 else None
    accuracy = (cm.tp + cm.tn) / cm.total
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return {"precision": precision, "recall": recall, "accuracy": accuracy, "f1": f1}


# ---------------------------------------------------------------------------
# file dominance


@dataclass(frozen=True)
class FdiRow:
    filename: str
    count: int
    fdi: float


@dataclass(frozen=True)
class FdiTable:
    pattern_name: str
    rows: tuple[FdiRow, ...]
    unique_files: int  # N: distinct basenames analyzed for the pattern
    total_occurrences: int  # T: sum of all occurrence counts


def fdi_value(count: int, unique_files: int, total_occurrences: int) -> float:
    """How many times more often a file was analyzed than the average file:
    count divided by the mean occurrence count (total/unique)."""
    if unique_files < 1 or total_occurrences < 1:
        raise EvaluationError("FDI needs at least one analyzed file")
    return count * unique_files / total_occurrences


def fdi_table_from_counts(pattern_name: str, counts: Mapping[str, int]) -> FdiTable:
    """Build the dominance table from basename occurrence counts."""
    if not counts:
        raise EvaluationError(f"no analyzed files for pattern {pattern_name!r}")
    n = len(counts)
    t = sum(counts.values())
    rows = tuple(
        sorted(
            (FdiRow(filename=name, count=c, fdi=fdi_value(c, n, t)) for name, c in counts.items()),
            key=lambda r: (-r.fdi, r.filename),
        )
    )
    return FdiTable(pattern_name=pattern_name, rows=rows, unique_files=n, total_occurrences=t)


def compute_fdi(logs: Iterable[Mapping[str, Any]], pattern: str) -> FdiTable:
    """Dominance table for one pattern from trace records.

    Counts investigation records (first attempt only, so transport or
    schema re-asks of one exchange do not double-count) by file basename,
    pooled across every repo present in the log set.
    """
    counts: Counter[str] = Counter()
    for record in logs:
        if (
            record.get("schema_id") == "investigation"
            and record.get("pattern") == pattern
            and record.get("attempt", 1) == 1
            and record.get("path")
        ):
            counts[str(record["path"]).rsplit("/", 1)[-1]] += 1
    if not counts:
        raise EvaluationError(f"no investigation records for pattern {pattern!r}")
    return fdi_table_from_counts(pattern, counts)


def patterns_in_logs(logs: Iterable[Mapping[str, Any]]) -> list[str]:
    return sorted({str(r["pattern"]) for r in logs if r.get("schema_id") == "investigation" and r.get("pattern")})


# ---------------------------------------------------------------------------
# correlation


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(xs) != len(ys):
        raise EvaluationError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise EvaluationError("correlation needs at least two points")
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt(np.sum(dx * dx)))
    sy = float(np.sqrt(np.sum(dy * dy)))
    if sx == 0.0 or sy == 0.0:
        raise EvaluationError("zero variance in one of the arguments")
    r = float(np.sum(dx * dy)) / (sx * sy)
    return max(-1.0, min(1.0, r))


# ---------------------------------------------------------------------------
# dataset filter


@dataclass(frozen=True)
class RepoMeta:
    repo_id: str
    stars: int
    age_months: float
    size_kb: float
    matching_artifacts: int
    recent_commits: int  # commits in the past three months
    contributors: int


_REPO_META_FIELDS = (
    "repo_id",
    "stars",
    "age_months",
    "size_kb",
    "matching_artifacts",
    "recent_commits",
    "contributors",
)


def repo_passes_filter(repo: RepoMeta) -> bool:
    """All six selection criteria, every bound inclusive."""
    return (
        repo.stars >= MIN_STARS
        and repo.age_months >= MIN_AGE_MONTHS
        and MIN_SIZE_KB <= repo.size_kb <= MAX_SIZE_KB
        and repo.matching_artifacts >= MIN_MATCHING_ARTIFACTS
        and repo.recent_commits >= MIN_RECENT_COMMITS
        and repo.contributors >= MIN_CONTRIBUTORS
    )


def filter_dataset(repos: Sequence[RepoMeta]) -> list[RepoMeta]:
    """Keep repositories satisfying every selection criterion."""
    return [r for r in repos if repo_passes_filter(r)]


def load_repo_metadata(path: str | Path) -> list[RepoMeta]:
    """Load repository metadata CSV; a missing field is an error."""
    p = Path(path)
    if not p.is_file():
        raise EvaluationError(f"metadata file missing: {p}")
    repos: list[RepoMeta] = []
    with p.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = set(reader.fieldnames or ())
        missing = set(_REPO_META_FIELDS) - fields
        if missing:
            raise EvaluationError(f"metadata header missing fields: {sorted(missing)}")
        for row_number, row in enumerate(reader, start=2):
            try:
                repos.append(
                    RepoMeta(
                        repo_id=row["repo_id"].strip(),
                        stars=int(row["stars"]),
                        age_months=float(row["age_months"]),
                        size_kb=float(row["size_kb"]),
                        matching_artifacts=int(row["matching_artifacts"]),
                        recent_commits=int(row["recent_commits"]),
                        contributors=int(row["contributors"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise EvaluationError(f"{p}:{row_number}: bad metadata value: {exc}") from exc
    return repos


# ---------------------------------------------------------------------------
# report rendering


def _fmt(value: float | None, width: int = 6) -> str:
    return f"{value:>{width}.3f}" if value is not None else f"{'undef':>{width}}"


def render_metric_block(cm: ConfusionMatrix, stats: Mapping[str, float | None]) -> str:
    """Human-readable overall block: the confusion counts plus derived metrics."""
    lines = [
        f"TP={cm.tp}  FP={cm.fp}  TN={cm.tn}  FN={cm.fn}  (total {cm.total})",
        f"precision {_fmt(stats['precision'])}   recall {_fmt(stats['recall'])}   "
        f"accuracy {_fmt(stats['accuracy'])}   f1 {_fmt(stats['f1'])}",
    ]
    return "\n".join(lines)


def render_pattern_table(
    per_pattern: Mapping[str, ConfusionMatrix],
    prevalence: Mapping[str, float] | None = None,
    max_fdi: Mapping[str, float] | None = None,
) -> str:
    """Per-pattern table with columns PV, P, R, A, F1, and Max FDI."""
    name_width = max([len(n) for n in per_pattern] + [7])
    header = f"{'Pattern':<{name_width}}  {'PV':>6}  {'P':>6}  {'R':>6}  {'A':>6}  {'F1':>6}  {'Max FDI':>8}"
    lines = [header, "-" * len(header)]
    for name, cm in per_pattern.items():
        stats = metrics(cm)
        pv = prevalence.get(name) if prevalence else None
        fdi = max_fdi.get(name) if max_fdi else None
        fdi_text = f"{fdi:>8.2f}" if fdi is not None else f"{'-':>8}"
        lines.append(
            f"{name:<{name_width}}  {_fmt(pv)}  {_fmt(stats['precision'])}  {_fmt(stats['recall'])}  "
            f"{_fmt(stats['accuracy'])}  {_fmt(stats['f1'])}  {fdi_text}"
        )
    return "\n".join(lines)
