"""Repository scanning: file inventory, rendered file tree, and safe reads.

The rendered tree is the primary artifact shown to the tree-filter step;
it must stay within a character budget, so oversized trees are trimmed by
pruning directories deepest-first, then largest-first, each replaced by an
elision line carrying its file count.
"""

from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass
from pathlib import Path

from .config import ScanConfig
from .errors import ScanError
from .globmatch import compile_glob
from .trace import TraceLog

logger = logging.getLogger(__name__)

TRUNCATION_MARKER = "\n…[truncated]"
BINARY_SNIFF_BYTES = 8_192
README_EXCERPT_LIMIT = 2_000
_INDENT = "  "


@dataclass(frozen=True)
class FileEntry:
    path: str  # relative, slash-separated
    size: int  # bytes
    is_text: bool


@dataclass(frozen=True)
class RepoSnapshot:
    root: str  # absolute path
    files: tuple[FileEntry, ...]  # sorted lexicographically by path
    tree_text: str
    trimmed: bool

    @property
    def paths(self) -> tuple[str, ...]:
        return tuple(f.path for f in self.files)


@dataclass(frozen=True)
class FileContent:
    path: str
    text: str
    truncated: bool
    is_text: bool


@dataclass(frozen=True)
class RepoSummary:
    name: str
    language_histogram: dict[str, int]  # extension (no dot, lowercased) -> count
    file_count: int
    readme_excerpt: str


def _looks_binary(head: bytes) -> bool:
    return b"\x00" in head


def scan_repo(root: str | Path, config: ScanConfig | None = None, trace: TraceLog | None = None) -> RepoSnapshot:
    """Walk a repository and build its deterministic file inventory.

    Ignored directories (``.git`` and friends, configurable) are skipped by
    name at any depth. Symlink cycles are skipped with a traced warning.
    """
    config = config or ScanConfig()
    root_path = Path(root)
    if not root_path.is_dir():
        raise ScanError(f"repository root missing or not a directory: {root_path}")
    root_path = root_path.resolve()

    ignore = set(config.ignore_dirs)
    entries: list[FileEntry] = []
    seen_dirs: set[tuple[int, int]] = set()

    def warn(note: str) -> None:
        logger.warning(note)
        if trace is not None:
            trace.warning(note)

    for dirpath, dirnames, filenames in os.walk(root_path, followlinks=True):
        kept = []
        for d in sorted(dirnames):
            if d in ignore:
                continue
            full = os.path.join(dirpath, d)
            try:
                st = os.stat(full)
            except OSError:
                warn(f"unreadable directory skipped: {full}")
                continue
            key = (st.st_dev, st.st_ino)
            if key in seen_dirs:
                warn(f"symlink cycle skipped: {full}")
                continue
            seen_dirs.add(key)
            kept.append(d)
        dirnames[:] = kept

        for name in filenames:
            full = Path(dirpath) / name
            try:
                if not full.is_file():  # broken symlinks, sockets, ...
                    continue
                size = full.stat().st_size
                with full.open("rb") as fh:
                    head = fh.read(BINARY_SNIFF_BYTES)
            except OSError:
                warn(f"unreadable file skipped: {full}")
                continue
            rel = os.path.relpath(full, root_path).replace(os.sep, "/")
            entries.append(FileEntry(path=rel, size=size, is_text=not _looks_binary(head)))

    entries.sort(key=lambda e: e.path)
    tree_text, trimmed = _render_paths([e.path for e in entries], config.tree_budget)
    return RepoSnapshot(root=str(root_path), files=tuple(entries), tree_text=tree_text, trimmed=trimmed)


class _Node:
    __slots__ = ("dirs", "files")

    def __init__(self) -> None:
        self.dirs: dict[str, _Node] = {}
        self.files: list[str] = []

    def file_count(self) -> int:
        return len(self.files) + sum(d.file_count() for d in self.dirs.values())


_ELISION_RE = re.compile(r"… \(\+(\d+) files\)$")


def _hidden_file_count(dropped_lines: list[str]) -> int:
    """Files hidden by dropping these rendered lines (elisions carry counts)."""
    hidden = 0
    for line in dropped_lines:
        s = line.strip()
        m = _ELISION_RE.search(s)
        if m:
            hidden += int(m.group(1))
        elif s and not s.endswith("/"):
            hidden += 1
    return hidden


def _build_nodes(paths: list[str]) -> _Node:
    root = _Node()
    for path in paths:
        parts = path.split("/")
        node = root
        for part in parts[:-1]:
            node = node.dirs.setdefault(part, _Node())
        node.files.append(parts[-1])
    return root


def _collect_dirs(node: _Node, prefix: str, depth: int, out: list[tuple[str, int, int]]) -> None:
    for name, child in node.dirs.items():
        dir_path = f"{prefix}{name}"
        out.append((dir_path, depth, child.file_count()))
        _collect_dirs(child, dir_path + "/", depth + 1, out)


def _render_node(node: _Node, depth: int, prefix: str, pruned: set[str], lines: list[str]) -> None:
    names = sorted(set(node.dirs) | set(node.files))
    indent = _INDENT * depth
    for name in names:
        if name in node.dirs:
            child = node.dirs[name]
            dir_path = f"{prefix}{name}"
            if dir_path in pruned:
                lines.append(f"{indent}{name}/ … (+{child.file_count()} files)")
            else:
                lines.append(f"{indent}{name}/")
                _render_node(child, depth + 1, dir_path + "/", pruned, lines)
        if name in node.files:
            for _ in range(node.files.count(name)):
                lines.append(f"{indent}{name}")


def _render_paths(paths: list[str], char_budget: int) -> tuple[str, bool]:
    root = _build_nodes(paths)
    dirs: list[tuple[str, int, int]] = []
    _collect_dirs(root, "", 0, dirs)
    # prune order: deepest first, then largest, then path for determinism
    candidates = sorted(dirs, key=lambda t: (-t[1], -t[2], t[0]))

    pruned: set[str] = set()

    def render() -> str:
        lines: list[str] = []
        _render_node(root, 0, "", pruned, lines)
        return "\n".join(lines)

    text = render()
    trimmed = False
    for dir_path, _depth, _count in candidates:
        if len(text) <= char_budget:
            break
        if any(dir_path.startswith(p + "/") for p in pruned):
            continue  # already hidden beneath a pruned ancestor
        pruned.add(dir_path)
        pruned = {p for p in pruned if not p.startswith(dir_path + "/")}
        trimmed = True
        text = render()

    if len(text) > char_budget:
        # every directory is already elided; drop trailing lines as a last resort
        trimmed = True
        all_lines = text.splitlines()
        text = ""
        for keep in range(len(all_lines), -1, -1):
            hidden = _hidden_file_count(all_lines[keep:])
            tail = f"… (+{hidden} files not shown)"
            candidate = "\n".join(all_lines[:keep] + [tail])
            if len(candidate) <= char_budget:
                text = candidate
                break
    return text, trimmed


def render_tree(snapshot: RepoSnapshot, char_budget: int) -> tuple[str, bool]:
    """Render the snapshot's file tree within ``char_budget`` characters."""
    if char_budget < 1_000:
        raise ScanError(f"tree budget must be >= 1000, got {char_budget}")
    return _render_paths(list(snapshot.paths), char_budget)


def parse_tree_paths(tree_text: str) -> set[str]:
    """Recover the file paths visible in a rendered tree.

    Elided directories contribute nothing; this is the validation set for
    paths an LLM claims to have seen in the tree.
    """
    paths: set[str] = set()
    stack: list[str] = []
    for line in tree_text.splitlines():
        stripped = line.lstrip(" ")
        depth = (len(line) - len(stripped)) // len(_INDENT)
        del stack[depth:]
        if stripped.startswith("…"):
            continue
        if stripped.endswith("/"):
            stack.append(stripped[:-1])
        elif "/ … (" in stripped:
            continue  # pruned directory: children not visible
        else:
            paths.add("/".join(stack + [stripped]))
    return paths


def match_globs(snapshot: RepoSnapshot, globs: list[str]) -> list[str]:
    """Union of per-glob matches over the snapshot, deduplicated and sorted."""
    compiled = [compile_glob(g) for g in globs]
    matched = {p for p in snapshot.paths for g in compiled if g.match(p)}
    return sorted(matched)


def read_truncated(root: str | Path, rel_path: str, limit: int = 50_000) -> FileContent:
    """Read a repository file as text, truncating to ``limit`` characters.

    Truncated content ends with the truncation marker, counted inside the
    limit. Binary files yield an empty-content, non-text entry.
    """
    if limit < 1:
        raise ScanError(f"truncation limit must be >= 1, got {limit}")
    root_path = Path(root).resolve()
    full = (root_path / rel_path).resolve()
    if not full.is_relative_to(root_path):
        raise ScanError(f"path escapes repository root: {rel_path}")
    if not full.is_file():
        raise ScanError(f"no such file under root: {rel_path}")
    try:
        raw = full.read_bytes()
    except OSError as exc:
        raise ScanError(f"unreadable file {rel_path}: {exc}") from exc
    if _looks_binary(raw[:BINARY_SNIFF_BYTES]):
        return FileContent(path=rel_path, text="", truncated=False, is_text=False)
    text = raw.decode("utf-8", errors="replace")
    if len(text) <= limit:
        return FileContent(path=rel_path, text=text, truncated=False, is_text=True)
    keep = max(0, limit - len(TRUNCATION_MARKER))
    clipped = (text[:keep] + TRUNCATION_MARKER)[:limit]
    return FileContent(path=rel_path, text=clipped, truncated=True, is_text=True)


def summarize_repo(snapshot: RepoSnapshot) -> RepoSummary:
    """Deterministic repository summary: README excerpt plus extension histogram."""
    histogram: dict[str, int] = {}
    for entry in snapshot.files:
        name = entry.path.rsplit("/", 1)[-1]
        stem, dot, ext = name.rpartition(".")
        key = ext.lower() if dot and stem else ""
        histogram[key] = histogram.get(key, 0) + 1

    excerpt = ""
    readmes = sorted(
        e.path for e in snapshot.files if "/" not in e.path and e.path.lower().startswith("readme")
    )
    if readmes:
        raw = (Path(snapshot.root) / readmes[0]).read_bytes()
        if not _looks_binary(raw[:BINARY_SNIFF_BYTES]):
            excerpt = raw.decode("utf-8", errors="replace")[:README_EXCERPT_LIMIT]

    return RepoSummary(
        name=Path(snapshot.root).name,
        language_histogram=dict(sorted(histogram.items())),
        file_count=len(snapshot.files),
        readme_excerpt=excerpt,
    )
