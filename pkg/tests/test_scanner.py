"""Repository scanner: walking, tree rendering and trimming, reads, summary."""

from __future__ import annotations

import os

import pytest

from patternscout.config import ScanConfig
from patternscout.errors import ScanError
from patternscout.scanner import (
    TRUNCATION_MARKER,
    RepoSnapshot,
    match_globs,
    parse_tree_paths,
    read_truncated,
    render_tree,
    scan_repo,
    summarize_repo,
)

from conftest import write_files


def _snapshot(paths: list[str], budget: int = 60_000) -> RepoSnapshot:
    from patternscout.scanner import FileEntry, _render_paths

    text, trimmed = _render_paths(sorted(paths), budget)
    return RepoSnapshot(
        root="/nonexistent",
        files=tuple(FileEntry(path=p, size=0, is_text=True) for p in sorted(paths)),
        tree_text=text,
        trimmed=trimmed,
    )


class TestScanRepo:
    def test_empty_directory(self, tmp_path):
        snap = scan_repo(tmp_path)
        assert snap.files == ()
        assert snap.trimmed is False
        assert snap.tree_text == ""

    def test_skips_vcs_internals(self, tmp_path):
        # 12 files on disk, 2 inside .git -> 10 scanned
        files = {f"src/f{i}.py": "x = 1\n" for i in range(8)}
        files["README.md"] = "readme\n"
        files["Makefile"] = "all:\n"
        files[".git/HEAD"] = "ref\n"
        files[".git/config"] = "[core]\n"
        write_files(tmp_path, files)

        # independent count of what should be seen
        expected = sorted(
            os.path.join(dirpath, name).replace(str(tmp_path) + os.sep, "").replace(os.sep, "/")
            for dirpath, dirs, names in os.walk(tmp_path)
            if ".git" not in dirpath
            for name in names
        )
        assert len(expected) == 10

        snap = scan_repo(tmp_path)
        assert list(snap.paths) == expected

    def test_paths_relative_sorted_slash_separated(self, fixture_repo):
        snap = scan_repo(fixture_repo)
        assert list(snap.paths) == sorted(snap.paths)
        for path in snap.paths:
            assert not path.startswith("/")
            assert ".." not in path.split("/")
            assert "\\" not in path

    def test_missing_root(self, tmp_path):
        with pytest.raises(ScanError):
            scan_repo(tmp_path / "nope")

    def test_binary_flagging(self, tmp_path):
        write_files(tmp_path, {"a.txt": "hello", "b.bin": b"\x00\x01"})
        snap = scan_repo(tmp_path)
        flags = {e.path: e.is_text for e in snap.files}
        assert flags == {"a.txt": True, "b.bin": False}

    def test_scan_deterministic(self, fixture_repo):
        first = scan_repo(fixture_repo)
        second = scan_repo(fixture_repo)
        assert first == second

    def test_symlink_cycle_skipped(self, tmp_path):
        write_files(tmp_path, {"a/file.txt": "x"})
        try:
            os.symlink(tmp_path, tmp_path / "a" / "loop")
        except OSError:
            pytest.skip("symlinks unavailable")
        snap = scan_repo(tmp_path)
        assert [p for p in snap.paths if "loop" not in p] == list(snap.paths)

    def test_custom_ignore_dirs(self, tmp_path):
        write_files(tmp_path, {"keep/a.txt": "x", "drop/b.txt": "y"})
        snap = scan_repo(tmp_path, ScanConfig(ignore_dirs=("drop",)))
        assert list(snap.paths) == ["keep/a.txt"]


class TestRenderTree:
    def test_small_repo_untrimmed(self):
        snap = _snapshot(["a/b.txt", "a/c/d.py", "top.md"])
        text, trimmed = render_tree(snap, 10_000)
        assert trimmed is False
        assert text == "a/\n  b.txt\n  c/\n    d.py\ntop.md"

    def test_round_trip_through_parser(self):
        paths = ["a/b.txt", "a/c/d.py", "top.md", "z/deep/deeper/leaf.rs"]
        snap = _snapshot(paths)
        text, _ = render_tree(snap, 10_000)
        assert parse_tree_paths(text) == set(paths)

    def test_large_repo_trimmed_within_budget(self):
        paths = [f"pkg_{d:02d}/sub_{s}/file_{f:03d}.py" for d in range(10) for s in range(4) for f in range(25)]
        assert len(paths) == 1_000
        snap = _snapshot(paths, budget=2_000)
        text, trimmed = render_tree(snap, 2_000)
        assert trimmed is True
        assert len(text) <= 2_000
        # every elision line carries a file count
        for line in text.splitlines():
            if "…" in line:
                assert "(+" in line and "files" in line

    def test_trimming_prefers_depth(self):
        # deep directory gets pruned before shallower ones
        paths = [f"top/deep/deeper/file_{i:03d}.txt" for i in range(80)]
        paths += [f"top/g{i:02d}.txt" for i in range(5)]
        snap = _snapshot(paths, budget=60_000)
        text, trimmed = render_tree(snap, 1_000)
        assert trimmed
        assert "deeper/ … (+80 files)" in text
        # the shallow files survive
        assert "g00.txt" in text and "g04.txt" in text

    def test_same_input_byte_identical(self):
        paths = [f"d{i}/f{j}.txt" for i in range(5) for j in range(20)]
        snap = _snapshot(paths)
        assert render_tree(snap, 1_200) == render_tree(snap, 1_200)

    def test_budget_precondition(self):
        snap = _snapshot(["a.txt"])
        with pytest.raises(ScanError):
            render_tree(snap, 999)


class TestMatchGlobs:
    def test_paper_example_glob(self):
        snap = _snapshot(["a/src/m.py", "src/m.py", "a/src/sub/m.py"])
        assert match_globs(snap, ["**/src/*.py"]) == ["a/src/m.py", "src/m.py"]

    def test_star_does_not_cross_separator(self):
        snap = _snapshot(["a.txt", "d/b.txt"])
        assert match_globs(snap, ["*"]) == ["a.txt"]

    def test_union_deduplicated_sorted(self):
        snap = _snapshot(["b.py", "a.py", "c.txt"])
        assert match_globs(snap, ["*.py", "a.*", "*.py"]) == ["a.py", "b.py"]

    def test_subset_of_snapshot(self):
        paths = [f"x/y{i}.py" for i in range(10)] + ["a.md"]
        snap = _snapshot(paths)
        matched = match_globs(snap, ["**/*.py", "**"])
        assert set(matched) <= set(snap.paths)


class TestReadTruncated:
    @pytest.mark.parametrize("size,expect_truncated", [(49_999, False), (50_000, False), (50_001, True)])
    def test_truncation_boundaries(self, tmp_path, size, expect_truncated):
        write_files(tmp_path, {"big.txt": "x" * size})
        content = read_truncated(tmp_path, "big.txt", limit=50_000)
        assert content.truncated is expect_truncated
        if expect_truncated:
            assert len(content.text) == 50_000
            assert content.text.endswith(TRUNCATION_MARKER)
        else:
            assert content.text == "x" * size

    def test_marker_counts_inside_limit(self, tmp_path):
        write_files(tmp_path, {"f.txt": "abcdefghij" * 20})
        content = read_truncated(tmp_path, "f.txt", limit=100)
        assert len(content.text) == 100
        assert content.text == "abcdefghij" * 8 + "abcdefg" + TRUNCATION_MARKER

    def test_binary_file_policy(self, tmp_path):
        write_files(tmp_path, {"blob": b"abc\x00def"})
        content = read_truncated(tmp_path, "blob")
        assert content.is_text is False
        assert content.text == ""
        assert content.truncated is False

    def test_path_escape_rejected(self, tmp_path):
        (tmp_path / "inner").mkdir()
        write_files(tmp_path, {"outside.txt": "secret"})
        with pytest.raises(ScanError):
            read_truncated(tmp_path / "inner", "../outside.txt")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScanError):
            read_truncated(tmp_path, "ghost.txt")

    def test_output_never_exceeds_limit(self, tmp_path):
        write_files(tmp_path, {"f.txt": "y" * 500})
        for limit in (1, 5, 13, 14, 50, 499, 500, 501):
            content = read_truncated(tmp_path, "f.txt", limit=limit)
            assert len(content.text) <= limit


class TestSummarizeRepo:
    def test_short_readme_full_excerpt(self, tmp_path):
        write_files(tmp_path, {"README.md": "r" * 100})
        summary = summarize_repo(scan_repo(tmp_path))
        assert summary.readme_excerpt == "r" * 100

    def test_no_readme(self, tmp_path):
        write_files(tmp_path, {"main.rs": "fn main() {}"})
        summary = summarize_repo(scan_repo(tmp_path))
        assert summary.readme_excerpt == ""
        assert summary.language_histogram == {"rs": 1}

    def test_histogram_counts(self, tmp_path):
        files = {f"src/m{i}.rs": "x" for i in range(5)}
        files.update({f"cfg/c{i}.yaml": "y" for i in range(3)})
        write_files(tmp_path, files)
        summary = summarize_repo(scan_repo(tmp_path))
        assert summary.language_histogram == {"rs": 5, "yaml": 3}
        assert summary.file_count == 8
        assert sum(summary.language_histogram.values()) == summary.file_count

    def test_excerpt_capped(self, tmp_path):
        write_files(tmp_path, {"README.md": "a" * 5_000})
        summary = summarize_repo(scan_repo(tmp_path))
        assert len(summary.readme_excerpt) == 2_000

    def test_extensionless_files_counted(self, tmp_path):
        write_files(tmp_path, {"Dockerfile": "FROM x", "Makefile": "all:", ".gitignore": "*.pyc"})
        summary = summarize_repo(scan_repo(tmp_path))
        assert summary.language_histogram == {"": 3}
