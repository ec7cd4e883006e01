"""Shared fixtures: synthetic repositories and offline providers."""

from __future__ import annotations

from pathlib import Path

import pytest

from patternscout.config import RunConfig
from patternscout.provider import KeywordOracleBackend, Provider
from patternscout.trace import TraceLog


def write_files(root: Path, files: dict[str, str | bytes]) -> Path:
    """Materialize a file map under root; keys are slash-separated paths."""
    for rel, content in files.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(content, bytes):
            path.write_bytes(content)
        else:
            path.write_text(content, encoding="utf-8")
    return root


def build_fixture_repo(root: Path) -> Path:
    """A >=30-file synthetic repo carrying a container-pattern fixture and
    deliberately no service-mesh vocabulary anywhere."""
    files: dict[str, str | bytes] = {
        "README.md": "# orders\n\nA small demo service used in offline tests.\n",
        "Dockerfile": (
            "FROM python:3.12-slim\n"
            "WORKDIR /app\n"
            "COPY . .\n"
            "EXPOSE 8080\n"
            'CMD ["python", "-m", "orders"]\n'
        ),
        "Makefile": "build:\n\tpython -m build\n\ntest:\n\tpytest\n",
        "deploy/app.yaml": "kind: Service\nmetadata:\n  name: orders\nspec:\n  ports:\n    - port: 8080\n",
        "deploy/db.yaml": "kind: ConfigMap\nmetadata:\n  name: orders-db\ndata:\n  host: db.internal\n",
        "config/settings.toml": "[server]\nport = 8080\nworkers = 2\n",
        "config/logging.toml": "[log]\nlevel = 'info'\n",
        "data/blob.bin": b"\x00\x01\x02binary",
        ".git/HEAD": "ref: refs/heads/main\n",
        ".git/config": "[core]\n\trepositoryformatversion = 0\n",
    }
    for i in range(10):
        files[f"src/module_{i:02d}.py"] = f"def handler_{i}(request):\n    return {i}\n"
    for i in range(6):
        files[f"tests/test_module_{i:02d}.py"] = f"def test_{i}():\n    assert {i} == {i}\n"
    for i in range(5):
        files[f"docs/chapter_{i}.md"] = f"# Chapter {i}\n\nPlain prose, nothing special.\n"
    for i in range(3):
        files[f"scripts/task_{i}.sh"] = f"#!/bin/sh\necho task {i}\n"
    return write_files(root, files)


@pytest.fixture
def fixture_repo(tmp_path: Path) -> Path:
    repo = tmp_path / "orders-repo"
    repo.mkdir()
    return build_fixture_repo(repo)


@pytest.fixture
def oracle_provider(tmp_path: Path) -> Provider:
    trace = TraceLog(tmp_path / "traces.jsonl")
    return Provider(KeywordOracleBackend(), seed=0, trace=trace)


@pytest.fixture
def run_config() -> RunConfig:
    cfg = RunConfig()
    cfg.validate()
    return cfg
