"""Run configuration: defaults, YAML loading, flag overrides, and hashing.

A run is fully described by one RunConfig; its canonical hash is stamped
into every report so results can be traced back to the exact settings.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError

DEFAULT_IGNORE_DIRS = (
    ".git",
    ".hg",
    ".svn",
    "node_modules",
    "vendor",
    "__pycache__",
    ".patternscout",
)

API_KEY_ENV_VAR = "PATTERNSCOUT_API_KEY"


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "mock"  # "http" | "mock"
    endpoint: str = "https://api.openai.com/v1"
    model: str = "default-model"
    embed_model: str = "default-embed"
    seed: int = 0
    max_inflight: int = 4
    mock_mode: str = "keyword_oracle"  # "keyword_oracle" | "scripted"
    script_path: str | None = None

    def validate(self) -> None:
        if self.kind not in ("http", "mock"):
            raise ConfigError(f"provider.kind must be 'http' or 'mock', got {self.kind!r}")
        if self.mock_mode not in ("keyword_oracle", "scripted"):
            raise ConfigError(f"provider.mock_mode must be 'keyword_oracle' or 'scripted', got {self.mock_mode!r}")
        if self.max_inflight < 1:
            raise ConfigError("provider.max_inflight must be >= 1")


@dataclass(frozen=True)
class ScanConfig:
    tree_budget: int = 60_000
    truncate_limit: int = 50_000
    ignore_dirs: tuple[str, ...] = DEFAULT_IGNORE_DIRS

    def validate(self) -> None:
        if self.tree_budget < 1_000:
            raise ConfigError("scan.tree_budget must be >= 1000")
        if self.truncate_limit < 1:
            raise ConfigError("scan.truncate_limit must be >= 1")


@dataclass(frozen=True)
class SignalWeights:
    """Relative weight of the three file-priority signals; must sum to 1."""

    tree: float = 0.7
    keyword: float = 0.2
    embed: float = 0.1

    def validate(self) -> None:
        for name, w in (("tree", self.tree), ("keyword", self.keyword), ("embed", self.embed)):
            if w < 0:
                raise ConfigError(f"weights.{name} must be >= 0")
        total = self.tree + self.keyword + self.embed
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"weights must sum to 1 (got {total!r})")


@dataclass(frozen=True)
class RunConfig:
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    weights: SignalWeights = field(default_factory=SignalWeights)
    top_n: int = 20
    threshold: int = 5
    profiles_dir: str | None = None  # None -> packaged built-ins
    store_path: str = ".patternscout/store.json"
    out: str | None = None
    traces: str | None = None

    def validate(self) -> None:
        self.provider.validate()
        self.scan.validate()
        self.weights.validate()
        if self.top_n < 1:
            raise ConfigError("top_n must be >= 1")
        if not 0 <= self.threshold <= 10:
            raise ConfigError("threshold must be in [0, 10]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "provider": {
                "kind": self.provider.kind,
                "endpoint": self.provider.endpoint,
                "model": self.provider.model,
                "embed_model": self.provider.embed_model,
                "seed": self.provider.seed,
                "max_inflight": self.provider.max_inflight,
                "mock_mode": self.provider.mock_mode,
                "script_path": self.provider.script_path,
            },
            "scan": {
                "tree_budget": self.scan.tree_budget,
                "truncate_limit": self.scan.truncate_limit,
                "ignore_dirs": list(self.scan.ignore_dirs),
            },
            "weights": {
                "tree": self.weights.tree,
                "keyword": self.weights.keyword,
                "embed": self.weights.embed,
            },
            "top_n": self.top_n,
            "threshold": self.threshold,
            "profiles_dir": self.profiles_dir,
            "store_path": self.store_path,
            "out": self.out,
            "traces": self.traces,
        }

    def config_hash(self) -> str:
        """Fingerprint of every setting that can affect results.

        Output locations (``out``, ``traces``) are excluded so that the
        same detection run hashes identically wherever its files land.
        """
        doc = self.to_dict()
        doc.pop("out")
        doc.pop("traces")
        canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _build(data: dict[str, Any]) -> RunConfig:
    known = {"provider", "scan", "weights", "top_n", "threshold", "profiles_dir", "store_path", "out", "traces"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        provider = ProviderConfig(**data.get("provider", {}))
        scan_raw = dict(data.get("scan", {}))
        if "ignore_dirs" in scan_raw:
            scan_raw["ignore_dirs"] = tuple(scan_raw["ignore_dirs"])
        scan = ScanConfig(**scan_raw)
        weights = SignalWeights(**data.get("weights", {}))
        cfg = RunConfig(
            provider=provider,
            scan=scan,
            weights=weights,
            **{k: v for k, v in data.items() if k not in ("provider", "scan", "weights")},
        )
    except TypeError as exc:
        raise ConfigError(f"bad config structure: {exc}") from exc
    cfg.validate()
    return cfg


def load_config(path: str | Path | None = None) -> RunConfig:
    """Load a YAML config file; with no path, return validated defaults."""
    if path is None:
        cfg = RunConfig()
        cfg.validate()
        return cfg
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"unparseable config {p}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a mapping: {p}")
    return _build(data)


def apply_overrides(cfg: RunConfig, **overrides: Any) -> RunConfig:
    """Apply CLI flag overrides on top of a loaded config; flags win.

    Supported keys: provider (kind), threshold, top_n, out, traces, seed,
    profiles_dir, store_path.
    """
    provider = cfg.provider
    if overrides.get("provider") is not None:
        provider = replace(provider, kind=overrides["provider"])
    if overrides.get("seed") is not None:
        provider = replace(provider, seed=int(overrides["seed"]))
    cfg = replace(cfg, provider=provider)
    for key in ("threshold", "top_n", "out", "traces", "profiles_dir", "store_path"):
        if overrides.get(key) is not None:
            cfg = replace(cfg, **{key: overrides[key]})
    cfg.validate()
    return cfg
