"""Command-line entry point wiring all modules together.

Exit codes: 0 success, 1 operational error, 2 usage error.
"""

from __future__ import annotations

import functools
import json
import re
import sys
from pathlib import Path

import click

from . import __version__
from .config import RunConfig, apply_overrides, load_config
from .detector import detect, load_report, save_report
from .errors import PatternScoutError
from .evaluation import (
    compute_fdi,
    confusion,
    filter_dataset,
    load_annotations,
    load_repo_metadata,
    metrics,
    patterns_in_logs,
    render_metric_block,
    render_pattern_table,
)
from .profile import builtin_profiles_dir, generate_profile, load_profiles, save_profile
from .provider import make_provider
from .trace import TraceLog, read_trace
from .vector_store import load_store, save_store, seed


def operational_errors(fn):
    """Map package errors to exit code 1 with the message on stderr."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PatternScoutError as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _effective_config(ctx: click.Context) -> RunConfig:
    return ctx.obj


def _profiles_for(cfg: RunConfig):
    directory = cfg.profiles_dir or builtin_profiles_dir()
    return load_profiles(directory)


def _run_block(cfg: RunConfig, model: str | None = None) -> dict:
    block = {"tool": f"patternscout {__version__}", "config_hash": cfg.config_hash(), "seed": cfg.provider.seed}
    if model is not None:
        block["model"] = model
    return block


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(version=__version__, prog_name="patternscout")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="YAML config file.")
@click.option("--provider", "provider_kind", type=click.Choice(["http", "mock"]), default=None, help="Override provider.kind.")
@click.option("--threshold", type=click.IntRange(0, 10), default=None, help="Detection threshold on the 0-10 scale.")
@click.option("--top-n", type=click.IntRange(min=1), default=None, help="Files to investigate per pattern.")
@click.option("--out", type=click.Path(), default=None, help="Output path (file or directory, command-dependent).")
@click.option("--traces", type=click.Path(), default=None, help="Trace log path (JSON lines).")
@click.option("--seed", type=int, default=None, help="Provider seed.")
@click.option("--profiles-dir", type=click.Path(exists=True, file_okay=False), default=None, help="Directory of pattern profiles.")
@click.pass_context
@operational_errors
def main(ctx, config_path, provider_kind, threshold, top_n, out, traces, seed, profiles_dir):
    """Detect architectural-pattern instances in software repositories and
    evaluate the results against annotated ground truth."""
    cfg = load_config(config_path)
    ctx.obj = apply_overrides(
        cfg,
        provider=provider_kind,
        threshold=threshold,
        top_n=top_n,
        out=out,
        traces=traces,
        seed=seed,
        profiles_dir=profiles_dir,
    )


@main.group()
def profiles():
    """Work with pattern profiles."""


@profiles.command("generate")
@click.option("--name", required=True, help="Pattern name.")
@click.option("--description", required=True, help="Natural-language pattern description.")
@click.option("--catalog-url", default="", help="Link to the pattern's catalog entry.")
@click.option("--out-dir", type=click.Path(file_okay=False), default="profiles", show_default=True)
@click.pass_context
@operational_errors
def profiles_generate(ctx, name, description, catalog_url, out_dir):
    """Generate a new pattern profile via the provider and save it as YAML.

    Review the generated file before using it for detection."""
    cfg = _effective_config(ctx)
    trace = TraceLog(cfg.traces)
    provider = make_provider(cfg, trace)
    profile = generate_profile(name, description, catalog_url, provider)
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-") or "profile"
    path = directory / f"{slug}.yaml"
    save_profile(profile, path)
    click.echo(f"wrote {path}")


@main.command("seed")
@click.pass_context
@operational_errors
def seed_command(ctx):
    """Embed profile examples and persist the vector store."""
    cfg = _effective_config(ctx)
    trace = TraceLog(cfg.traces)
    provider = make_provider(cfg, trace)
    loaded = _profiles_for(cfg)
    store = seed(loaded, provider)
    save_store(store, cfg.store_path)
    click.echo(
        f"seeded {len(store.records)} example embeddings for "
        f"{len(loaded) - len(store.degraded)} of {len(loaded)} patterns -> {cfg.store_path}"
    )
    if store.degraded:
        click.echo(f"degraded (no examples): {', '.join(store.degraded)}")


def _detect_single(cfg: RunConfig, repo: str, out_path: Path, trace_path: Path) -> None:
    trace = TraceLog(trace_path)
    provider = make_provider(cfg, trace)
    loaded = _profiles_for(cfg)
    store = load_store(cfg.store_path) if Path(cfg.store_path).is_file() else None
    report = detect(repo, loaded, cfg, provider, store)
    save_report(report, out_path)
    detected = [v.pattern_name for v in report.verdicts if v.detected]
    click.echo(f"{report.repo}: {len(detected)}/{len(report.verdicts)} patterns detected -> {out_path}")
    for name in detected:
        click.echo(f"  + {name}")


@main.command("detect")
@click.argument("repo", type=click.Path(exists=True, file_okay=False))
@click.pass_context
@operational_errors
def detect_command(ctx, repo):
    """Run pattern detection over one repository checkout."""
    cfg = _effective_config(ctx)
    out_path = Path(cfg.out or "report.json")
    trace_path = Path(cfg.traces or "traces.jsonl")
    _detect_single(cfg, repo, out_path, trace_path)


@main.command("detect-batch")
@click.argument("repo_list", type=click.Path(exists=True, dir_okay=False))
@click.option("--parallel", type=click.IntRange(min=1), default=1, show_default=True, help="Repositories processed concurrently.")
@click.pass_context
@operational_errors
def detect_batch_command(ctx, repo_list, parallel):
    """Run detection over every repository listed (one path per line).

    Reports and per-repo trace logs land in the output directory.
    Sequential by default; each repo is an independent run either way."""
    cfg = _effective_config(ctx)
    out_dir = Path(cfg.out or "reports")
    out_dir.mkdir(parents=True, exist_ok=True)
    repos = [line.strip() for line in Path(repo_list).read_text(encoding="utf-8").splitlines() if line.strip()]
    if not repos:
        raise PatternScoutError(f"repo list {repo_list} is empty")

    def one(repo: str) -> None:
        name = Path(repo).name
        _detect_single(cfg, repo, out_dir / f"{name}.report.json", out_dir / f"{name}.traces.jsonl")

    if parallel == 1:
        for repo in repos:
            one(repo)
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=parallel) as pool:
            futures = [pool.submit(one, repo) for repo in repos]
            for future in futures:  # submission order keeps output deterministic
                future.result()


def _collect_reports(reports_path: Path):
    if reports_path.is_dir():
        paths = sorted(p for p in reports_path.iterdir() if p.suffixes[-1:] == [".json"])
    else:
        paths = [reports_path]
    if not paths:
        raise PatternScoutError(f"no report files under {reports_path}")
    return [load_report(p) for p in paths]


@main.command("evaluate")
@click.argument("reports", type=click.Path(exists=True))
@click.argument("annotations", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@operational_errors
def evaluate_command(ctx, reports, annotations):
    """Score detection reports against annotated ground truth.

    REPORTS is a report file or a directory of them; ANNOTATIONS is the
    CSV with header repo_id,pattern,present."""
    cfg = _effective_config(ctx)
    loaded_reports = _collect_reports(Path(reports))
    names = [p.name for p in _profiles_for(cfg)]
    truth = load_annotations(annotations, valid_patterns=names)
    triples = [
        (report.repo, verdict.pattern_name, verdict.detected)
        for report in loaded_reports
        for verdict in report.verdicts
    ]
    overall, per_pattern = confusion(triples, truth)
    stats = metrics(overall)

    max_fdi: dict[str, float] = {}
    if cfg.traces:
        records = read_trace(cfg.traces)
        for pattern in patterns_in_logs(records):
            max_fdi[pattern] = compute_fdi(records, pattern).rows[0].fdi

    click.echo(render_metric_block(overall, stats))
    click.echo("")
    click.echo(render_pattern_table(per_pattern, truth.prevalence(), max_fdi or None))

    if cfg.out:
        doc = {
            "run": _run_block(cfg),
            "overall": {"tp": overall.tp, "fp": overall.fp, "tn": overall.tn, "fn": overall.fn, **stats},
            "per_pattern": {
                name: {"tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn, **metrics(cm)}
                for name, cm in per_pattern.items()
            },
        }
        Path(cfg.out).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        click.echo(f"\nwrote {cfg.out}")


@main.command("fdi")
@click.argument("traces", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--pattern", "only_pattern", default=None, help="Limit output to one pattern.")
@click.option("--top", type=click.IntRange(min=1), default=10, show_default=True, help="Rows per pattern.")
@click.pass_context
@operational_errors
def fdi_command(ctx, traces, only_pattern, top):
    """File dominance tables computed from detection trace logs."""
    cfg = _effective_config(ctx)
    records = [record for path in traces for record in read_trace(path)]
    patterns = [only_pattern] if only_pattern else patterns_in_logs(records)
    if not patterns:
        raise PatternScoutError("no investigation records in the given traces")
    tables = {}
    for pattern in patterns:
        table = compute_fdi(records, pattern)
        tables[pattern] = table
        click.echo(f"{pattern}  (N={table.unique_files}, T={table.total_occurrences})")
        for row in table.rows[:top]:
            click.echo(f"  {row.filename:<40} count {row.count:>5}   FDI {row.fdi:>8.2f}")
        click.echo("")
    if cfg.out:
        doc = {
            "run": _run_block(cfg),
            "patterns": {
                name: {
                    "unique_files": t.unique_files,
                    "total_occurrences": t.total_occurrences,
                    "rows": [{"filename": r.filename, "count": r.count, "fdi": r.fdi} for r in t.rows],
                }
                for name, t in tables.items()
            },
        }
        Path(cfg.out).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        click.echo(f"wrote {cfg.out}")


@main.group()
def dataset():
    """Dataset assembly utilities."""


@dataset.command("filter")
@click.argument("metadata", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@operational_errors
def dataset_filter(ctx, metadata):
    """Filter repository metadata by the selection criteria.

    Writes the kept repo ids to stdout, one per line."""
    cfg = _effective_config(ctx)
    repos = load_repo_metadata(metadata)
    kept = filter_dataset(repos)
    for repo in kept:
        click.echo(repo.repo_id)
    click.echo(f"kept {len(kept)} of {len(repos)} repositories", err=True)
    if cfg.out:
        doc = {"run": _run_block(cfg), "kept": [r.repo_id for r in kept]}
        Path(cfg.out).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    sys.exit(main())
