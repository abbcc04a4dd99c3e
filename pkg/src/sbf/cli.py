"""Command-line surface: single-pair explanation, corpus evaluation,
human-judgment benchmark, threshold sweeps, and cache management.

Every JSON document emitted here carries the same envelope: `manifest`
(command, resolved configuration, input digests, version, timestamp),
`config`, a payload (`pairs`, `items` or `runs`) and a `summary`.

Exit codes: 0 success, 1 runtime failure, 2 usage/configuration error.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import click

from . import __version__, kernels
from .core import SbfConfig, embed_universe, score_pair
from .corpus import (
    AGGREGATIONS,
    evaluate_corpus,
    load_caption_items,
    load_judgment_pairs,
    pairwise_benchmark,
    score_multi_reference,
    sweep_tag_t,
)
from .embedding import (
    DEFAULT_MODEL_ID,
    BackendConfig,
    EmbeddingCache,
    fixture_backend,
    local_backend,
    remote_backend,
)
from .errors import SbfError
from .ontology import load_ontology, tag_universe

CACHE_DIR_ENV = "SBF_CACHE_DIR"


def _sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _read_config_file(path: str | None) -> dict:
    """Flat TOML-style key = value file; strings may be quoted."""
    if not path:
        return {}
    values: dict[str, object] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise click.UsageError(f"{path}:{lineno}: expected key = value")
        key, _, raw = line.partition("=")
        key, raw = key.strip().replace("-", "_"), raw.strip()
        if raw.startswith(('"', "'")) and raw.endswith(raw[0]) and len(raw) >= 2:
            values[key] = raw[1:-1]
        elif raw.lower() in ("true", "false"):
            values[key] = raw.lower() == "true"
        else:
            try:
                values[key] = int(raw)
            except ValueError:
                try:
                    values[key] = float(raw)
                except ValueError:
                    values[key] = raw
    return values


_COMMON_OPTIONS = [
    click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
                 default=None, help="Key = value config file; flags override it."),
    click.option("--ontology", type=str, default=None,
                 help="Path to the ontology JSON file."),
    click.option("--backend", "backend_kind",
                 type=click.Choice(["local", "remote", "fixture"]), default=None,
                 help="Embedding backend (default: local)."),
    click.option("--model", type=str, default=None,
                 help=f"Embedding model id (default: {DEFAULT_MODEL_ID})."),
    click.option("--endpoint", type=str, default=None,
                 help="Base URL of the embedding service (remote backend)."),
    click.option("--fixture-path", type=str, default=None,
                 help="Text-to-vector JSON table (fixture backend)."),
    click.option("--tag-t", type=float, default=None,
                 help="Phrase-to-tag grounding threshold (default 0.4)."),
    click.option("--sim-t", type=float, default=None,
                 help="Tag-to-tag matching threshold (default 0.45)."),
    click.option("--rep-t", type=float, default=None,
                 help="Near-duplicate collapse threshold (default 0.45)."),
    click.option("--exclude-restriction", "exclude_restrictions", multiple=True,
                 help="Ontology restriction to exclude (default: abstract)."),
    click.option("--aggregation", type=click.Choice(list(AGGREGATIONS)), default=None,
                 help="Multi-reference aggregation (default: mean)."),
    click.option("--workers", type=int, default=None,
                 help="Parallel workers for corpus/benchmark runs (default 1)."),
    click.option("--cache-dir", type=str, default=None,
                 help=f"Embedding disk-cache dir (or ${CACHE_DIR_ENV})."),
]


def common_options(fn):
    for opt in reversed(_COMMON_OPTIONS):
        fn = opt(fn)
    return fn


class RunSetup:
    """Resolved configuration for one CLI invocation."""

    def __init__(self, command: str, ctx: click.Context, params: dict):
        file_values = _read_config_file(params.get("config_file"))

        def resolve(name: str, default):
            value = params.get(name)
            src = ctx.get_parameter_source(name)
            if value not in (None, ()) and (
                src is None or src.name != "DEFAULT"
            ):
                return value
            if name in file_values:
                return file_values[name]
            return default

        self.command = command
        self.ontology_path = resolve("ontology", None)
        if not self.ontology_path:
            raise click.UsageError("an ontology file is required (--ontology)")
        kind = resolve("backend_kind", "local")
        model = resolve("model", DEFAULT_MODEL_ID)
        endpoint = resolve("endpoint", None)
        fixture_path = resolve("fixture_path", None)
        if kind == "local":
            backend = local_backend(model)
        elif kind == "remote":
            if not endpoint:
                endpoint = os.environ.get("SBF_EMBED_ADDR")
            if not endpoint:
                raise click.UsageError("remote backend needs --endpoint")
            backend = remote_backend(endpoint, model)
        else:
            if not fixture_path:
                raise click.UsageError("fixture backend needs --fixture-path")
            backend = fixture_backend(fixture_path)

        exclude = resolve("exclude_restrictions", ())
        if isinstance(exclude, str):
            exclude = tuple(part.strip() for part in exclude.split(",") if part.strip())
        exclude = frozenset(exclude) if exclude else frozenset({"abstract"})

        try:
            self.sbf_config = SbfConfig(
                backend=backend,
                tag_t=float(resolve("tag_t", 0.4)),
                sim_t=float(resolve("sim_t", 0.45)),
                rep_t=float(resolve("rep_t", 0.45)),
                exclude_restrictions=exclude,
            )
        except ValueError as e:
            raise click.UsageError(str(e))
        self.aggregation = resolve("aggregation", "mean")
        self.workers = int(resolve("workers", 1))
        cache_dir = resolve("cache_dir", None) or os.environ.get(CACHE_DIR_ENV)
        self.cache = EmbeddingCache(disk_dir=cache_dir)
        self.input_paths: list[str] = [self.ontology_path]
        if fixture_path:
            self.input_paths.append(fixture_path)
        if params.get("config_file"):
            self.input_paths.append(params["config_file"])

        classes = load_ontology(self.ontology_path)
        self.universe = tag_universe(classes, self.sbf_config.exclude_restrictions)

    def manifest(self) -> dict:
        return {
            "command": self.command,
            "version": __version__,
            "kernel_lane": kernels.BACKEND,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "config": self.sbf_config.to_dict(),
            "aggregation": self.aggregation,
            "workers": self.workers,
            "ontology": self.ontology_path,
            "inputs": {p: _sha256(p) for p in self.input_paths if Path(p).is_file()},
        }

    def envelope(self, payload: dict) -> dict:
        return {"manifest": self.manifest(), "config": self.sbf_config.to_dict(), **payload}


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        click.echo(text)


def _guess_format(path: str, explicit: str | None) -> str:
    if explicit:
        return explicit
    return "jsonl" if path.endswith((".jsonl", ".ndjson")) else "csv"


def _fail(e: Exception) -> None:
    raise click.ClickException(str(e))


@click.group()
@click.version_option(version=__version__, prog_name="sbf")
def main():
    """Explainable audio-caption evaluation: false alarms, misses, F-score."""


@main.command()
@click.argument("candidate")
@click.argument("references", nargs=-1, required=True)
@click.option("--json", "as_json", is_flag=True, help="Emit the JSON report.")
@click.option("--out", type=str, default=None, help="Write JSON to a file.")
@common_options
@click.pass_context
def score(ctx, candidate, references, as_json, out, **params):
    """Score CANDIDATE against one or more REFERENCES and explain the result."""
    setup = RunSetup("score", ctx, params)
    try:
        p, r, f, reports = score_multi_reference(
            candidate, list(references), setup.universe, setup.sbf_config,
            setup.aggregation, setup.cache,
        )
    except SbfError as e:
        _fail(e)

    for i, rep in enumerate(reports):
        if len(reports) > 1:
            click.echo(f"--- reference {i + 1} ---")
        click.echo(f"candidate: {rep.candidate}")
        click.echo(f"reference: {rep.reference}")
        click.echo(f"phrases (candidate): {'; '.join(rep.candidate_phrases) or '(none)'}")
        click.echo(f"phrases (reference): {'; '.join(rep.reference_phrases) or '(none)'}")
        fmt = lambda t: f"{t.name} ({t.best_sim:.2f} via {t.best_phrase!r})"
        click.echo(f"tags (candidate): {'; '.join(fmt(t) for t in rep.a_c) or '(none)'}")
        click.echo(f"tags (reference): {'; '.join(fmt(t) for t in rep.a_r) or '(none)'}")
        if not rep.fp and not rep.fn:
            click.echo("no false alarms, no misses")
        for t in rep.tp:
            click.echo(f"true positive : {t.name} ~ {t.matched_name} ({t.match_sim:.2f})")
        for t in rep.fp:
            click.echo(f"false positive: {t.name} (claimed by candidate only)")
        for t in rep.fn:
            click.echo(f"false negative: {t.name} (missed from reference)")
        click.echo(
            f"precision {rep.precision:.3f}  recall {rep.recall:.3f}  "
            f"f-score {rep.fscore:.3f}"
        )
    if len(reports) > 1:
        click.echo(f"aggregated ({setup.aggregation}): precision {p:.3f}  "
                   f"recall {r:.3f}  f-score {f:.3f}")

    if as_json or out:
        doc = setup.envelope({
            "pairs": [rep.to_dict() for rep in reports],
            "summary": {"precision": p, "recall": r, "fscore": f,
                        "aggregation": setup.aggregation},
        })
        _emit(doc, out)


@main.command("eval-corpus")
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default=None,
              help="Dataset format (default: by file extension).")
@click.option("--out", type=str, default=None, help="Write the JSON report to a file.")
@common_options
@click.pass_context
def eval_corpus(ctx, dataset, fmt, out, **params):
    """Score every item of a caption dataset and report corpus means."""
    setup = RunSetup("eval-corpus", ctx, params)
    setup.input_paths.append(dataset)
    try:
        items = load_caption_items(dataset, _guess_format(dataset, fmt))
        report = evaluate_corpus(items, setup.universe, setup.sbf_config,
                                 setup.aggregation, setup.cache, setup.workers)
    except (SbfError, ValueError) as e:
        _fail(e)
    if report.failures:
        click.echo(f"warning: {len(report.failures)} item(s) failed and were excluded",
                   err=True)
    doc = setup.envelope(report.to_dict())
    _emit(doc, out)


@main.command()
@click.argument("pairs_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default=None)
@click.option("--out", type=str, default=None, help="Write the JSON report to a file.")
@common_options
@click.pass_context
def benchmark(ctx, pairs_file, fmt, out, **params):
    """Compare the metric's choice with human judgments on caption pairs."""
    setup = RunSetup("benchmark", ctx, params)
    setup.input_paths.append(pairs_file)
    try:
        pairs = load_judgment_pairs(pairs_file, _guess_format(pairs_file, fmt))
        result = pairwise_benchmark(pairs, setup.universe, setup.sbf_config,
                                    setup.aggregation, setup.cache, setup.workers)
    except (SbfError, ValueError) as e:
        _fail(e)
    for cat, stats in result.categories.items():
        if stats.total:
            click.echo(f"{cat}: accuracy {stats.accuracy:.3f} "
                       f"({stats.correct}/{stats.total}, ties {stats.tie})", err=True)
    doc = setup.envelope(result.to_dict())
    _emit(doc, out)


@main.command()
@click.argument("pairs_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--tag-t-values", required=True,
              help="Comma-separated grounding thresholds, e.g. 0.3,0.4,0.5")
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default=None)
@click.option("--out", type=str, default=None, help="Write the JSON report to a file.")
@click.option("--csv-out", type=str, default=None,
              help="Also write (tag_t, category, accuracy) rows for plotting.")
@common_options
@click.pass_context
def sweep(ctx, pairs_file, tag_t_values, fmt, out, csv_out, **params):
    """Run the benchmark across several grounding thresholds."""
    setup = RunSetup("sweep", ctx, params)
    setup.input_paths.append(pairs_file)
    try:
        values = [float(v) for v in tag_t_values.split(",") if v.strip()]
    except ValueError:
        raise click.UsageError(f"bad --tag-t-values: {tag_t_values!r}")
    if not values:
        raise click.UsageError("--tag-t-values is empty")
    try:
        pairs = load_judgment_pairs(pairs_file, _guess_format(pairs_file, fmt))
        results = sweep_tag_t(pairs, setup.universe, setup.sbf_config, values,
                              setup.aggregation, setup.cache, setup.workers)
    except (SbfError, ValueError) as e:
        _fail(e)

    runs = []
    for v, res in results:
        d = res.to_dict()
        runs.append({"tag_t": v, "summary": d["summary"], "pairs": d["pairs"]})
    doc = setup.envelope({
        "runs": runs,
        "summary": {"tag_t_values": values},
    })
    _emit(doc, out)

    if csv_out:
        with open(csv_out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tag_t", "category", "total", "correct", "tie", "accuracy"])
            for v, res in results:
                for cat, stats in res.categories.items():
                    writer.writerow([v, cat, stats.total, stats.correct,
                                     stats.tie, f"{stats.accuracy:.6f}"])


@main.group()
def cache():
    """Inspect or clear the embedding disk cache."""


def _cache_from_env(cache_dir: str | None) -> EmbeddingCache:
    path = cache_dir or os.environ.get(CACHE_DIR_ENV)
    if not path:
        raise click.UsageError(
            f"no cache directory: pass --cache-dir or set ${CACHE_DIR_ENV}"
        )
    return EmbeddingCache(disk_dir=path)


@cache.command("info")
@click.option("--cache-dir", type=str, default=None)
def cache_info(cache_dir):
    """Show where the disk cache lives and how many entries it holds."""
    click.echo(json.dumps(_cache_from_env(cache_dir).stats(), indent=2))


@cache.command("clear")
@click.option("--cache-dir", type=str, default=None)
def cache_clear(cache_dir):
    """Delete every cached embedding."""
    c = _cache_from_env(cache_dir)
    c.clear()
    click.echo(json.dumps(c.stats(), indent=2))


if __name__ == "__main__":
    main()
