"""Corpus-level scoring, multi-reference handling, and the pairwise
human-judgment benchmark (with threshold sweeps).

Items and pairs are independent work units; evaluation can fan out over a
thread pool, but results are always reduced in input order so runs are
deterministic regardless of worker count.
"""

from __future__ import annotations

import csv
import io
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence, TextIO, Union

import numpy as np

from .core import SbfConfig, SbfReport, embed_universe, score_pair
from .embedding import EmbeddingCache
from .errors import DatasetSchemaError
from .ontology import TagUniverse

CATEGORIES = ("HC", "HI", "HM", "MM")
AGGREGATIONS = ("mean", "max")

TextSource = Union[str, Path, TextIO]


@dataclass(frozen=True)
class CaptionItem:
    item_id: str
    candidate: str
    references: tuple[str, ...]

    def __post_init__(self):
        if not self.references:
            raise DatasetSchemaError(f"item {self.item_id}: references must be non-empty")
        if not self.candidate or any(not r for r in self.references):
            raise DatasetSchemaError(f"item {self.item_id}: captions must be non-empty")


@dataclass(frozen=True)
class JudgmentPair:
    pair_id: str
    caption_a: str
    caption_b: str
    references: tuple[str, ...]
    category: str
    human_choice: str

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise DatasetSchemaError(
                f"pair {self.pair_id}: unknown category {self.category!r}"
            )
        if self.human_choice not in ("A", "B"):
            raise DatasetSchemaError(
                f"pair {self.pair_id}: human_choice must be A or B"
            )
        if not self.references:
            raise DatasetSchemaError(f"pair {self.pair_id}: references must be non-empty")
        if self.caption_a == self.caption_b:
            raise DatasetSchemaError(f"pair {self.pair_id}: captions must differ")


def _aggregate(values: Sequence[float], aggregation: str) -> float:
    if aggregation == "mean":
        return float(np.mean(values))
    if aggregation == "max":
        return float(np.max(values))
    raise ValueError(f"unknown aggregation {aggregation!r} (use one of {AGGREGATIONS})")


def score_multi_reference(
    candidate: str,
    references: Sequence[str],
    universe: TagUniverse,
    config: SbfConfig,
    aggregation: str = "mean",
    cache: EmbeddingCache | None = None,
    universe_matrix: np.ndarray | None = None,
) -> tuple[float, float, float, list[SbfReport]]:
    """Score a candidate against each reference independently and aggregate
    precision/recall/F component-wise."""
    if not references:
        raise ValueError("references must be non-empty")
    if universe_matrix is None:
        universe_matrix = embed_universe(universe, config, cache)
    reports = [
        score_pair(candidate, ref, universe, config, cache, universe_matrix)
        for ref in references
    ]
    p = _aggregate([r.precision for r in reports], aggregation)
    r_ = _aggregate([r.recall for r in reports], aggregation)
    f = _aggregate([r.fscore for r in reports], aggregation)
    return p, r_, f, reports


@dataclass
class ItemScore:
    item_id: str
    precision: float
    recall: float
    fscore: float
    reports: list[SbfReport]

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "precision": self.precision,
            "recall": self.recall,
            "fscore": self.fscore,
            "reports": [r.to_dict() for r in self.reports],
        }


@dataclass
class CorpusReport:
    items: list[ItemScore]
    failures: list[tuple[str, str]]
    precision: float
    recall: float
    fscore: float
    aggregation: str
    config: SbfConfig

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "aggregation": self.aggregation,
            "items": [s.to_dict() for s in self.items],
            "failures": [{"item_id": i, "error": e} for i, e in self.failures],
            "summary": {
                "items_scored": len(self.items),
                "items_failed": len(self.failures),
                "precision": self.precision,
                "recall": self.recall,
                "fscore": self.fscore,
            },
        }


def _run_indexed(
    work: Callable,
    inputs: Sequence,
    workers: int,
) -> list:
    """Apply `work` to every input, in input order, optionally via threads."""
    if workers <= 1:
        return [work(x) for x in inputs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(work, inputs))


def evaluate_corpus(
    items: Sequence[CaptionItem],
    universe: TagUniverse,
    config: SbfConfig,
    aggregation: str = "mean",
    cache: EmbeddingCache | None = None,
    workers: int = 1,
) -> CorpusReport:
    """Per-item scores plus corpus means. Item failures are recorded and
    excluded from the means rather than aborting the run."""
    if not items:
        raise ValueError("items must be non-empty")
    universe_matrix = embed_universe(universe, config, cache)

    def work(item: CaptionItem):
        try:
            p, r, f, reports = score_multi_reference(
                item.candidate, item.references, universe, config,
                aggregation, cache, universe_matrix,
            )
            return ItemScore(item.item_id, p, r, f, reports), None
        except Exception as e:  # noqa: BLE001 - failure is part of the report
            return None, (item.item_id, f"{type(e).__name__}: {e}")

    scored: list[ItemScore] = []
    failures: list[tuple[str, str]] = []
    for ok, err in _run_indexed(work, items, workers):
        if ok is not None:
            scored.append(ok)
        else:
            failures.append(err)

    if scored:
        precision = float(np.mean([s.precision for s in scored]))
        recall = float(np.mean([s.recall for s in scored]))
        fscore = float(np.mean([s.fscore for s in scored]))
    else:
        precision = recall = fscore = float("nan")
    return CorpusReport(scored, failures, precision, recall, fscore, aggregation, config)


@dataclass
class CategoryStats:
    total: int = 0
    correct: int = 0
    tie: int = 0

    @property
    def incorrect(self) -> int:
        return self.total - self.correct - self.tie

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "correct": self.correct,
            "incorrect": self.incorrect,
            "tie": self.tie,
            "accuracy": self.accuracy,
        }


@dataclass
class PairOutcome:
    pair_id: str
    category: str
    human_choice: str
    fscore_a: float
    fscore_b: float

    @property
    def metric_choice(self) -> str:
        if self.fscore_a > self.fscore_b:
            return "A"
        if self.fscore_b > self.fscore_a:
            return "B"
        return "tie"

    @property
    def correct(self) -> bool:
        return self.metric_choice == self.human_choice

    def to_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "category": self.category,
            "human_choice": self.human_choice,
            "fscore_a": self.fscore_a,
            "fscore_b": self.fscore_b,
            "metric_choice": self.metric_choice,
            "correct": self.correct,
        }


@dataclass
class BenchmarkResult:
    categories: dict[str, CategoryStats]
    outcomes: list[PairOutcome]
    aggregation: str
    config: SbfConfig

    @property
    def overall(self) -> CategoryStats:
        total = CategoryStats()
        for s in self.categories.values():
            total.total += s.total
            total.correct += s.correct
            total.tie += s.tie
        return total

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "aggregation": self.aggregation,
            "pairs": [o.to_dict() for o in self.outcomes],
            "summary": {
                "categories": {k: v.to_dict() for k, v in self.categories.items()},
                "overall": self.overall.to_dict(),
            },
        }


def pairwise_benchmark(
    pairs: Sequence[JudgmentPair],
    universe: TagUniverse,
    config: SbfConfig,
    aggregation: str = "mean",
    cache: EmbeddingCache | None = None,
    workers: int = 1,
    universe_matrix: np.ndarray | None = None,
) -> BenchmarkResult:
    """Score both captions of each pair against the references; the metric
    picks the higher F-score. Equal scores count as a tie, which is scored
    as incorrect but reported separately."""
    if not pairs:
        raise ValueError("pairs must be non-empty")
    if universe_matrix is None:
        universe_matrix = embed_universe(universe, config, cache)

    def work(pair: JudgmentPair) -> PairOutcome:
        try:
            _, _, fa, _ = score_multi_reference(
                pair.caption_a, pair.references, universe, config,
                aggregation, cache, universe_matrix,
            )
            _, _, fb, _ = score_multi_reference(
                pair.caption_b, pair.references, universe, config,
                aggregation, cache, universe_matrix,
            )
        except Exception as e:
            raise type(e)(f"pair {pair.pair_id}: {e}") from e
        return PairOutcome(pair.pair_id, pair.category, pair.human_choice, fa, fb)

    outcomes = _run_indexed(work, pairs, workers)

    categories = {c: CategoryStats() for c in CATEGORIES}
    for o in outcomes:
        stats = categories[o.category]
        stats.total += 1
        if o.metric_choice == "tie":
            stats.tie += 1
        elif o.correct:
            stats.correct += 1
    return BenchmarkResult(categories, outcomes, aggregation, config)


def sweep_tag_t(
    pairs: Sequence[JudgmentPair],
    universe: TagUniverse,
    config: SbfConfig,
    values: Sequence[float],
    aggregation: str = "mean",
    cache: EmbeddingCache | None = None,
    workers: int = 1,
) -> list[tuple[float, BenchmarkResult]]:
    """Run the benchmark once per tag_t value with everything else fixed.

    Tag-universe embeddings are computed once and shared across the sweep.
    """
    if not values:
        raise ValueError("values must be non-empty")
    universe_matrix = embed_universe(universe, config, cache)
    out = []
    for v in values:
        cfg = replace(config, tag_t=float(v))
        out.append(
            (float(v),
             pairwise_benchmark(pairs, universe, cfg, aggregation, cache,
                                workers, universe_matrix))
        )
    return out


def _open_text(source: TextSource):
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline="")
    return source


def _close_if_opened(fh, source) -> None:
    if isinstance(source, (str, Path)):
        fh.close()


def load_caption_items(source: TextSource, format: str = "csv") -> list[CaptionItem]:
    """Parse caption items from CSV (item_id,candidate,reference; repeated
    rows per item collect multiple references) or JSONL."""
    fh = _open_text(source)
    try:
        if format == "csv":
            reader = csv.DictReader(fh)
            order: list[str] = []
            cands: dict[str, str] = {}
            refs: dict[str, list[str]] = {}
            for lineno, row in enumerate(reader, 2):
                for col in ("item_id", "candidate", "reference"):
                    if row.get(col) in (None, ""):
                        raise DatasetSchemaError(
                            f"line {lineno}: missing required column {col!r}"
                        )
                iid = row["item_id"]
                if iid not in cands:
                    order.append(iid)
                    cands[iid] = row["candidate"]
                    refs[iid] = []
                elif cands[iid] != row["candidate"]:
                    raise DatasetSchemaError(
                        f"line {lineno}: item {iid} has conflicting candidates"
                    )
                refs[iid].append(row["reference"])
            return [CaptionItem(i, cands[i], tuple(refs[i])) for i in order]
        if format == "jsonl":
            items = []
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                obj = json.loads(line)
                for key in ("item_id", "candidate", "references"):
                    if key not in obj:
                        raise DatasetSchemaError(f"line {lineno}: missing field {key!r}")
                items.append(
                    CaptionItem(str(obj["item_id"]), obj["candidate"],
                                tuple(obj["references"]))
                )
            return items
        raise ValueError(f"unknown format {format!r} (use csv or jsonl)")
    finally:
        _close_if_opened(fh, source)


_REF_COL = re.compile(r"^ref_(\d+)$")


def load_judgment_pairs(source: TextSource, format: str = "csv") -> list[JudgmentPair]:
    """Parse judgment pairs from CSV (pair_id,caption_a,caption_b,category,
    human_choice,ref_1..ref_k; empty ref cells ignored) or JSONL."""
    fh = _open_text(source)
    try:
        if format == "csv":
            reader = csv.DictReader(fh)
            ref_cols = sorted(
                (c for c in (reader.fieldnames or []) if _REF_COL.match(c)),
                key=lambda c: int(_REF_COL.match(c).group(1)),
            )
            pairs = []
            for lineno, row in enumerate(reader, 2):
                for col in ("pair_id", "caption_a", "caption_b", "category", "human_choice"):
                    if row.get(col) in (None, ""):
                        raise DatasetSchemaError(
                            f"line {lineno}: missing required column {col!r}"
                        )
                refs = tuple(row[c] for c in ref_cols if row.get(c))
                pairs.append(
                    JudgmentPair(row["pair_id"], row["caption_a"], row["caption_b"],
                                 refs, row["category"], row["human_choice"])
                )
            return pairs
        if format == "jsonl":
            pairs = []
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                obj = json.loads(line)
                for key in ("pair_id", "caption_a", "caption_b", "references",
                            "category", "human_choice"):
                    if key not in obj:
                        raise DatasetSchemaError(f"line {lineno}: missing field {key!r}")
                pairs.append(
                    JudgmentPair(str(obj["pair_id"]), obj["caption_a"], obj["caption_b"],
                                 tuple(obj["references"]), obj["category"],
                                 obj["human_choice"])
                )
            return pairs
        raise ValueError(f"unknown format {format!r} (use csv or jsonl)")
    finally:
        _close_if_opened(fh, source)
