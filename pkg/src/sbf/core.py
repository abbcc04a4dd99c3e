"""The similarity-based F-score itself.

Pipeline for one caption pair: chunk both captions into phrases, embed the
phrases and the tag-universe labels, ground each caption to the tags whose
label embedding lies within `tag_t` cosine of some phrase, collapse
near-duplicate tags (`rep_t`), soft-match the two tag sets (`sim_t`) into
true positives / false alarms / misses, collapse duplicates again, and
compute precision, recall and F-score from the set sizes.

All similarity comparisons are strict: a cosine exactly equal to a
threshold never crosses it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import kernels
from .embedding import BackendConfig, EmbeddingCache, embed_batch
from .errors import DimensionMismatchError
from .ontology import DEFAULT_EXCLUDE_RESTRICTIONS, TagUniverse
from .phrases import ChunkerConfig, DEFAULT_CHUNKER, PosTagger, extract_phrases

DEFAULT_TAG_T = 0.4
DEFAULT_SIM_T = 0.45
DEFAULT_REP_T = 0.45


@dataclass(frozen=True)
class SbfConfig:
    """Thresholds, backend and filtering for one evaluation run."""

    backend: BackendConfig
    tag_t: float = DEFAULT_TAG_T
    sim_t: float = DEFAULT_SIM_T
    rep_t: float = DEFAULT_REP_T
    exclude_restrictions: frozenset[str] = DEFAULT_EXCLUDE_RESTRICTIONS

    def __post_init__(self):
        for name in ("tag_t", "sim_t", "rep_t"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ValueError(f"{name} must be strictly inside (0, 1), got {v}")

    def to_dict(self) -> dict:
        b = self.backend
        return {
            "tag_t": self.tag_t,
            "sim_t": self.sim_t,
            "rep_t": self.rep_t,
            "exclude_restrictions": sorted(self.exclude_restrictions),
            "backend": {
                "kind": b.kind,
                "model_id": b.model_id,
                "endpoint": b.endpoint,
                "fixture_path": b.fixture_path,
                "normalize": b.normalize,
            },
        }


@dataclass(frozen=True, eq=False)
class DetectedTag:
    """An ontology tag grounded in a caption phrase."""

    class_id: str
    name: str
    embedding: np.ndarray
    best_phrase: str
    best_sim: float
    matched_name: str | None = None
    match_sim: float | None = None

    def to_dict(self) -> dict:
        d = {
            "class_id": self.class_id,
            "name": self.name,
            "best_phrase": self.best_phrase,
            "best_sim": self.best_sim,
        }
        if self.matched_name is not None:
            d["matched_name"] = self.matched_name
            d["match_sim"] = self.match_sim
        return d


@dataclass(frozen=True)
class SbfReport:
    """Everything needed to explain one candidate/reference score."""

    candidate: str
    reference: str
    candidate_phrases: list[str]
    reference_phrases: list[str]
    a_c: list[DetectedTag]
    a_r: list[DetectedTag]
    tp: list[DetectedTag]
    fp: list[DetectedTag]
    fn: list[DetectedTag]
    precision: float
    recall: float
    fscore: float
    config: SbfConfig

    def to_dict(self) -> dict:
        return {
            "candidate": self.candidate,
            "reference": self.reference,
            "phrases_candidate": list(self.candidate_phrases),
            "phrases_reference": list(self.reference_phrases),
            "tags_candidate": [t.to_dict() for t in self.a_c],
            "tags_reference": [t.to_dict() for t in self.a_r],
            "tp": [t.to_dict() for t in self.tp],
            "fp": [t.to_dict() for t in self.fp],
            "fn": [t.to_dict() for t in self.fn],
            "precision": self.precision,
            "recall": self.recall,
            "fscore": self.fscore,
        }


def _tag_matrix(tags: Sequence[DetectedTag]) -> np.ndarray:
    if not tags:
        return np.zeros((0, 1), dtype=np.float64)
    return np.stack([t.embedding for t in tags]).astype(np.float64)


def ground_tags(
    phrase_texts: Sequence[str],
    phrase_embs: np.ndarray,
    universe: TagUniverse,
    universe_embs: np.ndarray,
    tag_t: float,
) -> list[DetectedTag]:
    """Tags whose label embedding exceeds tag_t cosine with some phrase.

    Output is ordered by descending best similarity, ties broken by universe
    order; each tag carries its best-matching phrase. Empty phrase list
    yields an empty result.
    """
    m = len(universe)
    if universe_embs.shape[0] != m:
        raise ValueError("universe embedding matrix does not match universe size")
    if not phrase_texts:
        return []
    phrase_embs = np.asarray(phrase_embs, dtype=np.float64).reshape(len(phrase_texts), -1)
    if universe_embs.shape[1] != phrase_embs.shape[1]:
        raise DimensionMismatchError(
            f"phrase dim {phrase_embs.shape[1]} != tag dim {universe_embs.shape[1]}"
        )

    best, idx = kernels.max_cosine(universe_embs, phrase_embs)
    selected = np.flatnonzero(best > tag_t)
    order = selected[np.argsort(-best[selected], kind="stable")]
    return [
        DetectedTag(
            class_id=universe.classes[i].id,
            name=universe.classes[i].name,
            embedding=universe_embs[i],
            best_phrase=phrase_texts[int(idx[i])],
            best_sim=float(best[i]),
        )
        for i in order
    ]


def dedup(tags: Sequence[DetectedTag], rep_t: float) -> list[DetectedTag]:
    """Collapse near-duplicates: greedy scan in the given order, keeping a
    tag iff its cosine with every already-kept tag is strictly below rep_t."""
    if not tags:
        return []
    keep = kernels.greedy_dedup(_tag_matrix(tags), rep_t)
    return [t for t, k in zip(tags, keep) if k]


def match_sets(
    a_c: Sequence[DetectedTag],
    a_r: Sequence[DetectedTag],
    sim_t: float,
    rep_t: float,
) -> tuple[list[DetectedTag], list[DetectedTag], list[DetectedTag]]:
    """Soft set operations between the two grounded tag sets.

    tp: reference tags with some candidate tag above sim_t (annotated with
        the best-matching candidate tag)
    fp: candidate tags below sim_t against every reference tag
    fn: reference tags below sim_t against every candidate tag

    Each output is deduplicated (rep_t) before being returned, so the set
    sizes are ready for precision/recall.
    """
    mat_c = _tag_matrix(a_c)
    mat_r = _tag_matrix(a_r)

    tp: list[DetectedTag] = []
    fn: list[DetectedTag] = []
    best_r, idx_r = kernels.max_cosine(mat_r, mat_c) if a_r else (np.zeros(0), np.zeros(0))
    for i, t in enumerate(a_r):
        if a_c and best_r[i] > sim_t:
            u = a_c[int(idx_r[i])]
            tp.append(replace(t, matched_name=u.name, match_sim=float(best_r[i])))
        elif not a_c or best_r[i] < sim_t:
            fn.append(t)

    fp: list[DetectedTag] = []
    best_c, _ = kernels.max_cosine(mat_c, mat_r) if a_c else (np.zeros(0), np.zeros(0))
    for j, u in enumerate(a_c):
        if not a_r or best_c[j] < sim_t:
            fp.append(u)

    return dedup(tp, rep_t), dedup(fp, rep_t), dedup(fn, rep_t)


def prf(n_tp: int, n_fp: int, n_fn: int) -> tuple[float, float, float]:
    """Precision, recall, F-score from set sizes.

    Two captions agreeing that nothing is detectable agree perfectly, so
    (0, 0, 0) -> (1, 1, 1); otherwise undefined ratios collapse to 0.
    """
    if min(n_tp, n_fp, n_fn) < 0:
        raise ValueError("counts must be non-negative")
    if n_tp == 0 and n_fp == 0 and n_fn == 0:
        return 1.0, 1.0, 1.0
    precision = n_tp / (n_tp + n_fp) if n_tp + n_fp else 0.0
    recall = n_tp / (n_tp + n_fn) if n_tp + n_fn else 0.0
    fscore = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, fscore


def embed_universe(
    universe: TagUniverse,
    config: SbfConfig,
    cache: EmbeddingCache | None = None,
) -> np.ndarray:
    """Embed every tag label once; rows align with universe order."""
    return embed_batch(universe.names, config.backend, cache)


def score_pair(
    candidate: str,
    reference: str,
    universe: TagUniverse,
    config: SbfConfig,
    cache: EmbeddingCache | None = None,
    universe_matrix: np.ndarray | None = None,
    tagger: PosTagger | None = None,
    chunker: ChunkerConfig = DEFAULT_CHUNKER,
) -> SbfReport:
    """Run the full pipeline on one candidate/reference pair.

    `universe_matrix` lets corpus runs embed the tag labels once and share
    the matrix across pairs.
    """
    if universe_matrix is None:
        universe_matrix = embed_universe(universe, config, cache)

    phrases_c = [p.text for p in extract_phrases(candidate, tagger, chunker)]
    phrases_r = [p.text for p in extract_phrases(reference, tagger, chunker)]

    dim = universe_matrix.shape[1]

    def phrase_matrix(texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, dim), dtype=np.float64)
        return embed_batch(texts, config.backend, cache)

    a_c = dedup(
        ground_tags(phrases_c, phrase_matrix(phrases_c), universe, universe_matrix, config.tag_t),
        config.rep_t,
    )
    a_r = dedup(
        ground_tags(phrases_r, phrase_matrix(phrases_r), universe, universe_matrix, config.tag_t),
        config.rep_t,
    )
    tp, fp, fn = match_sets(a_c, a_r, config.sim_t, config.rep_t)
    precision, recall, fscore = prf(len(tp), len(fp), len(fn))
    return SbfReport(
        candidate=candidate,
        reference=reference,
        candidate_phrases=phrases_c,
        reference_phrases=phrases_r,
        a_c=a_c,
        a_r=a_r,
        tp=tp,
        fp=fp,
        fn=fn,
        precision=precision,
        recall=recall,
        fscore=fscore,
        config=config,
    )
