"""Similarity-based F-score for audio captions.

Grounds caption phrases to an audio-event tag universe via text-embedding
similarity, soft-matches the candidate and reference tag sets, and reports
precision/recall/F-score together with the offending tags (false alarms and
misses), so a low score comes with an explanation.
"""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    DetectedTag,
    SbfConfig,
    SbfReport,
    dedup,
    ground_tags,
    match_sets,
    prf,
    score_pair,
    embed_universe,
)
from .corpus import (  # noqa: F401
    BenchmarkResult,
    CaptionItem,
    JudgmentPair,
    evaluate_corpus,
    load_caption_items,
    load_judgment_pairs,
    pairwise_benchmark,
    score_multi_reference,
    sweep_tag_t,
)
from .embedding import (  # noqa: F401
    BackendConfig,
    EmbeddingCache,
    cos_sim,
    embed_batch,
    fixture_backend,
    local_backend,
    remote_backend,
)
from .ontology import (  # noqa: F401
    AudioClass,
    TagUniverse,
    dump_ontology,
    load_ontology,
    tag_universe,
)
from .phrases import (  # noqa: F401
    ChunkerConfig,
    LexiconPosTagger,
    Phrase,
    Token,
    extract_phrases,
    pos_tag,
    tokenize,
)
