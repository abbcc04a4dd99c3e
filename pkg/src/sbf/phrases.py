"""Caption tokenization, coarse POS tagging and phrase chunking.

A caption is split into sound-describing phrases by cutting at coordinating
and subordinating conjunctions (plus a configurable accompaniment-preposition
list, by default just "with"). Segments must contain a noun or a verb to
stand alone; trailing adverbs are trimmed from each phrase.

The default tagger is a self-contained lexicon + suffix tagger so the
pipeline has no model dependency: closed-class words are hard-coded, the
open-class lexicon ships as a data file, and unknown words fall back to
suffix rules and finally NOUN.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Protocol, Sequence

from .errors import EmptyCaptionError

COARSE_TAGS = frozenset(
    {
        "NOUN",
        "VERB",
        "ADJ",
        "ADV",
        "DET",
        "PRON",
        "ADP",
        "CC",
        "SCONJ",
        "NUM",
        "PUNCT",
        "OTHER",
    }
)

_PUNCT_CHARS = set("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~…’‘“”")
_WORD_RE = re.compile(r"\S+")


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int
    pos: str | None = None

    def with_pos(self, pos: str) -> "Token":
        return Token(self.text, self.start, self.end, pos)


@dataclass(frozen=True)
class Phrase:
    text: str
    token_range: tuple[int, int]


def tokenize(caption: str) -> list[Token]:
    """Split on whitespace, peeling leading/trailing punctuation runs off
    each chunk into their own tokens. Spans index into the original string."""
    if not caption or not caption.strip():
        raise EmptyCaptionError("caption is empty or whitespace-only")
    tokens: list[Token] = []
    for m in _WORD_RE.finditer(caption):
        chunk, start = m.group(), m.start()
        end = start + len(chunk)
        lead = 0
        while lead < len(chunk) and chunk[lead] in _PUNCT_CHARS:
            lead += 1
        trail = len(chunk)
        while trail > lead and chunk[trail - 1] in _PUNCT_CHARS:
            trail -= 1
        if lead == trail:  # all punctuation
            tokens.append(Token(chunk, start, end))
            continue
        if lead:
            tokens.append(Token(chunk[:lead], start, start + lead))
        tokens.append(Token(chunk[lead:trail], start + lead, start + trail))
        if trail < len(chunk):
            tokens.append(Token(chunk[trail:], start + trail, end))
    return tokens


# Closed-class words get fixed coarse tags before any lexicon lookup.
_CLOSED_CLASS: dict[str, str] = {}
_CLOSED_CLASS.update(
    dict.fromkeys(
        "a an the this that these those some any each every no another all both "
        "either neither my your his her its our their".split(),
        "DET",
    )
)
_CLOSED_CLASS.update(
    dict.fromkeys(
        "i you he she it we they me him them us someone somebody something "
        "anyone anything everyone everything nobody nothing itself himself "
        "herself themselves who whom what".split(),
        "PRON",
    )
)
_CLOSED_CLASS.update(
    dict.fromkeys(
        "in on at by from to of into onto over under above below behind beside "
        "between among through across along around against near off out up down "
        "past toward towards during within without throughout upon amid beneath "
        "underneath outside inside with".split(),
        "ADP",
    )
)
_CLOSED_CLASS.update(dict.fromkeys("and or but nor plus".split(), "CC"))
_CLOSED_CLASS.update(
    dict.fromkeys(
        "while as when whenever after before because since although though if "
        "until unless whilst where whereas".split(),
        "SCONJ",
    )
)
_CLOSED_CLASS.update(
    dict.fromkeys(
        "is am are was were be been being has have had having do does did can "
        "could will would shall should may might must".split(),
        "VERB",
    )
)
_CLOSED_CLASS.update(
    dict.fromkeys(
        "one two three four five six seven eight nine ten eleven twelve twenty "
        "hundred".split(),
        "NUM",
    )
)

_DEFAULT_LEXICON_RESOURCE = "pos_lexicon.tsv"


def load_lexicon(path: str | Path | None = None) -> dict[str, str]:
    """Read a word<TAB>TAG lexicon file (the packaged one when path is None)."""
    if path is None:
        text = (
            resources.files("sbf.data")
            .joinpath(_DEFAULT_LEXICON_RESOURCE)
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    lexicon: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            word, tag = line.split("\t")
        except ValueError:
            raise ValueError(f"lexicon line {lineno} is not word<TAB>TAG: {line!r}")
        if tag not in COARSE_TAGS:
            raise ValueError(f"lexicon line {lineno} has unknown tag {tag!r}")
        lexicon[word] = tag
    return lexicon


class PosTagger(Protocol):
    def tag(self, tokens: Sequence[Token]) -> list[Token]: ...


class LexiconPosTagger:
    """Total tagger: closed class, then open-class lexicon, then suffix
    rules (-ing/-ed VERB, -ly ADV, -s NOUN), then NOUN."""

    def __init__(self, lexicon: dict[str, str] | None = None):
        self.lexicon = dict(lexicon) if lexicon is not None else load_lexicon()

    def tag_word(self, word: str) -> str:
        lower = word.lower()
        if all(ch in _PUNCT_CHARS for ch in lower):
            return "PUNCT"
        if lower in _CLOSED_CLASS:
            return _CLOSED_CLASS[lower]
        if lower in self.lexicon:
            return self.lexicon[lower]
        if re.fullmatch(r"[\d.,:]+", lower):
            return "NUM"
        if len(lower) > 4 and lower.endswith("ing"):
            return "VERB"
        if len(lower) > 3 and lower.endswith("ed"):
            return "VERB"
        if len(lower) > 3 and lower.endswith("ly"):
            return "ADV"
        if len(lower) > 3 and lower.endswith("s") and not lower.endswith("ss"):
            return "NOUN"
        return "NOUN"

    def tag(self, tokens: Sequence[Token]) -> list[Token]:
        return [t.with_pos(self.tag_word(t.text)) for t in tokens]


_default_tagger: LexiconPosTagger | None = None


def default_tagger() -> LexiconPosTagger:
    global _default_tagger
    if _default_tagger is None:
        _default_tagger = LexiconPosTagger()
    return _default_tagger


def pos_tag(tokens: Sequence[Token], tagger: PosTagger | None = None) -> list[Token]:
    return (tagger or default_tagger()).tag(tokens)


@dataclass(frozen=True)
class ChunkerConfig:
    """Phrase segmentation rules.

    boundary_pos: POS tags that cut the caption (the token is dropped)
    boundary_words: literal words that cut regardless of tag
    content_pos: a segment needs one of these to stand as a phrase;
                 others are merged into a neighbor
    trim_trailing_pos: tags stripped from segment tails before rendering
                       (disable by passing an empty set)
    """

    boundary_pos: frozenset[str] = frozenset({"CC", "SCONJ"})
    boundary_words: frozenset[str] = frozenset({"with"})
    content_pos: frozenset[str] = frozenset({"NOUN", "VERB"})
    trim_trailing_pos: frozenset[str] = frozenset({"ADV"})


DEFAULT_CHUNKER = ChunkerConfig()


def _render(caption: str, tokens: Sequence[Token], indices: Sequence[int]) -> str:
    """Join contiguous token runs as raw caption slices, lowercase, and trim
    surrounding punctuation."""
    runs: list[list[int]] = []
    for i in indices:
        if runs and i == runs[-1][-1] + 1:
            runs[-1].append(i)
        else:
            runs.append([i])
    parts = [caption[tokens[r[0]].start : tokens[r[-1]].end] for r in runs]
    text = " ".join(parts).lower()
    return text.strip("".join(_PUNCT_CHARS) + " ")


def extract_phrases(
    caption: str,
    tagger: PosTagger | None = None,
    config: ChunkerConfig = DEFAULT_CHUNKER,
) -> list[Phrase]:
    """Chunk a caption into phrases.

    Returns an empty list when nothing survives (a caption with no content
    words); downstream treats that as "no tags detected".
    """
    tokens = pos_tag(tokenize(caption), tagger)

    def is_boundary(t: Token) -> bool:
        return t.pos in config.boundary_pos or t.text.lower() in config.boundary_words

    segments: list[list[int]] = [[]]
    for i, t in enumerate(tokens):
        if is_boundary(t):
            if segments[-1]:
                segments.append([])
        else:
            segments[-1].append(i)
    segments = [s for s in segments if s]
    if not segments:
        return []

    # Merge contentless segments into the previous one (or the next, if first).
    merged: list[list[int]] = []
    pending: list[int] = []
    for seg in segments:
        has_content = any(tokens[i].pos in config.content_pos for i in seg)
        if has_content:
            if pending:
                seg = pending + seg
                pending = []
            merged.append(seg)
        elif merged:
            merged[-1].extend(seg)
        else:
            pending.extend(seg)
    if pending and not merged:
        return []

    phrases: list[Phrase] = []
    for seg in merged:
        trimmed = list(seg)
        while trimmed and tokens[trimmed[-1]].pos in config.trim_trailing_pos:
            trimmed.pop()
        while trimmed and tokens[trimmed[-1]].pos == "PUNCT":
            trimmed.pop()
        while trimmed and tokens[trimmed[0]].pos == "PUNCT":
            trimmed.pop(0)
        if not trimmed:
            continue
        text = _render(caption, tokens, trimmed)
        if not text:
            continue
        phrases.append(Phrase(text=text, token_range=(trimmed[0], trimmed[-1] + 1)))
    return phrases
