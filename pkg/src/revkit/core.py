"""Shared domain types, deterministic tokenization, and sentence segmentation.

All offsets are Unicode scalar-value indices into the source string (plain
Python string indices), never bytes.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from enum import Enum


class Intent(str, Enum):
    """The closed set of edit intents plus the NONE token label.

    NONE is only ever attached to token labels; spans and edits always carry
    one of the four edit intents.
    """

    CLARITY = "clarity"
    COHERENCE = "coherence"
    FLUENCY = "fluency"
    STYLE = "style"
    NONE = "none"

    def __str__(self) -> str:
        return self.value


#: The four span/edit intents in fixed tie-breaking order.
EDIT_INTENTS = (Intent.CLARITY, Intent.COHERENCE, Intent.FLUENCY, Intent.STYLE)


def parse_intent(name: str) -> Intent:
    try:
        return Intent(name.strip().lower())
    except ValueError:
        raise ValueError(f"unknown intent: {name!r}") from None


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid token range ({self.start}, {self.end})")


@dataclass(frozen=True)
class Sentence:
    start: int
    end: int
    index: int


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str
    depth: int = 0

    def __post_init__(self) -> None:
        if self.depth < 0:
            raise ValueError("depth must be non-negative")


@dataclass(frozen=True)
class EngineConfig:
    """Knobs for the revision controller and the corpus filter.

    max_depth caps the number of revision rounds. context_mode selects how
    much surrounding text the detector sees; annotation_mode selects the wire
    form fed to the reviser (span tags, or the whole-sentence prefix
    baseline). quality_guard optionally names a reference-based scorer
    ("sari" or "rouge-l") used to reject quality-decreasing rounds.
    """

    max_depth: int = 4
    context_mode: str = "single-sentence"
    annotation_mode: str = "span-tags"
    quality_guard: str | None = None
    gate_on_needs_edit: bool = False
    min_len_ratio: float = 0.5
    max_len_ratio: float = 2.0
    min_char_similarity: float = 0.35

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.context_mode not in ("single-sentence", "multi-sentence"):
            raise ValueError(f"unknown context_mode: {self.context_mode!r}")
        if self.annotation_mode not in ("span-tags", "sentence-prefix"):
            raise ValueError(f"unknown annotation_mode: {self.annotation_mode!r}")
        if self.quality_guard not in (None, "sari", "rouge-l"):
            raise ValueError(f"unknown quality_guard: {self.quality_guard!r}")


def _is_peelable(ch: str) -> bool:
    # Unicode punctuation (category P*). Symbols (S*) stay attached so that
    # things like "$5" or "=x" survive as single tokens.
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> list[Token]:
    """Split on Unicode whitespace, then peel leading/trailing punctuation.

    Each peeled punctuation character becomes its own token; internal
    punctuation (apostrophes, hyphens, decimal points) stays attached.
    Deterministic, and the tokens plus the inter-token slices reproduce the
    source exactly.
    """
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        # chunk is text[i:j]; peel punctuation off both edges
        lo, hi = i, j
        while lo < hi and _is_peelable(text[lo]):
            tokens.append(Token(text[lo], lo, lo + 1))
            lo += 1
        trailing: list[Token] = []
        while hi > lo and _is_peelable(text[hi - 1]):
            trailing.append(Token(text[hi - 1], hi - 1, hi))
            hi -= 1
        if lo < hi:
            tokens.append(Token(text[lo:hi], lo, hi))
        tokens.extend(reversed(trailing))
        i = j
    return tokens


#: Lowercased abbreviations (periods stripped) that suppress sentence breaks.
_ABBREVIATIONS = frozenset({
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "no", "vol", "fig",
    "eq", "sec", "dept", "est", "approx", "vs", "etc", "eg", "ie", "cf",
    "al", "resp", "ca", "misc", "inc", "ltd", "co",
})

_TERMINATORS = frozenset(".!?")
_CLOSERS = frozenset("\"'”’)]")
_OPENERS = frozenset("\"'“‘([")


def _word_before(text: str, pos: int) -> str:
    """The letters-and-periods run immediately preceding text[pos]."""
    i = pos
    while i > 0 and (text[i - 1].isalpha() or text[i - 1] == "."):
        i -= 1
    return text[i:pos]


def _is_abbreviation(text: str, dot: int) -> bool:
    word = _word_before(text, dot).strip(".")
    if not word:
        return False
    bare = word.replace(".", "").lower()
    return bare in _ABBREVIATIONS or (len(bare) == 1 and bare.isalpha())


def split_sentences(text: str) -> list[Sentence]:
    """Deterministic rule-based sentence segmentation.

    A break happens after a terminator in {. ! ?} (plus any closing
    quotes/brackets) that is followed by whitespace and an uppercase letter
    or opening quote. A short abbreviation stop-list suppresses false splits
    after "e.g.", "Dr.", initials, and the like. Sentences partition the
    non-whitespace content; with no terminator the whole trimmed text is one
    sentence.
    """
    n = len(text)
    breaks: list[int] = []
    i = 0
    while i < n:
        ch = text[i]
        if ch in _TERMINATORS:
            j = i + 1
            while j < n and text[j] in _CLOSERS:
                j += 1
            k = j
            while k < n and text[k].isspace():
                k += 1
            if k > j and k < n and (text[k].isupper() or text[k] in _OPENERS):
                if not (ch == "." and _is_abbreviation(text, i)):
                    breaks.append(j)
                    i = j
                    continue
        i += 1

    sentences: list[Sentence] = []
    seg_start = 0
    for brk in breaks + [n]:
        lo, hi = seg_start, brk
        while lo < hi and text[lo].isspace():
            lo += 1
        while hi > lo and text[hi - 1].isspace():
            hi -= 1
        if lo < hi:
            sentences.append(Sentence(lo, hi, len(sentences)))
        seg_start = brk
    return sentences


def sentence_texts(text: str, sentences: list[Sentence] | None = None) -> list[str]:
    """Convenience: the sentence slices of text, in order."""
    if sentences is None:
        sentences = split_sentences(text)
    return [text[s.start:s.end] for s in sentences]
