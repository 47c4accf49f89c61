"""Corpus construction: meaning-change filtering, taxonomy mapping of external
task corpora, detector context windows, unified records, and statistics.

The on-disk record format is JSON lines (UTF-8, LF): one object per record
with fields record_id, source_dataset, split, before, after, intent,
edits[{src_start,src_end,replacement,intent}], labels[]. Serialization for
revision traces lives here as well.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

import numpy as np

from .core import Intent, parse_intent, tokenize
from .editops import Edit, RevisionStep, RevisionTrace, StopReason, apply_edits, extract_edits, project_labels
from .errors import EmptyBefore, MalformedRecord

SOURCES = ("iterater", "nucle", "lang8", "discofuse", "newsela", "wikilarge",
           "split-rephrase", "gyafc")
SPLITS = ("train", "valid", "test")

#: Taxonomy mapping for external task corpora: GEC pairs are fluency edits,
#: simplification and sentence splitting are clarity, fusion is coherence,
#: and formality transfer is style.
SOURCE_INTENTS = {
    "nucle": Intent.FLUENCY,
    "lang8": Intent.FLUENCY,
    "newsela": Intent.CLARITY,
    "wikilarge": Intent.CLARITY,
    "split-rephrase": Intent.CLARITY,
    "discofuse": Intent.COHERENCE,
    "gyafc": Intent.STYLE,
}


# ---------------------------------------------------------------------------
# Pair filtering


@dataclass(frozen=True)
class FilterConfig:
    min_len_ratio: float = 0.5
    max_len_ratio: float = 2.0
    min_char_similarity: float = 0.35

    def __post_init__(self) -> None:
        if not (0 < self.min_len_ratio <= 1 <= self.max_len_ratio):
            raise ValueError("need 0 < min_len_ratio <= 1 <= max_len_ratio")
        if not (0 <= self.min_char_similarity <= 1):
            raise ValueError("min_char_similarity must be in [0, 1]")


@dataclass(frozen=True)
class FilterDecision:
    keep: bool
    reason: str | None = None
    len_ratio: float = 0.0
    char_similarity: float | None = None

    def __str__(self) -> str:
        if self.keep:
            return "KEEP"
        value = self.len_ratio if self.reason == "len_ratio" else self.char_similarity
        return f"DISCARD({self.reason}={value:.3f})"


def levenshtein(a: str, b: str) -> int:
    """Character-level edit distance, row-vectorized for long inputs."""
    if a == b:
        return 0
    if not a or not b:
        return len(a) or len(b)
    codes = np.fromiter(map(ord, b), dtype=np.int64, count=len(b))
    offsets = np.arange(len(b) + 1)
    prev = offsets.copy()
    cur = np.empty_like(prev)
    for i, ch in enumerate(a, 1):
        cur[0] = i
        np.minimum(prev[:-1] + (codes != ord(ch)), prev[1:] + 1, out=cur[1:])
        cur = np.minimum.accumulate(cur - offsets) + offsets
        prev, cur = cur, prev
    return int(prev[-1])


def char_similarity(a: str, b: str) -> float:
    """Normalized similarity: 1 - levenshtein / max(len). Two empty strings
    count as identical."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def filter_pair(before: str, after: str, cfg: FilterConfig = FilterConfig()) -> FilterDecision:
    """Keep a pair unless it looks meaning-changed.

    Discards when the character-length ratio falls outside the configured
    bounds or the normalized character similarity drops below the threshold;
    the cheap ratio check runs first, so similarity is only computed (and
    reported) for pairs that pass it.
    """
    if not before:
        raise EmptyBefore("length ratio is undefined for an empty before text")
    ratio = len(after) / len(before)
    if not (cfg.min_len_ratio <= ratio <= cfg.max_len_ratio):
        return FilterDecision(False, "len_ratio", ratio, None)
    similarity = char_similarity(before, after)
    if similarity < cfg.min_char_similarity:
        return FilterDecision(False, "char_similarity", ratio, similarity)
    return FilterDecision(True, None, ratio, similarity)


# ---------------------------------------------------------------------------
# Records and ingestion


@dataclass(frozen=True)
class CorpusRecord:
    record_id: str
    source_dataset: str
    split: str
    before: str
    after: str
    intent: Intent
    edits: tuple[Edit, ...]
    labels: tuple[Intent, ...]

    def __post_init__(self) -> None:
        if self.source_dataset not in SOURCES:
            raise ValueError(f"unknown source_dataset: {self.source_dataset!r}")
        if self.split not in SPLITS:
            raise ValueError(f"unknown split: {self.split!r}")


@dataclass(frozen=True)
class DiscardEntry:
    line: int
    reason: str
    decision: FilterDecision


@dataclass
class IngestResult:
    records: list[CorpusRecord] = field(default_factory=list)
    discards: list[DiscardEntry] = field(default_factory=list)
    skipped_intents: int = 0

    @property
    def total(self) -> int:
        return len(self.records) + len(self.discards)

    @property
    def discard_rate(self) -> float:
        return len(self.discards) / self.total if self.total else 0.0

    def discard_reasons(self) -> Counter:
        return Counter(entry.reason for entry in self.discards)


def iter_tsv_pairs(lines: Iterable[str]) -> Iterator[tuple[int, str, str, None]]:
    """Parse `before <TAB> after` lines; raises MalformedRecord."""
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) < 2:
            raise MalformedRecord("expected two tab-separated fields", lineno)
        yield lineno, parts[0], parts[1], None


_BEFORE_KEYS = ("before", "before_sent", "before_text", "source")
_AFTER_KEYS = ("after", "after_sent", "after_text", "target")
_INTENT_KEYS = ("intent", "label", "labels", "edit_intention")


def iter_iterater(lines: Iterable[str]) -> Iterator[tuple[int, str, str, str]]:
    """Parse the native revision format: JSON lines carrying
    (before, after, intent) triples, with the field aliases used by the
    public release."""
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"invalid JSON: {exc}", lineno) from None
        if not isinstance(row, dict):
            raise MalformedRecord("expected a JSON object", lineno)

        def pick(keys):
            for key in keys:
                if key in row:
                    return row[key]
            return None

        before, after, intent = pick(_BEFORE_KEYS), pick(_AFTER_KEYS), pick(_INTENT_KEYS)
        if before is None or after is None or intent is None:
            raise MalformedRecord("missing before/after/intent field", lineno)
        if isinstance(intent, list):
            if not intent:
                raise MalformedRecord("empty label list", lineno)
            intent = intent[0]
        yield lineno, str(before), str(after), str(intent)


def ingest(source_dataset: str,
           rows: Iterable[tuple[int, str, str, str | None]],
           split: str = "train",
           cfg: FilterConfig = FilterConfig()) -> IngestResult:
    """Filter rows, assign intents, extract edits, and project labels.

    rows yields (line, before, after, intent-or-None); the intent is required
    for the iterater source and ignored for external sources, whose intent
    comes from the taxonomy mapping. Rows whose intent falls outside the four
    edit intents (meaning-changed, other) are skipped and counted.
    """
    if source_dataset not in SOURCES:
        raise ValueError(f"unknown source_dataset: {source_dataset!r}")
    result = IngestResult()
    for lineno, before, after, raw_intent in rows:
        if source_dataset == "iterater":
            try:
                intent = parse_intent(raw_intent or "")
            except ValueError:
                result.skipped_intents += 1
                continue
            if intent is Intent.NONE:
                result.skipped_intents += 1
                continue
        else:
            intent = SOURCE_INTENTS[source_dataset]
        if not before:
            result.discards.append(DiscardEntry(
                lineno, "empty_before", FilterDecision(False, "empty_before", 0.0, None)))
            continue
        decision = filter_pair(before, after, cfg)
        if not decision.keep:
            result.discards.append(DiscardEntry(lineno, decision.reason or "", decision))
            continue
        edits = tuple(extract_edits(before, after, intent))
        labels = tuple(project_labels(before, list(edits)))
        result.records.append(CorpusRecord(
            record_id=f"{source_dataset}-{split}-{lineno:06d}",
            source_dataset=source_dataset,
            split=split,
            before=before,
            after=after,
            intent=intent,
            edits=edits,
            labels=labels,
        ))
    return result


# ---------------------------------------------------------------------------
# Detector context windows


@dataclass(frozen=True)
class DetectorExample:
    """A detector input: the center sentence plus optional flanking context.

    Labels, when present, cover the center sentence's tokens only.
    """

    center: str
    context_before: str | None = None
    context_after: str | None = None
    labels: tuple[Intent, ...] = ()

    @property
    def window(self) -> str:
        """The full input window, neighbor sentences marked off by newlines."""
        parts = [p for p in (self.context_before, self.center, self.context_after) if p]
        return "\n".join(parts)


def build_context_window(sentences: list[str], index: int, mode: str,
                         labels: tuple[Intent, ...] = ()) -> DetectorExample:
    """Single-sentence mode returns sentence i alone; multi-sentence mode
    adds the neighbors, omitting whichever is missing at a document edge."""
    if not 0 <= index < len(sentences):
        raise IndexError(f"sentence index {index} out of range 0..{len(sentences) - 1}")
    if mode not in ("single-sentence", "multi-sentence"):
        raise ValueError(f"unknown context mode: {mode!r}")
    if mode == "single-sentence":
        return DetectorExample(sentences[index], labels=labels)
    return DetectorExample(
        center=sentences[index],
        context_before=sentences[index - 1] if index > 0 else None,
        context_after=sentences[index + 1] if index + 1 < len(sentences) else None,
        labels=labels,
    )


# ---------------------------------------------------------------------------
# Statistics


_STATS_INTENTS = (Intent.FLUENCY, Intent.CLARITY, Intent.COHERENCE, Intent.STYLE)
_GROUPS = ("iterater", "task-specific")


@dataclass
class CorpusStats:
    """Sentence and edit counts per (intent, source-group)."""

    sentences: Counter = field(default_factory=Counter)
    edits: Counter = field(default_factory=Counter)

    def add(self, record: CorpusRecord) -> None:
        group = "iterater" if record.source_dataset == "iterater" else "task-specific"
        key = (record.intent, group)
        self.sentences[key] += 1
        self.edits[key] += len(record.edits)

    def merge(self, other: "CorpusStats") -> "CorpusStats":
        merged = CorpusStats()
        merged.sentences = self.sentences + other.sentences
        merged.edits = self.edits + other.edits
        return merged

    def total_sentences(self) -> int:
        return sum(self.sentences.values())

    def total_edits(self) -> int:
        return sum(self.edits.values())

    def rows(self) -> list[dict]:
        out = []
        for intent in _STATS_INTENTS:
            for group in _GROUPS:
                key = (intent, group)
                out.append({
                    "intent": intent.value,
                    "group": group,
                    "sentences": self.sentences.get(key, 0),
                    "edits": self.edits.get(key, 0),
                })
        return out

    def format_table(self) -> str:
        lines = [f"{'intent':<12}{'source':<16}{'sentences':>12}{'edits':>12}"]
        for row in self.rows():
            lines.append(f"{row['intent']:<12}{row['group']:<16}"
                         f"{row['sentences']:>12}{row['edits']:>12}")
        lines.append(f"{'total':<12}{'':<16}"
                     f"{self.total_sentences():>12}{self.total_edits():>12}")
        return "\n".join(lines)


def corpus_stats(records: Iterable[CorpusRecord]) -> CorpusStats:
    stats = CorpusStats()
    for record in records:
        stats.add(record)
    return stats


# ---------------------------------------------------------------------------
# Serialization (records, traces)


def edit_to_dict(edit: Edit) -> dict:
    return {"src_start": edit.src_start, "src_end": edit.src_end,
            "replacement": edit.replacement, "intent": edit.intent.value}


def edit_from_dict(data: dict) -> Edit:
    return Edit(int(data["src_start"]), int(data["src_end"]),
                str(data["replacement"]), parse_intent(data["intent"]))


def record_to_dict(record: CorpusRecord) -> dict:
    return {
        "record_id": record.record_id,
        "source_dataset": record.source_dataset,
        "split": record.split,
        "before": record.before,
        "after": record.after,
        "intent": record.intent.value,
        "edits": [edit_to_dict(e) for e in record.edits],
        "labels": [label.value for label in record.labels],
    }


def record_from_dict(data: dict) -> CorpusRecord:
    return CorpusRecord(
        record_id=str(data["record_id"]),
        source_dataset=str(data["source_dataset"]),
        split=str(data["split"]),
        before=str(data["before"]),
        after=str(data["after"]),
        intent=parse_intent(data["intent"]),
        edits=tuple(edit_from_dict(e) for e in data.get("edits", [])),
        labels=tuple(parse_intent(name) for name in data.get("labels", [])),
    )


def step_to_dict(step: RevisionStep) -> dict:
    return {
        "depth": step.depth,
        "before": step.before,
        "after": step.after,
        "edits": [edit_to_dict(e) for e in step.edits],
        "detector_labels": [label.value for label in step.detector_labels],
    }


def step_from_dict(data: dict) -> RevisionStep:
    return RevisionStep(
        depth=int(data["depth"]),
        before=str(data["before"]),
        after=str(data["after"]),
        edits=tuple(edit_from_dict(e) for e in data.get("edits", [])),
        detector_labels=tuple(parse_intent(name)
                              for name in data.get("detector_labels", [])),
    )


def trace_to_dict(trace: RevisionTrace) -> dict:
    out = {
        "doc_id": trace.doc_id,
        "stop_reason": trace.stop_reason.value,
        "steps": [step_to_dict(s) for s in trace.steps],
    }
    if trace.group is not None:
        out["group"] = trace.group
    return out


def trace_from_dict(data: dict) -> RevisionTrace:
    return RevisionTrace(
        doc_id=str(data["doc_id"]),
        steps=tuple(step_from_dict(s) for s in data.get("steps", [])),
        stop_reason=StopReason(data["stop_reason"]),
        group=data.get("group"),
    )


def write_jsonl(handle: TextIO, objects: Iterable[dict]) -> int:
    count = 0
    for obj in objects:
        handle.write(json.dumps(obj, ensure_ascii=False) + "\n")
        count += 1
    return count


def read_jsonl(handle: TextIO) -> Iterator[dict]:
    for lineno, line in enumerate(handle, 1):
        line = line.strip()
        if not line:
            continue
        try:
            yield json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"invalid JSON: {exc}", lineno) from None


def validate_record(record: CorpusRecord) -> None:
    """Check the record invariants: edits reproduce after, labels cover
    before's tokens."""
    if apply_edits(record.before, list(record.edits)) != record.after:
        raise ValueError(f"{record.record_id}: edits do not reproduce after")
    if len(record.labels) != len(tokenize(record.before)):
        raise ValueError(f"{record.record_id}: labels do not match token count")
