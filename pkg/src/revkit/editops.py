"""Alignment-based edit extraction, edit application, and span-bound validation.

Edits are character-offset splices extracted from a token-level LCS
alignment of two texts. Regions between matched tokens are trimmed
(common suffix first, then common prefix, which attaches pure insertions
to the token on their left) and then widened to the boundaries of any
token they touch, so edit offsets stay token-bounded wherever a token is
involved.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .annotation import IntentSpan
from .core import Intent, Token, tokenize
from .errors import OverlappingEdits, RangeOutOfBounds


class AlignKind(str, Enum):
    MATCH = "match"
    DELETE = "delete"
    INSERT = "insert"


@dataclass(frozen=True)
class AlignOp:
    """One step of the token edit script; i/j index before/after tokens."""

    kind: AlignKind
    i: int
    j: int


@dataclass(frozen=True)
class Edit:
    src_start: int
    src_end: int
    replacement: str
    intent: Intent

    def __post_init__(self) -> None:
        if self.intent is Intent.NONE:
            raise ValueError("edits never carry the NONE label")
        if self.src_start > self.src_end or self.src_start < 0:
            raise ValueError(f"invalid edit range ({self.src_start}, {self.src_end})")

    @property
    def is_insertion(self) -> bool:
        return self.src_start == self.src_end


class StopReason(str, Enum):
    NO_EDIT = "no_edit"
    MAX_DEPTH = "max_depth"
    OSCILLATION = "oscillation"
    QUALITY_DECREASE = "quality_decrease"


@dataclass(frozen=True)
class RevisionStep:
    depth: int
    before: str
    after: str
    edits: tuple[Edit, ...]
    detector_labels: tuple[Intent, ...]

    def __init__(self, depth, before, after, edits=(), detector_labels=()):
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "before", before)
        object.__setattr__(self, "after", after)
        object.__setattr__(self, "edits", tuple(edits))
        object.__setattr__(self, "detector_labels", tuple(detector_labels))
        if depth < 1:
            raise ValueError("step depth starts at 1")
        if apply_edits(before, list(self.edits)) != after:
            raise ValueError("edits do not reproduce the after text")


@dataclass(frozen=True)
class RevisionTrace:
    doc_id: str
    steps: tuple[RevisionStep, ...]
    stop_reason: StopReason
    group: str | None = None

    def __init__(self, doc_id, steps, stop_reason, group=None):
        object.__setattr__(self, "doc_id", doc_id)
        object.__setattr__(self, "steps", tuple(steps))
        object.__setattr__(self, "stop_reason", stop_reason)
        object.__setattr__(self, "group", group)
        for k, step in enumerate(self.steps):
            if step.depth != k + 1:
                raise ValueError("step depths must run 1..n")
            if k and self.steps[k - 1].after != step.before:
                raise ValueError(f"step {k + 1} does not chain from step {k}")

    @property
    def final_text(self) -> str | None:
        return self.steps[-1].after if self.steps else None


def align(before_tokens: list[Token], after_tokens: list[Token]) -> list[AlignOp]:
    """Minimal LCS edit script over token texts.

    Tie-breaking is fixed: MATCH whenever token texts are equal, otherwise
    DELETE before INSERT, so the script is reproducible across runs.
    """
    a = [t.text for t in before_tokens]
    b = [t.text for t in after_tokens]
    n, m = len(a), len(b)
    # lcs[i][j] = LCS length of a[i:] vs b[j:]
    lcs = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, nxt = lcs[i], lcs[i + 1]
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                row[j] = nxt[j + 1] + 1
            else:
                down, right = nxt[j], row[j + 1]
                row[j] = down if down >= right else right
    ops: list[AlignOp] = []
    i = j = 0
    while i < n or j < m:
        if i < n and j < m and a[i] == b[j]:
            ops.append(AlignOp(AlignKind.MATCH, i, j))
            i += 1
            j += 1
        elif i < n and (j == m or lcs[i + 1][j] >= lcs[i][j + 1]):
            ops.append(AlignOp(AlignKind.DELETE, i, j))
            i += 1
        else:
            ops.append(AlignOp(AlignKind.INSERT, i, j))
            j += 1
    return ops


def _splices_from_units(before: str, after: str,
                        b_units: list[Token], a_units: list[Token]) -> list[tuple[int, int, str]]:
    """Splices turning before into after, one per region between consecutive
    matched alignment units, trimmed and widened to unit boundaries."""
    matches = [op for op in align(b_units, a_units) if op.kind is AlignKind.MATCH]
    regions: list[tuple[int, int, int, int]] = []
    pb = pa = 0
    for op in matches:
        regions.append((pb, b_units[op.i].start, pa, a_units[op.j].start))
        pb, pa = b_units[op.i].end, a_units[op.j].end
    regions.append((pb, len(before), pa, len(after)))

    out: list[tuple[int, int, str]] = []
    for bs, be, as_, ae in regions:
        if before[bs:be] == after[as_:ae]:
            continue
        b_lo, b_hi, a_lo, a_hi = bs, be, as_, ae
        # trim common suffix first so pure insertions attach to the left unit
        while b_hi > b_lo and a_hi > a_lo and before[b_hi - 1] == after[a_hi - 1]:
            b_hi -= 1
            a_hi -= 1
        while b_lo < b_hi and a_lo < a_hi and before[b_lo] == after[a_lo]:
            b_lo += 1
            a_lo += 1
        # widen to whole units; the widened flanks are trimmed-common text
        touched = [t for t in b_units if t.start < b_hi and t.end > b_lo]
        if touched:
            new_lo = min(b_lo, touched[0].start)
            new_hi = max(b_hi, touched[-1].end)
            replacement = (before[new_lo:b_lo] + after[a_lo:a_hi]
                           + before[b_hi:new_hi])
            out.append((new_lo, new_hi, replacement))
        else:
            out.append((b_lo, b_hi, after[a_lo:a_hi]))
    return out


def _raw_edits(before: str, after: str) -> list[tuple[int, int, str]]:
    """Token-bounded splices turning before into after."""
    return _splices_from_units(before, after, tokenize(before), tokenize(after))


def _char_units(text: str) -> list[Token]:
    return [Token(ch, i, i + 1) for i, ch in enumerate(text)]


def _char_edits(before: str, after: str) -> list[tuple[int, int, str]]:
    """Character-granular splices; used to untangle revisions that mix
    in-span and out-of-span changes within adjacent tokens."""
    return _splices_from_units(before, after, _char_units(before), _char_units(after))


def extract_edits(before: str, after: str, intent: Intent) -> list[Edit]:
    """Diff two texts into intent-labeled edits; apply_edits inverts this."""
    if intent is Intent.NONE:
        raise ValueError("extract_edits needs an edit intent")
    return [Edit(s, e, repl, intent) for s, e, repl in _raw_edits(before, after)]


def _checked(before: str, edits: list[Edit]) -> list[Edit]:
    ordered = sorted(edits, key=lambda e: (e.src_start, e.src_end))
    for edit in ordered:
        if edit.src_end > len(before):
            raise RangeOutOfBounds(
                f"edit ({edit.src_start}, {edit.src_end}) exceeds text length {len(before)}")
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.src_start < prev.src_end:
            raise OverlappingEdits(f"{prev} overlaps {cur}")
    return ordered


def apply_edits(before: str, edits: list[Edit]) -> str:
    """Splice edits right to left; pure function of its inputs."""
    out = before
    for edit in reversed(_checked(before, edits)):
        out = out[:edit.src_start] + edit.replacement + out[edit.src_end:]
    return out


def project_labels(before: str, edits: list[Edit]) -> list[Intent]:
    """One intent label per token of before.

    Tokens overlapping an edit's source range take that edit's intent; a
    pure insertion labels the token containing the insertion point, else the
    token immediately left of it, else the first token. Earlier edits win
    collisions.
    """
    ordered = _checked(before, edits)
    tokens = tokenize(before)
    labels = [Intent.NONE] * len(tokens)
    for edit in ordered:
        if not edit.is_insertion:
            hits = [k for k, t in enumerate(tokens)
                    if t.start < edit.src_end and t.end > edit.src_start]
        elif not tokens:
            hits = []
        else:
            p = edit.src_start
            inside = [k for k, t in enumerate(tokens) if t.start < p < t.end]
            if inside:
                hits = inside[:1]
            else:
                lefts = [k for k, t in enumerate(tokens) if t.end <= p]
                hits = [lefts[-1]] if lefts else [0]
        for k in hits:
            if labels[k] is Intent.NONE:
                labels[k] = edit.intent
    return labels


@dataclass(frozen=True)
class Violation:
    """A changed region of the before text that no span accounts for."""

    src_start: int
    src_end: int
    before_text: str
    replacement: str

    def __str__(self) -> str:
        return (f"out-of-span change at ({self.src_start}, {self.src_end}): "
                f"{self.before_text!r} -> {self.replacement!r}")


def _edit_in_spans(start: int, end: int, spans: list[IntentSpan]) -> bool:
    if start == end:
        # insertions at a span boundary count as inside
        return any(s.start <= start <= s.end for s in spans)
    return any(s.start <= start and end <= s.end for s in spans)


def _decomposes_within_spans(before: str, spans: list[IntentSpan], after: str) -> bool:
    """True iff after can be written as before with only span slices replaced,
    i.e. every out-of-span segment of before survives verbatim and in order."""
    segments: list[str] = []
    pos = 0
    for span in sorted(spans, key=lambda s: s.start):
        segments.append(before[pos:span.start])
        pos = span.end
    segments.append(before[pos:])
    pattern = "(?s:.*)".join(re.escape(seg) for seg in segments)
    return re.fullmatch(pattern, after) is not None


def validate_within_spans(before: str, spans: list[IntentSpan], after: str) -> list[Violation]:
    """Check that every change between before and after stays inside a span.

    Returns [] when the revision is explainable purely by in-span rewrites;
    otherwise the out-of-span regions, diagnosed by character-level
    alignment, come back as Violations (violations are data, not errors).
    """
    if _decomposes_within_spans(before, list(spans), after):
        return []
    return [Violation(s, e, before[s:e], repl)
            for s, e, repl in _char_edits(before, after)
            if not _edit_in_spans(s, e, list(spans))]


def enforce_within_spans(before: str, spans: list[IntentSpan], after: str) -> tuple[str, list[tuple[int, int, str]]]:
    """Revert out-of-span changes, keeping in-span ones.

    Returns the enforced after text plus the token-bounded splices (indexed
    into before) that reproduce it. When the revision already decomposes
    into in-span rewrites it is kept whole; otherwise character-level
    alignment separates the out-of-span changes, which are dropped.
    """
    if _decomposes_within_spans(before, list(spans), after):
        return after, _raw_edits(before, after)
    kept = [(s, e, repl) for s, e, repl in _char_edits(before, after)
            if _edit_in_spans(s, e, list(spans))]
    out = before
    for s, e, repl in reversed(kept):
        out = out[:s] + repl + out[e:]
    return out, _raw_edits(before, out)
