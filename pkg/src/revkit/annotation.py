"""The intent-tagged text format that carries detector output into the reviser.

The wire grammar: lowercase intent tags (``<fluency>`` ... ``</fluency>``),
no attributes, no nesting, no overlap. Literal ``& < >`` in plain text are
entity-escaped. One padding space after an opening tag and one before a
closing tag belong to the tag, not to the span, which keeps span offsets
tight while matching published examples of the format verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import EDIT_INTENTS, Intent, Token, parse_intent
from .errors import (
    LengthMismatch,
    NestedTag,
    OverlappingSpans,
    UnbalancedTag,
    UnknownTag,
)

_OPEN_TAGS = {f"<{i.value}>": i for i in EDIT_INTENTS}
_CLOSE_TAGS = {f"</{i.value}>": i for i in EDIT_INTENTS}
_ENTITIES = (("&amp;", "&"), ("&lt;", "<"), ("&gt;", ">"))


@dataclass(frozen=True)
class IntentSpan:
    start: int
    end: int
    intent: Intent

    def __post_init__(self) -> None:
        if self.intent is Intent.NONE:
            raise ValueError("spans never carry the NONE label")
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid span range ({self.start}, {self.end})")


@dataclass(frozen=True)
class AnnotatedText:
    plain: str
    spans: tuple[IntentSpan, ...]

    def __init__(self, plain: str, spans=()):  # accepts any iterable of spans
        object.__setattr__(self, "plain", plain)
        object.__setattr__(self, "spans", tuple(spans))
        for span in self.spans:
            if span.end > len(plain):
                raise ValueError(f"span {span} exceeds text length {len(plain)}")


def canonicalize(annotated: AnnotatedText) -> AnnotatedText:
    """Sort spans and merge touching spans that share an intent."""
    merged: list[IntentSpan] = []
    for span in sorted(annotated.spans, key=lambda s: (s.start, s.end)):
        if merged and merged[-1].end > span.start:
            raise OverlappingSpans(f"{merged[-1]} overlaps {span}")
        if merged and merged[-1].end == span.start and merged[-1].intent is span.intent:
            merged[-1] = IntentSpan(merged[-1].start, span.end, span.intent)
        else:
            merged.append(span)
    return AnnotatedText(annotated.plain, merged)


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def parse_annotated(tagged: str) -> AnnotatedText:
    """Parse a tagged string into plain text plus intent spans.

    Raises UnknownTag, UnbalancedTag, or NestedTag with the offset of the
    violation in the tagged string.
    """
    plain: list[str] = []
    spans: list[IntentSpan] = []
    open_intent: Intent | None = None
    open_offset = 0
    span_start = 0
    skip_space = False
    i = 0
    n = len(tagged)
    while i < n:
        ch = tagged[i]
        if ch == "<":
            close = tagged.find(">", i)
            candidate = tagged[i:close + 1] if close != -1 else ""
            if candidate in _OPEN_TAGS:
                if open_intent is not None:
                    raise NestedTag(f"{candidate} opened inside <{open_intent}>", i)
                open_intent = _OPEN_TAGS[candidate]
                open_offset = i
                span_start = len(plain)
                skip_space = True
                i = close + 1
                continue
            if candidate in _CLOSE_TAGS:
                if open_intent is None:
                    raise UnbalancedTag(f"{candidate} without opening tag", i)
                if _CLOSE_TAGS[candidate] is not open_intent:
                    raise UnbalancedTag(
                        f"{candidate} closes <{open_intent}>", i)
                if len(plain) > span_start and plain[-1] == " ":
                    plain.pop()
                if len(plain) > span_start:
                    spans.append(IntentSpan(span_start, len(plain), open_intent))
                open_intent = None
                skip_space = False
                i = close + 1
                continue
            raise UnknownTag(f"not an intent tag: {tagged[i:i + 12]!r}", i)
        if skip_space and ch == " ":
            skip_space = False
            i += 1
            continue
        skip_space = False
        if ch == "&":
            for entity, literal in _ENTITIES:
                if tagged.startswith(entity, i):
                    plain.append(literal)
                    i += len(entity)
                    break
            else:
                plain.append("&")
                i += 1
            continue
        plain.append(ch)
        i += 1
    if open_intent is not None:
        raise UnbalancedTag(f"<{open_intent}> never closed", open_offset)
    return canonicalize(AnnotatedText("".join(plain), spans))


def render_annotated(annotated: AnnotatedText) -> str:
    """Render plain text plus spans into the tagged wire form.

    Inverse of parse_annotated on canonical inputs; raises OverlappingSpans.
    """
    spans = sorted(annotated.spans, key=lambda s: (s.start, s.end))
    for prev, cur in zip(spans, spans[1:]):
        if prev.end > cur.start:
            raise OverlappingSpans(f"{prev} overlaps {cur}")
    plain = annotated.plain
    out: list[str] = []
    pos = 0
    for span in spans:
        out.append(_escape(plain[pos:span.start]))
        out.append(f"<{span.intent}> ")
        out.append(_escape(plain[span.start:span.end]))
        out.append(f" </{span.intent}>")
        pos = span.end
    out.append(_escape(plain[pos:]))
    return "".join(out)


def spans_from_labels(tokens: list[Token], labels: list[Intent]) -> list[IntentSpan]:
    """Turn per-token intent labels into maximal contiguous spans.

    A run of equal non-NONE labels becomes one span from the first token's
    start to the last token's end.
    """
    if len(tokens) != len(labels):
        raise LengthMismatch(f"{len(tokens)} tokens but {len(labels)} labels")
    spans: list[IntentSpan] = []
    run_start: int | None = None
    run_intent = Intent.NONE
    for idx, (token, label) in enumerate(zip(tokens, labels)):
        if label is not run_intent:
            if run_start is not None:
                spans.append(IntentSpan(tokens[run_start].start,
                                        tokens[idx - 1].end, run_intent))
            run_start = idx if label is not Intent.NONE else None
            run_intent = label
    if run_start is not None:
        spans.append(IntentSpan(tokens[run_start].start, tokens[-1].end, run_intent))
    return spans


def labels_from_spans(tokens: list[Token], spans: list[IntentSpan]) -> list[Intent]:
    """Inverse of spans_from_labels: label each token by the span covering it."""
    labels = [Intent.NONE] * len(tokens)
    for span in spans:
        for idx, token in enumerate(tokens):
            if token.start < span.end and token.end > span.start:
                labels[idx] = span.intent
    return labels


def render_sentence_prefix(plain: str, intent: Intent) -> str:
    """The whole-sentence baseline form: a single intent tag up front."""
    if intent is Intent.NONE:
        raise ValueError("sentence prefix requires an edit intent")
    return f"<{intent}> {plain}"


def strip_sentence_prefix(tagged: str) -> tuple[Intent, str]:
    """Recover (intent, plain) from a sentence-prefix string."""
    for intent in EDIT_INTENTS:
        prefix = f"<{intent}> "
        if tagged.startswith(prefix):
            return intent, tagged[len(prefix):]
    raise ValueError(f"no sentence prefix found in {tagged[:24]!r}")


def parse_label_names(names: list[str]) -> list[Intent]:
    """Map wire label strings (clarity/.../none) onto Intent values."""
    return [parse_intent(name) for name in names]
