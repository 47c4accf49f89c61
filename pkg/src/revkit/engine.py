"""The delineate-edit-iterate controller.

One round: detect intent spans per sentence, hand the annotated sentence to
the reviser, revert anything the reviser changed outside its spans, and
record the surviving edits. Iteration repeats rounds until no spans are
found, nothing changes, the text revisits an earlier state, the depth cap
is hit, or (when configured with references) a quality score drops.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .annotation import AnnotatedText, IntentSpan, spans_from_labels
from .backends import Detector, DetectorOutput, Reviser
from .core import Document, EDIT_INTENTS, EngineConfig, Intent, Token, split_sentences, tokenize
from .editops import (
    Edit,
    RevisionStep,
    RevisionTrace,
    StopReason,
    apply_edits,
    enforce_within_spans,
    validate_within_spans,
)
from .errors import LengthMismatch, RevkitError
from .metrics import rouge_l, sari

__all__ = ["StopReason", "SentenceDetection", "detect_document", "revise_once", "iterate"]


@dataclass(frozen=True)
class SentenceDetection:
    """Detector output for one sentence, offsets relative to the sentence."""

    start: int          # sentence start in the document
    text: str
    tokens: tuple[Token, ...]
    labels: tuple[Intent, ...]
    spans: tuple[IntentSpan, ...]


def _majority_intent(labels) -> Intent:
    counts = {intent: 0 for intent in EDIT_INTENTS}
    for label in labels:
        if label is not Intent.NONE:
            counts[label] += 1
    return max(EDIT_INTENTS, key=lambda i: (counts[i], -EDIT_INTENTS.index(i)))


def _detect_sentences(text: str, detector: Detector, cfg: EngineConfig) -> list[SentenceDetection]:
    sentences = split_sentences(text)
    texts = [text[s.start:s.end] for s in sentences]
    out: list[SentenceDetection] = []
    for idx, sentence in enumerate(sentences):
        s_text = texts[idx]
        if cfg.context_mode == "multi-sentence":
            ctx_before = texts[idx - 1] if idx > 0 else None
            ctx_after = texts[idx + 1] if idx + 1 < len(texts) else None
        else:
            ctx_before = ctx_after = None
        result: DetectorOutput = detector.detect(
            s_text, context_before=ctx_before, context_after=ctx_after)
        tokens = tuple(tokenize(s_text))
        labels = tuple(result.labels)
        if len(labels) != len(tokens):
            raise LengthMismatch(
                f"detector returned {len(labels)} labels for {len(tokens)} tokens")
        if cfg.gate_on_needs_edit and result.needs_edit is False:
            labels = tuple(Intent.NONE for _ in tokens)
        spans = spans_from_labels(list(tokens), list(labels))
        if cfg.annotation_mode == "sentence-prefix" and spans:
            # the baseline mode edits the whole sentence under one intent
            spans = [IntentSpan(0, len(s_text), _majority_intent(labels))]
        out.append(SentenceDetection(sentence.start, s_text, tokens, labels, tuple(spans)))
    return out


def detect_document(text: str, detector: Detector,
                    cfg: EngineConfig = EngineConfig()) -> tuple[list[Intent], list[IntentSpan]]:
    """Document-level token labels and spans, in document coordinates."""
    labels: list[Intent] = []
    spans: list[IntentSpan] = []
    for det in _detect_sentences(text, detector, cfg):
        labels.extend(det.labels)
        spans.extend(IntentSpan(s.start + det.start, s.end + det.start, s.intent)
                     for s in det.spans)
    return labels, spans


def _intent_for_splice(start: int, end: int, spans: tuple[IntentSpan, ...]) -> Intent:
    """The span intent an extracted splice belongs to.

    Containment wins; otherwise largest overlap, then nearest span. Spans are
    sorted, so ties resolve to the leftmost."""
    for span in spans:
        if start == end and span.start <= start <= span.end:
            return span.intent
        if span.start <= start and end <= span.end:
            return span.intent
    best = max(spans, key=lambda s: (min(end, s.end) - max(start, s.start),
                                     -s.start))
    if min(end, best.end) - max(start, best.start) > 0:
        return best.intent
    return min(spans, key=lambda s: (max(s.start - end, start - s.end, 0), s.start)).intent


def revise_once(doc: Document, detector: Detector, reviser: Reviser,
                cfg: EngineConfig = EngineConfig()) -> RevisionStep | None:
    """Run one revision round; None means no editable spans were found.

    Reviser output that changes text outside the detected spans is reverted;
    the in-span changes are kept and recorded as intent-labeled edits.
    """
    if not doc.text:
        raise ValueError("document text is empty")
    detections = _detect_sentences(doc.text, detector, cfg)
    if all(not det.spans for det in detections):
        return None
    doc_edits: list[Edit] = []
    doc_labels: list[Intent] = []
    for det in detections:
        doc_labels.extend(det.labels)
        if not det.spans:
            continue
        revised = reviser.revise(AnnotatedText(det.text, det.spans))
        enforced, splices = enforce_within_spans(det.text, list(det.spans), revised)
        for s, e, replacement in splices:
            intent = _intent_for_splice(s, e, det.spans)
            doc_edits.append(Edit(det.start + s, det.start + e, replacement, intent))
    after = apply_edits(doc.text, doc_edits)
    step = RevisionStep(
        depth=doc.depth + 1,
        before=doc.text,
        after=after,
        edits=tuple(doc_edits),
        detector_labels=tuple(doc_labels),
    )
    return step


def _make_scorer(name: str, original: str, references: list[str]):
    if name == "sari":
        return lambda text: sari(original, text, references).final
    if name == "rouge-l":
        return lambda text: rouge_l(text, references)["f"]
    raise ValueError(f"unknown quality_guard: {name!r}")


def _digest(text: str) -> bytes:
    return hashlib.sha256(text.encode("utf-8")).digest()


def iterate(doc: Document, detector: Detector, reviser: Reviser,
            cfg: EngineConfig = EngineConfig(),
            references: list[str] | None = None,
            group: str | None = None) -> RevisionTrace:
    """Revise until a stopping criterion fires.

    Stops with NO_EDIT when no spans are found or nothing changes, MAX_DEPTH
    at the configured cap, OSCILLATION when the text returns to any earlier
    state (content-hash history), and QUALITY_DECREASE when the configured
    scorer drops against the previous depth (that round is discarded). The
    guard needs references and is off by default. Backend errors propagate
    with the partial steps attached as exc.partial_steps.
    """
    scorer = None
    if cfg.quality_guard:
        if not references:
            raise ValueError("quality_guard requires references")
        scorer = _make_scorer(cfg.quality_guard, doc.text, references)
    steps: list[RevisionStep] = []
    seen = {_digest(doc.text)}
    current = doc.text
    prev_score = scorer(current) if scorer else 0.0
    while True:
        if len(steps) >= cfg.max_depth:
            reason = StopReason.MAX_DEPTH
            break
        try:
            step = revise_once(
                Document(doc.doc_id, current, depth=len(steps)), detector, reviser, cfg)
        except RevkitError as exc:
            exc.partial_steps = tuple(steps)  # type: ignore[attr-defined]
            raise
        if step is None or step.after == step.before:
            reason = StopReason.NO_EDIT
            break
        if scorer is not None:
            score = scorer(step.after)
            if score < prev_score:
                reason = StopReason.QUALITY_DECREASE
                break
            prev_score = score
        steps.append(step)
        digest = _digest(step.after)
        if digest in seen:
            reason = StopReason.OSCILLATION
            break
        seen.add(digest)
        current = step.after
    return RevisionTrace(doc.doc_id, tuple(steps), reason, group=group)


def check_step_bounds(step: RevisionStep) -> list:
    """Re-derive spans from the recorded labels and confirm the step stayed
    inside them; used by tests and debugging, not by the hot path."""
    tokens = tokenize(step.before)
    spans = spans_from_labels(list(tokens), list(step.detector_labels))
    return validate_within_spans(step.before, spans, step.after)
