"""Detector and reviser backends.

Two realizations of each contract: deterministic rule-table references for
tests and offline use, and remote clients speaking the HTTP protocol of the
model server. The wire protocol:

- POST /v1/detect  {text, context_before?, context_after?, multi_task}
  -> {tokens: [str], labels: [str], needs_edit?: bool}
  where tokens is the deterministic tokenization of text (whitespace split
  plus punctuation peeling) and labels has one lowercase intent per token.
- POST /v1/revise  {annotated: str} -> {revised: str}, with annotated in the
  tagged wire format (or the sentence-prefix form in that mode).
- GET  /v1/health -> {status: "ok"}; schema violations answer 422 with
  {error, offset?}.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

from .annotation import AnnotatedText, render_annotated, render_sentence_prefix
from .core import Intent, parse_intent, tokenize
from .errors import BackendUnavailable, LengthMismatch, ParseError, ProtocolError


@dataclass(frozen=True)
class DetectorOutput:
    labels: tuple[Intent, ...]
    needs_edit: bool | None = None


@runtime_checkable
class Detector(Protocol):
    def detect(self, text: str, context_before: str | None = None,
               context_after: str | None = None) -> DetectorOutput:
        ...


@runtime_checkable
class Reviser(Protocol):
    def revise(self, annotated: AnnotatedText) -> str:
        ...


# ---------------------------------------------------------------------------
# Rule tables


@dataclass(frozen=True)
class DetectionRule:
    pattern: str
    intent: Intent


@dataclass(frozen=True)
class RevisionRule:
    intent: Intent
    pattern: str
    replacement: str


@dataclass(frozen=True)
class RuleTable:
    detection: tuple[DetectionRule, ...] = ()
    revision: tuple[RevisionRule, ...] = ()

    def __post_init__(self) -> None:
        for rule in self.detection + self.revision:
            if not rule.pattern:
                raise ValueError("rule patterns must be non-empty")


def parse_rule_table(lines) -> RuleTable:
    """Parse the line-oriented rule format.

    `D <TAB> pattern <TAB> intent` adds a detection rule and
    `R <TAB> intent <TAB> pattern <TAB> replacement` a revision rule; blank
    lines and lines starting with # are skipped.
    """
    detection: list[DetectionRule] = []
    revision: list[RevisionRule] = []
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        try:
            if parts[0] == "D" and len(parts) == 3:
                detection.append(DetectionRule(parts[1], parse_intent(parts[2])))
            elif parts[0] == "R" and len(parts) == 4:
                revision.append(RevisionRule(parse_intent(parts[1]), parts[2], parts[3]))
            else:
                raise ValueError(f"unrecognized rule line: {line!r}")
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    try:
        return RuleTable(tuple(detection), tuple(revision))
    except ValueError as exc:
        raise ParseError(str(exc), 0) from None


def load_rule_table(path) -> RuleTable:
    with open(path, encoding="utf-8") as handle:
        return parse_rule_table(handle)


class RuleDetector:
    """Reference detector: first matching token-sequence pattern wins.

    Not a model stand-in for quality; it exists so the pipeline and its
    invariants are fully testable offline.
    """

    def __init__(self, table: RuleTable, multi_task: bool = False):
        self.table = table
        self.multi_task = multi_task
        self._patterns = [([t.text for t in tokenize(rule.pattern)], rule.intent)
                          for rule in table.detection]

    def detect(self, text: str, context_before: str | None = None,
               context_after: str | None = None) -> DetectorOutput:
        texts = [t.text for t in tokenize(text)]
        labels = [Intent.NONE] * len(texts)
        for pattern, intent in self._patterns:
            width = len(pattern)
            if width == 0:
                continue
            for start in range(len(texts) - width + 1):
                if texts[start:start + width] == pattern:
                    for k in range(start, start + width):
                        if labels[k] is Intent.NONE:
                            labels[k] = intent
        needs_edit = None
        if self.multi_task:
            needs_edit = any(label is not Intent.NONE for label in labels)
        return DetectorOutput(tuple(labels), needs_edit)


class RuleReviser:
    """Reference reviser: replacement rules applied only inside spans whose
    intent matches, so its output stays within span bounds by construction."""

    def __init__(self, table: RuleTable):
        self.table = table

    def revise(self, annotated: AnnotatedText) -> str:
        plain = annotated.plain
        for span in sorted(annotated.spans, key=lambda s: s.start, reverse=True):
            segment = plain[span.start:span.end]
            for rule in self.table.revision:
                if rule.intent is span.intent and rule.pattern in segment:
                    segment = segment.replace(rule.pattern, rule.replacement)
            plain = plain[:span.start] + segment + plain[span.end:]
        return plain


# ---------------------------------------------------------------------------
# Remote clients


def _request(url: str, payload: dict | None, timeout: float) -> dict:
    try:
        if payload is None:
            req = urllib.request.Request(url, method="GET")
        else:
            req = urllib.request.Request(
                url, data=json.dumps(payload).encode("utf-8"),
                headers={"Content-Type": "application/json"}, method="POST")
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            body = resp.read()
    except urllib.error.HTTPError as exc:
        detail = ""
        try:
            detail = json.loads(exc.read().decode("utf-8")).get("error", "")
        except Exception:
            pass
        if exc.code in (400, 404, 422):
            raise ProtocolError(f"{url} answered {exc.code}: {detail}") from None
        raise BackendUnavailable(f"{url} answered {exc.code}: {detail}") from None
    except (urllib.error.URLError, ConnectionError, TimeoutError, OSError) as exc:
        raise BackendUnavailable(f"cannot reach {url}: {exc}") from None
    try:
        data = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"{url} returned invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ProtocolError(f"{url} returned a non-object response")
    return data


def check_health(endpoint: str, timeout: float = 10.0) -> dict:
    return _request(endpoint.rstrip("/") + "/v1/health", None, timeout)


class RemoteDetector:
    def __init__(self, endpoint: str, multi_task: bool = False, timeout: float = 30.0):
        self.endpoint = endpoint.rstrip("/")
        self.multi_task = multi_task
        self.timeout = timeout

    def detect(self, text: str, context_before: str | None = None,
               context_after: str | None = None) -> DetectorOutput:
        payload: dict = {"text": text, "multi_task": self.multi_task}
        if context_before is not None:
            payload["context_before"] = context_before
        if context_after is not None:
            payload["context_after"] = context_after
        data = _request(self.endpoint + "/v1/detect", payload, self.timeout)
        if "tokens" not in data or "labels" not in data:
            raise ProtocolError("detect response missing tokens/labels")
        tokens, labels = data["tokens"], data["labels"]
        if not isinstance(tokens, list) or not isinstance(labels, list):
            raise ProtocolError("tokens/labels must be arrays")
        if len(tokens) != len(labels):
            raise ProtocolError(
                f"{len(tokens)} tokens but {len(labels)} labels in response")
        local = [t.text for t in tokenize(text)]
        if len(local) != len(labels):
            raise LengthMismatch(
                f"server labeled {len(labels)} tokens, text has {len(local)}")
        if list(tokens) != local:
            raise ProtocolError("server tokenization disagrees with the protocol rule")
        try:
            parsed = tuple(parse_intent(str(name)) for name in labels)
        except ValueError as exc:
            raise ProtocolError(str(exc)) from None
        needs_edit = data.get("needs_edit")
        if needs_edit is not None and not isinstance(needs_edit, bool):
            raise ProtocolError("needs_edit must be a boolean")
        return DetectorOutput(parsed, needs_edit)


class RemoteReviser:
    def __init__(self, endpoint: str, annotation_mode: str = "span-tags",
                 timeout: float = 60.0):
        if annotation_mode not in ("span-tags", "sentence-prefix"):
            raise ValueError(f"unknown annotation_mode: {annotation_mode!r}")
        self.endpoint = endpoint.rstrip("/")
        self.annotation_mode = annotation_mode
        self.timeout = timeout

    def revise(self, annotated: AnnotatedText) -> str:
        if not annotated.spans:
            return annotated.plain
        if self.annotation_mode == "sentence-prefix":
            wire = render_sentence_prefix(annotated.plain, annotated.spans[0].intent)
        else:
            wire = render_annotated(annotated)
        data = _request(self.endpoint + "/v1/revise", {"annotated": wire}, self.timeout)
        if "revised" not in data or not isinstance(data["revised"], str):
            raise ProtocolError("revise response missing revised string")
        return data["revised"]
