from __future__ import annotations

import json
from pathlib import Path

import pytest

from revkit.annotation import AnnotatedText, IntentSpan, parse_annotated
from revkit.backends import (
    DetectionRule,
    RemoteDetector,
    RemoteReviser,
    RevisionRule,
    RuleDetector,
    RuleReviser,
    RuleTable,
    check_health,
    load_rule_table,
    parse_rule_table,
)
from revkit.core import Intent, tokenize
from revkit.editops import validate_within_spans
from revkit.errors import BackendUnavailable, LengthMismatch, ParseError, ProtocolError
from stub_server import StubServer

FIXTURES = json.loads(
    (Path(__file__).parent / "fixtures" / "protocol.json").read_text(encoding="utf-8"))

TABLE6_PLAIN = ('I disagree about that "young people do not give enough time '
                'to helping their communities".')


# ---------------------------------------------------------------------------
# rule table parsing


def test_parse_empty_table():
    table = parse_rule_table([])
    assert table.detection == () and table.revision == ()


def test_load_rule_table(tmp_path):
    path = tmp_path / "rules.tsv"
    path.write_text("# comment\nD\tbad stuff\tfluency\nR\tfluency\tbad\tgood\n",
                    encoding="utf-8")
    table = load_rule_table(path)
    assert len(table.detection) == 1 and len(table.revision) == 1
    assert table.detection[0] == DetectionRule("bad stuff", Intent.FLUENCY)
    assert table.revision[0] == RevisionRule(Intent.FLUENCY, "bad", "good")


def test_parse_error_names_line():
    lines = ["D\tok\tfluency", "D\tok\tclarity", "D\tbroken line"]
    with pytest.raises(ParseError) as err:
        parse_rule_table(lines)
    assert err.value.line == 3
    with pytest.raises(ParseError):
        parse_rule_table(["D\tx\tnot-an-intent"])
    with pytest.raises(ParseError):
        parse_rule_table(["D\t\tfluency"])  # empty pattern


# ---------------------------------------------------------------------------
# rule detector


def test_rule_detector_matches_pattern():
    table = RuleTable((DetectionRule("disagree about", Intent.FLUENCY),), ())
    out = RuleDetector(table).detect(TABLE6_PLAIN)
    tokens = tokenize(TABLE6_PLAIN)
    flagged = [t.text for t, lab in zip(tokens, out.labels) if lab is Intent.FLUENCY]
    assert flagged == ["disagree", "about"]
    assert all(lab in (Intent.NONE, Intent.FLUENCY) for lab in out.labels)
    assert out.needs_edit is None


def test_rule_detector_empty_table_all_none():
    out = RuleDetector(RuleTable()).detect("anything at all")
    assert set(out.labels) == {Intent.NONE}


def test_rule_detector_first_match_wins():
    table = RuleTable((DetectionRule("a b", Intent.CLARITY),
                       DetectionRule("b c", Intent.STYLE)), ())
    out = RuleDetector(table).detect("a b c")
    assert list(out.labels) == [Intent.CLARITY, Intent.CLARITY, Intent.STYLE]


def test_rule_detector_multi_task_head():
    table = RuleTable((DetectionRule("bad", Intent.FLUENCY),), ())
    assert RuleDetector(table, multi_task=True).detect("bad day").needs_edit is True
    assert RuleDetector(table, multi_task=True).detect("good day").needs_edit is False


def test_rule_detector_deterministic():
    table = RuleTable((DetectionRule("weak", Intent.COHERENCE),), ())
    det = RuleDetector(table)
    text = "Their flight is weak."
    assert det.detect(text) == det.detect(text)


# ---------------------------------------------------------------------------
# rule reviser


def _table6_table():
    return RuleTable(
        (DetectionRule("disagree about that", Intent.FLUENCY),),
        (RevisionRule(Intent.FLUENCY, "disagree about that",
                      "disagree with the statement that"),))


def test_rule_reviser_no_spans_verbatim():
    assert RuleReviser(_table6_table()).revise(AnnotatedText("x y z")) == "x y z"


def test_rule_reviser_reproduces_published_revision():
    annotated = parse_annotated(
        'I <fluency> disagree about that "young people do not give enough '
        'time to helping their communities" </fluency>.')
    revised = RuleReviser(_table6_table()).revise(annotated)
    assert revised == ('I disagree with the statement that "young people do '
                       'not give enough time to helping their communities".')


def test_rule_reviser_two_spans():
    table = RuleTable((), (
        RevisionRule(Intent.CLARITY, "aaa", "a"),
        RevisionRule(Intent.STYLE, "zzz", "z"),
    ))
    annotated = AnnotatedText("aaa mid zzz", [IntentSpan(0, 3, Intent.CLARITY),
                                              IntentSpan(8, 11, Intent.STYLE)])
    assert RuleReviser(table).revise(annotated) == "a mid z"


def test_rule_reviser_respects_span_intent():
    table = RuleTable((), (RevisionRule(Intent.CLARITY, "x", "y"),))
    annotated = AnnotatedText("x x", [IntentSpan(0, 1, Intent.STYLE)])
    assert RuleReviser(table).revise(annotated) == "x x"  # wrong intent: no-op


def test_rule_reviser_always_within_spans():
    table = RuleTable((), (RevisionRule(Intent.FLUENCY, "a", "aa"),))
    plain = "x a a"
    spans = [IntentSpan(2, 3, Intent.FLUENCY)]
    revised = RuleReviser(table).revise(AnnotatedText(plain, spans))
    assert revised == "x aa a"
    assert validate_within_spans(plain, spans, revised) == []


# ---------------------------------------------------------------------------
# remote clients against fixture responses


def _case(name: str) -> dict:
    return next(c for c in FIXTURES["cases"] if c["name"] == name)


def test_remote_detector_round_trips_fixture():
    case = _case("detect_basic")
    with StubServer() as server:
        server.set("POST", "/v1/detect", case["expect"])
        out = RemoteDetector(server.endpoint).detect(case["request"]["text"])
        assert [l.value for l in out.labels] == case["expect"]["labels"]
        assert out.needs_edit is None
        method, path, body = server.requests[0]
        assert (method, path) == ("POST", "/v1/detect")
        assert body == case["request"]


def test_remote_detector_passes_context_and_multi_task():
    case = _case("detect_with_context")
    with StubServer() as server:
        server.set("POST", "/v1/detect", case["expect"])
        RemoteDetector(server.endpoint).detect(
            case["request"]["text"],
            context_before=case["request"]["context_before"],
            context_after=case["request"]["context_after"])
        assert server.requests[0][2] == case["request"]
    case = _case("detect_multi_task_positive")
    with StubServer() as server:
        server.set("POST", "/v1/detect", case["expect"])
        out = RemoteDetector(server.endpoint, multi_task=True).detect(
            case["request"]["text"])
        assert out.needs_edit is True
        assert server.requests[0][2]["multi_task"] is True


def test_remote_detector_schema_errors():
    with StubServer() as server:
        server.set("POST", "/v1/detect", {"tokens": ["a"], "labels": ["none", "none"]})
        with pytest.raises(ProtocolError):
            RemoteDetector(server.endpoint).detect("a")
    with StubServer() as server:
        server.set("POST", "/v1/detect", {"tokens": ["a", "b"], "labels": ["none", "none"]})
        with pytest.raises(LengthMismatch):
            RemoteDetector(server.endpoint).detect("a")
    with StubServer() as server:
        server.set("POST", "/v1/detect", {"tokens": ["b"], "labels": ["none"]})
        with pytest.raises(ProtocolError):
            RemoteDetector(server.endpoint).detect("a")  # tokenization disagreement
    with StubServer() as server:
        server.set("POST", "/v1/detect", {"tokens": ["a"], "labels": ["bogus"]})
        with pytest.raises(ProtocolError):
            RemoteDetector(server.endpoint).detect("a")


def test_remote_detector_422_surfaces_protocol_error():
    with StubServer() as server:
        server.set("POST", "/v1/detect", {"error": "text must be a string"}, status=422)
        with pytest.raises(ProtocolError, match="text must be a string"):
            RemoteDetector(server.endpoint).detect("a")


def test_remote_reviser_round_trips_fixture():
    case = _case("revise_single_span")
    with StubServer() as server:
        server.set("POST", "/v1/revise", case["expect"])
        annotated = parse_annotated(case["request"]["annotated"])
        revised = RemoteReviser(server.endpoint).revise(annotated)
        assert revised == case["expect"]["revised"]
        # the annotated wire string is reproduced bit-exactly
        assert server.requests[0][2] == case["request"]


def test_remote_reviser_no_spans_skips_network():
    reviser = RemoteReviser("http://127.0.0.1:9")  # nothing listens here
    assert reviser.revise(AnnotatedText("plain text")) == "plain text"


def test_remote_reviser_sentence_prefix_mode():
    with StubServer() as server:
        server.set("POST", "/v1/revise", {"revised": "ok"})
        annotated = AnnotatedText("fix me", [IntentSpan(0, 6, Intent.FLUENCY)])
        out = RemoteReviser(server.endpoint, annotation_mode="sentence-prefix").revise(annotated)
        assert out == "ok"
        assert server.requests[0][2] == {"annotated": "<fluency> fix me"}


def test_remote_backend_unavailable():
    with pytest.raises(BackendUnavailable):
        RemoteDetector("http://127.0.0.1:9", timeout=0.5).detect("a")
    with pytest.raises(BackendUnavailable):
        check_health("http://127.0.0.1:9", timeout=0.5)


def test_check_health():
    with StubServer() as server:
        server.set("GET", "/v1/health", {"status": "ok"})
        assert check_health(server.endpoint) == {"status": "ok"}
