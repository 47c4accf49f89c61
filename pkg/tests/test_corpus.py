from __future__ import annotations

import io
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import levenshtein_recursive
from revkit.core import Intent, tokenize
from revkit.corpus import (
    CorpusRecord,
    CorpusStats,
    FilterConfig,
    build_context_window,
    char_similarity,
    corpus_stats,
    filter_pair,
    ingest,
    iter_iterater,
    iter_tsv_pairs,
    levenshtein,
    read_jsonl,
    record_from_dict,
    record_to_dict,
    trace_from_dict,
    trace_to_dict,
    validate_record,
    write_jsonl,
)
from revkit.editops import RevisionStep, RevisionTrace, StopReason, apply_edits, extract_edits
from revkit.errors import EmptyBefore, MalformedRecord


# ---------------------------------------------------------------------------
# filtering


def test_filter_identity_keeps():
    decision = filter_pair("same", "same")
    assert decision.keep
    assert decision.len_ratio == 1.0
    assert decision.char_similarity == 1.0


def test_filter_length_ratio_discard():
    decision = filter_pair("x" * 100, "x" * 10)
    assert not decision.keep
    assert decision.reason == "len_ratio"
    assert decision.len_ratio == pytest.approx(0.1)
    assert "len_ratio" in str(decision)


def test_filter_similarity_example():
    assert char_similarity("abcd", "abcf") == pytest.approx(0.75)
    decision = filter_pair("abcd", "abcf")
    assert decision.keep and decision.char_similarity == pytest.approx(0.75)


def test_filter_similarity_discard():
    decision = filter_pair("aaaa", "zzzz", FilterConfig(min_char_similarity=0.5))
    assert not decision.keep and decision.reason == "char_similarity"


def test_filter_empty_before_raises():
    with pytest.raises(EmptyBefore):
        filter_pair("", "anything")


@given(st.text(min_size=1, max_size=30), st.text(min_size=1, max_size=30))
def test_filter_symmetric_with_reciprocal_bounds(a, b):
    cfg = FilterConfig(min_len_ratio=0.5, max_len_ratio=2.0, min_char_similarity=0.3)
    assert filter_pair(a, b, cfg).keep == filter_pair(b, a, cfg).keep


@given(st.text(max_size=25), st.text(max_size=25))
def test_levenshtein_matches_recursive_oracle(a, b):
    assert levenshtein(a, b) == levenshtein_recursive(a, b)


# ---------------------------------------------------------------------------
# ingestion


NUCLE_BEFORE = ("Technology based on scientific research requires a wide "
                "range of knowledge about the research.")
NUCLE_AFTER = ("Technology based on scientific research requires a wide "
               "range of knowledge to conduct the research.")


def test_ingest_nucle_pair():
    rows = [(1, NUCLE_BEFORE, NUCLE_AFTER, None)]
    result = ingest("nucle", rows, split="train")
    assert len(result.records) == 1
    record = result.records[0]
    assert record.intent is Intent.FLUENCY
    assert len(record.edits) == 1
    assert apply_edits(record.before, list(record.edits)) == record.after
    assert len(record.labels) == len(tokenize(record.before))
    validate_record(record)


def test_ingest_gyafc_is_style():
    rows = [(1, "They wouldnt want u stepping in.",
             "They would not desire your interference.", None)]
    result = ingest("gyafc", rows)
    assert result.records[0].intent is Intent.STYLE
    assert result.records[0].edits


def test_ingest_discofuse_is_coherence():
    rows = [(1, "Their flight is weak. They run quickly through the tree canopy.",
             "Their flight is weak, but they run quickly through the tree canopy.", None)]
    result = ingest("discofuse", rows)
    assert result.records[0].intent is Intent.COHERENCE
    assert len(result.records[0].edits) == 1


def test_ingest_filters_and_reports():
    rows = [(1, "a sentence that stays the same.", "a sentence that stays the same!"),
            (2, "short", "this is a radically longer replacement that changes everything")]
    rows = [(n, b, a, None) for n, b, a in rows]
    result = ingest("lang8", rows)
    assert len(result.records) == 1
    assert len(result.discards) == 1
    assert result.discards[0].line == 2
    assert result.discard_rate == pytest.approx(0.5)
    assert result.discard_reasons()["len_ratio"] == 1


def test_ingest_iterater_intents_and_skips():
    rows = [(1, "keep this one pls.", "keep this one please.", "fluency"),
            (2, "meaning changed a lot.", "meaning changed a lot!", "meaning-changed"),
            (3, "style it up.", "style it up now.", "style")]
    result = ingest("iterater", rows)
    assert [r.intent for r in result.records] == [Intent.FLUENCY, Intent.STYLE]
    assert result.skipped_intents == 1


def test_iter_tsv_pairs_and_errors():
    rows = list(iter_tsv_pairs(["a\tb\n", "", "c\td\textra\n"]))
    assert rows[0] == (1, "a", "b", None)
    assert rows[1][:3] == (3, "c", "d")
    with pytest.raises(MalformedRecord) as err:
        list(iter_tsv_pairs(["only one field"]))
    assert err.value.line == 1


def test_iter_iterater_aliases():
    line = json.dumps({"before_sent": "a", "after_sent": "b", "labels": ["clarity"]})
    assert list(iter_iterater([line])) == [(1, "a", "b", "clarity")]
    with pytest.raises(MalformedRecord):
        list(iter_iterater(["{not json"]))
    with pytest.raises(MalformedRecord):
        list(iter_iterater([json.dumps({"before": "a"})]))


# ---------------------------------------------------------------------------
# context windows


def test_context_window_single_mode():
    example = build_context_window(["One.", "Two.", "Three."], 1, "single-sentence")
    assert example.center == "Two."
    assert example.context_before is None and example.context_after is None
    assert example.window == "Two."


def test_context_window_multi_mode():
    example = build_context_window(["One.", "Two.", "Three."], 1, "multi-sentence")
    assert (example.context_before, example.center, example.context_after) == \
        ("One.", "Two.", "Three.")
    assert example.window == "One.\nTwo.\nThree."


def test_context_window_edges():
    only = build_context_window(["Solo."], 0, "multi-sentence")
    assert only.window == "Solo."
    first = build_context_window(["One.", "Two.", "Three."], 0, "multi-sentence")
    assert first.window == "One.\nTwo."
    with pytest.raises(IndexError):
        build_context_window(["One."], 1, "multi-sentence")


# ---------------------------------------------------------------------------
# stats


def _record(n, source, intent, edit_count):
    before = " ".join(f"w{k}" for k in range(max(edit_count * 2, 2)))
    parts = before.split(" ")
    for k in range(edit_count):
        parts[2 * k] = f"X{k}"
    after = " ".join(parts)
    edits = extract_edits(before, after, intent)
    assert len(edits) == edit_count
    from revkit.editops import project_labels
    return CorpusRecord(f"r{n}", source, "train", before, after, intent,
                        tuple(edits), tuple(project_labels(before, edits)))


def test_corpus_stats_counts():
    records = [_record(1, "nucle", Intent.FLUENCY, 2),
               _record(2, "lang8", Intent.FLUENCY, 1),
               _record(3, "iterater", Intent.CLARITY, 1)]
    stats = corpus_stats(records)
    assert stats.sentences[(Intent.FLUENCY, "task-specific")] == 2
    assert stats.edits[(Intent.FLUENCY, "task-specific")] == 3
    assert stats.sentences[(Intent.CLARITY, "iterater")] == 1
    assert stats.total_sentences() == 3
    assert stats.total_edits() == 4


def test_corpus_stats_empty_and_reorder_invariant():
    assert corpus_stats([]).total_sentences() == 0
    records = [_record(1, "nucle", Intent.FLUENCY, 2),
               _record(2, "gyafc", Intent.STYLE, 1)]
    a = corpus_stats(records)
    b = corpus_stats(list(reversed(records)))
    assert a.sentences == b.sentences and a.edits == b.edits


def test_stats_table_renders():
    table = corpus_stats([_record(1, "nucle", Intent.FLUENCY, 1)]).format_table()
    assert "fluency" in table and "task-specific" in table and "total" in table


# ---------------------------------------------------------------------------
# serialization


def test_record_round_trip():
    record = _record(7, "discofuse", Intent.COHERENCE, 2)
    assert record_from_dict(record_to_dict(record)) == record


def test_trace_round_trip():
    s1 = RevisionStep(1, "a b", "a c", extract_edits("a b", "a c", Intent.FLUENCY),
                      (Intent.NONE, Intent.FLUENCY))
    trace = RevisionTrace("doc-1", (s1,), StopReason.NO_EDIT, group="low")
    assert trace_from_dict(trace_to_dict(trace)) == trace


def test_jsonl_round_trip():
    buf = io.StringIO()
    rows = [{"a": 1}, {"b": "x"}]
    assert write_jsonl(buf, rows) == 2
    buf.seek(0)
    assert list(read_jsonl(buf)) == rows
    bad = io.StringIO("{broken\n")
    with pytest.raises(MalformedRecord):
        list(read_jsonl(bad))
