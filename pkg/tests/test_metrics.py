from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import all_strings, bleu_oracle, rouge_l_oracle, sari_oracle
from revkit.core import Intent
from revkit.errors import EmptyCorpus, EmptyReference, ShapeMismatch
from revkit.metrics import (
    bleu,
    corpus_rouge_l,
    corpus_sari,
    rouge_l,
    sari,
    smoothed_sentence_bleu,
    token_f1,
)

N = Intent.NONE
F = Intent.FLUENCY
C = Intent.CLARITY


# ---------------------------------------------------------------------------
# BLEU


def test_bleu_perfect():
    hyps = ["the cat sat on the mat today", "a b c d e"]
    assert bleu(hyps, [[h] for h in hyps]) == pytest.approx(1.0)


def test_bleu_brevity_penalty_example():
    # one missing trailing token: precisions all 1, BP = exp(1 - 5/4)
    assert bleu(["a b c d"], [["a b c d e"]]) == pytest.approx(math.exp(1 - 5 / 4))


def test_bleu_zero_when_any_precision_zero():
    assert bleu(["a b c d"], [["x y z w"]]) == 0.0
    # no common 4-gram
    assert bleu(["a b c e d"], [["a b c d e"]]) == 0.0


def test_bleu_multi_reference_clipping():
    value = bleu(["a a b"], [["a b", "a a"]])
    assert value == bleu_oracle([["a", "a", "b"]], [[["a", "b"], ["a", "a"]]])


def test_bleu_errors():
    with pytest.raises(EmptyCorpus):
        bleu([], [])
    with pytest.raises(EmptyCorpus):
        bleu(["a"], [[]])
    with pytest.raises(EmptyCorpus):
        bleu(["a"], [["a"], ["b"]])


def test_smoothed_sentence_bleu_nonzero_on_partial_match():
    value = smoothed_sentence_bleu("the cat", ["the dog"])
    assert 0 < value < 1


# ---------------------------------------------------------------------------
# ROUGE-L


def test_rouge_identity():
    assert rouge_l("a b c", "a b c")["f"] == pytest.approx(100.0)


def test_rouge_hand_example():
    triple = rouge_l("a b c", "a c d")
    assert triple["p"] == pytest.approx(200 / 3)
    assert triple["r"] == pytest.approx(200 / 3)
    assert triple["f"] == pytest.approx(200 / 3)


def test_rouge_disjoint_zero():
    assert rouge_l("a b", "x y")["f"] == 0.0


def test_rouge_multi_reference_takes_best_f():
    triple = rouge_l("a b c", ["x y z", "a b c"])
    assert triple["f"] == pytest.approx(100.0)


def test_rouge_empty_reference_raises():
    with pytest.raises(EmptyReference):
        rouge_l("a", [])
    with pytest.raises(EmptyReference):
        rouge_l("a", "")


def test_corpus_rouge_is_mean():
    pairs = [("a b c", "a b c"), ("a b", "x y")]
    value = corpus_rouge_l([h for h, _ in pairs], [[r] for _, r in pairs])
    assert value["f"] == pytest.approx(50.0)


# ---------------------------------------------------------------------------
# SARI


def test_sari_identity_signature():
    breakdown = sari("a b c", "a b c", ["a b c"])
    assert breakdown.final == pytest.approx(100 / 3)
    assert breakdown.keep == pytest.approx(100.0)
    assert breakdown.add == 0.0
    assert breakdown.delete == 0.0
    # orders beyond the sentence length are skipped, not zero-filled
    assert set(breakdown.keep_f) == {1, 2, 3}


def test_sari_perfect_hypothesis():
    src = "a b c d e f"
    hyp = "a b c d e g"
    breakdown = sari(src, hyp, [hyp])
    assert breakdown.final == pytest.approx(100.0)
    for n in range(1, 5):
        assert breakdown.add_f[n] == pytest.approx(100.0)
        assert breakdown.keep_f[n] == pytest.approx(100.0)
        assert breakdown.del_p[n] == pytest.approx(100.0)


def test_sari_lowercases():
    assert sari("A B c", "a b C", ["a b c"]).final == \
        sari("a b c", "a b c", ["a b c"]).final


def test_sari_reference_permutation_invariant():
    src, hyp = "the cat sat", "a cat sat"
    refs = ["a cat sat down", "the cat lay", "a cat sat"]
    a = sari(src, hyp, refs).final
    b = sari(src, hyp, list(reversed(refs))).final
    assert a == pytest.approx(b)


def test_sari_empty_reference_raises():
    with pytest.raises(EmptyReference):
        sari("a", "a", [])


def test_sari_final_is_mean_of_means():
    breakdown = sari("the big cat sat on a mat", "the cat sat on the mat",
                     ["a cat sat on the mat", "the cat is on a mat"])
    expect = sum((breakdown.add_f[n] + breakdown.keep_f[n] + breakdown.del_p[n]) / 3
                 for n in breakdown.add_f) / len(breakdown.add_f)
    assert breakdown.final == pytest.approx(expect)


def test_corpus_sari_is_mean():
    a = sari("a b c", "a b c", ["a b c"]).final
    b = sari("x y z w", "x y w", ["x y w"]).final
    merged = corpus_sari(["a b c", "x y z w"], ["a b c", "x y w"],
                         [["a b c"], ["x y w"]])
    assert merged["final"] == pytest.approx((a + b) / 2)


# ---------------------------------------------------------------------------
# oracle equivalence on the small-string universe


UNIVERSE = all_strings("abc", 6)


def test_metrics_match_oracles_on_sampled_universe():
    rng = random.Random(99)
    for _ in range(400):
        src, hyp = rng.choice(UNIVERSE), rng.choice(UNIVERSE)
        refs = [rng.choice(UNIVERSE) for _ in range(rng.randint(1, 3))]
        assert sari(" ".join(src), " ".join(hyp), [" ".join(r) for r in refs]).final == \
            pytest.approx(sari_oracle(src, hyp, refs), abs=1e-9)
        nonempty = [r for r in refs if r] or [["a"]]
        got = rouge_l(" ".join(hyp), [" ".join(r) for r in nonempty])
        want = rouge_l_oracle(hyp, nonempty)
        for key in "prf":
            assert got[key] == pytest.approx(want[key], abs=1e-9)
        assert bleu([" ".join(hyp)], [[" ".join(r) for r in nonempty]]) == \
            pytest.approx(bleu_oracle([hyp], [nonempty]), abs=1e-9)


# ---------------------------------------------------------------------------
# token F1


def test_token_f1_perfect():
    gold = [[N, F, F, N], [C, N]]
    report = token_f1(gold, gold)
    assert report.overall.f1 == pytest.approx(100.0)
    assert report.per_intent[F].f1 == pytest.approx(100.0)


def test_token_f1_degenerate_all_none():
    report = token_f1([[N, N]], [[N, N]])
    assert report.overall.f1 == pytest.approx(100.0)
    for scores in report.per_intent.values():
        assert scores.f1 == pytest.approx(100.0)


def test_token_f1_half_right():
    gold = [[F, F, N, N]]
    pred = [[F, N, F, N]]
    report = token_f1(gold, pred)
    scores = report.per_intent[F]
    assert scores.tp == 1 and scores.fp == 1 and scores.fn == 1
    assert scores.precision == pytest.approx(50.0)
    assert scores.recall == pytest.approx(50.0)
    assert scores.f1 == pytest.approx(50.0)
    assert report.overall.f1 == pytest.approx(50.0)


def test_token_f1_confusion_counts_both_classes():
    gold = [[F, C]]
    pred = [[C, C]]
    report = token_f1(gold, pred)
    assert report.per_intent[C].tp == 1
    assert report.per_intent[C].fp == 1
    assert report.per_intent[F].fn == 1
    # overall pools: tp=1 fp=1 fn=1
    assert report.overall.tp == 1 and report.overall.fp == 1 and report.overall.fn == 1


def test_token_f1_micro_pooling_matches_summed_counts():
    rng = random.Random(3)
    intents = [N, F, C, Intent.COHERENCE, Intent.STYLE]
    gold = [[rng.choice(intents) for _ in range(8)] for _ in range(20)]
    pred = [[rng.choice(intents) for _ in range(8)] for _ in range(20)]
    report = token_f1(gold, pred)
    assert report.overall.tp == sum(s.tp for s in report.per_intent.values())
    assert report.overall.fp == sum(s.fp for s in report.per_intent.values())
    assert report.overall.fn == sum(s.fn for s in report.per_intent.values())
    for scores in list(report.per_intent.values()) + [report.overall]:
        assert 0 <= scores.precision <= 100
        assert 0 <= scores.recall <= 100
        assert 0 <= scores.f1 <= 100


def test_token_f1_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        token_f1([[N]], [[N], [N]])
    with pytest.raises(ShapeMismatch):
        token_f1([[N, N]], [[N]])


@given(st.lists(st.text(alphabet="abc ", max_size=12), min_size=1, max_size=5))
@settings(max_examples=60)
def test_metric_determinism(texts):
    refs = [[t or "a"] for t in texts]
    hyps = [t or "a" for t in texts]
    assert bleu(hyps, refs) == bleu(hyps, refs)
    assert corpus_sari(hyps, hyps, refs) == corpus_sari(hyps, hyps, refs)
