"""Evaluation metrics for text revision.

Conventions: BLEU is corpus-level on a 0-1 scale (n<=4, uniform weights,
clipped counts, brevity penalty, no smoothing); ROUGE-L and SARI are on
0-100. SARI follows the original text-simplification formulation: keep is
an F1 over fractionally-counted kept n-grams, delete is precision-only,
add is an F1 over n-gram sets, any 0/0 component is 0, and the final score
averages the three components over the n-gram orders that actually occur
in the inputs.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .core import Intent, EDIT_INTENTS, tokenize
from .errors import EmptyCorpus, EmptyReference, ShapeMismatch

_MAX_ORDER = 4


def _words(text: str) -> list[str]:
    return [t.text for t in tokenize(text)]


def _ngrams(words: list[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(words[i:i + n]) for i in range(len(words) - n + 1)]


# ---------------------------------------------------------------------------
# BLEU


def bleu(hypotheses: list[str], references: list[list[str]]) -> float:
    """Corpus BLEU in [0, 1].

    references holds one list of reference strings per hypothesis. The
    reference length used for the brevity penalty is the closest to the
    hypothesis length (ties broken toward the shorter reference). Returns 0
    when any n-gram precision is 0.
    """
    if not hypotheses:
        raise EmptyCorpus("no hypotheses")
    if len(hypotheses) != len(references):
        raise EmptyCorpus(
            f"{len(hypotheses)} hypotheses vs {len(references)} reference sets")
    matched = [0] * _MAX_ORDER
    total = [0] * _MAX_ORDER
    hyp_len = 0
    ref_len = 0
    for hyp, refs in zip(hypotheses, references):
        if not refs:
            raise EmptyCorpus("hypothesis without references")
        hyp_words = _words(hyp)
        ref_words = [_words(r) for r in refs]
        hyp_len += len(hyp_words)
        ref_len += min((abs(len(r) - len(hyp_words)), len(r)) for r in ref_words)[1]
        for n in range(1, _MAX_ORDER + 1):
            counts = Counter(_ngrams(hyp_words, n))
            if not counts:
                continue
            cap: Counter = Counter()
            for r in ref_words:
                rc = Counter(_ngrams(r, n))
                for g, c in rc.items():
                    if c > cap[g]:
                        cap[g] = c
            matched[n - 1] += sum(min(c, cap[g]) for g, c in counts.items())
            total[n - 1] += sum(counts.values())
    if any(t == 0 or m == 0 for m, t in zip(matched, total)):
        return 0.0
    log_prec = sum(math.log(m / t) for m, t in zip(matched, total)) / _MAX_ORDER
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return bp * math.exp(log_prec)


def smoothed_sentence_bleu(hypothesis: str, references: list[str]) -> float:
    """Sentence-level diagnostic BLEU with add-one smoothing for n >= 2.

    Never used for headline numbers; corpus comparisons use bleu().
    """
    if not references:
        raise EmptyCorpus("hypothesis without references")
    hyp_words = _words(hypothesis)
    ref_words = [_words(r) for r in references]
    log_prec = 0.0
    for n in range(1, _MAX_ORDER + 1):
        counts = Counter(_ngrams(hyp_words, n))
        cap: Counter = Counter()
        for r in ref_words:
            for g, c in Counter(_ngrams(r, n)).items():
                if c > cap[g]:
                    cap[g] = c
        m = sum(min(c, cap[g]) for g, c in counts.items())
        t = sum(counts.values())
        if n >= 2:
            m, t = m + 1, t + 1
        if m == 0 or t == 0:
            return 0.0
        log_prec += math.log(m / t) / _MAX_ORDER
    hyp_len = len(hyp_words)
    ref_len = min((abs(len(r) - hyp_len), len(r)) for r in ref_words)[1]
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / max(hyp_len, 1))
    return bp * math.exp(log_prec)


# ---------------------------------------------------------------------------
# ROUGE-L


def _lcs_len(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[-1]))
        prev = cur
    return prev[-1]


def rouge_l(hypothesis: str, reference: str | list[str]) -> dict[str, float]:
    """LCS-based ROUGE with beta=1, scaled to 0-100.

    With several references the triple of the best-F reference is returned.
    """
    refs = [reference] if isinstance(reference, str) else list(reference)
    if not refs:
        raise EmptyReference("no references")
    hyp_words = _words(hypothesis)
    best: dict[str, float] | None = None
    any_tokens = False
    for ref in refs:
        ref_words = _words(ref)
        if not ref_words:
            continue
        any_tokens = True
        lcs = _lcs_len(hyp_words, ref_words)
        p = lcs / len(hyp_words) if hyp_words else 0.0
        r = lcs / len(ref_words)
        f = 2 * p * r / (p + r) if p + r else 0.0
        scored = {"p": 100 * p, "r": 100 * r, "f": 100 * f}
        if best is None or scored["f"] > best["f"]:
            best = scored
    if not any_tokens:
        raise EmptyReference("references contain no tokens")
    assert best is not None
    return best


def corpus_rouge_l(hypotheses: list[str], references: list[list[str]]) -> dict[str, float]:
    """Mean per-sentence ROUGE-L over a corpus."""
    if not hypotheses or len(hypotheses) != len(references):
        raise EmptyCorpus("corpus shape mismatch")
    triples = [rouge_l(h, r) for h, r in zip(hypotheses, references)]
    return {k: sum(t[k] for t in triples) / len(triples) for k in ("p", "r", "f")}


# ---------------------------------------------------------------------------
# SARI


@dataclass(frozen=True)
class SariBreakdown:
    """Per-order component scores (0-100) and their mean-of-means final.

    add_f/keep_f/del_p map each n-gram order that occurs in the inputs to
    its add-F1, keep-F1 and delete-precision. final averages, over those
    orders, the mean of the three components.
    """

    add_f: dict[int, float] = field(default_factory=dict)
    keep_f: dict[int, float] = field(default_factory=dict)
    del_p: dict[int, float] = field(default_factory=dict)
    final: float = 0.0

    @property
    def add(self) -> float:
        return _mean(list(self.add_f.values()))

    @property
    def keep(self) -> float:
        return _mean(list(self.keep_f.values()))

    @property
    def delete(self) -> float:
        return _mean(list(self.del_p.values()))


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _scaled(counter: Counter, factor: int) -> Counter:
    out: Counter = Counter()
    for g, c in counter.items():
        out[g] = c * factor
    return out


def _sari_order(src: list, hyp: list, refs: list[list]) -> tuple[float, float, float]:
    """(add_f, keep_f, del_p) for one n-gram order, each in [0, 1]."""
    numref = len(refs)
    s_rep = _scaled(Counter(src), numref)
    c_rep = _scaled(Counter(hyp), numref)
    r_all: Counter = Counter()
    for r in refs:
        r_all.update(r)

    keep_cand = s_rep & c_rep
    keep_good = keep_cand & r_all
    keep_all = s_rep & r_all
    keep_p = (sum(keep_good[g] / keep_cand[g] for g in keep_good) / len(keep_cand)
              if keep_cand else 0.0)
    keep_r = (sum(keep_good[g] / keep_all[g] for g in keep_good) / len(keep_all)
              if keep_all else 0.0)
    keep_f = 2 * keep_p * keep_r / (keep_p + keep_r) if keep_p + keep_r else 0.0

    del_cand = s_rep - c_rep
    del_good = del_cand - r_all
    del_p = (sum(del_good[g] / del_cand[g] for g in del_good) / len(del_cand)
             if del_cand else 0.0)

    add_cand = set(c_rep) - set(s_rep)
    add_good = add_cand & set(r_all)
    add_all = set(r_all) - set(s_rep)
    add_p = len(add_good) / len(add_cand) if add_cand else 0.0
    add_r = len(add_good) / len(add_all) if add_all else 0.0
    add_f = 2 * add_p * add_r / (add_p + add_r) if add_p + add_r else 0.0
    return add_f, keep_f, del_p


def sari(source: str, hypothesis: str, references: list[str]) -> SariBreakdown:
    """SARI of one (source, hypothesis, references) triple.

    Texts are lowercased before n-gram extraction, matching the metric's
    canonical formulation. Orders with no n-grams anywhere are skipped so
    short inputs are not penalized for orders that cannot occur.
    """
    if not references:
        raise EmptyReference("SARI needs at least one reference")
    src = _words(source.lower())
    hyp = _words(hypothesis.lower())
    refs = [_words(r.lower()) for r in references]
    add_f: dict[int, float] = {}
    keep_f: dict[int, float] = {}
    del_p: dict[int, float] = {}
    for n in range(1, _MAX_ORDER + 1):
        s = _ngrams(src, n)
        c = _ngrams(hyp, n)
        r = [_ngrams(ref, n) for ref in refs]
        if not s and not c and not any(r):
            continue
        a, k, d = _sari_order(s, c, r)
        add_f[n] = 100 * a
        keep_f[n] = 100 * k
        del_p[n] = 100 * d
    final = _mean([(add_f[n] + keep_f[n] + del_p[n]) / 3 for n in add_f])
    return SariBreakdown(add_f, keep_f, del_p, final)


def corpus_sari(sources: list[str], hypotheses: list[str],
                references: list[list[str]]) -> dict[str, float]:
    """Mean per-sentence SARI over a corpus, with component means."""
    if not sources or not len(sources) == len(hypotheses) == len(references):
        raise EmptyCorpus("corpus shape mismatch")
    scores = [sari(s, h, r) for s, h, r in zip(sources, hypotheses, references)]
    return {
        "final": _mean([b.final for b in scores]),
        "add": _mean([b.add for b in scores]),
        "keep": _mean([b.keep for b in scores]),
        "delete": _mean([b.delete for b in scores]),
    }


# ---------------------------------------------------------------------------
# Token-level intent F1


@dataclass(frozen=True)
class ClassScores:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


def _prf(tp: int, fp: int, fn: int) -> ClassScores:
    if tp == fp == fn == 0:
        # degenerate class: nothing to find, nothing predicted
        return ClassScores(0, 0, 0, 100.0, 100.0, 100.0)
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return ClassScores(tp, fp, fn, 100 * p, 100 * r, 100 * f)


@dataclass(frozen=True)
class F1Report:
    per_intent: dict[Intent, ClassScores]
    overall: ClassScores


def token_f1(gold: list[list[Intent]], pred: list[list[Intent]]) -> F1Report:
    """Token-level micro precision/recall/F1 per intent, NONE excluded.

    Overall pools the four edit intents; a class with no gold and no
    predicted tokens scores 100 by convention.
    """
    if len(gold) != len(pred):
        raise ShapeMismatch(f"{len(gold)} gold rows vs {len(pred)} predicted")
    for k, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise ShapeMismatch(f"row {k}: {len(g)} gold labels vs {len(p)} predicted")
    counts = {intent: [0, 0, 0] for intent in EDIT_INTENTS}  # tp, fp, fn
    for g_row, p_row in zip(gold, pred):
        for g, p in zip(g_row, p_row):
            if p is not Intent.NONE:
                if g is p:
                    counts[p][0] += 1
                else:
                    counts[p][1] += 1
            if g is not Intent.NONE and g is not p:
                counts[g][2] += 1
    per_intent = {i: _prf(*counts[i]) for i in EDIT_INTENTS}
    pooled = [sum(counts[i][k] for i in EDIT_INTENTS) for k in range(3)]
    return F1Report(per_intent, _prf(*pooled))
