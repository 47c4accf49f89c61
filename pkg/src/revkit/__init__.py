"""revkit: iterative span-based text revision.

Detect intent-labeled editable spans, revise only those spans through
pluggable backends, and iterate with principled stopping criteria; plus the
corpus pipeline, evaluation metrics, and edit-trajectory analysis needed to
build and assess such systems.
"""

from .annotation import (
    AnnotatedText,
    IntentSpan,
    canonicalize,
    parse_annotated,
    render_annotated,
    render_sentence_prefix,
    spans_from_labels,
)
from .backends import (
    Detector,
    DetectorOutput,
    RemoteDetector,
    RemoteReviser,
    Reviser,
    RuleDetector,
    RuleReviser,
    RuleTable,
    load_rule_table,
)
from .core import Document, EngineConfig, Intent, Sentence, Token, split_sentences, tokenize
from .corpus import (
    CorpusRecord,
    CorpusStats,
    FilterConfig,
    build_context_window,
    char_similarity,
    corpus_stats,
    filter_pair,
    ingest,
)
from .editops import (
    AlignKind,
    AlignOp,
    Edit,
    RevisionStep,
    RevisionTrace,
    StopReason,
    Violation,
    align,
    apply_edits,
    extract_edits,
    project_labels,
    validate_within_spans,
)
from .engine import detect_document, iterate, revise_once
from .analysis import FlowMatrix, export_csv, export_sankey, transitions
from .metrics import F1Report, SariBreakdown, bleu, corpus_rouge_l, corpus_sari, rouge_l, sari, token_f1

__version__ = "0.1.0"
