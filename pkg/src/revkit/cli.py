"""Batch command-line interface.

Subcommands: filter, ingest, stats, detect, revise, iterate, eval, flows.
All file I/O is UTF-8, line-oriented, and streamed; per-document work can be
parallelized with --jobs while output order always equals input order.
Exit codes: 0 success, 1 data or backend error, 2 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Iterator

from . import analysis, corpus, figures, metrics
from .backends import (
    RemoteDetector,
    RemoteReviser,
    RuleDetector,
    RuleReviser,
    load_rule_table,
)
from .annotation import parse_label_names, render_annotated, AnnotatedText
from .core import Document, EngineConfig, parse_intent
from .engine import detect_document, iterate, revise_once
from .errors import RevkitError

ENDPOINT_ENV = "REVKIT_ENDPOINT"


def _add_io(parser: argparse.ArgumentParser, output: bool = True) -> None:
    parser.add_argument("--in", dest="input", required=True, help="input file")
    if output:
        parser.add_argument("--out", dest="output", default="-",
                            help="output file (default: stdout)")


def _add_backend(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", choices=("rules", "remote"), default="rules")
    parser.add_argument("--rules", help="rule table path (rules backend)")
    parser.add_argument("--endpoint",
                        default=os.environ.get(ENDPOINT_ENV),
                        help=f"model server URL (remote backend; default ${ENDPOINT_ENV})")
    parser.add_argument("--multi-task", action="store_true",
                        help="ask the detector for the needs-edit head")


def _add_engine(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--context", choices=("single-sentence", "multi-sentence"),
                        default="single-sentence")
    parser.add_argument("--annotation", choices=("span-tags", "sentence-prefix"),
                        default="span-tags")
    parser.add_argument("--gate-on-needs-edit", action="store_true")
    parser.add_argument("--jobs", type=int, default=1, metavar="N",
                        help="parallel documents (output order preserved)")
    parser.add_argument("--seed", type=int, default=None,
                        help="reserved for sampling revisers; unused")


def _engine_config(args, max_depth: int = 4) -> EngineConfig:
    return EngineConfig(
        max_depth=max_depth,
        context_mode=args.context,
        annotation_mode=args.annotation,
        quality_guard=getattr(args, "quality_guard", None),
        gate_on_needs_edit=args.gate_on_needs_edit,
    )


def _build_backends(args, parser: argparse.ArgumentParser):
    if args.backend == "rules":
        if args.endpoint and not os.environ.get(ENDPOINT_ENV):
            parser.error("--endpoint only applies to --backend remote")
        if not args.rules:
            parser.error("--backend rules requires --rules")
        table = load_rule_table(args.rules)
        return RuleDetector(table, multi_task=args.multi_task), RuleReviser(table)
    if args.rules:
        parser.error("--rules only applies to --backend rules")
    if not args.endpoint:
        parser.error(f"--backend remote requires --endpoint or ${ENDPOINT_ENV}")
    return (RemoteDetector(args.endpoint, multi_task=args.multi_task),
            RemoteReviser(args.endpoint, annotation_mode=args.annotation))


@contextlib.contextmanager
def _open_out(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            yield handle


def _read_lines(path: str) -> Iterator[str]:
    with open(path, encoding="utf-8") as handle:
        yield from handle


def _read_docs(path: str) -> Iterator[dict]:
    with open(path, encoding="utf-8") as handle:
        for lineno, obj in enumerate(corpus.read_jsonl(handle), 1):
            if "text" not in obj:
                raise RevkitError(f"{path}:{lineno}: document without text field")
            obj.setdefault("doc_id", f"doc-{lineno:06d}")
            yield obj


def _parallel(jobs: int, fn, items: Iterable) -> Iterator:
    if jobs <= 1:
        yield from map(fn, items)
        return
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(fn, items)


def _filter_cfg(args) -> corpus.FilterConfig:
    return corpus.FilterConfig(args.min_len_ratio, args.max_len_ratio,
                               args.min_similarity)


def _add_filter_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--min-len-ratio", type=float, default=0.5)
    parser.add_argument("--max-len-ratio", type=float, default=2.0)
    parser.add_argument("--min-similarity", type=float, default=0.35)


def _rows_for(source: str, fmt: str, path: str):
    lines = _read_lines(path)
    if fmt == "iterater" or (fmt == "auto" and source == "iterater"):
        return corpus.iter_iterater(lines)
    return corpus.iter_tsv_pairs(lines)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_filter(args, parser) -> int:
    cfg = _filter_cfg(args)
    kept = 0
    reasons: dict[str, int] = {}
    with _open_out(args.output) as out:
        for lineno, before, after, _intent in _rows_for("nucle", args.format, args.input):
            decision = corpus.filter_pair(before, after, cfg) if before else \
                corpus.FilterDecision(False, "empty_before", 0.0, None)
            row = {"line": lineno, "keep": decision.keep}
            if decision.keep:
                kept += 1
            else:
                row["reason"] = decision.reason
                reasons[decision.reason or ""] = reasons.get(decision.reason or "", 0) + 1
            row["len_ratio"] = round(decision.len_ratio, 6)
            if decision.char_similarity is not None:
                row["char_similarity"] = round(decision.char_similarity, 6)
            out.write(json.dumps(row, ensure_ascii=False) + "\n")
    total = kept + sum(reasons.values())
    summary = {
        "total": total,
        "kept": kept,
        "discarded": sum(reasons.values()),
        "discard_rate": round(sum(reasons.values()) / total, 4) if total else 0.0,
        "by_reason": dict(sorted(reasons.items())),
    }
    if args.report:
        with open(args.report, "w", encoding="utf-8") as handle:
            json.dump(summary, handle, indent=2, sort_keys=True)
            handle.write("\n")
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return 0


def cmd_ingest(args, parser) -> int:
    cfg = _filter_cfg(args)
    rows = _rows_for(args.source, args.format, args.input)
    result = corpus.ingest(args.source, rows, split=args.split, cfg=cfg)
    with _open_out(args.output) as out:
        corpus.write_jsonl(out, (corpus.record_to_dict(r) for r in result.records))
    summary = {
        "source": args.source,
        "split": args.split,
        "records": len(result.records),
        "discarded": len(result.discards),
        "skipped_intents": result.skipped_intents,
        "by_reason": dict(sorted(result.discard_reasons().items())),
    }
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return 0


def cmd_stats(args, parser) -> int:
    with open(args.input, encoding="utf-8") as handle:
        stats = corpus.corpus_stats(
            corpus.record_from_dict(obj) for obj in corpus.read_jsonl(handle))
    with _open_out(args.output) as out:
        out.write(stats.format_table() + "\n")
    if args.figure:
        figures.save_stats_figure(stats, args.figure)
    return 0


def cmd_detect(args, parser) -> int:
    detector, _ = _build_backends(args, parser)
    cfg = _engine_config(args)

    def work(doc: dict) -> dict:
        labels, spans = detect_document(doc["text"], detector, cfg)
        return {
            "doc_id": doc["doc_id"],
            "text": doc["text"],
            "annotated": render_annotated(AnnotatedText(doc["text"], spans)),
            "labels": [label.value for label in labels],
        }

    with _open_out(args.output) as out:
        corpus.write_jsonl(out, _parallel(args.jobs, work, _read_docs(args.input)))
    return 0


def cmd_revise(args, parser) -> int:
    detector, reviser = _build_backends(args, parser)
    cfg = _engine_config(args)

    def work(doc: dict) -> dict:
        step = revise_once(Document(doc["doc_id"], doc["text"]), detector, reviser, cfg)
        if step is None:
            return {"doc_id": doc["doc_id"], "before": doc["text"],
                    "after": doc["text"], "edits": [], "no_spans": True}
        return {"doc_id": doc["doc_id"], "before": step.before, "after": step.after,
                "edits": [corpus.edit_to_dict(e) for e in step.edits],
                "no_spans": False}

    with _open_out(args.output) as out:
        corpus.write_jsonl(out, _parallel(args.jobs, work, _read_docs(args.input)))
    return 0


def cmd_iterate(args, parser) -> int:
    detector, reviser = _build_backends(args, parser)
    cfg = _engine_config(args, max_depth=args.max_depth)

    def work(doc: dict) -> dict:
        trace = iterate(Document(doc["doc_id"], doc["text"]), detector, reviser, cfg,
                        references=doc.get("references"), group=doc.get("group"))
        return corpus.trace_to_dict(trace)

    with _open_out(args.output) as out:
        corpus.write_jsonl(out, _parallel(args.jobs, work, _read_docs(args.input)))
    return 0


def _metric_rows(args) -> list[dict]:
    rows: list[dict] = []
    wants = ("bleu", "rouge-l", "sari") if args.metric == "all" else (args.metric,)
    if args.metric == "token-f1":
        gold = [parse_label_names(json.loads(line)) for line in _read_lines(args.gold)]
        pred = [parse_label_names(json.loads(line)) for line in _read_lines(args.pred)]
        report = metrics.token_f1(gold, pred)
        breakdown = {i.value: {"p": s.precision, "r": s.recall, "f": s.f1}
                     for i, s in report.per_intent.items()}
        rows.append({"metric": "token-f1", "value": round(report.overall.f1, 2),
                     "breakdown": breakdown})
        return rows
    hyps = [line.rstrip("\n") for line in _read_lines(args.hyp)]
    refs_cols = [[line.rstrip("\n") for line in _read_lines(path)] for path in args.ref]
    for col in refs_cols:
        if len(col) != len(hyps):
            raise RevkitError("reference file length differs from hypotheses")
    refs = [[col[i] for col in refs_cols] for i in range(len(hyps))]
    srcs = None
    if args.src:
        srcs = [line.rstrip("\n") for line in _read_lines(args.src)]
        if len(srcs) != len(hyps):
            raise RevkitError("source file length differs from hypotheses")
    if "bleu" in wants:
        rows.append({"metric": "bleu", "value": round(metrics.bleu(hyps, refs), 4)})
    if "rouge-l" in wants:
        triple = metrics.corpus_rouge_l(hyps, refs)
        rows.append({"metric": "rouge-l", "value": round(triple["f"], 2),
                     "breakdown": {k: round(v, 2) for k, v in triple.items()}})
    if "sari" in wants:
        if srcs is None:
            raise RevkitError("sari needs --src")
        scores = metrics.corpus_sari(srcs, hyps, refs)
        rows.append({"metric": "sari", "value": round(scores["final"], 2),
                     "breakdown": {k: round(v, 2) for k, v in scores.items()
                                   if k != "final"}})
    return rows


def cmd_eval(args, parser) -> int:
    if args.metric == "token-f1":
        if not (args.gold and args.pred):
            parser.error("token-f1 needs --gold and --pred")
    elif not (args.hyp and args.ref):
        parser.error(f"{args.metric} needs --hyp and --ref")
    rows = _metric_rows(args)
    with _open_out(args.output) as out:
        corpus.write_jsonl(out, rows)
    if args.figure:
        figures.save_metrics_figure(rows, args.figure)
    return 0


def cmd_flows(args, parser) -> int:
    with open(args.input, encoding="utf-8") as handle:
        traces = [corpus.trace_from_dict(obj) for obj in corpus.read_jsonl(handle)]
    if args.group_by:
        grouped = analysis.transitions_by_group(traces)
        doc = {name: analysis.export_sankey(matrix) for name, matrix in grouped.items()}
        matrix = analysis.FlowMatrix()
        for part in grouped.values():
            matrix = matrix.merge(part)
    else:
        matrix = analysis.transitions(traces)
        doc = analysis.export_sankey(matrix)
    with _open_out(args.output) as out:
        json.dump(doc, out, indent=2, sort_keys=True)
        out.write("\n")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(analysis.export_csv(matrix))
    if args.figure:
        figures.save_flow_figure(
            analysis.export_sankey(matrix) if args.group_by else doc, args.figure)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="revkit",
        description="Iterative span-based text revision toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="report keep/discard decisions for text pairs")
    _add_io(p)
    p.add_argument("--format", choices=("tsv", "iterater", "auto"), default="tsv")
    p.add_argument("--report", help="write the summary JSON here as well")
    _add_filter_flags(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("ingest", help="build unified corpus records")
    _add_io(p)
    p.add_argument("--source", choices=corpus.SOURCES, required=True)
    p.add_argument("--split", choices=corpus.SPLITS, default="train")
    p.add_argument("--format", choices=("tsv", "iterater", "auto"), default="auto")
    _add_filter_flags(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="corpus statistics report")
    _add_io(p)
    p.add_argument("--figure", help="also render a PNG chart here")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("detect", help="annotate editable spans")
    _add_io(p)
    _add_backend(p)
    _add_engine(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("revise", help="run one revision round")
    _add_io(p)
    _add_backend(p)
    _add_engine(p)
    p.set_defaults(func=cmd_revise)

    p = sub.add_parser("iterate", help="revise to a fixed point with stopping criteria")
    _add_io(p)
    _add_backend(p)
    _add_engine(p)
    p.add_argument("--max-depth", type=int, default=4)
    p.add_argument("--quality-guard", choices=("sari", "rouge-l"), default=None,
                   help="stop when this reference-based score drops")
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("eval", help="score hypotheses (BLEU / ROUGE-L / SARI / token-F1)")
    p.add_argument("--metric", choices=("bleu", "rouge-l", "sari", "token-f1", "all"),
                   required=True)
    p.add_argument("--src", help="source sentences, one per line (sari)")
    p.add_argument("--hyp", help="hypothesis sentences, one per line")
    p.add_argument("--ref", action="append", default=[],
                   help="reference file; repeat for multiple references")
    p.add_argument("--gold", help="gold label JSONL (token-f1)")
    p.add_argument("--pred", help="predicted label JSONL (token-f1)")
    p.add_argument("--out", dest="output", default="-")
    p.add_argument("--figure", help="also render a PNG chart here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("flows", help="export intent transition flows")
    _add_io(p)
    p.add_argument("--csv", help="also write depth,from,to,count CSV here")
    p.add_argument("--figure", help="also render a PNG flow diagram here")
    p.add_argument("--group-by", action="store_true",
                   help="one sankey document per trace group")
    p.set_defaults(func=cmd_flows)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except RevkitError as exc:
        print(f"revkit: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"revkit: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
