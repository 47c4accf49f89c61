"""Edit-intent trajectory analysis across revision depths.

Edits at depth t-1 are paired with depth-t edits whose ranges overlap once
the earlier edit's offsets are mapped through its own application (both then
index the same text). Pairing is greedy 1:1 by leftmost overlap; earlier
edits with no partner flow to END, new edits with no source flow from START.
That convention is recorded in the export metadata so diagrams stay
interpretable.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .core import EDIT_INTENTS
from .editops import RevisionStep, RevisionTrace

START = "START"
END = "END"

PAIRING_NOTE = "greedy 1:1 pairing by leftmost range overlap; unpaired edits flow from START / to END"


@dataclass
class FlowMatrix:
    """flows[t][(i, j)] counts intent-i edits at depth t-1 leading to
    intent-j edits at depth t; i may be START and j may be END."""

    flows: dict[int, Counter] = field(default_factory=dict)

    def count(self, depth: int, source: str, target: str) -> int:
        return self.flows.get(depth, Counter()).get((source, target), 0)

    def outgoing(self, depth: int, source: str) -> int:
        return sum(v for (i, _j), v in self.flows.get(depth, Counter()).items()
                   if i == source)

    def total(self) -> int:
        return sum(sum(c.values()) for c in self.flows.values())

    def merge(self, other: "FlowMatrix") -> "FlowMatrix":
        merged: dict[int, Counter] = defaultdict(Counter)
        for matrix in (self, other):
            for depth, counter in matrix.flows.items():
                merged[depth] += counter
        return FlowMatrix(dict(merged))


def _target_ranges(step: RevisionStep) -> list[tuple[str, int, int]]:
    """Each edit's intent and its range in the step's after text."""
    out = []
    shift = 0
    for edit in step.edits:
        start = edit.src_start + shift
        end = start + len(edit.replacement)
        out.append((edit.intent.value, start, end))
        shift += len(edit.replacement) - (edit.src_end - edit.src_start)
    return out


def _overlaps(a_start: int, a_end: int, b_start: int, b_end: int) -> bool:
    if a_start == a_end and b_start == b_end:
        return a_start == b_start
    if a_start == a_end:
        return b_start <= a_start <= b_end
    if b_start == b_end:
        return a_start <= b_start <= a_end
    return a_start < b_end and b_start < a_end


def transitions(traces: Iterable[RevisionTrace]) -> FlowMatrix:
    """Count intent transitions between consecutive depths over all traces."""
    flows: dict[int, Counter] = defaultdict(Counter)
    for trace in traces:
        steps = trace.steps
        if steps:
            for edit in steps[0].edits:
                flows[1][(START, edit.intent.value)] += 1
        for k, step in enumerate(steps):
            depth = step.depth + 1
            priors = _target_ranges(step)
            nxt = steps[k + 1] if k + 1 < len(steps) else None
            if nxt is None:
                for intent, _s, _e in priors:
                    flows[depth][(intent, END)] += 1
                continue
            paired: set[int] = set()
            for intent, start, end in priors:
                match = None
                for idx, edit in enumerate(nxt.edits):
                    if idx in paired:
                        continue
                    if _overlaps(start, end, edit.src_start, edit.src_end):
                        match = idx
                        break
                if match is None:
                    flows[depth][(intent, END)] += 1
                else:
                    paired.add(match)
                    flows[depth][(intent, nxt.edits[match].intent.value)] += 1
            for idx, edit in enumerate(nxt.edits):
                if idx not in paired:
                    flows[nxt.depth][(START, edit.intent.value)] += 1
    return FlowMatrix(dict(flows))


def transitions_by_group(traces: Iterable[RevisionTrace],
                         key: Callable[[RevisionTrace], str] | None = None
                         ) -> dict[str, FlowMatrix]:
    """One FlowMatrix per group, keyed by trace.group unless overridden."""
    if key is None:
        key = lambda trace: trace.group or "all"
    grouped: dict[str, list[RevisionTrace]] = defaultdict(list)
    for trace in traces:
        grouped[key(trace)].append(trace)
    return {name: transitions(members) for name, members in sorted(grouped.items())}


def _node_order(node: str) -> tuple:
    if node == START:
        return (-1, -1)
    if node == END:
        return (10 ** 9, 10 ** 9)
    intent, _, depth = node.partition("@")
    order = [i.value for i in EDIT_INTENTS]
    return (int(depth), order.index(intent) if intent in order else len(order))


def _link_rows(matrix: FlowMatrix) -> list[tuple[int, str, str, int]]:
    rows = []
    intent_order = [i.value for i in EDIT_INTENTS]

    def rank(name: str) -> int:
        if name == START:
            return -1
        if name == END:
            return len(intent_order)
        return intent_order.index(name) if name in intent_order else len(intent_order)

    for depth in sorted(matrix.flows):
        for (source, target), value in sorted(
                matrix.flows[depth].items(),
                key=lambda kv: (rank(kv[0][0]), rank(kv[0][1]))):
            if value > 0:
                rows.append((depth, source, target, value))
    return rows


def export_sankey(matrix: FlowMatrix) -> dict:
    """Nodes are intent@depth plus START/END; links carry positive counts.

    The transition counted at depth t links intent@t-1 to intent@t.
    """
    links = []
    nodes: set[str] = set()
    for depth, source, target, value in _link_rows(matrix):
        src = START if source == START else f"{source}@{depth - 1}"
        dst = END if target == END else f"{target}@{depth}"
        nodes.update((src, dst))
        links.append({"source": src, "target": dst, "value": value, "depth": depth})
    node_rows = []
    for name in sorted(nodes, key=_node_order):
        if name in (START, END):
            node_rows.append({"id": name})
        else:
            intent, _, depth = name.partition("@")
            node_rows.append({"id": name, "intent": intent, "depth": int(depth)})
    return {
        "metadata": {"pairing": PAIRING_NOTE},
        "nodes": node_rows,
        "links": links,
    }


def export_csv(matrix: FlowMatrix) -> str:
    """The same flows as depth,from,to,count lines."""
    lines = ["depth,from,to,count"]
    for depth, source, target, value in _link_rows(matrix):
        lines.append(f"{depth},{source},{target},{value}")
    return "\n".join(lines) + "\n"
