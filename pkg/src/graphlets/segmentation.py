"""Trace segmentation into per-model graphlets.

Each trainer execution anchors one graphlet: the subgraph holding everything
that fed the training run plus its downstream results, without leaking into
the subgraphs of other training runs.  Membership is the least fixpoint of
three rules, seeded with the anchor trainer ``n``:

* ancestors: if ``X`` is in the graphlet and edge ``V -> X`` exists, ``V``
  joins, unless ``V`` is a trainer execution other than ``n``.  Stopping at
  foreign trainers cuts warmstart chains: a model artifact consumed by a later
  trainer joins that trainer's graphlet, but the subgraph that produced the
  model does not.
* descendants: if ``X`` is in the graphlet and edge ``X -> V`` exists, ``V``
  joins, unless ``V`` is an execution whose operator is in the stop set and
  ``V`` is not ``n``.  The default stop set {transform, trainer} keeps the
  next run's pre-processing and training out while still picking up the
  data-analysis executions that ran on this run's input spans.

Graphlets from one trace may overlap; shared executions contribute their full
cost to every graphlet that contains them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Sequence

from .trace import (
    ArtifactType,
    ExecutionState,
    ModelType,
    OperatorGroup,
    OperatorKind,
    Trace,
    TraceIndex,
    index_trace,
)

__all__ = [
    "StopSet",
    "Graphlet",
    "extract_graphlets",
    "label_pushed",
    "consecutive_pairs",
    "filter_warmstart",
    "graphlet_costs",
    "overlap_adjusted_costs",
    "segment_corpus",
    "graphlet_record",
    "dump_graphlets",
]


@dataclass(frozen=True)
class StopSet:
    """Operator kinds at which descendant traversal halts."""

    kinds: frozenset[OperatorKind] = frozenset({OperatorKind.TRANSFORM, OperatorKind.TRAINER})

    def __post_init__(self) -> None:
        if not self.kinds:
            raise ValueError("stop set must not be empty")


DEFAULT_STOP_SET = StopSet()


@dataclass(frozen=True)
class Graphlet:
    anchor: str
    pipeline_id: str
    nodes: frozenset[str]
    input_spans: tuple[str, ...]
    pushed: bool
    costs: dict[OperatorGroup, float]
    trainer_end_at: int
    trainer_code_version: str | None
    model_type: ModelType

    @property
    def total_cost(self) -> float:
        return sum(self.costs.values())


def _grow(trace: Trace, idx: TraceIndex, anchor: str, stop: StopSet) -> frozenset[str]:
    """Least fixpoint of the ancestor/descendant membership rules."""
    executions = trace.executions
    stop_kinds = stop.kinds
    nodes = {anchor}
    frontier = [anchor]
    while frontier:
        x = frontier.pop()
        for v in idx.parents[x]:
            if v in nodes:
                continue
            ex = executions.get(v)
            if ex is not None and ex.operator is OperatorKind.TRAINER and v != anchor:
                continue
            nodes.add(v)
            frontier.append(v)
        for v in idx.children[x]:
            if v in nodes:
                continue
            ex = executions.get(v)
            if ex is not None and ex.operator in stop_kinds and v != anchor:
                continue
            nodes.add(v)
            frontier.append(v)
    return frozenset(nodes)


def _input_spans(trace: Trace, idx: TraceIndex, anchor: str) -> tuple[str, ...]:
    """Data spans read directly by the anchor trainer, oldest first."""
    spans = [
        trace.artifacts[p]
        for p in idx.parents[anchor]
        if p in trace.artifacts and trace.artifacts[p].artifact_type is ArtifactType.DATA_SPAN
    ]
    spans.sort(key=lambda a: (a.created_at, a.id))
    return tuple(a.id for a in spans)


def extract_graphlets(
    trace: Trace, idx: TraceIndex | None = None, stop: StopSet = DEFAULT_STOP_SET
) -> list[Graphlet]:
    """Extract one graphlet per trainer execution, in chronological order."""
    if idx is None:
        idx = index_trace(trace)
    graphlets = []
    for anchor in idx.trainers:
        trainer = trace.executions[anchor]
        nodes = _grow(trace, idx, anchor, stop)
        g = Graphlet(
            anchor=anchor,
            pipeline_id=trace.pipeline_id,
            nodes=nodes,
            input_spans=_input_spans(trace, idx, anchor),
            pushed=False,
            costs=_costs_for(trace, nodes),
            trainer_end_at=trainer.end_at,
            trainer_code_version=trainer.code_version,
            model_type=trainer.model_type or ModelType.OTHER,
        )
        graphlets.append(replace(g, pushed=label_pushed(g, trace)))
    return graphlets


def label_pushed(g: Graphlet, trace: Trace) -> bool:
    """True iff the graphlet contains a completed pusher execution.

    A pusher run that failed leaves the model undeployed, so it does not count.
    """
    for node in g.nodes:
        ex = trace.executions.get(node)
        if (
            ex is not None
            and ex.operator is OperatorKind.PUSHER
            and ex.state is ExecutionState.COMPLETE
        ):
            return True
    return False


def consecutive_pairs(graphlets: Sequence[Graphlet]) -> list[tuple[Graphlet, Graphlet]]:
    """Pair up graphlets whose trainers are adjacent in chronological order."""
    ordered = sorted(graphlets, key=lambda g: (g.trainer_end_at, g.anchor))
    return list(zip(ordered, ordered[1:]))


def _has_warmstart(trace: Trace) -> bool:
    model_ids = {
        a.id for a in trace.artifacts.values() if a.artifact_type is ArtifactType.MODEL
    }
    trainer_ids = {
        e.id for e in trace.executions.values() if e.operator is OperatorKind.TRAINER
    }
    for edge in trace.edges:
        if edge.dst in trainer_ids and edge.src in model_ids:
            return True
    return False


def filter_warmstart(
    corpus: Iterable[tuple[Trace, list[Graphlet]]]
) -> list[tuple[Trace, list[Graphlet]]]:
    """Drop pipelines where any trainer consumes a model artifact directly.

    Unpushed graphlets in warmstart pipelines can still be useful to later
    training runs, so they must not be counted as waste.
    """
    return [(trace, gs) for trace, gs in corpus if not _has_warmstart(trace)]


def _costs_for(trace: Trace, nodes: frozenset[str]) -> dict[OperatorGroup, float]:
    costs: dict[OperatorGroup, float] = {}
    # Sorted iteration pins the float accumulation order, which keeps dumps
    # byte-identical across processes regardless of hash randomization.
    for node in sorted(nodes):
        ex = trace.executions.get(node)
        if ex is None:
            continue
        costs[ex.group] = costs.get(ex.group, 0.0) + ex.cpu_cost
    return costs


def graphlet_costs(g: Graphlet, trace: Trace) -> dict[OperatorGroup, float]:
    """Per-group cpu cost of the executions inside the graphlet.

    Executions shared between overlapping graphlets are charged in full to
    every graphlet that contains them.
    """
    return _costs_for(trace, g.nodes)


def overlap_adjusted_costs(
    graphlets: Sequence[Graphlet], trace: Trace
) -> dict[OperatorGroup, float]:
    """Per-group cost over the union of graphlet nodes, counting each execution once."""
    union: set[str] = set()
    for g in graphlets:
        union.update(g.nodes)
    return _costs_for(trace, frozenset(union))


def segment_corpus(
    traces: Iterable[Trace], stop: StopSet = DEFAULT_STOP_SET
) -> list[tuple[Trace, list[Graphlet]]]:
    return [(t, extract_graphlets(t, stop=stop)) for t in traces]


def graphlet_record(g: Graphlet) -> dict:
    return {
        "pipeline_id": g.pipeline_id,
        "anchor": g.anchor,
        "nodes": sorted(g.nodes),
        "input_spans": list(g.input_spans),
        "pushed": g.pushed,
        "costs": {grp.value: cost for grp, cost in sorted(g.costs.items())},
        "trainer_end_at": g.trainer_end_at,
        "code_version": g.trainer_code_version,
        "model_type": g.model_type.value,
    }


def dump_graphlets(graphlets: Iterable[Graphlet]) -> Iterator[str]:
    for g in graphlets:
        yield json.dumps(graphlet_record(g), sort_keys=True)
