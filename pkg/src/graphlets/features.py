"""Classifier features for push prediction.

Four feature groups per graphlet: graphlet shape (execution counts and mean
input/output degrees per operator kind, split into pre-trainer, trainer, and
post-trainer partitions), model information (one-hot model type and
architecture), input-data history (reuse and distribution similarity against
each of the ``w`` preceding graphlets), and code-change history.  The pusher
is deliberately absent from shape features because it defines the label.

Feature *stages* model where a scheduler could intervene: after ingestion
(model + history features only), before training (plus pre-trainer shape),
after training (plus trainer shape), and after validation (plus post-trainer
shape).  Stage vectors are nested prefixes of one fixed schema, and each
stage carries the compute cost a policy would pay to obtain its features.

History slots without an i-th predecessor hold the sentinel -1, which lies
outside every legal metric range so trees can isolate it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .segmentation import Graphlet
from .similarity import LshParams, SimWeights, jaccard, sequence_sim
from .trace import (
    ModelType,
    OperatorGroup,
    OperatorKind,
    SpanStats,
    Trace,
    TraceIndex,
    index_trace,
)

__all__ = [
    "FeatureStage",
    "WindowConfig",
    "FeatureVector",
    "Featurizer",
    "CorpusFeatures",
    "MISSING",
    "build_arch_vocab",
    "featurize_corpus",
]

MISSING = -1.0
ARCH_VOCAB_CAP = 32


class FeatureStage(str, Enum):
    INPUT = "input"
    INPUT_PRE = "input_pre"
    INPUT_PRE_TRAINER = "input_pre_trainer"
    VALIDATION = "validation"

    @property
    def order(self) -> int:
        return _STAGE_ORDER[self]


_STAGE_ORDER = {
    FeatureStage.INPUT: 0,
    FeatureStage.INPUT_PRE: 1,
    FeatureStage.INPUT_PRE_TRAINER: 2,
    FeatureStage.VALIDATION: 3,
}

STAGES = (
    FeatureStage.INPUT,
    FeatureStage.INPUT_PRE,
    FeatureStage.INPUT_PRE_TRAINER,
    FeatureStage.VALIDATION,
)

PRE_TRAINER_KINDS = (
    OperatorKind.EXAMPLE_GEN,
    OperatorKind.STATISTICS_GEN,
    OperatorKind.SCHEMA_GEN,
    OperatorKind.EXAMPLE_VALIDATOR,
    OperatorKind.TRANSFORM,
    OperatorKind.TUNER,
    OperatorKind.CUSTOM,
)
TRAINER_KINDS = (OperatorKind.TRAINER,)
POST_TRAINER_KINDS = (OperatorKind.EVALUATOR, OperatorKind.MODEL_VALIDATOR)

# Compute a policy must have spent before each stage's features exist.
STAGE_COST_GROUPS: dict[FeatureStage, tuple[OperatorGroup, ...]] = {
    FeatureStage.INPUT: (
        OperatorGroup.DATA_INGESTION,
        OperatorGroup.DATA_ANALYSIS_VALIDATION,
    ),
    FeatureStage.INPUT_PRE: (
        OperatorGroup.DATA_INGESTION,
        OperatorGroup.DATA_ANALYSIS_VALIDATION,
        OperatorGroup.DATA_PREPROCESSING,
    ),
    FeatureStage.INPUT_PRE_TRAINER: (
        OperatorGroup.DATA_INGESTION,
        OperatorGroup.DATA_ANALYSIS_VALIDATION,
        OperatorGroup.DATA_PREPROCESSING,
        OperatorGroup.TRAINING,
    ),
    FeatureStage.VALIDATION: (
        OperatorGroup.DATA_INGESTION,
        OperatorGroup.DATA_ANALYSIS_VALIDATION,
        OperatorGroup.DATA_PREPROCESSING,
        OperatorGroup.TRAINING,
        OperatorGroup.MODEL_ANALYSIS_VALIDATION,
    ),
}


@dataclass(frozen=True)
class WindowConfig:
    """History window: how many preceding graphlets to compare against."""

    w: int = 3

    def __post_init__(self) -> None:
        if self.w < 1:
            raise ValueError("window must be at least 1")


@dataclass(frozen=True)
class FeatureVector:
    names: tuple[str, ...]
    values: tuple[float, ...]
    label: bool
    cost_to_acquire: float


def build_arch_vocab(graphlets_by_trace: Iterable[tuple[Trace, Sequence[Graphlet]]]) -> tuple[str, ...]:
    """Architecture vocabulary: the most frequent names, capped and sorted.

    Architectures beyond the cap, or unseen at featurization time, fall into
    the shared "other" slot.
    """
    counts: dict[str, int] = {}
    for trace, graphlets in graphlets_by_trace:
        for g in graphlets:
            arch = trace.executions[g.anchor].architecture
            if arch:
                counts[arch] = counts.get(arch, 0) + 1
    keep = sorted(counts, key=lambda a: (-counts[a], a))[:ARCH_VOCAB_CAP]
    return tuple(sorted(keep))


def _shape_block(kinds: tuple[OperatorKind, ...]) -> list[str]:
    names = []
    for kind in kinds:
        names.append(f"shape_{kind.value}_count")
        names.append(f"shape_{kind.value}_avg_in")
        names.append(f"shape_{kind.value}_avg_out")
    return names


@dataclass(frozen=True)
class Featurizer:
    """Frozen feature schema plus the metric parameters used to fill it.

    The schema (name order) is a pure function of the window size and the
    architecture vocabulary, so a model trained on one corpus can score
    another as long as the vocabulary travels with it.
    """

    window: WindowConfig = WindowConfig()
    lsh: LshParams = LshParams()
    weights: SimWeights = SimWeights()
    arch_vocab: tuple[str, ...] = ()

    def model_names(self) -> list[str]:
        names = [f"model_type_{mt.value}" for mt in ModelType]
        names.extend(f"arch_{a}" for a in self.arch_vocab)
        names.append("arch_other")
        return names

    def history_names(self) -> list[str]:
        names = []
        for i in range(1, self.window.w + 1):
            names.extend((f"jaccard_{i}", f"dataset_sim_{i}", f"code_match_{i}"))
        return names

    def full_names(self) -> tuple[str, ...]:
        names = self.model_names() + self.history_names()
        names += _shape_block(PRE_TRAINER_KINDS)
        names += _shape_block(TRAINER_KINDS)
        names += _shape_block(POST_TRAINER_KINDS)
        return tuple(names)

    def stage_slice(self, stage: FeatureStage) -> slice:
        base = len(self.model_names()) + len(self.history_names())
        pre = len(_shape_block(PRE_TRAINER_KINDS))
        tr = len(_shape_block(TRAINER_KINDS))
        post = len(_shape_block(POST_TRAINER_KINDS))
        ends = {
            FeatureStage.INPUT: base,
            FeatureStage.INPUT_PRE: base + pre,
            FeatureStage.INPUT_PRE_TRAINER: base + pre + tr,
            FeatureStage.VALIDATION: base + pre + tr + post,
        }
        return slice(0, ends[stage])

    def stage_names(self, stage: FeatureStage) -> tuple[str, ...]:
        return self.full_names()[self.stage_slice(stage)]

    # -- feature groups -------------------------------------------------

    def shape_features(
        self, g: Graphlet, trace: Trace, idx: TraceIndex, kinds: tuple[OperatorKind, ...]
    ) -> list[float]:
        """Execution count and mean in/out degree per operator kind; zeros
        when a kind is absent from the graphlet."""
        per_kind: dict[OperatorKind, list[tuple[int, int]]] = {}
        for node in g.nodes:
            ex = trace.executions.get(node)
            if ex is None or ex.operator not in kinds:
                continue
            per_kind.setdefault(ex.operator, []).append(
                (idx.in_degree(node), idx.out_degree(node))
            )
        values: list[float] = []
        for kind in kinds:
            rows = per_kind.get(kind, [])
            count = len(rows)
            values.append(float(count))
            values.append(sum(r[0] for r in rows) / count if count else 0.0)
            values.append(sum(r[1] for r in rows) / count if count else 0.0)
        return values

    def model_features(self, g: Graphlet, trace: Trace) -> list[float]:
        values = [1.0 if g.model_type is mt else 0.0 for mt in ModelType]
        arch = trace.executions[g.anchor].architecture
        hot = [0.0] * (len(self.arch_vocab) + 1)
        if arch:
            if arch in self.arch_vocab:
                hot[self.arch_vocab.index(arch)] = 1.0
            else:
                hot[-1] = 1.0
        return values + hot

    def history_features(
        self,
        g: Graphlet,
        predecessors: Sequence[Graphlet],
        trace: Trace,
    ) -> list[float]:
        """Per ordinal position back in time: jaccard, dataset similarity,
        code match.  ``predecessors`` is most recent first."""
        spans_cache: dict[str, tuple[SpanStats, ...]] = {}

        def spans(gl: Graphlet) -> tuple[SpanStats, ...]:
            if gl.anchor not in spans_cache:
                spans_cache[gl.anchor] = tuple(
                    trace.artifacts[s].span_stats
                    for s in gl.input_spans
                    if trace.artifacts[s].span_stats is not None
                )
            return spans_cache[gl.anchor]

        values: list[float] = []
        for i in range(self.window.w):
            if i < len(predecessors):
                prev = predecessors[i]
                values.append(jaccard(g, prev))
                values.append(sequence_sim(spans(g), spans(prev), self.lsh, self.weights))
                values.append(1.0 if g.trainer_code_version == prev.trainer_code_version else 0.0)
            else:
                values.extend((MISSING, MISSING, MISSING))
        return values

    # -- assembly --------------------------------------------------------

    def full_row(
        self, g: Graphlet, predecessors: Sequence[Graphlet], trace: Trace, idx: TraceIndex
    ) -> list[float]:
        row = self.model_features(g, trace)
        row += self.history_features(g, predecessors, trace)
        row += self.shape_features(g, trace, idx, PRE_TRAINER_KINDS)
        row += self.shape_features(g, trace, idx, TRAINER_KINDS)
        row += self.shape_features(g, trace, idx, POST_TRAINER_KINDS)
        return row

    def stage_cost(self, g: Graphlet, stage: FeatureStage) -> float:
        return sum(g.costs.get(group, 0.0) for group in STAGE_COST_GROUPS[stage])

    def assemble(
        self,
        g: Graphlet,
        predecessors: Sequence[Graphlet],
        stage: FeatureStage,
        trace: Trace,
        idx: TraceIndex | None = None,
    ) -> FeatureVector:
        if not isinstance(stage, FeatureStage):
            raise ValueError(f"unknown feature stage: {stage!r}")
        if idx is None:
            idx = index_trace(trace)
        row = self.full_row(g, predecessors, trace, idx)
        sl = self.stage_slice(stage)
        return FeatureVector(
            names=self.stage_names(stage),
            values=tuple(row[sl]),
            label=g.pushed,
            cost_to_acquire=self.stage_cost(g, stage),
        )


@dataclass
class CorpusFeatures:
    """Validation-stage feature matrix for a corpus; lower stages are views."""

    featurizer: Featurizer
    names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    stage_costs: dict[FeatureStage, np.ndarray]
    pipeline_ids: list[str]
    anchors: list[str]
    model_types: list[str]

    def stage_view(self, stage: FeatureStage) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
        sl = self.featurizer.stage_slice(stage)
        return self.names[sl], self.X[:, sl], self.stage_costs[stage]

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.names.index(name)]


def featurize_corpus(
    corpus: Sequence[tuple[Trace, Sequence[Graphlet]]],
    featurizer: Featurizer | None = None,
    window: WindowConfig = WindowConfig(),
    lsh: LshParams = LshParams(),
    weights: SimWeights = SimWeights(),
) -> CorpusFeatures:
    """Featurize every graphlet of a corpus against its own pipeline history.

    When no ``featurizer`` is given, the architecture vocabulary is derived
    from this corpus; pass the training featurizer when scoring held-out
    pipelines so unseen architectures map to "other".
    """
    if featurizer is None:
        featurizer = Featurizer(
            window=window, lsh=lsh, weights=weights, arch_vocab=build_arch_vocab(corpus)
        )
    rows: list[list[float]] = []
    labels: list[bool] = []
    costs: dict[FeatureStage, list[float]] = {stage: [] for stage in STAGES}
    pipeline_ids: list[str] = []
    anchors: list[str] = []
    model_types: list[str] = []
    for trace, graphlets in corpus:
        idx = index_trace(trace)
        ordered = sorted(graphlets, key=lambda g: (g.trainer_end_at, g.anchor))
        for pos, g in enumerate(ordered):
            predecessors = ordered[max(0, pos - featurizer.window.w): pos][::-1]
            rows.append(featurizer.full_row(g, predecessors, trace, idx))
            labels.append(g.pushed)
            for stage in STAGES:
                costs[stage].append(featurizer.stage_cost(g, stage))
            pipeline_ids.append(g.pipeline_id)
            anchors.append(g.anchor)
            model_types.append(g.model_type.value)
    X = np.asarray(rows, dtype=float) if rows else np.zeros((0, len(featurizer.full_names())))
    return CorpusFeatures(
        featurizer=featurizer,
        names=featurizer.full_names(),
        X=X,
        y=np.asarray(labels, dtype=bool),
        stage_costs={stage: np.asarray(v, dtype=float) for stage, v in costs.items()},
        pipeline_ids=pipeline_ids,
        anchors=anchors,
        model_types=model_types,
    )
