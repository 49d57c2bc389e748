"""Corpus statistics: lifespans, cadence, feature shapes, costs, drift.

Everything here is an associative reduction over traces or graphlets, so
corpus shards can be aggregated independently and merged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .segmentation import Graphlet, consecutive_pairs
from .similarity import LshParams, SimWeights, jaccard, sequence_sim
from .trace import (
    Analyzer,
    ArtifactType,
    FeatureKind,
    ModelType,
    MS_PER_DAY,
    MS_PER_HOUR,
    OperatorGroup,
    OperatorKind,
    SpanStats,
    Trace,
)

__all__ = [
    "PipelineStats",
    "CadenceStats",
    "DriftCodeTable",
    "pipeline_stats",
    "cost_breakdown",
    "cadence_stats",
    "drift_code_table",
    "similarity_table",
]


@dataclass(frozen=True)
class PipelineStats:
    pipeline_id: str
    lifespan_days: float
    models_per_day: float
    feature_count: int | None
    categorical_fraction: float | None
    mean_categorical_domain: float | None
    analyzer_usage: dict[Analyzer, int]
    group_costs: dict[OperatorGroup, float]


def pipeline_stats(trace: Trace) -> PipelineStats:
    """Lifespan, training rate, input shape, and cost profile of one trace.

    Lifespan spans the newest and oldest node timestamps (artifact creation
    plus execution start/end).  The models-per-day denominator is clamped to
    one day so short-lived pipelines do not blow up the rate.
    """
    times: list[int] = [a.created_at for a in trace.artifacts.values()]
    for ex in trace.executions.values():
        times.append(ex.start_at)
        times.append(ex.end_at)
    lifespan_days = (max(times) - min(times)) / MS_PER_DAY if times else 0.0

    trainer_count = sum(
        1 for ex in trace.executions.values() if ex.operator is OperatorKind.TRAINER
    )
    models_per_day = trainer_count / max(lifespan_days, 1.0)

    spans = [
        a.span_stats
        for a in trace.artifacts.values()
        if a.artifact_type is ArtifactType.DATA_SPAN and a.span_stats is not None
    ]
    feature_count = None
    categorical_fraction = None
    mean_categorical_domain = None
    if spans:
        counts = [len(s.features) for s in spans]
        feature_count = int(round(sum(counts) / len(counts)))
        cat_fracs = []
        domains = []
        for s in spans:
            if not s.features:
                continue
            cats = [f for f in s.features if f.kind is FeatureKind.CATEGORICAL]
            cat_fracs.append(len(cats) / len(s.features))
            domains.extend(f.cat_unique for f in cats if f.cat_unique is not None)
        if cat_fracs:
            categorical_fraction = sum(cat_fracs) / len(cat_fracs)
        if domains:
            mean_categorical_domain = sum(domains) / len(domains)

    analyzer_usage: dict[Analyzer, int] = {}
    for ex in trace.executions.values():
        if ex.operator is OperatorKind.TRANSFORM and ex.analyzers:
            for a in ex.analyzers:
                analyzer_usage[a] = analyzer_usage.get(a, 0) + 1

    group_costs: dict[OperatorGroup, float] = {}
    for ex in trace.executions.values():
        group_costs[ex.group] = group_costs.get(ex.group, 0.0) + ex.cpu_cost

    return PipelineStats(
        pipeline_id=trace.pipeline_id,
        lifespan_days=lifespan_days,
        models_per_day=models_per_day,
        feature_count=feature_count,
        categorical_fraction=categorical_fraction,
        mean_categorical_domain=mean_categorical_domain,
        analyzer_usage=analyzer_usage,
        group_costs=group_costs,
    )


def cost_breakdown(traces: Iterable[Trace]) -> dict[OperatorGroup, float]:
    """Fraction of total compute per operator group, over unique executions.

    Graphlet overlaps never double-count here because the reduction walks
    trace executions directly.
    """
    totals: dict[OperatorGroup, float] = {}
    for trace in traces:
        for ex in trace.executions.values():
            totals[ex.group] = totals.get(ex.group, 0.0) + ex.cpu_cost
    grand = sum(totals.values())
    if grand <= 0.0:
        raise ValueError("corpus has no compute cost to break down")
    return {group: cost / grand for group, cost in totals.items()}


@dataclass
class CadenceStats:
    hours_between_all: list[float] = field(default_factory=list)
    hours_between_pushed: list[float] = field(default_factory=list)
    graphlets_between_pushes: list[int] = field(default_factory=list)
    duration_hours: list[float] = field(default_factory=list)
    trainer_cpu_by_label: dict[str, list[float]] = field(
        default_factory=lambda: {"pushed": [], "unpushed": []}
    )
    push_rate_by_model_type: dict[ModelType, float] = field(default_factory=dict)


def cadence_stats(corpus: Sequence[tuple[Trace, list[Graphlet]]]) -> CadenceStats:
    """Training/push cadence measurements over per-pipeline graphlet lists."""
    stats = CadenceStats()
    type_counts: dict[ModelType, list[int]] = {}
    for trace, graphlets in corpus:
        ordered = sorted(graphlets, key=lambda g: (g.trainer_end_at, g.anchor))
        for a, b in zip(ordered, ordered[1:]):
            stats.hours_between_all.append((b.trainer_end_at - a.trainer_end_at) / MS_PER_HOUR)
        pushed = [g for g in ordered if g.pushed]
        for a, b in zip(pushed, pushed[1:]):
            stats.hours_between_pushed.append((b.trainer_end_at - a.trainer_end_at) / MS_PER_HOUR)
        pushed_positions = [i for i, g in enumerate(ordered) if g.pushed]
        for p, q in zip(pushed_positions, pushed_positions[1:]):
            stats.graphlets_between_pushes.append(q - p - 1)
        for g in ordered:
            starts = [
                trace.executions[n].start_at for n in g.nodes if n in trace.executions
            ]
            if starts:
                stats.duration_hours.append((g.trainer_end_at - min(starts)) / MS_PER_HOUR)
            trainer = trace.executions[g.anchor]
            label = "pushed" if g.pushed else "unpushed"
            stats.trainer_cpu_by_label[label].append(trainer.cpu_cost)
            seen = type_counts.setdefault(g.model_type, [0, 0])
            seen[0] += 1
            seen[1] += int(g.pushed)
    stats.push_rate_by_model_type = {
        mt: pushed / total for mt, (total, pushed) in sorted(type_counts.items()) if total
    }
    return stats


@dataclass(frozen=True)
class DriftCodeTable:
    """Mean input-sequence similarity and code match, split by push label.

    Rows are keyed by the *successor* graphlet's label; ``mu_all`` covers all
    consecutive pairs.
    """

    similarity_pushed: float | None
    similarity_unpushed: float | None
    similarity_all: float | None
    code_match_pushed: float | None
    code_match_unpushed: float | None
    code_match_all: float | None
    pair_count: int


def _spans_of(g: Graphlet, trace: Trace) -> tuple[SpanStats, ...]:
    out = []
    for span_id in g.input_spans:
        stats = trace.artifacts[span_id].span_stats
        if stats is not None:
            out.append(stats)
    return tuple(out)


def drift_code_table(
    corpus: Sequence[tuple[Trace, list[Graphlet]]],
    params: LshParams,
    weights: SimWeights,
) -> DriftCodeTable:
    sims: dict[str, list[float]] = {"pushed": [], "unpushed": []}
    codes: dict[str, list[float]] = {"pushed": [], "unpushed": []}
    for trace, graphlets in corpus:
        for prev, cur in consecutive_pairs(graphlets):
            label = "pushed" if cur.pushed else "unpushed"
            sims[label].append(
                sequence_sim(_spans_of(cur, trace), _spans_of(prev, trace), params, weights)
            )
            codes[label].append(
                1.0 if cur.trainer_code_version == prev.trainer_code_version else 0.0
            )

    def mean(values: list[float]) -> float | None:
        return sum(values) / len(values) if values else None

    all_sims = sims["pushed"] + sims["unpushed"]
    all_codes = codes["pushed"] + codes["unpushed"]
    return DriftCodeTable(
        similarity_pushed=mean(sims["pushed"]),
        similarity_unpushed=mean(sims["unpushed"]),
        similarity_all=mean(all_sims),
        code_match_pushed=mean(codes["pushed"]),
        code_match_unpushed=mean(codes["unpushed"]),
        code_match_all=mean(all_codes),
        pair_count=len(all_sims),
    )


SIMILARITY_BUCKETS = (0.25, 0.5, 0.75)


def bucketize(values: Sequence[float]) -> tuple[float, float, float, float]:
    """Shares of values in [0, .25], (.25, .5], (.5, .75], (.75, 1]."""
    counts = [0, 0, 0, 0]
    for v in values:
        if v <= 0.25:
            counts[0] += 1
        elif v <= 0.5:
            counts[1] += 1
        elif v <= 0.75:
            counts[2] += 1
        else:
            counts[3] += 1
    n = len(values)
    if n == 0:
        return (0.0, 0.0, 0.0, 0.0)
    return tuple(c / n for c in counts)  # type: ignore[return-value]


def similarity_table(
    corpus: Sequence[tuple[Trace, list[Graphlet]]],
    params: LshParams,
    weights: SimWeights,
) -> dict[str, dict]:
    """Jaccard / dataset / per-pipeline-average dataset similarity histograms."""
    jac: list[float] = []
    dat: list[float] = []
    per_pipeline_means: list[float] = []
    for trace, graphlets in corpus:
        pipe_vals = []
        for prev, cur in consecutive_pairs(graphlets):
            jac.append(jaccard(cur, prev))
            sim = sequence_sim(_spans_of(cur, trace), _spans_of(prev, trace), params, weights)
            dat.append(sim)
            pipe_vals.append(sim)
        if pipe_vals:
            per_pipeline_means.append(sum(pipe_vals) / len(pipe_vals))

    def row(values: list[float]) -> dict:
        shares = bucketize(values)
        return {
            "buckets": shares,
            "mean": (sum(values) / len(values)) if values else None,
            "count": len(values),
        }

    return {"jaccard": row(jac), "dataset": row(dat), "dataset_pipeline_avg": row(per_pipeline_means)}
