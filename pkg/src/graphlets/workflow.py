"""End-to-end runs: corpus -> graphlets -> features -> models -> policies.

Glue between the pure modules, shared by the CLI and the test suite.  The
train/test discipline lives here: pipelines are split whole, the
architecture vocabulary comes from the training side only, and the staged
models are column views over one featurization pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import (
    STAGES,
    CorpusFeatures,
    FeatureStage,
    Featurizer,
    WindowConfig,
    build_arch_vocab,
    featurize_corpus,
)
from .forest import Forest, ForestConfig, SplitSpec, balanced_accuracy, fit, scores, split_corpus
from .policy import EvalRecord, HeuristicRow, TradeoffCurve, heuristic_baselines, sweep
from .segmentation import DEFAULT_STOP_SET, Graphlet, StopSet, filter_warmstart, segment_corpus
from .similarity import LshParams, SimWeights
from .trace import Trace, validate_trace

__all__ = [
    "CorpusValidationError",
    "StageReport",
    "PolicyReport",
    "prepare_ml_corpus",
    "split_pipelines",
    "eval_records",
    "heuristic_rows",
    "policy_report",
]

Corpus = list[tuple[Trace, list[Graphlet]]]


class CorpusValidationError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__(f"{len(violations)} trace violations")


def validate_corpus(traces: list[Trace]) -> list[str]:
    violations = []
    for trace in traces:
        violations.extend(f"{trace.pipeline_id}: {v}" for v in validate_trace(trace))
    return violations


def prepare_ml_corpus(traces: list[Trace], stop: StopSet = DEFAULT_STOP_SET) -> Corpus:
    """Validate, segment, and drop warmstart pipelines."""
    violations = validate_corpus(traces)
    if violations:
        raise CorpusValidationError(violations)
    return filter_warmstart(segment_corpus(traces, stop=stop))


def split_pipelines(corpus: Corpus, seed: int) -> tuple[SplitSpec, Corpus, Corpus]:
    labels = [(trace.pipeline_id, [g.pushed for g in gs]) for trace, gs in corpus]
    spec = split_corpus(labels, seed=seed)
    train_ids = set(spec.train_pipeline_ids)
    train = [(t, gs) for t, gs in corpus if t.pipeline_id in train_ids]
    test = [(t, gs) for t, gs in corpus if t.pipeline_id not in train_ids]
    return spec, train, test


def heuristic_rows(feats: CorpusFeatures) -> list[HeuristicRow]:
    jac = feats.column("jaccard_1")
    code = feats.column("code_match_1")
    return [
        HeuristicRow(
            model_type=feats.model_types[i],
            jaccard_1=float(jac[i]),
            code_match_1=float(code[i]),
            label=bool(feats.y[i]),
        )
        for i in range(len(feats.y))
    ]


def eval_records(
    feats: CorpusFeatures,
    stage: FeatureStage,
    model: Forest,
    cost_by_anchor: dict[str, float],
) -> list[EvalRecord]:
    names, X, stage_costs = feats.stage_view(stage)
    s = scores(model, X, feature_names=names)
    records = []
    for i, anchor in enumerate(feats.anchors):
        label = bool(feats.y[i])
        total = cost_by_anchor[anchor]
        records.append(
            EvalRecord(
                anchor=anchor,
                label=label,
                score=float(s[i]),
                unpushed_cost=0.0 if label else total,
                stage_feature_cost=float(stage_costs[i]),
            )
        )
    return records


@dataclass
class StageReport:
    stage: FeatureStage
    balanced_accuracy: float
    feature_cost_ratio: float
    elimination_at_full_freshness: float
    curve: TradeoffCurve
    model: Forest


@dataclass
class PolicyReport:
    split: SplitSpec
    stages: list[StageReport]
    heuristics: dict[str, float]
    test_push_rate: float


def policy_report(
    corpus: Corpus,
    window: WindowConfig = WindowConfig(),
    lsh: LshParams = LshParams(),
    weights: SimWeights = SimWeights(),
    forest_cfg: ForestConfig = ForestConfig(),
    seed: int = 42,
    stages: tuple[FeatureStage, ...] = STAGES,
) -> PolicyReport:
    """Train and evaluate one model per feature stage on a shared split.

    Reports test balanced accuracy (score threshold 0.5), the stage's mean
    feature-acquisition cost relative to the validation stage, the full
    freshness-vs-waste curve, and the waste eliminated at full freshness.
    """
    spec, train, test = split_pipelines(corpus, seed=seed)
    featurizer = Featurizer(
        window=window, lsh=lsh, weights=weights, arch_vocab=build_arch_vocab(train)
    )
    train_feats = featurize_corpus(train, featurizer=featurizer)
    test_feats = featurize_corpus(test, featurizer=featurizer)
    cost_by_anchor = {g.anchor: g.total_cost for _, gs in corpus for g in gs}

    all_costs = {
        stage: np.concatenate([train_feats.stage_costs[stage], test_feats.stage_costs[stage]])
        for stage in STAGES
    }
    validation_mean = float(all_costs[FeatureStage.VALIDATION].mean())

    reports = []
    for stage in stages:
        names, X_train, _ = train_feats.stage_view(stage)
        model = fit(X_train, train_feats.y, forest_cfg, feature_names=names)
        records = eval_records(test_feats, stage, model, cost_by_anchor)
        preds = [r.score >= 0.5 for r in records]
        acc = balanced_accuracy([r.label for r in records], preds)
        curve = sweep(records)
        ratio = float(all_costs[stage].mean()) / validation_mean if validation_mean > 0 else 0.0
        reports.append(
            StageReport(
                stage=stage,
                balanced_accuracy=acc,
                feature_cost_ratio=ratio,
                elimination_at_full_freshness=curve.elimination_at_full_freshness(),
                curve=curve,
                model=model,
            )
        )

    heuristics = heuristic_baselines(heuristic_rows(train_feats), heuristic_rows(test_feats))
    return PolicyReport(
        split=spec,
        stages=reports,
        heuristics=dict(heuristics),
        test_push_rate=float(test_feats.y.mean()),
    )
