"""Command-line interface.

Exit codes: 0 on success, 1 when trace validation fails (violations are
printed one per line), 2 on usage errors.  All outputs are deterministic
given the inputs, the seed, and the config file; tabular outputs start with
a format-version comment line followed by a header row.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (
    cadence_stats,
    cost_breakdown,
    drift_code_table,
    pipeline_stats,
    similarity_table,
)
from .config import RunConfig, load_config
from .features import (
    STAGES,
    FeatureStage,
    Featurizer,
    WindowConfig,
    build_arch_vocab,
    featurize_corpus,
)
from .forest import SplitSpec, balanced_accuracy, fit, forest_from_dict, forest_to_dict
from .policy import sweep
from .segmentation import consecutive_pairs, dump_graphlets, segment_corpus
from .similarity import LshParams, SimWeights, jaccard, sequence_sim
from .synth import generate, preset
from .trace import load_corpus
from .workflow import (
    eval_records,
    policy_report,
    prepare_ml_corpus,
    split_pipelines,
    validate_corpus,
)

TABLE_VERSION = "# graphlets-table v1"
MODEL_FORMAT = "graphlets-model-v1"


def _fmt(x) -> str:
    if x is None:
        return "na"
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _write_table(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(TABLE_VERSION + "\n")
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(v) for v in row) + "\n")


def _load_validated(corpus_dir: str) -> list:
    traces = load_corpus(corpus_dir)
    violations = validate_corpus(traces)
    if violations:
        for v in violations:
            print(v)
        raise SystemExit(1)
    return traces


def cmd_synth(args, cfg: RunConfig) -> int:
    gen = cfg.gen
    if args.preset:
        gen = preset(args.preset, seed=args.seed)
    if args.pipelines:
        gen = replace(gen, n_pipelines=args.pipelines)
    if args.graphlets:
        lo, _, hi = args.graphlets.partition(":")
        gen = replace(gen, graphlets_per_pipeline=(int(lo), int(hi or lo)))
    truth = generate(gen, args.out)
    print(
        f"wrote {gen.n_pipelines} pipelines, {len(truth.entries)} graphlets, "
        f"push rate {truth.push_rate:.3f} -> {args.out}"
    )
    return 0


def cmd_validate(args, cfg: RunConfig) -> int:
    traces = load_corpus(args.corpus)
    violations = validate_corpus(traces)
    if violations:
        for v in violations:
            print(v)
        return 1
    print(f"{len(traces)} traces valid")
    return 0


def cmd_segment(args, cfg: RunConfig) -> int:
    traces = _load_validated(args.corpus)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with out.open("w", encoding="utf-8") as fh:
        for trace, graphlets in segment_corpus(traces, stop=cfg.stop):
            for line in dump_graphlets(graphlets):
                fh.write(line + "\n")
                count += 1
    print(f"wrote {count} graphlet records -> {out}")
    return 0


def cmd_stats(args, cfg: RunConfig) -> int:
    traces = _load_validated(args.corpus)
    corpus = segment_corpus(traces, stop=cfg.stop)
    out = Path(args.out)

    rows = []
    for trace in traces:
        ps = pipeline_stats(trace)
        rows.append(
            [
                ps.pipeline_id,
                ps.lifespan_days,
                ps.models_per_day,
                ps.feature_count,
                ps.categorical_fraction,
                ps.mean_categorical_domain,
            ]
        )
    _write_table(
        out / "pipelines.tsv",
        ["pipeline_id", "lifespan_days", "models_per_day", "feature_count",
         "categorical_fraction", "mean_categorical_domain"],
        rows,
    )

    analyzers: dict = {}
    for trace in traces:
        for a, c in pipeline_stats(trace).analyzer_usage.items():
            analyzers[a] = analyzers.get(a, 0) + c
    _write_table(
        out / "analyzer_usage.tsv",
        ["analyzer", "total_uses"],
        [[a.value, c] for a, c in sorted(analyzers.items())],
    )

    breakdown = cost_breakdown(traces)
    _write_table(
        out / "cost_breakdown.tsv",
        ["operator_group", "cost_fraction"],
        [[g.value, f] for g, f in sorted(breakdown.items())],
    )

    cad = cadence_stats(corpus)

    def summary(name: str, values) -> list:
        arr = np.asarray(values, dtype=float)
        if arr.size == 0:
            return [name, 0, None, None, None, None, None]
        return [
            name,
            int(arr.size),
            float(arr.mean()),
            float(np.percentile(arr, 25)),
            float(np.percentile(arr, 50)),
            float(np.percentile(arr, 75)),
            float(arr.max()),
        ]

    _write_table(
        out / "cadence.tsv",
        ["measure", "count", "mean", "p25", "p50", "p75", "max"],
        [
            summary("hours_between_graphlets", cad.hours_between_all),
            summary("hours_between_pushed", cad.hours_between_pushed),
            summary("graphlets_between_pushes", cad.graphlets_between_pushes),
            summary("graphlet_duration_hours", cad.duration_hours),
            summary("trainer_cpu_pushed", cad.trainer_cpu_by_label["pushed"]),
            summary("trainer_cpu_unpushed", cad.trainer_cpu_by_label["unpushed"]),
        ],
    )
    _write_table(
        out / "push_rate_by_model_type.tsv",
        ["model_type", "push_rate"],
        [[mt.value, r] for mt, r in cad.push_rate_by_model_type.items()],
    )

    table = similarity_table(corpus, cfg.lsh, cfg.weights)
    _write_table(
        out / "similarity_table.tsv",
        ["metric", "b_0_25", "b_25_50", "b_50_75", "b_75_100", "mean", "count"],
        [[name, *row["buckets"], row["mean"], row["count"]] for name, row in table.items()],
    )

    drift = drift_code_table(corpus, cfg.lsh, cfg.weights)
    _write_table(
        out / "drift_code.tsv",
        ["measure", "mu_pushed", "mu_unpushed", "mu_all"],
        [
            ["input_data_similarity", drift.similarity_pushed, drift.similarity_unpushed,
             drift.similarity_all],
            ["code_match", drift.code_match_pushed, drift.code_match_unpushed,
             drift.code_match_all],
        ],
    )
    print(f"wrote stats tables -> {out}")
    return 0


def cmd_similarity(args, cfg: RunConfig) -> int:
    traces = _load_validated(args.corpus)
    corpus = segment_corpus(traces, stop=cfg.stop)
    out = Path(args.out)

    rows = []
    for trace, graphlets in corpus:
        spans = {
            a.id: a.span_stats for a in trace.artifacts.values() if a.span_stats is not None
        }
        for prev, cur in consecutive_pairs(graphlets):
            seq_prev = tuple(spans[s] for s in prev.input_spans if s in spans)
            seq_cur = tuple(spans[s] for s in cur.input_spans if s in spans)
            rows.append(
                [
                    trace.pipeline_id,
                    prev.anchor,
                    cur.anchor,
                    jaccard(prev, cur),
                    sequence_sim(seq_cur, seq_prev, cfg.lsh, cfg.weights),
                ]
            )
    _write_table(out / "pairs.tsv", ["pipeline_id", "anchor_a", "anchor_b", "jaccard", "dataset_sim"], rows)

    table = similarity_table(corpus, cfg.lsh, cfg.weights)
    _write_table(
        out / "histogram.tsv",
        ["metric", "b_0_25", "b_25_50", "b_50_75", "b_75_100", "mean", "count"],
        [[name, *row["buckets"], row["mean"], row["count"]] for name, row in table.items()],
    )
    print(f"wrote {len(rows)} pair records -> {out}")
    return 0


def cmd_featurize(args, cfg: RunConfig) -> int:
    traces = _load_validated(args.corpus)
    corpus = prepare_ml_corpus(traces, stop=cfg.stop)
    feats = featurize_corpus(corpus, window=cfg.window, lsh=cfg.lsh, weights=cfg.weights)
    stage = FeatureStage(args.stage)
    names, X, costs = feats.stage_view(stage)
    rows = []
    for i in range(len(feats.y)):
        rows.append(
            [*X[i].tolist(), bool(feats.y[i]), float(costs[i]),
             feats.pipeline_ids[i], feats.anchors[i]]
        )
    _write_table(
        Path(args.out),
        [*names, "label", "cost_to_acquire", "pipeline_id", "anchor"],
        rows,
    )
    print(f"wrote {len(rows)} x {len(names)} feature matrix -> {args.out}")
    return 0


def _featurizer_payload(f: Featurizer) -> dict:
    return {
        "window": f.window.w,
        "lsh": {"k": f.lsh.k, "w": f.lsh.w, "seed": f.lsh.seed},
        "weights": {"alpha": f.weights.alpha, "beta": f.weights.beta},
        "arch_vocab": list(f.arch_vocab),
    }


def _featurizer_from_payload(payload: dict) -> Featurizer:
    return Featurizer(
        window=WindowConfig(w=int(payload["window"])),
        lsh=LshParams(**payload["lsh"]),
        weights=SimWeights(**payload["weights"]),
        arch_vocab=tuple(payload["arch_vocab"]),
    )


def cmd_train(args, cfg: RunConfig) -> int:
    traces = _load_validated(args.corpus)
    corpus = prepare_ml_corpus(traces, stop=cfg.stop)
    spec, train, _ = split_pipelines(corpus, seed=cfg.split_seed)
    featurizer = Featurizer(
        window=cfg.window, lsh=cfg.lsh, weights=cfg.weights, arch_vocab=build_arch_vocab(train)
    )
    feats = featurize_corpus(train, featurizer=featurizer)
    stage = FeatureStage(args.stage)
    names, X, _ = feats.stage_view(stage)
    model = fit(X, feats.y, cfg.forest, feature_names=names)
    payload = {
        "format": MODEL_FORMAT,
        "version": __version__,
        "stage": stage.value,
        "featurizer": _featurizer_payload(featurizer),
        "split": {
            "train_pipeline_ids": list(spec.train_pipeline_ids),
            "test_pipeline_ids": list(spec.test_pipeline_ids),
            "train_fraction": spec.train_fraction,
            "train_rate": spec.train_rate,
            "test_rate": spec.test_rate,
        },
        "forest": forest_to_dict(model),
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")
    print(
        f"trained {stage.value} model on {len(feats.y)} graphlets "
        f"({len(spec.train_pipeline_ids)} pipelines) -> {out}"
    )
    return 0


def _load_model(path: str):
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a {MODEL_FORMAT} file: {path}")
    stage = FeatureStage(payload["stage"])
    featurizer = _featurizer_from_payload(payload["featurizer"])
    split = SplitSpec(
        train_pipeline_ids=tuple(payload["split"]["train_pipeline_ids"]),
        test_pipeline_ids=tuple(payload["split"]["test_pipeline_ids"]),
        train_fraction=float(payload["split"]["train_fraction"]),
        train_rate=float(payload["split"]["train_rate"]),
        test_rate=float(payload["split"]["test_rate"]),
    )
    return stage, featurizer, split, forest_from_dict(payload["forest"])


def _test_records(args, cfg: RunConfig):
    traces = _load_validated(args.corpus)
    corpus = prepare_ml_corpus(traces, stop=cfg.stop)
    stage, featurizer, split, model = _load_model(args.model)
    test_ids = set(split.test_pipeline_ids)
    test = [(t, gs) for t, gs in corpus if t.pipeline_id in test_ids]
    if not test:
        raise ValueError("corpus contains no pipelines from the model's test split")
    feats = featurize_corpus(test, featurizer=featurizer)
    cost_by_anchor = {g.anchor: g.total_cost for _, gs in test for g in gs}
    records = eval_records(feats, stage, model, cost_by_anchor)
    return stage, records


def cmd_evaluate(args, cfg: RunConfig) -> int:
    stage, records = _test_records(args, cfg)
    labels = [r.label for r in records]
    preds = [r.score >= 0.5 for r in records]
    acc = balanced_accuracy(labels, preds)
    _write_table(
        Path(args.out),
        ["stage", "n_test", "test_push_rate", "balanced_accuracy"],
        [[stage.value, len(records), sum(labels) / len(labels), acc]],
    )
    print(f"balanced accuracy {acc:.3f} on {len(records)} test graphlets -> {args.out}")
    return 0


def cmd_sweep(args, cfg: RunConfig) -> int:
    stage, records = _test_records(args, cfg)
    curve = sweep(records)
    _write_table(
        Path(args.out),
        ["threshold", "wasted_fraction", "freshness", "fpr", "tpr"],
        [[p.threshold, p.wasted_fraction, p.freshness, p.fpr, p.tpr] for p in curve.points],
    )
    print(
        f"{stage.value}: {len(curve.points)} thresholds, "
        f"waste elimination at full freshness {curve.elimination_at_full_freshness():.3f} "
        f"-> {args.out}"
    )
    return 0


def cmd_report(args, cfg: RunConfig) -> int:
    traces = _load_validated(args.corpus)
    corpus = prepare_ml_corpus(traces, stop=cfg.stop)
    report = policy_report(
        corpus,
        window=cfg.window,
        lsh=cfg.lsh,
        weights=cfg.weights,
        forest_cfg=cfg.forest,
        seed=cfg.split_seed,
    )
    out = Path(args.out)
    _write_table(
        out / "stages.tsv",
        ["stage", "balanced_accuracy", "feature_cost_ratio", "elimination_at_full_freshness"],
        [
            [s.stage.value, s.balanced_accuracy, s.feature_cost_ratio,
             s.elimination_at_full_freshness]
            for s in report.stages
        ],
    )
    _write_table(
        out / "heuristics.tsv",
        ["heuristic", "balanced_accuracy"],
        [[name, acc] for name, acc in sorted(report.heuristics.items())],
    )
    for s in report.stages:
        _write_table(
            out / f"curve_{s.stage.value}.tsv",
            ["threshold", "wasted_fraction", "freshness", "fpr", "tpr"],
            [[p.threshold, p.wasted_fraction, p.freshness, p.fpr, p.tpr] for p in s.curve.points],
        )
    print(f"wrote staged report ({len(report.stages)} stages) -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphlets",
        description="Analyze ML pipeline provenance traces: segment per-model graphlets, "
        "measure data reuse and drift, predict pushes, and evaluate waste policies.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, corpus=True):
        if corpus:
            p.add_argument("--corpus", required=True, help="corpus directory of trace files")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--config", default=None, help="JSON config file")

    p = sub.add_parser("synth", help="generate a synthetic corpus with planted truth")
    common(p, corpus=False)
    p.add_argument("--out", required=True)
    p.add_argument("--preset", choices=["default", "weak", "medium", "strong", "geometric"])
    p.add_argument("--pipelines", type=int, default=None)
    p.add_argument("--graphlets", default=None, metavar="LO:HI")

    p = sub.add_parser("validate", help="check every trace invariant")
    common(p)

    p = sub.add_parser("segment", help="extract graphlets to a record file")
    common(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("stats", help="corpus analytics tables")
    common(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("similarity", help="consecutive-pair similarity records and histogram")
    common(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("featurize", help="emit the classifier feature matrix")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--stage", default=FeatureStage.VALIDATION.value,
                   choices=[s.value for s in STAGES])

    p = sub.add_parser("train", help="split, featurize, and fit a push classifier")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--stage", default=FeatureStage.VALIDATION.value,
                   choices=[s.value for s in STAGES])

    p = sub.add_parser("evaluate", help="score a model on its held-out pipelines")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="freshness-vs-waste curve for a model")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="staged models, heuristics, and curves in one run")
    common(p)
    p.add_argument("--out", required=True)

    return parser


COMMANDS = {
    "synth": cmd_synth,
    "validate": cmd_validate,
    "segment": cmd_segment,
    "stats": cmd_stats,
    "similarity": cmd_similarity,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed)
        return COMMANDS[args.command](args, cfg)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
