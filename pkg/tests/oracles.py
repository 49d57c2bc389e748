"""Independent reference implementations used only to check the library.

These deliberately favor obviousness over speed: the segmentation oracle
re-scans every edge until nothing changes, the transport oracle enumerates
integer contingency tables, and the sweep oracle rebuilds each confusion set
from scratch.
"""

from __future__ import annotations

import numpy as np

from graphlets.segmentation import StopSet
from graphlets.trace import (
    Artifact,
    ArtifactType,
    Edge,
    EdgeRole,
    ExecutionState,
    Execution,
    FeatureKind,
    FeatureStats,
    ModelType,
    OperatorKind,
    SpanStats,
    Trace,
)


def naive_graphlet_nodes(trace: Trace, anchor: str, stop: StopSet) -> frozenset[str]:
    """Iterate the two membership rules over the full edge list to fixpoint."""
    nodes = {anchor}
    changed = True
    while changed:
        changed = False
        for e in trace.edges:
            if e.dst in nodes and e.src not in nodes:
                ex = trace.executions.get(e.src)
                blocked = (
                    ex is not None and ex.operator is OperatorKind.TRAINER and e.src != anchor
                )
                if not blocked:
                    nodes.add(e.src)
                    changed = True
            if e.src in nodes and e.dst not in nodes:
                ex = trace.executions.get(e.dst)
                blocked = ex is not None and ex.operator in stop.kinds and e.dst != anchor
                if not blocked:
                    nodes.add(e.dst)
                    changed = True
    return frozenset(nodes)


_PRODUCES = {
    OperatorKind.EXAMPLE_GEN: ArtifactType.DATA_SPAN,
    OperatorKind.STATISTICS_GEN: ArtifactType.STATISTICS,
    OperatorKind.SCHEMA_GEN: ArtifactType.SCHEMA,
    OperatorKind.EXAMPLE_VALIDATOR: ArtifactType.OTHER,
    OperatorKind.TRANSFORM: ArtifactType.TRANSFORM_GRAPH,
    OperatorKind.TRAINER: ArtifactType.MODEL,
    OperatorKind.TUNER: ArtifactType.OTHER,
    OperatorKind.EVALUATOR: ArtifactType.EVAL_RESULT,
    OperatorKind.MODEL_VALIDATOR: ArtifactType.OTHER,
    OperatorKind.PUSHER: ArtifactType.PUSH_RESULT,
    OperatorKind.CUSTOM: ArtifactType.OTHER,
}

_KIND_WEIGHTS = [
    (OperatorKind.EXAMPLE_GEN, 0.18),
    (OperatorKind.STATISTICS_GEN, 0.12),
    (OperatorKind.SCHEMA_GEN, 0.06),
    (OperatorKind.EXAMPLE_VALIDATOR, 0.06),
    (OperatorKind.TRANSFORM, 0.14),
    (OperatorKind.TRAINER, 0.18),
    (OperatorKind.TUNER, 0.04),
    (OperatorKind.EVALUATOR, 0.08),
    (OperatorKind.MODEL_VALIDATOR, 0.05),
    (OperatorKind.PUSHER, 0.06),
    (OperatorKind.CUSTOM, 0.03),
]

_TINY_SPAN = SpanStats(
    features=(
        FeatureStats(name="x", kind=FeatureKind.NUMERICAL, numerical_hist=(0.1,) * 10),
    )
)


def random_trace(rng: np.random.Generator, max_execs: int = 60) -> Trace:
    """Random valid bipartite DAG with at least one trainer execution.

    Edges always flow from earlier nodes to later executions, so the result
    is acyclic by construction; warmstart-style model-into-trainer edges
    arise naturally because trainers produce model artifacts that later
    executions may consume.
    """
    kinds = [k for k, _ in _KIND_WEIGHTS]
    weights = np.array([w for _, w in _KIND_WEIGHTS])
    weights = weights / weights.sum()
    n_exec = int(rng.integers(3, max_execs + 1))
    artifacts: dict[str, Artifact] = {}
    executions: dict[str, Execution] = {}
    edges: set[Edge] = set()
    clock = 1000
    trainer_at = int(rng.integers(0, n_exec))
    for i in range(n_exec):
        kind = kinds[int(rng.choice(len(kinds), p=weights))]
        if i == trainer_at:
            kind = OperatorKind.TRAINER
        ex_id = f"e{i:03d}"
        start = clock
        clock += int(rng.integers(1, 50))
        end = clock
        executions[ex_id] = Execution(
            id=ex_id,
            operator=kind,
            pipeline_id="rand",
            start_at=start,
            end_at=end,
            state=ExecutionState.FAILED if rng.random() < 0.08 else ExecutionState.COMPLETE,
            cpu_cost=float(rng.random() * 4.0),
            code_version=f"v{int(rng.integers(0, 3))}",
            model_type=ModelType.DNN if kind is OperatorKind.TRAINER else None,
            analyzers=None,
        )
        if artifacts:
            pool = list(artifacts)
            n_in = int(rng.integers(0, min(3, len(pool)) + 1))
            for src in rng.choice(pool, size=n_in, replace=False):
                edges.add(Edge(src=str(src), dst=ex_id, role=EdgeRole.INPUT))
        n_out = int(rng.integers(1, 3))
        for j in range(n_out):
            art_id = f"a{i:03d}_{j}"
            a_type = _PRODUCES[kind] if j == 0 else ArtifactType.OTHER
            clock += 1
            artifacts[art_id] = Artifact(
                id=art_id,
                artifact_type=a_type,
                created_at=clock,
                pipeline_id="rand",
                span_stats=_TINY_SPAN if a_type is ArtifactType.DATA_SPAN else None,
            )
            edges.add(Edge(src=ex_id, dst=art_id, role=EdgeRole.OUTPUT))
    return Trace(
        pipeline_id="rand",
        artifacts=dict(sorted(artifacts.items())),
        executions=dict(sorted(executions.items())),
        edges=tuple(sorted(edges)),
    )


def brute_transport_cost(cost: np.ndarray) -> float:
    """Minimum transport cost by enumerating integer tables with row sums m
    and column sums n; exact because such a vertex solution always exists."""
    n, m = cost.shape
    best = [np.inf]
    alloc = [[0] * m for _ in range(n)]

    def fill_row(i: int, col_rem: list[int]) -> None:
        if i == n:
            if all(c == 0 for c in col_rem):
                total = sum(
                    alloc[r][c] * cost[r][c] for r in range(n) for c in range(m)
                )
                best[0] = min(best[0], total)
            return

        def fill_cell(j: int, rem: int) -> None:
            if j == m:
                if rem == 0:
                    fill_row(i + 1, [col_rem[k] - alloc[i][k] for k in range(m)])
                return
            for q in range(min(rem, col_rem[j]) + 1):
                alloc[i][j] = q
                fill_cell(j + 1, rem - q)
            alloc[i][j] = 0

        fill_cell(0, m)

    fill_row(0, [n] * m)
    return best[0] / (n * m)


def brute_span_sim_square(cost: np.ndarray) -> float:
    """For n == m, the optimum is an assignment; try every permutation."""
    import itertools

    n = cost.shape[0]
    best = min(
        sum(cost[i, p[i]] for i in range(n)) / n for p in itertools.permutations(range(n))
    )
    return 1.0 - best


def brute_confusion(records, threshold):
    tp = fp = fn = tn = 0
    fp_cost = 0.0
    for r in records:
        run = r.score >= threshold
        if r.label and run:
            tp += 1
        elif r.label:
            fn += 1
        elif run:
            fp += 1
            fp_cost += r.unpushed_cost
        else:
            tn += 1
    return tp, fp, fn, tn, fp_cost


def jensen_shannon(p: np.ndarray, q: np.ndarray) -> float:
    def entropy(x):
        x = x[x > 0]
        return float(-(x * np.log(x)).sum())

    m = (p + q) / 2.0
    return entropy(m) - (entropy(p) + entropy(q)) / 2.0
