"""Provenance data model for ML pipeline traces.

A trace is the full provenance DAG of one pipeline: execution nodes (operator
runs) and artifact nodes (data spans, models, statistics, ...) linked by
input/output edges.  Input edges point artifact -> execution, output edges
point execution -> artifact, so every path alternates between the two node
kinds.

Traces are stored as newline-delimited records, one JSON object per line with
a ``kind`` field in {"artifact", "execution", "edge"}.  One file holds one
pipeline; a corpus is a directory of such files.  ``Trace`` and ``TraceIndex``
are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping

__all__ = [
    "ArtifactType",
    "OperatorKind",
    "OperatorGroup",
    "OPERATOR_GROUPS",
    "ModelType",
    "Analyzer",
    "ExecutionState",
    "EdgeRole",
    "FeatureKind",
    "FeatureStats",
    "SpanStats",
    "Artifact",
    "Execution",
    "Edge",
    "Trace",
    "TraceIndex",
    "TraceParseError",
    "parse_trace",
    "parse_trace_file",
    "validate_trace",
    "index_trace",
    "serialize_trace",
    "load_corpus",
]

MS_PER_DAY = 86_400_000
MS_PER_HOUR = 3_600_000


class ArtifactType(str, Enum):
    DATA_SPAN = "data_span"
    MODEL = "model"
    STATISTICS = "statistics"
    SCHEMA = "schema"
    TRANSFORM_GRAPH = "transform_graph"
    EVAL_RESULT = "eval_result"
    PUSH_RESULT = "push_result"
    OTHER = "other"


class OperatorKind(str, Enum):
    EXAMPLE_GEN = "example_gen"
    STATISTICS_GEN = "statistics_gen"
    SCHEMA_GEN = "schema_gen"
    EXAMPLE_VALIDATOR = "example_validator"
    TRANSFORM = "transform"
    TRAINER = "trainer"
    TUNER = "tuner"
    EVALUATOR = "evaluator"
    MODEL_VALIDATOR = "model_validator"
    PUSHER = "pusher"
    CUSTOM = "custom"


class OperatorGroup(str, Enum):
    DATA_INGESTION = "data_ingestion"
    DATA_ANALYSIS_VALIDATION = "data_analysis_validation"
    DATA_PREPROCESSING = "data_preprocessing"
    TRAINING = "training"
    MODEL_ANALYSIS_VALIDATION = "model_analysis_validation"
    DEPLOYMENT = "deployment"


# Fixed operator -> functional group mapping. Custom operators are UDF-style
# steps that in practice appear inside the pre-processing stage.
OPERATOR_GROUPS: Mapping[OperatorKind, OperatorGroup] = {
    OperatorKind.EXAMPLE_GEN: OperatorGroup.DATA_INGESTION,
    OperatorKind.STATISTICS_GEN: OperatorGroup.DATA_ANALYSIS_VALIDATION,
    OperatorKind.SCHEMA_GEN: OperatorGroup.DATA_ANALYSIS_VALIDATION,
    OperatorKind.EXAMPLE_VALIDATOR: OperatorGroup.DATA_ANALYSIS_VALIDATION,
    OperatorKind.TRANSFORM: OperatorGroup.DATA_PREPROCESSING,
    OperatorKind.TUNER: OperatorGroup.DATA_PREPROCESSING,
    OperatorKind.TRAINER: OperatorGroup.TRAINING,
    OperatorKind.EVALUATOR: OperatorGroup.MODEL_ANALYSIS_VALIDATION,
    OperatorKind.MODEL_VALIDATOR: OperatorGroup.MODEL_ANALYSIS_VALIDATION,
    OperatorKind.PUSHER: OperatorGroup.DEPLOYMENT,
    OperatorKind.CUSTOM: OperatorGroup.DATA_PREPROCESSING,
}


class ModelType(str, Enum):
    DNN = "dnn"
    LINEAR = "linear"
    DNN_LINEAR = "dnn_linear"
    TREE = "tree"
    ENSEMBLE = "ensemble"
    CUSTOM = "custom"
    OTHER = "other"


class Analyzer(str, Enum):
    VOCABULARY = "vocabulary"
    MIN = "min"
    MAX = "max"
    MEAN = "mean"
    VARIANCE = "variance"
    CUSTOM = "custom"


class ExecutionState(str, Enum):
    COMPLETE = "complete"
    FAILED = "failed"


class EdgeRole(str, Enum):
    INPUT = "input"
    OUTPUT = "output"


class FeatureKind(str, Enum):
    NUMERICAL = "numerical"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class FeatureStats:
    """Per-feature summary statistics recorded on a data span.

    Numerical features carry a 10-bin equi-width histogram over the rescaled
    [0, 1] value range.  Categorical features carry the counts of the top 10
    most frequent terms, the number of unique terms, and the total number of
    datapoints; the terms themselves are anonymized.
    """

    name: str
    kind: FeatureKind
    numerical_hist: tuple[float, ...] | None = None
    cat_top10: tuple[int, ...] | None = None
    cat_unique: int | None = None
    cat_total: int | None = None

    def check(self) -> list[str]:
        """Return a list of invariant violations (empty when valid)."""
        bad = []
        if not self.name:
            bad.append("feature with empty name")
        if self.kind is FeatureKind.NUMERICAL:
            if self.numerical_hist is None:
                bad.append(f"numerical feature {self.name!r} missing histogram")
            else:
                if len(self.numerical_hist) != 10:
                    bad.append(f"feature {self.name!r} histogram must have 10 bins")
                if any(b < 0 for b in self.numerical_hist):
                    bad.append(f"feature {self.name!r} histogram has negative mass")
                elif abs(sum(self.numerical_hist) - 1.0) > 1e-9:
                    bad.append(f"feature {self.name!r} histogram mass != 1")
            if self.cat_top10 is not None or self.cat_unique is not None or self.cat_total is not None:
                bad.append(f"numerical feature {self.name!r} carries categorical fields")
        else:
            if self.numerical_hist is not None:
                bad.append(f"categorical feature {self.name!r} carries a histogram")
            if self.cat_top10 is None or self.cat_unique is None or self.cat_total is None:
                bad.append(f"categorical feature {self.name!r} missing count fields")
            else:
                if self.cat_unique <= 0 or self.cat_total <= 0:
                    bad.append(f"feature {self.name!r} has non-positive unique/total counts")
                elif any(c <= 0 for c in self.cat_top10):
                    bad.append(f"feature {self.name!r} has non-positive top-term counts")
                else:
                    if sum(self.cat_top10) > self.cat_total:
                        bad.append(f"feature {self.name!r} top-term counts exceed total")
                    if len(self.cat_top10) > min(10, self.cat_unique):
                        bad.append(f"feature {self.name!r} has too many top-term counts")
                    if self.cat_unique > self.cat_total:
                        bad.append(f"feature {self.name!r} unique count exceeds total")
        return bad


@dataclass(frozen=True)
class SpanStats:
    """Summary statistics for all features of one data span."""

    features: tuple[FeatureStats, ...]

    def check(self) -> list[str]:
        bad = []
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            bad.append("duplicate feature names in span stats")
        for f in self.features:
            bad.extend(f.check())
        return bad


@dataclass(frozen=True)
class Artifact:
    id: str
    artifact_type: ArtifactType
    created_at: int
    pipeline_id: str
    span_stats: SpanStats | None = None
    extra: tuple[tuple[str, Any], ...] = ()


@dataclass(frozen=True)
class Execution:
    id: str
    operator: OperatorKind
    pipeline_id: str
    start_at: int
    end_at: int
    state: ExecutionState
    cpu_cost: float
    code_version: str | None = None
    model_type: ModelType | None = None
    architecture: str | None = None
    analyzers: tuple[Analyzer, ...] | None = None
    extra: tuple[tuple[str, Any], ...] = ()

    @property
    def group(self) -> OperatorGroup:
        return OPERATOR_GROUPS[self.operator]


@dataclass(frozen=True, order=True)
class Edge:
    src: str
    dst: str
    role: EdgeRole


@dataclass(frozen=True)
class Trace:
    """One pipeline's provenance DAG.

    Node dictionaries are keyed by node id and sorted by id; edges are
    deduplicated and sorted, so two parses of the same records compare equal
    regardless of record order in the file.
    """

    pipeline_id: str
    artifacts: dict[str, Artifact]
    executions: dict[str, Execution]
    edges: tuple[Edge, ...]

    def node_ids(self) -> set[str]:
        return set(self.artifacts) | set(self.executions)

    def is_execution(self, node_id: str) -> bool:
        return node_id in self.executions


class TraceParseError(ValueError):
    """Malformed trace file; carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _enum(value: Any, enum_cls: type, what: str, line: int) -> Any:
    try:
        return enum_cls(value)
    except (ValueError, KeyError):
        raise TraceParseError(f"unknown {what}: {value!r}", line) from None


def _timestamp(record: Mapping[str, Any], key: str, line: int) -> int:
    value = record.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise TraceParseError(f"missing or non-integer timestamp {key!r}", line)
    return value


_SPAN_STATS_KEYS = {"name", "type", "hist", "top10", "unique", "total"}


def parse_span_stats(payload: Mapping[str, Any], line: int = 0) -> SpanStats:
    raw = payload.get("features")
    if not isinstance(raw, list):
        raise TraceParseError("span_stats must contain a feature list", line)
    feats = []
    for entry in raw:
        if not isinstance(entry, Mapping) or "name" not in entry or "type" not in entry:
            raise TraceParseError("span_stats feature missing name/type", line)
        kind = _enum(entry["type"], FeatureKind, "feature type", line)
        if kind is FeatureKind.NUMERICAL:
            hist = entry.get("hist")
            if not isinstance(hist, list):
                raise TraceParseError(f"numerical feature {entry['name']!r} missing hist", line)
            feats.append(
                FeatureStats(
                    name=str(entry["name"]),
                    kind=kind,
                    numerical_hist=tuple(float(x) for x in hist),
                )
            )
        else:
            try:
                feats.append(
                    FeatureStats(
                        name=str(entry["name"]),
                        kind=kind,
                        cat_top10=tuple(int(c) for c in entry["top10"]),
                        cat_unique=int(entry["unique"]),
                        cat_total=int(entry["total"]),
                    )
                )
            except (KeyError, TypeError, ValueError):
                raise TraceParseError(
                    f"categorical feature {entry.get('name')!r} missing top10/unique/total", line
                ) from None
    return SpanStats(features=tuple(feats))


def span_stats_payload(stats: SpanStats) -> dict[str, Any]:
    feats = []
    for f in stats.features:
        if f.kind is FeatureKind.NUMERICAL:
            feats.append({"name": f.name, "type": f.kind.value, "hist": list(f.numerical_hist or ())})
        else:
            feats.append(
                {
                    "name": f.name,
                    "type": f.kind.value,
                    "top10": list(f.cat_top10 or ()),
                    "unique": f.cat_unique,
                    "total": f.cat_total,
                }
            )
    return {"features": feats}


def _parse_artifact(record: Mapping[str, Any], line: int) -> Artifact:
    node_id = record.get("id")
    if not node_id or not isinstance(node_id, str):
        raise TraceParseError("artifact missing id", line)
    props = record.get("properties") or {}
    if not isinstance(props, Mapping):
        raise TraceParseError("artifact properties must be an object", line)
    stats = None
    if "span_stats" in props and props["span_stats"] is not None:
        stats = parse_span_stats(props["span_stats"], line)
    extra = tuple(sorted((k, v) for k, v in props.items() if k != "span_stats"))
    return Artifact(
        id=node_id,
        artifact_type=_enum(record.get("type"), ArtifactType, "artifact type", line),
        created_at=_timestamp(record, "created_at", line),
        pipeline_id=str(record.get("pipeline_id", "")),
        span_stats=stats,
        extra=extra,
    )


_EXEC_PROP_KEYS = {"code_version", "model_type", "architecture", "analyzers"}


def _parse_execution(record: Mapping[str, Any], line: int) -> Execution:
    node_id = record.get("id")
    if not node_id or not isinstance(node_id, str):
        raise TraceParseError("execution missing id", line)
    props = record.get("properties") or {}
    if not isinstance(props, Mapping):
        raise TraceParseError("execution properties must be an object", line)
    cost = record.get("cpu_cost", 0.0)
    if not isinstance(cost, (int, float)) or isinstance(cost, bool):
        raise TraceParseError("cpu_cost must be a number", line)
    model_type = props.get("model_type")
    analyzers = props.get("analyzers")
    extra = tuple(sorted((k, v) for k, v in props.items() if k not in _EXEC_PROP_KEYS))
    return Execution(
        id=node_id,
        operator=_enum(record.get("operator"), OperatorKind, "operator", line),
        pipeline_id=str(record.get("pipeline_id", "")),
        start_at=_timestamp(record, "start_at", line),
        end_at=_timestamp(record, "end_at", line),
        state=_enum(record.get("state"), ExecutionState, "execution state", line),
        cpu_cost=float(cost),
        code_version=None if props.get("code_version") is None else str(props["code_version"]),
        model_type=None if model_type is None else _enum(model_type, ModelType, "model type", line),
        architecture=None if props.get("architecture") is None else str(props["architecture"]),
        analyzers=None
        if analyzers is None
        else tuple(_enum(a, Analyzer, "analyzer", line) for a in analyzers),
        extra=extra,
    )


def parse_trace(lines: Iterable[str], source: str = "<memory>") -> Trace:
    """Parse newline-delimited trace records into a fully linked ``Trace``.

    Record order is irrelevant to the result.  Raises ``TraceParseError`` on a
    malformed record (with its line number), a duplicate node id, a dangling
    edge endpoint, or an edge whose role violates the bipartite orientation.
    """
    artifacts: dict[str, Artifact] = {}
    executions: dict[str, Execution] = {}
    raw_edges: list[tuple[Edge, int]] = []
    pipeline_id: str | None = None

    for line_no, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        try:
            record = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TraceParseError(f"invalid JSON ({exc.msg})", line_no) from None
        if not isinstance(record, Mapping):
            raise TraceParseError("record must be a JSON object", line_no)
        kind = record.get("kind")
        if kind == "artifact":
            node = _parse_artifact(record, line_no)
        elif kind == "execution":
            node = _parse_execution(record, line_no)
        elif kind == "edge":
            src, dst = record.get("from"), record.get("to")
            if not isinstance(src, str) or not isinstance(dst, str):
                raise TraceParseError("edge missing from/to", line_no)
            role = _enum(record.get("role"), EdgeRole, "edge role", line_no)
            raw_edges.append((Edge(src=src, dst=dst, role=role), line_no))
            continue
        else:
            raise TraceParseError(f"unknown record kind: {kind!r}", line_no)

        if node.id in artifacts or node.id in executions:
            raise TraceParseError(f"duplicate node id {node.id!r}", line_no)
        if pipeline_id is None:
            pipeline_id = node.pipeline_id
        elif node.pipeline_id != pipeline_id:
            raise TraceParseError(
                f"conflicting pipeline_id {node.pipeline_id!r} (file is {pipeline_id!r})", line_no
            )
        if kind == "artifact":
            artifacts[node.id] = node
        else:
            executions[node.id] = node

    edges: set[Edge] = set()
    for edge, line_no in raw_edges:
        for endpoint in (edge.src, edge.dst):
            if endpoint not in artifacts and endpoint not in executions:
                raise TraceParseError(f"edge endpoint {endpoint!r} does not exist", line_no)
        if edge.role is EdgeRole.INPUT:
            ok = edge.src in artifacts and edge.dst in executions
        else:
            ok = edge.src in executions and edge.dst in artifacts
        if not ok:
            raise TraceParseError(
                f"edge {edge.src!r}->{edge.dst!r} role violates bipartite orientation", line_no
            )
        edges.add(edge)

    if pipeline_id is None:
        raise TraceParseError(f"no node records in {source}")
    return Trace(
        pipeline_id=pipeline_id,
        artifacts=dict(sorted(artifacts.items())),
        executions=dict(sorted(executions.items())),
        edges=tuple(sorted(edges)),
    )


def parse_trace_file(path: str | Path) -> Trace:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        return parse_trace(fh, source=str(path))


def validate_trace(trace: Trace) -> list[str]:
    """Check all trace invariants; each violation names the node/edge and rule.

    Violations are data, not errors: an empty list means the trace is valid.
    """
    bad: list[str] = []
    for art in trace.artifacts.values():
        if art.created_at <= 0:
            bad.append(f"artifact {art.id}: created_at must be positive")
        if art.artifact_type is ArtifactType.DATA_SPAN:
            if art.span_stats is None:
                bad.append(f"artifact {art.id}: data_span missing span_stats")
            else:
                bad.extend(f"artifact {art.id}: {m}" for m in art.span_stats.check())
        elif art.span_stats is not None:
            bad.append(f"artifact {art.id}: span_stats only allowed on data_span artifacts")

    trainer_seen = False
    for ex in trace.executions.values():
        if ex.end_at < ex.start_at:
            bad.append(f"execution {ex.id}: end_at precedes start_at")
        if ex.start_at <= 0:
            bad.append(f"execution {ex.id}: start_at must be positive")
        if ex.cpu_cost < 0:
            bad.append(f"execution {ex.id}: negative cpu_cost")
        if ex.operator is OperatorKind.TRAINER:
            trainer_seen = True
            if ex.model_type is None:
                bad.append(f"trainer {ex.id} missing model_type")
        elif ex.model_type is not None:
            bad.append(f"execution {ex.id}: model_type only allowed on trainers")
        if ex.analyzers is not None and ex.operator is not OperatorKind.TRANSFORM:
            bad.append(f"execution {ex.id}: analyzers only allowed on transform executions")
    if not trainer_seen:
        bad.append("trace has no trainer execution")

    nodes = trace.node_ids()
    for edge in trace.edges:
        if edge.src not in nodes or edge.dst not in nodes:
            bad.append(f"edge {edge.src}->{edge.dst}: dangling endpoint")
            continue
        src_is_exec = trace.is_execution(edge.src)
        dst_is_exec = trace.is_execution(edge.dst)
        if src_is_exec == dst_is_exec:
            bad.append(f"edge {edge.src}->{edge.dst}: connects two nodes of the same kind")
        elif edge.role is EdgeRole.INPUT and src_is_exec:
            bad.append(f"edge {edge.src}->{edge.dst}: input edge must go artifact->execution")
        elif edge.role is EdgeRole.OUTPUT and not src_is_exec:
            bad.append(f"edge {edge.src}->{edge.dst}: output edge must go execution->artifact")

    cycle_node = _find_cycle(trace)
    if cycle_node is not None:
        bad.append(f"cycle through {cycle_node}")
    return bad


def _find_cycle(trace: Trace) -> str | None:
    """Return a node on a directed cycle, or None if the graph is acyclic."""
    children: dict[str, list[str]] = {}
    indeg: dict[str, int] = {n: 0 for n in trace.node_ids()}
    for e in trace.edges:
        if e.src in indeg and e.dst in indeg:
            children.setdefault(e.src, []).append(e.dst)
            indeg[e.dst] += 1
    queue = [n for n, d in indeg.items() if d == 0]
    seen = 0
    while queue:
        node = queue.pop()
        seen += 1
        for child in children.get(node, ()):
            indeg[child] -= 1
            if indeg[child] == 0:
                queue.append(child)
    if seen == len(indeg):
        return None
    return min(n for n, d in indeg.items() if d > 0)


@dataclass(frozen=True)
class TraceIndex:
    """Adjacency and ordering views over a validated trace.

    ``parents[x]`` holds the sources of edges into ``x`` and ``children[x]``
    the targets of edges out of it, each sorted by node id.  ``trainers``
    lists trainer executions in chronological order of ``end_at`` with ties
    broken by id, which makes "consecutive graphlets" deterministic.
    """

    parents: dict[str, tuple[str, ...]]
    children: dict[str, tuple[str, ...]]
    trainers: tuple[str, ...]
    nodes_by_time: tuple[str, ...]

    def in_degree(self, node_id: str) -> int:
        return len(self.parents.get(node_id, ()))

    def out_degree(self, node_id: str) -> int:
        return len(self.children.get(node_id, ()))


def index_trace(trace: Trace) -> TraceIndex:
    parents: dict[str, list[str]] = {n: [] for n in trace.node_ids()}
    children: dict[str, list[str]] = {n: [] for n in trace.node_ids()}
    for e in trace.edges:
        children[e.src].append(e.dst)
        parents[e.dst].append(e.src)
    trainers = sorted(
        (ex for ex in trace.executions.values() if ex.operator is OperatorKind.TRAINER),
        key=lambda ex: (ex.end_at, ex.id),
    )

    def node_time(node_id: str) -> int:
        if node_id in trace.artifacts:
            return trace.artifacts[node_id].created_at
        return trace.executions[node_id].end_at

    by_time = sorted(trace.node_ids(), key=lambda n: (node_time(n), n))
    return TraceIndex(
        parents={n: tuple(sorted(v)) for n, v in parents.items()},
        children={n: tuple(sorted(v)) for n, v in children.items()},
        trainers=tuple(ex.id for ex in trainers),
        nodes_by_time=tuple(by_time),
    )


def serialize_trace(trace: Trace) -> Iterator[str]:
    """Yield the trace as newline-delimited records in a canonical order."""
    for art in trace.artifacts.values():
        props: dict[str, Any] = dict(art.extra)
        if art.span_stats is not None:
            props["span_stats"] = span_stats_payload(art.span_stats)
        record = {
            "kind": "artifact",
            "id": art.id,
            "type": art.artifact_type.value,
            "created_at": art.created_at,
            "pipeline_id": art.pipeline_id,
            "properties": props,
        }
        yield json.dumps(record, sort_keys=True)
    for ex in trace.executions.values():
        props = dict(ex.extra)
        if ex.code_version is not None:
            props["code_version"] = ex.code_version
        if ex.model_type is not None:
            props["model_type"] = ex.model_type.value
        if ex.architecture is not None:
            props["architecture"] = ex.architecture
        if ex.analyzers is not None:
            props["analyzers"] = [a.value for a in ex.analyzers]
        record = {
            "kind": "execution",
            "id": ex.id,
            "operator": ex.operator.value,
            "pipeline_id": ex.pipeline_id,
            "start_at": ex.start_at,
            "end_at": ex.end_at,
            "state": ex.state.value,
            "cpu_cost": ex.cpu_cost,
            "properties": props,
        }
        yield json.dumps(record, sort_keys=True)
    for edge in trace.edges:
        yield json.dumps(
            {"kind": "edge", "from": edge.src, "to": edge.dst, "role": edge.role.value},
            sort_keys=True,
        )


def write_trace(trace: Trace, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for line in serialize_trace(trace):
            fh.write(line + "\n")


def load_corpus(directory: str | Path) -> list[Trace]:
    """Parse every ``*.ndjson`` trace file in a corpus directory, sorted by name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {directory}")
    traces = []
    for path in sorted(directory.glob("*.ndjson")):
        traces.append(parse_trace_file(path))
    return traces
