"""Data-reuse and dataset-similarity metrics between graphlets.

Two complementary views of "did the data change":

* ``jaccard`` measures reuse of the *same* span artifacts between the input
  sets of two graphlets.
* ``sequence_sim`` measures distribution-level similarity of span contents.
  Every feature's summary statistics are first canonicalized into a 10-cell
  discrete distribution over [0, 1]; distributions are hashed with a
  quantized random projection of their element-wise square roots, so nearby
  distributions collide; feature-to-feature similarity combines hash equality
  and name equality; span-to-span similarity solves an exact optimal
  transport problem over the feature sets; and span sequences are compared
  by ordinal position, normalized by the longer sequence.

With ``alpha + beta = 1`` the span metric satisfies S(D, D) = 1, S(empty, D)
= 0, symmetry, and range [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .segmentation import Graphlet
from .trace import FeatureKind, FeatureStats, SpanStats
from .transport import MAX_SIDE, transport_cost

__all__ = [
    "BINS",
    "CanonicalDistribution",
    "LshParams",
    "SimWeights",
    "jaccard",
    "canonicalize",
    "lsh_hash",
    "feature_sim",
    "span_sim",
    "sequence_sim",
]

BINS = 10
_MASS_TOL = 1e-9


@dataclass(frozen=True)
class CanonicalDistribution:
    """Discrete distribution over ``BINS`` equi-width cells of [0, 1]."""

    bins: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.bins) != BINS:
            raise ValueError(f"expected {BINS} cells, got {len(self.bins)}")
        if any(b < 0 for b in self.bins):
            raise ValueError("cell mass must be non-negative")
        if abs(sum(self.bins) - 1.0) > _MASS_TOL:
            raise ValueError("cell mass must sum to 1")


@dataclass(frozen=True)
class LshParams:
    """Quantized-projection hash family over probability distributions.

    ``k`` projections are concatenated into one hash; ``w`` is the
    quantization width.  Projection directions and offsets are derived
    deterministically from ``(seed, projection index)``.
    """

    k: int = 4
    w: float = 0.5
    seed: int = 42

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.w <= 0:
            raise ValueError("w must be positive")


@dataclass(frozen=True)
class SimWeights:
    """Weights for hash equality (alpha) and name equality (beta).

    They must sum to 1, otherwise identical spans would not score 1.
    """

    alpha: float = 0.5
    beta: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ValueError("alpha and beta must lie in [0, 1]")
        if abs(self.alpha + self.beta - 1.0) > 1e-9:
            raise ValueError("alpha + beta must equal 1")


def jaccard(a: Graphlet, b: Graphlet) -> float:
    """Intersection-over-union of the two graphlets' input span sets.

    Two graphlets with no input spans at all are trivially identical: 1.
    """
    sa, sb = set(a.input_spans), set(b.input_spans)
    if not sa and not sb:
        return 1.0
    return len(sa & sb) / len(sa | sb)


def canonicalize(f: FeatureStats) -> CanonicalDistribution:
    """Re-express a feature's summary statistics as a 10-cell distribution.

    Numerical features already carry the histogram and pass through verbatim.
    Categorical features are first laid out over N bins of width 1/N: the
    top-term frequencies sorted descending, then the leftover mass spread
    evenly over the remaining bins.  The N-bin layout is aggregated onto the
    10 equi-width cells by mass, splitting bins that straddle a cell boundary
    proportionally, which makes the result independent of N's scale while
    conserving mass exactly.
    """
    if f.kind is FeatureKind.NUMERICAL:
        if f.numerical_hist is None or len(f.numerical_hist) != BINS:
            raise ValueError(f"feature {f.name!r}: histogram must have {BINS} bins")
        return CanonicalDistribution(bins=tuple(float(x) for x in f.numerical_hist))

    if f.cat_unique is None or f.cat_top10 is None or f.cat_total is None:
        raise ValueError(f"feature {f.name!r}: missing categorical counts")
    n_unique, total = f.cat_unique, f.cat_total
    if n_unique <= 0:
        raise ValueError(f"feature {f.name!r}: unique term count must be positive")
    if total <= 0:
        raise ValueError(f"feature {f.name!r}: total count must be positive")

    top = sorted((c / total for c in f.cat_top10), reverse=True)
    top_mass = sum(top)
    rest_bins = n_unique - len(top)
    rest_mass = 1.0 - top_mass
    if rest_bins == 0 and abs(rest_mass) > _MASS_TOL:
        raise ValueError(f"feature {f.name!r}: top-term counts do not cover the total")
    if rest_mass < -_MASS_TOL:
        raise ValueError(f"feature {f.name!r}: top-term mass exceeds 1")

    if n_unique == BINS:
        # Source bins align exactly with the cells; skip the float splitting.
        tail = [rest_mass / rest_bins] * rest_bins if rest_bins else []
        return CanonicalDistribution(bins=tuple(top + tail))

    cells = np.zeros(BINS)
    width = 1.0 / n_unique

    def spread(lo: float, hi: float, mass: float) -> None:
        # Split [lo, hi) mass proportionally over the cells it overlaps.
        if mass <= 0.0 or hi <= lo:
            return
        density = mass / (hi - lo)
        first = min(int(lo * BINS), BINS - 1)
        last = min(int(np.nextafter(hi, 0.0) * BINS), BINS - 1)
        for c in range(first, last + 1):
            overlap = min(hi, (c + 1) / BINS) - max(lo, c / BINS)
            if overlap > 0:
                cells[c] += density * overlap

    for i, mass in enumerate(top):
        spread(i * width, (i + 1) * width, mass)
    if rest_bins > 0:
        # The tail bins all hold the same mass, so they form one uniform block.
        spread(len(top) * width, 1.0, rest_mass)

    out = cells.sum()
    if abs(out - 1.0) > _MASS_TOL:
        raise ValueError(f"feature {f.name!r}: mass not conserved ({out})")
    cells /= out
    return CanonicalDistribution(bins=tuple(float(x) for x in cells))


@lru_cache(maxsize=None)
def _projections(k: int, w: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Projection table for a parameter set, built once and shared read-only."""
    directions = np.empty((k, BINS))
    offsets = np.empty(k)
    for j in range(k):
        rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, j])
        directions[j] = rng.standard_normal(BINS)
        offsets[j] = rng.uniform(0.0, w)
    directions.setflags(write=False)
    offsets.setflags(write=False)
    return directions, offsets


def lsh_hash(dist: CanonicalDistribution, params: LshParams) -> tuple[int, ...]:
    """Integer hash of a distribution; nearby distributions tend to collide.

    Component j is floor((a_j . sqrt(d) + b_j) / w) with a_j standard normal
    and b_j uniform in [0, w), both a pure function of (seed, j).
    """
    directions, offsets = _projections(params.k, params.w, params.seed)
    root = np.sqrt(np.asarray(dist.bins))
    values = np.floor((directions @ root + offsets) / params.w)
    return tuple(int(x) for x in values)


def hash_distributions(bins_matrix: np.ndarray, params: LshParams) -> np.ndarray:
    """Vectorized ``lsh_hash`` over rows of a (n, BINS) matrix."""
    directions, offsets = _projections(params.k, params.w, params.seed)
    root = np.sqrt(np.asarray(bins_matrix, dtype=float))
    return np.floor((root @ directions.T + offsets) / params.w).astype(np.int64)


@lru_cache(maxsize=262144)
def _feature_hash(f: FeatureStats, params: LshParams) -> tuple[int, ...]:
    return lsh_hash(canonicalize(f), params)


def feature_sim(
    f1: FeatureStats, f2: FeatureStats, params: LshParams, weights: SimWeights
) -> float:
    """Similarity between two features; features of different kinds score 0."""
    if f1.kind is not f2.kind:
        return 0.0
    score = 0.0
    if _feature_hash(f1, params) == _feature_hash(f2, params):
        score += weights.alpha
    if f1.name == f2.name:
        score += weights.beta
    return score


@lru_cache(maxsize=None)
def _span_signature(d: SpanStats, params: LshParams):
    names = tuple(f.name for f in d.features)
    kinds = tuple(f.kind.value for f in d.features)
    hashes = tuple(_feature_hash(f, params) for f in d.features)
    return names, kinds, hashes


def _cost_matrix(d1: SpanStats, d2: SpanStats, params: LshParams, weights: SimWeights):
    names1, kinds1, h1 = _span_signature(d1, params)
    names2, kinds2, h2 = _span_signature(d2, params)
    interned: dict = {}

    def intern(key) -> int:
        return interned.setdefault(key, len(interned))

    name1 = np.array([intern(("name", x)) for x in names1])
    name2 = np.array([intern(("name", x)) for x in names2])
    kind1 = np.array([intern(("kind", x)) for x in kinds1])
    kind2 = np.array([intern(("kind", x)) for x in kinds2])
    sig1 = np.array([intern((k, h)) for k, h in zip(kinds1, h1)])
    sig2 = np.array([intern((k, h)) for k, h in zip(kinds2, h2)])
    kind_eq = kind1[:, None] == kind2[None, :]
    hash_eq = sig1[:, None] == sig2[None, :]
    name_eq = name1[:, None] == name2[None, :]
    sim = np.where(kind_eq, weights.alpha * hash_eq + weights.beta * name_eq, 0.0)
    return 1.0 - sim, names1, names2


def _span_sim_uncached(
    d1: SpanStats, d2: SpanStats, params: LshParams, weights: SimWeights
) -> float:
    if len(d1.features) > MAX_SIDE or len(d2.features) > MAX_SIDE:
        raise ValueError(f"span feature count exceeds {MAX_SIDE}")
    cost, names1, names2 = _cost_matrix(d1, d2, params, weights)
    n, m = cost.shape
    # Any feasible plan whose cost reaches the row/column-min lower bound is
    # optimal; the name-aligned plan almost always does, so the simplex only
    # runs on genuinely scrambled pairs.
    lower = max(float(cost.min(axis=1).mean()), float(cost.min(axis=0).mean()))
    if n == m and len(set(names1)) == n and set(names1) == set(names2):
        pos = {name: j for j, name in enumerate(names2)}
        aligned = float(np.mean([cost[i, pos[name]] for i, name in enumerate(names1)]))
        if aligned - lower <= 1e-12:
            return min(1.0, max(0.0, 1.0 - aligned))
    value = 1.0 - transport_cost(cost)
    return min(1.0, max(0.0, value))


# Keyed by the unordered span pair, so both argument orders share one entry
# and the metric is bit-for-bit symmetric.
_SPAN_SIM_CACHE: dict = {}


def span_sim(d1: SpanStats, d2: SpanStats, params: LshParams, weights: SimWeights) -> float:
    """Transport-based similarity between two spans' feature sets.

    Features act as equally weighted clusters; moving mass between features
    costs one minus their similarity, and the span score is one minus the
    optimal transport cost.  An empty span is never similar to anything,
    including another empty span.
    """
    if not d1.features or not d2.features:
        return 0.0
    key = (frozenset((d1, d2)), params, weights)
    hit = _SPAN_SIM_CACHE.get(key)
    if hit is None:
        hit = _span_sim_uncached(d1, d2, params, weights)
        _SPAN_SIM_CACHE[key] = hit
    return hit


def sequence_sim(
    a: list[SpanStats] | tuple[SpanStats, ...],
    b: list[SpanStats] | tuple[SpanStats, ...],
    params: LshParams,
    weights: SimWeights,
) -> float:
    """Span sequences compared by ordinal position, normalized by the longer.

    Sequences must be ordered by span creation time ascending.  Matching by
    position rather than identity keeps rolling windows comparable.
    """
    if not a or not b:
        return 0.0
    n, m = len(a), len(b)
    total = sum(span_sim(a[i], b[i], params, weights) for i in range(min(n, m)))
    return total / max(n, m)
