"""Deterministic random-forest classifier with probability scores.

CART-style trees on bootstrap samples, class-weighted Gini splits with
midpoint thresholds, and leaf scores equal to the class-weighted positive
fraction.  Everything is reproducible from the config seed:

* tree t draws its RNG seed as ``splitmix64(seed + t)``;
* each node draws its candidate features from the tree RNG in depth-first
  preorder (node, left subtree, right subtree), so identical inputs replay
  the identical stream;
* Gini ties break toward the lower feature index, then the lower threshold.

Balanced class weights (n / (2 * n_class), computed on the full training
labels) keep leaf fractions meaningful under the heavy label imbalance of
push prediction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

__all__ = [
    "ForestConfig",
    "Tree",
    "Forest",
    "SplitSpec",
    "fit",
    "score",
    "scores",
    "balanced_accuracy",
    "split_corpus",
    "splitmix64",
]

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer; used to derive per-tree seeds from (seed, index)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 16
    min_leaf: int = 5
    seed: int = 42

    def __post_init__(self) -> None:
        if self.n_trees < 1 or self.max_depth < 1 or self.min_leaf < 1:
            raise ValueError("forest hyperparameters must be positive")


@dataclass
class Tree:
    """Flat node arrays; ``feature`` is -1 at leaves."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    fraction: np.ndarray
    count: np.ndarray


@dataclass
class Forest:
    config: ForestConfig
    trees: list[Tree]
    n_features: int
    class_weights: tuple[float, float]
    feature_names: tuple[str, ...] | None = None


class _TreeBuilder:
    def __init__(self, X, y, w0, w1, cfg, rng, mtry):
        self.X = X
        self.y = y
        self.w0 = w0
        self.w1 = w1
        self.cfg = cfg
        self.rng = rng
        self.mtry = mtry
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.fraction: list[float] = []
        self.count: list[int] = []

    def _new_node(self, idx: np.ndarray) -> int:
        node = len(self.feature)
        n = len(idx)
        n1 = int(self.y[idx].sum())
        pos = self.w1 * n1
        neg = self.w0 * (n - n1)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.fraction.append(pos / (pos + neg) if pos + neg > 0 else 0.0)
        self.count.append(n)
        return node

    def _best_split(self, idx: np.ndarray) -> tuple[int, float] | None:
        X, y = self.X, self.y
        n = len(idx)
        n1 = int(y[idx].sum())
        w0, w1 = self.w0, self.w1
        d = X.shape[1]
        feats = np.sort(self.rng.choice(d, size=min(self.mtry, d), replace=False))
        best: tuple[float, int, float] | None = None
        min_leaf = self.cfg.min_leaf
        yi = y[idx]
        for f in feats:
            vals = X[idx, f]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            cum1 = np.cumsum(yi[order])
            cut = np.nonzero(sv[1:] != sv[:-1])[0]
            if len(cut) == 0:
                continue
            keep = (cut + 1 >= min_leaf) & (n - cut - 1 >= min_leaf)
            cut = cut[keep]
            if len(cut) == 0:
                continue
            nl1 = cum1[cut]
            nl0 = cut + 1 - nl1
            nr1 = n1 - nl1
            nr0 = (n - n1) - nl0
            wl = w1 * nl1 + w0 * nl0
            wr = w1 * nr1 + w0 * nr0
            # Weighted Gini numerator; the shared denominator is constant.
            score_arr = (wl - ((w1 * nl1) ** 2 + (w0 * nl0) ** 2) / wl) + (
                wr - ((w1 * nr1) ** 2 + (w0 * nr0) ** 2) / wr
            )
            k = int(np.argmin(score_arr))
            cand = float(score_arr[k])
            if best is None or cand < best[0]:
                pos = int(cut[k])
                best = (cand, int(f), (float(sv[pos]) + float(sv[pos + 1])) / 2.0)
        if best is None:
            return None
        return best[1], best[2]

    def build(self, idx: np.ndarray) -> None:
        # Explicit preorder stack; pushing right before left keeps the RNG
        # stream aligned with recursive construction order.
        root = self._new_node(idx)
        stack: list[tuple[int, np.ndarray, int]] = [(root, idx, 0)]
        while stack:
            node, node_idx, depth = stack.pop()
            n = len(node_idx)
            n1 = int(self.y[node_idx].sum())
            if depth >= self.cfg.max_depth or n1 == 0 or n1 == n or n < 2 * self.cfg.min_leaf:
                continue
            split = self._best_split(node_idx)
            if split is None:
                continue
            f, thr = split
            go_left = self.X[node_idx, f] <= thr
            left_idx = node_idx[go_left]
            right_idx = node_idx[~go_left]
            self.feature[node] = f
            self.threshold[node] = thr
            left_node = self._new_node(left_idx)
            right_node = self._new_node(right_idx)
            self.left[node] = left_node
            self.right[node] = right_node
            stack.append((right_node, right_idx, depth + 1))
            stack.append((left_node, left_idx, depth + 1))

    def freeze(self) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=float),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            fraction=np.asarray(self.fraction, dtype=float),
            count=np.asarray(self.count, dtype=np.int64),
        )


def fit(
    X: np.ndarray,
    y: Sequence[bool] | np.ndarray,
    cfg: ForestConfig = ForestConfig(),
    feature_names: Sequence[str] | None = None,
) -> Forest:
    """Train a forest; deterministic given (X, y, cfg)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=bool)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError("feature matrix must be non-empty")
    if X.shape[0] != len(y):
        raise ValueError("feature matrix and labels disagree on row count")
    if feature_names is not None and len(feature_names) != X.shape[1]:
        raise ValueError("feature names do not match matrix width")
    n = len(y)
    n1 = int(y.sum())
    n0 = n - n1
    w1 = n / (2.0 * n1) if n1 else 1.0
    w0 = n / (2.0 * n0) if n0 else 1.0
    mtry = max(1, math.isqrt(X.shape[1]) + (0 if math.isqrt(X.shape[1]) ** 2 == X.shape[1] else 1))
    trees = []
    for t in range(cfg.n_trees):
        rng = np.random.default_rng(splitmix64((cfg.seed & _MASK64) + t))
        sample = rng.integers(0, n, size=n)
        builder = _TreeBuilder(X, y, w0, w1, cfg, rng, mtry)
        builder.build(np.asarray(sample))
        trees.append(builder.freeze())
    return Forest(
        config=cfg,
        trees=trees,
        n_features=X.shape[1],
        class_weights=(w0, w1),
        feature_names=None if feature_names is None else tuple(feature_names),
    )


def _apply_tree(tree: Tree, X: np.ndarray) -> np.ndarray:
    node = np.zeros(len(X), dtype=np.int32)
    active = tree.feature[node] >= 0
    while active.any():
        rows = np.nonzero(active)[0]
        cur = node[rows]
        go_left = X[rows, tree.feature[cur]] <= tree.threshold[cur]
        node[rows] = np.where(go_left, tree.left[cur], tree.right[cur])
        active = tree.feature[node] >= 0
    return tree.fraction[node]


def scores(forest: Forest, X: np.ndarray, feature_names: Sequence[str] | None = None) -> np.ndarray:
    """Mean leaf positive-fraction across trees, for each row of X."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise ValueError(
            f"feature matrix width {X.shape[1] if X.ndim == 2 else '?'} does not match "
            f"the model's {forest.n_features}"
        )
    if (
        feature_names is not None
        and forest.feature_names is not None
        and tuple(feature_names) != forest.feature_names
    ):
        raise ValueError("feature schema does not match the model")
    total = np.zeros(len(X))
    for tree in forest.trees:
        total += _apply_tree(tree, X)
    return total / len(forest.trees)


def score(forest: Forest, x: Sequence[float]) -> float:
    return float(scores(forest, np.asarray(x, dtype=float)[None, :])[0])


def balanced_accuracy(y_true: Sequence[bool], y_pred: Sequence[bool]) -> float:
    """(TPR + TNR) / 2; requires both classes present in ``y_true``."""
    yt = np.asarray(y_true, dtype=bool)
    yp = np.asarray(y_pred, dtype=bool)
    if yt.shape != yp.shape or yt.size == 0:
        raise ValueError("label arrays must be non-empty and of equal length")
    pos = int(yt.sum())
    neg = yt.size - pos
    if pos == 0 or neg == 0:
        raise ValueError("balanced accuracy needs both classes in y_true")
    tpr = int((yt & yp).sum()) / pos
    tnr = int((~yt & ~yp).sum()) / neg
    return (tpr + tnr) / 2.0


@dataclass(frozen=True)
class SplitSpec:
    """Pipeline-level train/test split with matched label rates."""

    train_pipeline_ids: tuple[str, ...]
    test_pipeline_ids: tuple[str, ...]
    train_fraction: float
    train_rate: float
    test_rate: float


FRACTION_BAND = (0.78, 0.82)
LABEL_TOLERANCE = 0.02
RELAXED_TOLERANCE = 0.05
_ATTEMPTS = 1000


def split_corpus(
    pipelines: Sequence[tuple[str, Sequence[bool]]], seed: int = 42
) -> SplitSpec:
    """Randomly assign whole pipelines to train/test.

    Shuffles until the train side holds 78-82% of graphlets and the pushed
    rates of the two sides agree within 0.02; after 1000 failed shuffles the
    label tolerance relaxes to 0.05 with a warning, and if that fails too the
    corpus is too lopsided to split.
    """
    if len(pipelines) < 2:
        raise ValueError("need at least two pipelines to split")
    sizes = np.array([len(labels) for _, labels in pipelines], dtype=float)
    pos = np.array([sum(map(bool, labels)) for _, labels in pipelines], dtype=float)
    total = sizes.sum()
    if total == 0:
        raise ValueError("corpus has no graphlets")
    rng = np.random.default_rng(seed)

    def attempt(tolerance: float) -> SplitSpec | None:
        order = rng.permutation(len(pipelines))
        train_ids: list[int] = []
        got = 0.0
        for k in order:
            if got / total >= FRACTION_BAND[0]:
                break
            train_ids.append(int(k))
            got += sizes[k]
        frac = got / total
        if not (FRACTION_BAND[0] <= frac <= FRACTION_BAND[1]):
            return None
        if len(train_ids) == len(pipelines):
            return None
        chosen = set(train_ids)
        test_ids = [k for k in range(len(pipelines)) if k not in chosen]
        train_size = sizes[train_ids].sum()
        test_size = sizes[test_ids].sum()
        train_rate = pos[train_ids].sum() / train_size
        test_rate = pos[test_ids].sum() / test_size
        if abs(train_rate - test_rate) > tolerance:
            return None
        return SplitSpec(
            train_pipeline_ids=tuple(pipelines[k][0] for k in sorted(train_ids)),
            test_pipeline_ids=tuple(pipelines[k][0] for k in sorted(test_ids)),
            train_fraction=float(frac),
            train_rate=float(train_rate),
            test_rate=float(test_rate),
        )

    for _ in range(_ATTEMPTS):
        spec = attempt(LABEL_TOLERANCE)
        if spec is not None:
            return spec
    warnings.warn(
        f"no split met label tolerance {LABEL_TOLERANCE}; relaxing to {RELAXED_TOLERANCE}",
        stacklevel=2,
    )
    for _ in range(_ATTEMPTS):
        spec = attempt(RELAXED_TOLERANCE)
        if spec is not None:
            return spec
    raise ValueError("corpus cannot be split into the target train/test shape")


def forest_to_dict(forest: Forest) -> dict[str, Any]:
    return {
        "config": {
            "n_trees": forest.config.n_trees,
            "max_depth": forest.config.max_depth,
            "min_leaf": forest.config.min_leaf,
            "seed": forest.config.seed,
        },
        "n_features": forest.n_features,
        "class_weights": list(forest.class_weights),
        "feature_names": None if forest.feature_names is None else list(forest.feature_names),
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "fraction": t.fraction.tolist(),
                "count": t.count.tolist(),
            }
            for t in forest.trees
        ],
    }


def forest_from_dict(payload: dict[str, Any]) -> Forest:
    cfg = ForestConfig(**payload["config"])
    trees = [
        Tree(
            feature=np.asarray(t["feature"], dtype=np.int32),
            threshold=np.asarray(t["threshold"], dtype=float),
            left=np.asarray(t["left"], dtype=np.int32),
            right=np.asarray(t["right"], dtype=np.int32),
            fraction=np.asarray(t["fraction"], dtype=float),
            count=np.asarray(t["count"], dtype=np.int64),
        )
        for t in payload["trees"]
    ]
    names = payload.get("feature_names")
    return Forest(
        config=cfg,
        trees=trees,
        n_features=int(payload["n_features"]),
        class_weights=tuple(payload["class_weights"]),  # type: ignore[arg-type]
        feature_names=None if names is None else tuple(names),
    )
