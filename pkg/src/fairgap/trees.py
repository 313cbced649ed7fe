"""CART trees and bagged forests, shared by propensity and prediction models.

Binary splits on midpoint thresholds; Gini impurity for classification,
within-node variance for regression.  Trees are stored as flat arrays so
prediction is a vectorized level-by-level descent.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, sqrt

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 8
    min_leaf: int = 5
    features_per_split: int | None = None  # None -> ceil(sqrt(p))
    bootstrap: bool = True
    seed: int = 0

    def validate(self) -> None:
        if self.n_trees < 1:
            raise ValidationError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValidationError("min_leaf must be >= 1")
        if self.max_depth < 0:
            raise ValidationError("max_depth must be >= 0")

    def k_features(self, p: int) -> int:
        k = self.features_per_split if self.features_per_split is not None else ceil(sqrt(p))
        return max(1, min(k, p))


@dataclass
class Tree:
    feature: np.ndarray    # -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray      # leaf prediction (class-1 fraction or mean)


def _best_split(X: np.ndarray, y: np.ndarray, rows: np.ndarray, feats: np.ndarray,
                min_leaf: int, criterion: str):
    """Return (feature, threshold, left_rows, right_rows) or None."""
    m = rows.size
    if m < 2 * min_leaf:
        return None
    best_score = np.inf
    best = None
    pos = np.arange(min_leaf, m - min_leaf + 1)
    for f in feats:
        v = X[rows, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        ok = vs[pos - 1] < vs[pos]
        if not ok.any():
            continue
        ys = y[rows[order]]
        nl = pos.astype(float)
        nr = m - nl
        if criterion == "gini":
            c1 = np.cumsum(ys)
            s1l = c1[pos - 1]
            s1r = c1[-1] - s1l
            score = s1l * (nl - s1l) / nl + s1r * (nr - s1r) / nr
        else:  # variance
            cs = np.cumsum(ys)
            sl = cs[pos - 1]
            sr = cs[-1] - sl
            score = -(sl * sl / nl + sr * sr / nr)
        score = np.where(ok, score, np.inf)
        j = int(np.argmin(score))
        if score[j] < best_score:
            best_score = float(score[j])
            thr = 0.5 * (vs[pos[j] - 1] + vs[pos[j]])
            best = (int(f), thr, rows[order[: pos[j]]], rows[order[pos[j]:]])
    return best


def grow_tree(X: np.ndarray, y: np.ndarray, cfg: ForestConfig, criterion: str,
              gen: np.random.Generator) -> Tree:
    p = X.shape[1]
    k = cfg.k_features(p)
    feature, threshold, left, right, value = [], [], [], [], []

    def leaf_value(rows):
        return float(y[rows].mean())

    # (rows, depth) stack; children are appended after their parent so the
    # arrays stay a valid preorder layout
    stack = [(np.arange(X.shape[0]), 0, -1, False)]
    while stack:
        rows, depth, parent, is_right = stack.pop()
        node_id = len(feature)
        if parent >= 0:
            (right if is_right else left)[parent] = node_id
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(leaf_value(rows))
        if depth >= cfg.max_depth or rows.size < 2 * cfg.min_leaf:
            continue
        yr = y[rows]
        if yr.max() == yr.min():
            continue
        feats = np.sort(gen.choice(p, size=k, replace=False))
        found = _best_split(X, y, rows, feats, cfg.min_leaf, criterion)
        if found is None:
            continue
        f, thr, rows_l, rows_r = found
        feature[node_id] = f
        threshold[node_id] = thr
        # push right first so the left child is materialized first (preorder)
        stack.append((rows_r, depth + 1, node_id, True))
        stack.append((rows_l, depth + 1, node_id, False))
    return Tree(np.asarray(feature, dtype=np.int32), np.asarray(threshold, dtype=float),
                np.asarray(left, dtype=np.int32), np.asarray(right, dtype=np.int32),
                np.asarray(value, dtype=float))


def predict_tree(tree: Tree, X: np.ndarray) -> np.ndarray:
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    while True:
        f = tree.feature[node]
        active = f >= 0
        if not active.any():
            break
        an = node[active]
        go_left = X[rows[active], tree.feature[an]] <= tree.threshold[an]
        node[active] = np.where(go_left, tree.left[an], tree.right[an])
    return tree.value[node]


def grow_forest(X: np.ndarray, y: np.ndarray, cfg: ForestConfig, criterion: str) -> list[Tree]:
    cfg.validate()
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] < 2 * cfg.min_leaf:
        raise ValidationError(f"need n >= 2*min_leaf = {2 * cfg.min_leaf} rows, got {X.shape[0]}")
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees)
    trees = []
    for ss in seeds:
        gen = np.random.default_rng(ss)
        if cfg.bootstrap:
            idx = gen.integers(0, X.shape[0], size=X.shape[0])
            trees.append(grow_tree(X[idx], y[idx], cfg, criterion, gen))
        else:
            trees.append(grow_tree(X, y, cfg, criterion, gen))
    return trees


def predict_forest_mean(trees: list[Tree], X: np.ndarray) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=float)
    out = np.zeros(X.shape[0])
    for t in trees:
        out += predict_tree(t, X)
    return out / len(trees)


def predict_forest_vote(trees: list[Tree], X: np.ndarray) -> np.ndarray:
    """Majority vote of per-tree hard classifications (ties go to class 0)."""
    X = np.ascontiguousarray(X, dtype=float)
    votes = np.zeros(X.shape[0])
    for t in trees:
        votes += (predict_tree(t, X) >= 0.5).astype(float)
    return (votes > len(trees) / 2).astype(float)


def tree_table(tree: Tree) -> list[list]:
    """Plain-list dump (node id, feature, threshold, left, right, value) for debugging."""
    return [[i, int(tree.feature[i]), float(tree.threshold[i]), int(tree.left[i]),
             int(tree.right[i]), float(tree.value[i])] for i in range(tree.feature.size)]
