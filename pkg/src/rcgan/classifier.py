"""Small gradient-boosted tree classifier for the fidelity experiment.

Logistic-loss boosting over depth-limited regression trees with greedy
variance-reduction splits. Deterministic: split ties resolve to the lowest
feature index, then the lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class BoostConfig:
    rounds: int = 50
    max_depth: int = 3
    learning_rate: float = 0.1
    min_leaf: int = 5
    max_candidates: int = 32  # per-feature split-threshold cap


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    value: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class BoostedModel:
    trees: list[TreeNode]
    learning_rate: float
    base_score: float  # initial log-odds
    n_features: int
    train_losses: list[float] = field(default_factory=list)


def _split_candidates(values: np.ndarray, cap: int) -> np.ndarray:
    distinct = np.unique(values)
    if distinct.size < 2:
        return np.empty(0)
    mids = (distinct[:-1] + distinct[1:]) / 2.0
    if mids.size > cap:
        mids = np.unique(np.quantile(mids, np.linspace(0.0, 1.0, cap)))
    return mids


def _leaf_value(residuals: np.ndarray, hessians: np.ndarray) -> float:
    # Newton step for logistic loss; hessian floor keeps pure leaves finite.
    return float(residuals.sum() / max(hessians.sum(), 1e-12))


def _build_tree(
    x: np.ndarray,
    residuals: np.ndarray,
    hessians: np.ndarray,
    idx: np.ndarray,
    depth: int,
    cfg: BoostConfig,
) -> TreeNode:
    node = TreeNode(value=_leaf_value(residuals[idx], hessians[idx]))
    if depth >= cfg.max_depth or idx.size < 2 * cfg.min_leaf:
        return node

    target = residuals[idx]
    total_n = idx.size
    total_sum = target.sum()
    total_sumsq = float((target**2).sum())
    parent_sse = total_sumsq - total_sum**2 / total_n
    best_gain = 0.0
    best: tuple[int, float] | None = None
    for feature in range(x.shape[1]):
        col = x[idx, feature]
        cands = _split_candidates(col, cfg.max_candidates)
        if cands.size == 0:
            continue
        # One pass per feature: candidate columns of the indicator matrix.
        left = col[:, None] <= cands[None, :]
        n_left = left.sum(axis=0)
        ok = (n_left >= cfg.min_leaf) & (total_n - n_left >= cfg.min_leaf)
        if not ok.any():
            continue
        sum_left = target @ left
        sumsq_left = (target**2) @ left
        n_right = total_n - n_left
        sum_right = total_sum - sum_left
        sumsq_right = total_sumsq - sumsq_left
        with np.errstate(divide="ignore", invalid="ignore"):
            sse = (sumsq_left - sum_left**2 / n_left) + (sumsq_right - sum_right**2 / n_right)
        gain = np.where(ok, parent_sse - sse, -np.inf)
        k = int(np.argmax(gain))  # first max: lowest threshold wins within a feature
        if gain[k] > best_gain:  # strict: lowest feature index wins across features
            best_gain = float(gain[k])
            best = (feature, float(cands[k]))
    if best is None:
        return node

    node.feature, node.threshold = best
    mask = x[idx, node.feature] <= node.threshold
    node.left = _build_tree(x, residuals, hessians, idx[mask], depth + 1, cfg)
    node.right = _build_tree(x, residuals, hessians, idx[~mask], depth + 1, cfg)
    return node


def _tree_predict(node: TreeNode, x: np.ndarray) -> np.ndarray:
    out = np.empty(x.shape[0])
    stack = [(node, np.arange(x.shape[0]))]
    while stack:
        cur, idx = stack.pop()
        if cur.is_leaf:
            out[idx] = cur.value
            continue
        mask = x[idx, cur.feature] <= cur.threshold
        stack.append((cur.left, idx[mask]))
        stack.append((cur.right, idx[~mask]))
    return out


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def _logloss(labels: np.ndarray, probs: np.ndarray) -> float:
    p = np.clip(probs, 1e-12, 1.0 - 1e-12)
    return float(-(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p)).mean())


def fit(features: np.ndarray, labels: np.ndarray, cfg: BoostConfig = BoostConfig()) -> BoostedModel:
    """Boost cfg.rounds trees against logistic-loss residuals."""
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise DataError("features must be 2-D with one label per row")
    pos = y.sum()
    if pos < 2 or y.size - pos < 2:
        raise DataError("need at least 2 samples of each class")

    prior = pos / y.size
    base = float(np.log(prior / (1.0 - prior)))
    scores = np.full(y.size, base)
    model = BoostedModel([], cfg.learning_rate, base, x.shape[1])
    model.train_losses.append(_logloss(y, _sigmoid(scores)))
    all_idx = np.arange(y.size)
    for _ in range(cfg.rounds):
        probs = _sigmoid(scores)
        residuals = y - probs
        hessians = probs * (1.0 - probs)
        tree = _build_tree(x, residuals, hessians, all_idx, 0, cfg)
        model.trees.append(tree)
        scores = scores + cfg.learning_rate * _tree_predict(tree, x)
        model.train_losses.append(_logloss(y, _sigmoid(scores)))
    return model


def predict(model: BoostedModel, features: np.ndarray) -> np.ndarray:
    """Positive-class probabilities in (0, 1)."""
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[1] != model.n_features:
        raise DataError(
            f"feature width {x.shape[-1] if x.ndim == 2 else '?'} does not match "
            f"training width {model.n_features}"
        )
    scores = np.full(x.shape[0], model.base_score)
    for tree in model.trees:
        scores += model.learning_rate * _tree_predict(tree, x)
    return _sigmoid(scores)


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float


def metrics(probs: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> Metrics:
    """Positive-class precision/recall/F1; zero-denominator cases report 0."""
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if probs.shape != labels.shape:
        raise DataError("probabilities and labels must have equal length")
    pred = probs >= threshold
    truth = labels >= 0.5
    tp = float(np.sum(pred & truth))
    fp = float(np.sum(pred & ~truth))
    fn = float(np.sum(~pred & truth))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return Metrics(precision, recall, f1)
