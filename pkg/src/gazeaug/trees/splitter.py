"""Histogram-based greedy tree growing shared by CART, forests, and GBDT.

Features are pre-binned once per fit: with no bin budget (or a budget
at least the number of distinct values) every distinct value gets its
own bin and candidate thresholds are the midpoints between adjacent
distinct sorted values, which makes the budgeted histogram path and the
exact path one and the same algorithm. Gains for a split never depend
on row order (per-bin sums), and ties are broken by lowest feature
index then lowest threshold, so fits are fully deterministic.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfig, ShapeMismatch

NO_FEATURE = -1


class BinnedFeatures:
    """Pre-binned feature matrix with per-feature candidate thresholds.

    thresholds[j][b] separates bin b (values <= threshold) from bin
    b+1. With a bin budget below the distinct-value count, cut points
    sit at the column's quantiles, so equal-frequency bins.
    """

    __slots__ = ("codes", "thresholds", "n_bins", "max_bins_any")

    def __init__(self, codes, thresholds, n_bins):
        self.codes = codes            # (n, d) int64 bin indices
        self.thresholds = thresholds  # list of per-feature threshold arrays
        self.n_bins = n_bins          # (d,) bins per feature
        self.max_bins_any = int(n_bins.max()) if n_bins.size else 0


def bin_features(X: np.ndarray, max_bins: int | None = None) -> BinnedFeatures:
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    codes = np.empty((n, d), dtype=np.int64)
    thresholds = []
    n_bins = np.empty(d, dtype=np.int64)
    for j in range(d):
        col = X[:, j]
        uniq = np.unique(col)
        if max_bins is None or uniq.size <= max_bins:
            thr = (uniq[:-1] + uniq[1:]) / 2.0
        else:
            srt = np.sort(col)
            cuts = (n * np.arange(1, max_bins)) // max_bins
            thr = np.unique((srt[cuts - 1] + srt[cuts]) / 2.0)
        codes[:, j] = np.searchsorted(thr, col, side="left")
        thresholds.append(thr)
        n_bins[j] = thr.size + 1
    return BinnedFeatures(codes, thresholds, n_bins)


@dataclass
class TreeParams:
    max_depth: int | None = None
    min_samples_leaf: int = 1
    criterion: str = "gini"            # "gini" | "variance"
    growth: str = "depth"              # "depth" | "leaf"
    num_leaves: int | None = None      # leaf-wise budget
    lam: float = 1.0                   # Newton-leaf regularization
    features_per_split: int | None = None  # forest-style subsampling

    def __post_init__(self):
        if self.criterion not in ("gini", "variance"):
            raise InvalidConfig(f"unknown criterion {self.criterion!r}")
        if self.growth not in ("depth", "leaf"):
            raise InvalidConfig(f"unknown growth policy {self.growth!r}")
        if self.growth == "leaf" and (self.num_leaves is None or self.num_leaves < 2):
            raise InvalidConfig("leaf-wise growth needs num_leaves >= 2")
        if self.min_samples_leaf < 1:
            raise InvalidConfig("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise InvalidConfig("max_depth must be >= 0")


class Tree:
    """Flat array tree; leaves carry a value vector (class counts or a
    scalar regression step in slot 0)."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[np.ndarray] = []

    def add_node(self, value) -> int:
        self.feature.append(NO_FEATURE)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(np.asarray(value, dtype=np.float64))
        return len(self.feature) - 1

    def finalize(self):
        self.feature = np.asarray(self.feature, dtype=np.int32)
        self.threshold = np.asarray(self.threshold, dtype=np.float64)
        self.left = np.asarray(self.left, dtype=np.int32)
        self.right = np.asarray(self.right, dtype=np.int32)
        self.value = np.stack(self.value)
        return self

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == NO_FEATURE))

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        """Route rows to leaves; returns the leaf value per row."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.int32)
        while True:
            active = self.feature[node] != NO_FEATURE
            if not np.any(active):
                break
            idx = np.flatnonzero(active)
            f = self.feature[node[idx]]
            go_left = X[idx, f] <= self.threshold[node[idx]]
            node[idx] = np.where(go_left, self.left[node[idx]], self.right[node[idx]])
        return self.value[node]


def _pick_best(score, features):
    """Shared tie policy: highest score, then lowest feature index, then
    lowest threshold. `score` is (n_feat, max_bins - 1) with -inf at
    invalid candidates."""
    flat = int(np.argmax(score))  # first (lowest feature, lowest bin) maximum
    if not np.isfinite(score.flat[flat]):
        return None
    row, b = divmod(flat, score.shape[1])
    return float(score.flat[flat]), int(features[row]), int(b)


def _best_split_gini(feats_codes, y_sub, class_counts, bins_per_feat, features,
                     min_leaf, n_classes, max_bins):
    """Best (feature, bin) by Gini impurity decrease, one histogram pass
    over every candidate feature."""
    n = y_sub.size
    n_feat = feats_codes.shape[1]
    # the node may only occupy a prefix of the global bin range
    max_bins = min(max_bins, int(feats_codes.max()) + 2)
    parent_score = np.square(class_counts).sum() / n
    grid = (np.arange(n_feat, dtype=np.int64)[None, :] * max_bins + feats_codes) \
        * n_classes + y_sub[:, None]
    hist = np.bincount(grid.ravel(), minlength=n_feat * max_bins * n_classes) \
        .reshape(n_feat, max_bins, n_classes)
    cl = np.cumsum(hist, axis=1)[:, :-1, :]
    nl = cl.sum(axis=2)
    nr = n - nl
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.square(cl).sum(axis=2) / nl \
            + np.square(class_counts[None, None, :] - cl).sum(axis=2) / nr
    invalid = (nl < min_leaf) | (nr < min_leaf) \
        | (np.arange(max_bins - 1)[None, :] >= (bins_per_feat - 1)[:, None])
    score[invalid] = -np.inf
    best = _pick_best(score, features)
    if best is None:
        return None
    gain, f, b = best
    return gain - parent_score, f, b


def _best_split_variance(feats_codes, g_sub, g_total, bins_per_feat, features,
                         min_leaf, max_bins):
    """Best (feature, bin) by SSE reduction on the gradient targets."""
    n = g_sub.size
    n_feat = feats_codes.shape[1]
    max_bins = min(max_bins, int(feats_codes.max()) + 2)
    parent_score = g_total * g_total / n
    grid = np.arange(n_feat, dtype=np.int64)[None, :] * max_bins + feats_codes
    flat = grid.ravel()
    cnt = np.bincount(flat, minlength=n_feat * max_bins).reshape(n_feat, max_bins)
    gsum = np.bincount(flat, weights=np.broadcast_to(g_sub[:, None], grid.shape).ravel(),
                       minlength=n_feat * max_bins).reshape(n_feat, max_bins)
    nl = np.cumsum(cnt, axis=1)[:, :-1]
    gl = np.cumsum(gsum, axis=1)[:, :-1]
    nr = n - nl
    with np.errstate(divide="ignore", invalid="ignore"):
        score = gl * gl / nl + np.square(g_total - gl) / nr
    invalid = (nl < min_leaf) | (nr < min_leaf) \
        | (np.arange(max_bins - 1)[None, :] >= (bins_per_feat - 1)[:, None])
    score[invalid] = -np.inf
    best = _pick_best(score, features)
    if best is None:
        return None
    gain, f, b = best
    return gain - parent_score, f, b


def grow_tree(bf: BinnedFeatures, params: TreeParams, *, y=None, n_classes=None,
              g=None, h=None, sample_idx=None, gen=None) -> Tree:
    """Grow one tree over pre-binned features.

    Classification (criterion "gini") takes integer labels y and stores
    per-leaf class counts. Regression (criterion "variance") takes
    gradient/hessian pairs and stores the Newton step -G/(H+lam) per
    leaf. ``sample_idx`` selects the training rows (bootstrap), ``gen``
    drives per-split feature subsampling when features_per_split is set.
    """
    n_total, d = bf.codes.shape
    idx0 = np.arange(n_total, dtype=np.int64) if sample_idx is None \
        else np.asarray(sample_idx, dtype=np.int64)
    tree = Tree()
    classification = params.criterion == "gini"
    all_features = np.arange(d, dtype=np.int64)
    max_bins = bf.max_bins_any

    def node_value(idx):
        if classification:
            return np.bincount(y[idx], minlength=n_classes).astype(np.float64)
        gs = g[idx].sum()
        hs = h[idx].sum()
        return np.array([-gs / (hs + params.lam)])

    def candidate_features():
        if params.features_per_split is None or params.features_per_split >= d:
            return all_features
        return np.sort(gen.choice(d, size=params.features_per_split, replace=False))

    def find_split(idx):
        if idx.size < 2 * params.min_samples_leaf:
            return None
        feats = candidate_features()
        codes_sub = bf.codes[np.ix_(idx, feats)]
        bins_sel = bf.n_bins[feats]
        if classification:
            counts = np.bincount(y[idx], minlength=n_classes)
            if np.max(counts) == idx.size:  # pure node
                return None
            return _best_split_gini(codes_sub, y[idx], counts, bins_sel, feats,
                                    params.min_samples_leaf, n_classes, max_bins)
        g_sub = g[idx]
        return _best_split_variance(codes_sub, g_sub, g_sub.sum(), bins_sel, feats,
                                    params.min_samples_leaf, max_bins)

    def acceptable(split):
        if split is None:
            return False
        # classification splits any impure node (zero gain allowed);
        # regression requires strictly positive gain
        return classification or split[0] > 0.0

    if params.growth == "depth":
        # explicit stack, left child first, for a deterministic layout
        root = tree.add_node(node_value(idx0))
        stack = [(root, idx0, 0)]
        while stack:
            node_id, idx, depth = stack.pop()
            if params.max_depth is not None and depth >= params.max_depth:
                continue
            split = find_split(idx)
            if not acceptable(split):
                continue
            _, f, b = split
            thr = bf.thresholds[f][b]
            mask = bf.codes[idx, f] <= b
            left_idx, right_idx = idx[mask], idx[~mask]
            tree.feature[node_id] = f
            tree.threshold[node_id] = thr
            left_id = tree.add_node(node_value(left_idx))
            right_id = tree.add_node(node_value(right_idx))
            tree.left[node_id] = left_id
            tree.right[node_id] = right_id
            stack.append((right_id, right_idx, depth + 1))
            stack.append((left_id, left_idx, depth + 1))
        return tree.finalize()

    # leaf-wise: always split the leaf with the largest gain
    root = tree.add_node(node_value(idx0))
    heap = []
    counter = 0

    def push(node_id, idx, depth):
        nonlocal counter
        if params.max_depth is not None and depth >= params.max_depth:
            return
        split = find_split(idx)
        if acceptable(split) and split[0] > 0.0:
            heapq.heappush(heap, (-split[0], counter, node_id, idx, depth, split))
            counter += 1

    push(root, idx0, 0)
    leaves = 1
    while heap and leaves < params.num_leaves:
        _, _, node_id, idx, depth, (gain, f, b) = heapq.heappop(heap)
        thr = bf.thresholds[f][b]
        mask = bf.codes[idx, f] <= b
        left_idx, right_idx = idx[mask], idx[~mask]
        tree.feature[node_id] = f
        tree.threshold[node_id] = thr
        left_id = tree.add_node(node_value(left_idx))
        right_id = tree.add_node(node_value(right_idx))
        tree.left[node_id] = left_id
        tree.right[node_id] = right_id
        leaves += 1
        push(left_id, left_idx, depth + 1)
        push(right_id, right_idx, depth + 1)
    return tree.finalize()


def check_feature_width(X: np.ndarray, expected: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != expected:
        raise ShapeMismatch(f"expected feature width {expected}, got shape {X.shape}")
    return X
