"""Newton-boosted decision trees for multiclass classification.

One regression tree per class per round is fitted to the softmax
gradient g_i = p_i - 1{y_i = k} (variance-criterion structure search);
leaf values are the Newton step -sum(g) / (sum(h) + lam) with
h = p (1 - p). The exact variant gives every distinct feature value its
own histogram bin; the histogram variant pre-bins to quantiles, and the
leaf-wise growth option covers the LightGBM-style decoder.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import InvalidConfig
from ..rng import RngState
from .splitter import Tree, TreeParams, bin_features, check_feature_width, grow_tree


@dataclass(frozen=True)
class GbdtParams:
    rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int | None = 3
    min_samples_leaf: int = 1
    lam: float = 1.0
    max_bins: int | None = None        # None: exact (a bin per distinct value)
    growth: str = "depth"              # "depth" | "leaf"
    num_leaves: int = 31

    def __post_init__(self):
        if self.rounds < 0 or self.learning_rate <= 0:
            raise InvalidConfig("rounds must be >= 0 and learning_rate > 0")
        if self.max_bins is not None and not 2 <= self.max_bins <= 255:
            raise InvalidConfig("max_bins must be in [2, 255]")
        if self.growth not in ("depth", "leaf"):
            raise InvalidConfig(f"unknown growth policy {self.growth!r}")


HIST_DEFAULTS = GbdtParams(max_bins=255)
LEAFWISE_DEFAULTS = GbdtParams(max_bins=255, growth="leaf", num_leaves=31, max_depth=None)


@dataclass
class GbdtModel:
    trees: list[list[Tree]]            # rounds x classes
    learning_rate: float
    init_scores: np.ndarray            # per-class log prior
    n_classes: int
    n_features: int
    params: GbdtParams
    train_loss: np.ndarray = None      # per-round multiclass log-loss

    def decision_scores(self, X) -> np.ndarray:
        X = check_feature_width(X, self.n_features)
        scores = np.tile(self.init_scores, (X.shape[0], 1))
        for round_trees in self.trees:
            for k, tree in enumerate(round_trees):
                scores[:, k] += self.learning_rate * tree.predict_value(X)[:, 0]
        return scores

    def predict_proba(self, X) -> np.ndarray:
        return _softmax(self.decision_scores(X))

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def _softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _log_loss(proba: np.ndarray, y: np.ndarray) -> float:
    return float(-np.log(np.clip(proba[np.arange(y.size), y], 1e-15, None)).mean())


def fit_gbdt(X, y, params: GbdtParams = GbdtParams(), rng: RngState | None = None,
             n_classes: int | None = None) -> GbdtModel:
    """Exact or histogram Newton boosting, per the params' max_bins."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] != y.shape[0] or X.shape[0] < 1:
        raise InvalidConfig("X and y must be non-empty and aligned")
    k = n_classes or int(y.max()) + 1
    n = X.shape[0]

    priors = np.bincount(y, minlength=k).astype(np.float64) / n
    init = np.log(np.clip(priors, 1e-12, None))
    bf = bin_features(X, params.max_bins)
    tree_params = TreeParams(
        max_depth=params.max_depth,
        min_samples_leaf=params.min_samples_leaf,
        criterion="variance",
        growth=params.growth,
        num_leaves=params.num_leaves if params.growth == "leaf" else None,
        lam=params.lam,
    )

    scores = np.tile(init, (n, 1))
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y] = 1.0
    trees: list[list[Tree]] = []
    losses = []
    for _ in range(params.rounds):
        proba = _softmax(scores)
        losses.append(_log_loss(proba, y))
        round_trees = []
        for c in range(k):
            g = proba[:, c] - onehot[:, c]
            h = proba[:, c] * (1.0 - proba[:, c])
            tree = grow_tree(bf, tree_params, g=g, h=h)
            round_trees.append(tree)
            scores[:, c] += params.learning_rate * tree.predict_value(X)[:, 0]
        trees.append(round_trees)
    losses.append(_log_loss(_softmax(scores), y))

    return GbdtModel(trees=trees, learning_rate=params.learning_rate, init_scores=init,
                     n_classes=k, n_features=X.shape[1], params=params,
                     train_loss=np.asarray(losses))


def fit_hist_gbdt(X, y, params: GbdtParams = HIST_DEFAULTS, rng: RngState | None = None,
                  n_classes: int | None = None) -> GbdtModel:
    """Histogram variant; identical loop over quantile-binned features."""
    if params.max_bins is None:
        params = replace(params, max_bins=255)
    return fit_gbdt(X, y, params, rng, n_classes)
