"""CART and random forest classifiers over summary-feature vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfig
from ..rng import RngState
from .splitter import Tree, TreeParams, bin_features, check_feature_width, grow_tree


@dataclass(frozen=True)
class CartParams:
    max_depth: int | None = None
    min_samples_leaf: int = 1
    criterion: str = "gini"


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 200
    max_depth: int | None = None
    min_samples_leaf: int = 1
    bootstrap: bool = True
    # features per split; None means ceil(sqrt(d))
    features_per_split: int | None = None

    def __post_init__(self):
        if self.n_trees < 1:
            raise InvalidConfig("n_trees must be >= 1")


@dataclass
class CartModel:
    tree: Tree
    n_classes: int
    n_features: int

    def predict_proba(self, X) -> np.ndarray:
        X = check_feature_width(X, self.n_features)
        counts = self.tree.predict_value(X)
        return counts / counts.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


@dataclass
class ForestModel:
    trees: list[Tree]
    n_classes: int
    n_features: int

    def predict_proba(self, X) -> np.ndarray:
        """Vote fractions: each tree casts one vote for its argmax class."""
        X = check_feature_width(X, self.n_features)
        votes = np.zeros((X.shape[0], self.n_classes))
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            counts = tree.predict_value(X)
            votes[rows, np.argmax(counts, axis=1)] += 1.0
        return votes / len(self.trees)

    def predict(self, X) -> np.ndarray:
        # argmax returns the lowest class index on vote ties
        return np.argmax(self.predict_proba(X), axis=1)


def fit_cart(X, y, params: CartParams = CartParams(), rng: RngState | None = None,
             n_classes: int | None = None) -> CartModel:
    """Greedy best-split CART; degenerate data yields a single leaf."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] != y.shape[0] or X.shape[0] < 1:
        raise InvalidConfig("X and y must be non-empty and aligned")
    k = n_classes or int(y.max()) + 1
    bf = bin_features(X)
    tree_params = TreeParams(max_depth=params.max_depth,
                             min_samples_leaf=params.min_samples_leaf,
                             criterion=params.criterion)
    tree = grow_tree(bf, tree_params, y=y, n_classes=k)
    return CartModel(tree=tree, n_classes=k, n_features=X.shape[1])


def fit_random_forest(X, y, params: ForestParams = ForestParams(),
                      rng: RngState = RngState(0),
                      n_classes: int | None = None) -> ForestModel:
    """Bootstrap-resampled trees with per-split feature subsampling.

    Each tree owns the child stream split(tree_index), so the fit does
    not depend on any build order.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    k = n_classes or int(y.max()) + 1
    n, d = X.shape
    fps = params.features_per_split
    if fps is None:
        fps = int(np.ceil(np.sqrt(d)))
    bf = bin_features(X)
    tree_params = TreeParams(max_depth=params.max_depth,
                             min_samples_leaf=params.min_samples_leaf,
                             criterion="gini", features_per_split=fps)
    trees = []
    for t in range(params.n_trees):
        gen = rng.split(t).generator()
        sample_idx = gen.integers(0, n, size=n) if params.bootstrap else None
        trees.append(grow_tree(bf, tree_params, y=y, n_classes=k,
                               sample_idx=sample_idx, gen=gen))
    return ForestModel(trees=trees, n_classes=k, n_features=d)


def predict_forest(model: ForestModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Labels plus vote-fraction probabilities."""
    proba = model.predict_proba(X)
    return np.argmax(proba, axis=1), proba
