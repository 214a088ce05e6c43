"""From-scratch tree-ensemble classifiers over summary-feature vectors."""

from .boosting import (
    HIST_DEFAULTS,
    LEAFWISE_DEFAULTS,
    GbdtModel,
    GbdtParams,
    fit_gbdt,
    fit_hist_gbdt,
)
from .forest import (
    CartModel,
    CartParams,
    ForestModel,
    ForestParams,
    fit_cart,
    fit_random_forest,
    predict_forest,
)
from .splitter import Tree, TreeParams, bin_features, grow_tree

__all__ = [
    "CartModel",
    "CartParams",
    "ForestModel",
    "ForestParams",
    "GbdtModel",
    "GbdtParams",
    "HIST_DEFAULTS",
    "LEAFWISE_DEFAULTS",
    "Tree",
    "TreeParams",
    "bin_features",
    "grow_tree",
    "fit_cart",
    "fit_random_forest",
    "predict_forest",
    "fit_gbdt",
    "fit_hist_gbdt",
]
