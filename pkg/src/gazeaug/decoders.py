"""Uniform surface over the five task decoders.

Tree decoders consume 20-dim summary vectors; the Inception ensemble
consumes fixed-length channel matrices cut at the 95th percentile of
the training scanpath lengths and standardized per channel with
training statistics. Decoder ids follow the experiment tables: rf,
lgbm, gb, hgb, itc.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset, summary_matrix, to_fixed_length
from .errors import InvalidConfig
from .inception import EnsembleModel, TrainConfig, fit_ensemble, predict_ensemble
from .rng import RngState
from .trees import (
    ForestModel,
    ForestParams,
    GbdtModel,
    GbdtParams,
    fit_gbdt,
    fit_hist_gbdt,
    fit_random_forest,
)

DECODER_IDS = ("rf", "lgbm", "gb", "hgb", "itc")


def sequence_length_cap(dataset: Dataset, percentile: float = 95.0) -> int:
    """Fixed input length T: the given percentile of scanpath lengths."""
    lengths = np.array([len(s) for s in dataset.samples])
    return max(1, int(np.percentile(lengths, percentile, method="lower")))


def dataset_to_batches(dataset: Dataset, T: int):
    values = np.empty((len(dataset), 4, T))
    mask = np.empty((len(dataset), T))
    for i, s in enumerate(dataset.samples):
        values[i], mask[i] = to_fixed_length(s, T)
    labels = np.array([int(s.task) - 1 for s in dataset.samples], dtype=np.int64)
    return values, mask, labels


@dataclass
class _ChannelStats:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def from_batches(cls, values, mask):
        m = mask[:, None, :]
        count = m.sum()
        mean = (values * m).sum(axis=(0, 2)) / count
        var = (((values - mean[None, :, None]) ** 2) * m).sum(axis=(0, 2)) / count
        return cls(mean=mean, std=np.sqrt(np.maximum(var, 1e-12)))

    def apply(self, values, mask):
        out = (values - self.mean[None, :, None]) / self.std[None, :, None]
        return out * mask[:, None, :]


@dataclass
class FittedDecoder:
    kind: str
    model: object
    T: int | None = None                  # itc only
    stats: _ChannelStats | None = None    # itc only
    metadata: dict | None = None

    def predict(self, dataset: Dataset) -> np.ndarray:
        """0-based predicted labels for every sample."""
        if self.kind == "itc":
            values, mask, _ = dataset_to_batches(dataset, self.T)
            values = self.stats.apply(values, mask)
            labels, _ = predict_ensemble(self.model, values, mask)
            return labels
        X, _ = summary_matrix(dataset)
        return self.model.predict(X)

    def accuracy(self, dataset: Dataset) -> float:
        _, y = summary_matrix(dataset)
        return float(np.mean(self.predict(dataset) == y))


def _tree_params(kind: str, overrides: dict):
    if kind == "rf":
        return ForestParams(**overrides) if overrides else ForestParams()
    if kind == "gb":
        return GbdtParams(**overrides) if overrides else GbdtParams()
    if kind == "hgb":
        base = dict(max_bins=255)
        base.update(overrides)
        return GbdtParams(**base)
    if kind == "lgbm":
        base = dict(max_bins=255, growth="leaf", num_leaves=31, max_depth=None)
        base.update(overrides)
        return GbdtParams(**base)
    raise InvalidConfig(f"unknown tree decoder {kind!r}")


def fit_decoder(kind: str, train: Dataset, rng: RngState,
                params: dict | None = None) -> FittedDecoder:
    """Train one decoder on a dataset of labeled scanpaths.

    ``params`` overrides the decoder's defaults; for itc the recognized
    keys are epochs, batch_size, lr, n_modules, dtype, and
    length_percentile.
    """
    if kind not in DECODER_IDS:
        raise InvalidConfig(f"unknown decoder {kind!r}; choose from {DECODER_IDS}")
    params = dict(params or {})

    if kind == "itc":
        percentile = params.pop("length_percentile", 95.0)
        n_modules = params.pop("n_modules", 6)
        dtype = np.dtype(params.pop("dtype", "float64"))
        config = TrainConfig(seed=rng.split_label("ensemble").seed,
                             **{k: params[k] for k in ("epochs", "batch_size", "lr")
                                if k in params})
        unknown = set(params) - {"epochs", "batch_size", "lr"}
        if unknown:
            raise InvalidConfig(f"unknown itc params: {sorted(unknown)}")
        T = sequence_length_cap(train, percentile)
        values, mask, labels = dataset_to_batches(train, T)
        stats = _ChannelStats.from_batches(values, mask)
        values = stats.apply(values, mask)
        model = fit_ensemble(values.astype(dtype), mask.astype(dtype), labels,
                             config, n_modules=n_modules, dtype=dtype)
        return FittedDecoder(kind=kind, model=model, T=T, stats=stats,
                             metadata={"T": T, "epochs": config.epochs,
                                       "dtype": str(dtype)})

    X, y = summary_matrix(train)
    tree_params = _tree_params(kind, params)
    if kind == "rf":
        model = fit_random_forest(X, y, tree_params, rng, n_classes=4)
    elif kind == "gb":
        model = fit_gbdt(X, y, tree_params, rng, n_classes=4)
    else:  # hgb, lgbm
        model = fit_hist_gbdt(X, y, tree_params, rng, n_classes=4)
    return FittedDecoder(kind=kind, model=model, metadata={})
