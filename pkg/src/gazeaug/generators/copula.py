"""Gaussian copula generator for mixed row tables.

Continuous columns are pushed through empirical CDF then the standard
normal quantile; the latent correlation is the Pearson correlation of
those transformed columns. Sampling draws correlated latents from the
Cholesky factor, maps them through the normal CDF and the inverse
empirical CDFs. Discrete columns are sampled independently from their
training frequency tables.
"""

from __future__ import annotations

import numpy as np

from ..data import RowTable
from ..errors import InsufficientData, SchemaMismatch
from ..ksmetric import ks_statistic  # noqa: F401  (re-exported for callers scoring fits)
from ..numeric import cholesky_with_jitter, std_normal_cdf
from ..rng import RngState
from .marginals import MarginalModel


class GaussianCopulaModel:
    """Fitted Gaussian copula over a RowTable schema."""

    __slots__ = ("schema", "marginals", "frequencies", "latent_names",
                 "correlation", "factor")

    def __init__(self, schema, marginals, frequencies, latent_names, correlation, factor):
        self.schema = schema
        self.marginals = marginals        # {name: MarginalModel} for continuous columns
        self.frequencies = frequencies    # {name: (categories, probabilities)}
        self.latent_names = latent_names  # continuous, non-constant, in schema order
        self.correlation = correlation
        self.factor = factor


def fit_gaussian_copula(table: RowTable) -> GaussianCopulaModel:
    """Fit marginals, frequency tables, and the latent correlation."""
    if table.n_rows < 10:
        raise InsufficientData(f"copula fit needs >= 10 rows, got {table.n_rows}")
    if not any(c.kind == "continuous" for c in table.schema):
        raise SchemaMismatch("copula fit needs at least one continuous column")

    marginals: dict[str, MarginalModel] = {}
    frequencies: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    latent_cols = []
    latent_names = []
    for spec in table.schema:
        col = table.column(spec.name)
        if spec.kind == "continuous":
            marginal = MarginalModel.fit(spec.name, col)
            marginals[spec.name] = marginal
            if not marginal.is_constant:
                latent_names.append(spec.name)
                latent_cols.append(marginal.to_normal(col))
        else:
            cats = np.asarray(spec.categories, dtype=np.float64)
            counts = np.array([(col == c).sum() for c in cats], dtype=np.float64)
            frequencies[spec.name] = (cats, counts / counts.sum())

    z = np.column_stack(latent_cols)
    if z.shape[1] == 1:
        corr = np.array([[1.0]])
    else:
        corr = np.corrcoef(z, rowvar=False)
        corr = (corr + corr.T) / 2.0
        np.fill_diagonal(corr, 1.0)
    factor = cholesky_with_jitter(corr)
    return GaussianCopulaModel(table.schema, marginals, frequencies,
                               tuple(latent_names), corr, factor)


def sample_gaussian_copula(model: GaussianCopulaModel, n: int, rng: RngState) -> RowTable:
    """Draw n rows with the training schema."""
    from ..numeric import sample_mvn

    z = sample_mvn(model.factor, n, rng.split(0))
    u = std_normal_cdf(z)
    latent_index = {name: j for j, name in enumerate(model.latent_names)}

    columns = []
    disc_rng = rng.split(1)
    for spec in model.schema:
        if spec.kind == "continuous":
            marginal = model.marginals[spec.name]
            if marginal.is_constant:
                columns.append(np.full(n, marginal.constant))
            else:
                columns.append(marginal.inverse(u[:, latent_index[spec.name]]))
        else:
            cats, probs = model.frequencies[spec.name]
            gen = disc_rng.split_label(spec.name).generator()
            columns.append(gen.choice(cats, size=n, p=probs))
    return RowTable(model.schema, columns)
