import warnings

import numpy as np
import pytest

from gazeaug.data import ColumnSpec, RowTable
from gazeaug.errors import DegenerateColumnWarning, InsufficientData
from gazeaug.generators import fit_gaussian_copula, sample_gaussian_copula
from gazeaug.generators.marginals import MarginalModel
from gazeaug.ksmetric import ks_statistic
from gazeaug.numeric import std_normal_cdf
from gazeaug.rng import RngState


def make_table(cols, names=None, task=None):
    names = names or [f"c{i}" for i in range(len(cols))]
    schema = [ColumnSpec(n, "continuous") for n in names]
    columns = list(cols)
    if task is not None:
        schema.append(ColumnSpec("task", "discrete", tuple(sorted(set(task.tolist())))))
        columns.append(task)
    return RowTable(schema, columns)


class TestMarginalModel:
    def test_round_trip_at_order_statistics(self):
        gen = RngState(1).generator()
        col = gen.normal(3.0, 2.0, 500)
        m = MarginalModel.fit("c", col)
        u = m.forward(col)
        assert np.allclose(m.inverse(u), col, atol=1e-9)

    def test_inverse_clamps_to_range(self):
        m = MarginalModel.fit("c", [1.0, 2.0, 3.0])
        assert m.inverse(0.0) == 1.0
        assert m.inverse(1.0) == 3.0

    def test_forward_monotone(self):
        gen = RngState(2).generator()
        m = MarginalModel.fit("c", gen.exponential(2.0, 300))
        xs = np.linspace(-1, 20, 500)
        assert np.all(np.diff(m.forward(xs)) >= 0)

    def test_constant_column_warns(self):
        with pytest.warns(DegenerateColumnWarning):
            m = MarginalModel.fit("c", np.full(20, 7.0))
        assert m.is_constant
        assert np.all(m.inverse(np.array([0.1, 0.9])) == 7.0)


class TestCopulaFit:
    def test_independent_columns_low_latent_correlation(self):
        gen = RngState(3).generator()
        t = make_table([gen.random(10_000), gen.random(10_000)])
        model = fit_gaussian_copula(t)
        assert abs(model.correlation[0, 1]) < 0.05

    def test_planted_correlation_recovered(self):
        gen = RngState(4).generator()
        z = gen.multivariate_normal([0, 0], [[1, 0.8], [0.8, 1]], size=10_000)
        # arbitrary monotone marginals on top of the latent pair
        t = make_table([np.exp(z[:, 0]), 5.0 + 2.0 * z[:, 1] ** 3])
        model = fit_gaussian_copula(t)
        assert 0.75 <= model.correlation[0, 1] <= 0.85

    def test_constant_column_constant_samples(self):
        gen = RngState(5).generator()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateColumnWarning)
            t = make_table([np.full(100, 2.5), gen.normal(size=100)])
            model = fit_gaussian_copula(t)
        out = sample_gaussian_copula(model, 50, RngState(1))
        assert np.all(out.column("c0") == 2.5)

    def test_too_few_rows(self):
        with pytest.raises(InsufficientData):
            fit_gaussian_copula(make_table([np.arange(5.0)]))


class TestCopulaSample:
    def _fitted(self, n=5000):
        gen = RngState(6).generator()
        cols = [gen.normal(0, 1, n), gen.exponential(1.5, n)]
        task = gen.choice([1.0, 2.0, 3.0, 4.0], size=n, p=[0.4, 0.3, 0.2, 0.1])
        t = make_table(cols, task=task)
        return t, fit_gaussian_copula(t)

    def test_single_row(self):
        t, model = self._fitted(200)
        out = sample_gaussian_copula(model, 1, RngState(0))
        assert out.n_rows == 1
        assert out.schema == t.schema

    def test_marginal_ks_small(self):
        t, model = self._fitted()
        out = sample_gaussian_copula(model, 5000, RngState(2))
        for name in ("c0", "c1"):
            assert ks_statistic(t.column(name), out.column(name)) < 0.05

    def test_discrete_frequencies_recovered(self):
        t, model = self._fitted()
        out = sample_gaussian_copula(model, 8000, RngState(3))
        for cat, p in zip(*model.frequencies["task"]):
            freq = np.mean(out.column("task") == cat)
            assert abs(freq - p) < 0.05

    def test_determinism(self):
        _, model = self._fitted(500)
        a = sample_gaussian_copula(model, 100, RngState(9))
        b = sample_gaussian_copula(model, 100, RngState(9))
        assert a == b

    def test_schema_preserved(self):
        t, model = self._fitted(500)
        out = sample_gaussian_copula(model, 64, RngState(4))
        assert out.schema == t.schema

    def test_latent_correlation_flows_to_samples(self):
        gen = RngState(7).generator()
        z = gen.multivariate_normal([0, 0], [[1, 0.8], [0.8, 1]], size=8000)
        t = make_table([z[:, 0], z[:, 1]])
        model = fit_gaussian_copula(t)
        out = sample_gaussian_copula(model, 8000, RngState(5))
        r = np.corrcoef(out.column("c0"), out.column("c1"))[0, 1]
        assert 0.7 <= r <= 0.9
