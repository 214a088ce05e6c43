import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazeaug.data import ColumnSpec, RowTable
from gazeaug.errors import EmptySample, SchemaMismatch
from gazeaug.ksmetric import EmpiricalCdf, ks_report, ks_statistic


def brute_force_ks(a, b) -> float:
    """O(n*m) oracle: evaluate |F_a - F_b| at every sample point."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    best = 0.0
    for x in np.concatenate([a, b]):
        fa = np.mean(a <= x)
        fb = np.mean(b <= x)
        best = max(best, abs(fa - fb))
    return best


def test_identical_samples_zero():
    assert ks_statistic([3.0, 1.0, 2.0], [3.0, 1.0, 2.0]) == 0.0


def test_disjoint_supports_one():
    assert ks_statistic([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]) == 1.0


def test_fixed_offset_example():
    assert ks_statistic([1, 2, 3, 4], [2, 3, 4, 5]) == pytest.approx(0.25)


def test_symmetry():
    gen = np.random.default_rng(0)
    a, b = gen.normal(size=20), gen.normal(1.0, 2.0, size=31)
    assert ks_statistic(a, b) == ks_statistic(b, a)


def test_matches_brute_force_oracle_on_random_cases():
    gen = np.random.default_rng(42)
    for _ in range(50):
        n, m = int(gen.integers(1, 41)), int(gen.integers(1, 41))
        # mix continuous values and deliberate ties
        a = np.round(gen.normal(0, 2, n), 1)
        b = np.round(gen.normal(gen.uniform(-1, 1), 2, m), 1)
        assert abs(ks_statistic(a, b) - brute_force_ks(a, b)) <= 1e-12


def test_empty_sample_rejected():
    with pytest.raises(EmptySample):
        ks_statistic([], [1.0])


@given(
    st.lists(st.floats(-100, 100), min_size=1, max_size=30),
    st.lists(st.floats(-100, 100), min_size=1, max_size=30),
)
@settings(max_examples=150, deadline=None)
def test_bounds_and_oracle_property(a, b):
    d = ks_statistic(a, b)
    assert 0.0 <= d <= 1.0
    assert d == pytest.approx(brute_force_ks(a, b), abs=1e-12)


@given(st.lists(st.floats(-50, 50), min_size=2, max_size=25))
@settings(max_examples=60, deadline=None)
def test_invariance_under_increasing_transform(values):
    a = np.asarray(values)
    b = a + 0.37 * np.arange(len(a))  # any other sample works
    before = ks_statistic(a, b)
    after = ks_statistic(np.exp(a / 50.0), np.exp(b / 50.0))
    assert before == pytest.approx(after, abs=1e-12)


def test_empirical_cdf_steps():
    f = EmpiricalCdf.from_sample([1.0, 2.0, 2.0, 5.0])
    assert f(0.0) == 0.0
    assert f(1.0) == 0.25
    assert f(2.0) == 0.75
    assert f(5.0) == 1.0
    assert f(99.0) == 1.0


def _table(cols):
    schema = [ColumnSpec(f"c{i}", "continuous") for i in range(len(cols))]
    schema.append(ColumnSpec("task", "discrete", (1.0,)))
    n = len(cols[0])
    return RowTable(schema, list(cols) + [np.ones(n)])


class TestKsReport:
    def test_identical_tables_aggregate_one(self):
        t = _table([np.arange(10.0), np.arange(10.0) ** 2])
        rep = ks_report(t, t)
        assert rep.aggregate_score == 1.0

    def test_one_disjoint_column_of_four(self):
        base = np.arange(8.0)
        real = _table([base, base, base, base])
        synth = _table([base, base, base, base + 100.0])
        rep = ks_report(real, synth)
        assert rep.aggregate_score == pytest.approx(0.75)

    def test_aggregate_recomposes_per_column_values(self):
        gen = np.random.default_rng(3)
        real_cols = [gen.normal(size=30) for _ in range(3)]
        synth_cols = [gen.normal(0.5, 1.5, size=40) for _ in range(3)]
        rep = ks_report(_table(real_cols), _table(synth_cols))
        per_col = [brute_force_ks(a, b) for a, b in zip(real_cols, synth_cols)]
        assert rep.statistics == pytest.approx(per_col, abs=1e-12)
        assert rep.aggregate_score == pytest.approx(np.mean([1 - d for d in per_col]))

    def test_discrete_columns_excluded(self):
        t = _table([np.arange(6.0)])
        rep = ks_report(t, t)
        assert rep.columns == ("c0",)

    def test_schema_mismatch(self):
        a = _table([np.arange(5.0)])
        b = RowTable([ColumnSpec("other", "continuous")], [np.arange(5.0)])
        with pytest.raises(SchemaMismatch):
            ks_report(a, b)

    def test_report_serialization(self):
        t = _table([np.arange(10.0)])
        rep = ks_report(t, t)
        d = rep.to_dict()
        assert d["aggregate_score"] == 1.0
        assert "c0" in d["columns"]
        assert "aggregate" in rep.render_text()
