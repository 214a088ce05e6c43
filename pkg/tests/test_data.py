import numpy as np
import pytest

from gazeaug import data
from gazeaug.data import (
    Dataset,
    ScanpathSample,
    SplitSpec,
    SurrogateConfig,
    TaskLabel,
    assemble_scanpaths,
    featurize_summary,
    fit_length_model,
    load_csv,
    simulate_surrogate,
    stratified_split,
    to_fixed_length,
    to_row_table,
    write_csv,
)
from gazeaug.errors import (
    InsufficientRows,
    InvalidConfig,
    SchemaMismatch,
    TooFewSamples,
    UnknownTask,
)
from gazeaug.rng import RngState


def make_sample(task=TaskLabel.DECADE, n=3, pid="p", img="i"):
    arr = np.column_stack([
        np.linspace(0, 10, n),
        np.linspace(5, 15, n),
        np.full(n, 200.0),
        np.full(n, 3.3),
    ])
    return ScanpathSample(pid, img, task, arr)


def small_dataset(per_task=3):
    samples = []
    for t in TaskLabel:
        for i in range(per_task):
            samples.append(make_sample(t, n=3 + i, pid=f"p{i}", img=f"im{int(t)}"))
    return Dataset(samples)


class TestCsv:
    def test_counting(self, tmp_path):
        path = tmp_path / "d.csv"
        lines = ["participant_id,image_id,task,fix_index,x,y,duration_ms,pupil"]
        for p in ("a", "b"):
            for task in (1, 2, 3, 4):
                for k in range(2):
                    lines.append(f"{p},img0,{task},{k},{10*k},{20*k},150.5,3.2")
        path.write_text("\n".join(lines) + "\n")
        ds = load_csv(path)
        assert len(ds) == 8
        assert all(len(s) == 2 for s in ds.samples)

    def test_unknown_task_reports_line(self, tmp_path):
        path = tmp_path / "d.csv"
        rows = ["participant_id,image_id,task,fix_index,x,y,duration_ms,pupil"]
        rows += [f"a,i,1,{k},1,2,100,3" for k in range(15)]
        rows.append("a,i,5,0,1,2,100,3")  # line 17
        path.write_text("\n".join(rows) + "\n")
        with pytest.raises(UnknownTask) as err:
            load_csv(path)
        assert err.value.line == 17

    def test_paper_shaped_file(self, tmp_path):
        ds = simulate_surrogate(SurrogateConfig.default(), RngState(0))
        path = tmp_path / "full.csv"
        write_csv(ds, path)
        loaded = load_csv(path)
        assert len(loaded) == 320
        assert all(v == 80 for v in loaded.counts_per_task().values())

    def test_round_trip_exact(self, tmp_path):
        ds = simulate_surrogate(SurrogateConfig(participants=2, images=3), RngState(5))
        path = tmp_path / "rt.csv"
        write_csv(ds, path)
        loaded = load_csv(path)
        assert len(loaded) == len(ds)
        by_id = {s.identity: s for s in loaded.samples}
        for s in ds.samples:
            other = by_id[s.identity]
            assert np.allclose(s.fixations, other.fixations, atol=1e-9)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(SchemaMismatch):
            load_csv(path)

    def test_noncontiguous_fix_index(self, tmp_path):
        path = tmp_path / "gap.csv"
        path.write_text(
            "participant_id,image_id,task,fix_index,x,y,duration_ms,pupil\n"
            "a,i,1,0,1,2,100,3\n"
            "a,i,1,2,1,2,100,3\n"
        )
        with pytest.raises(SchemaMismatch):
            load_csv(path)


class TestSurrogate:
    def test_default_is_paper_shaped(self):
        ds = simulate_surrogate(SurrogateConfig.default(), RngState(1))
        assert len(ds) == 320
        counts = ds.counts_per_task()
        assert all(counts[t] == 80 for t in TaskLabel)

    def test_determinism(self):
        cfg = SurrogateConfig(participants=3, images=2)
        a = simulate_surrogate(cfg, RngState(9))
        b = simulate_surrogate(cfg, RngState(9))
        assert a == b

    def test_seed_changes_data(self):
        cfg = SurrogateConfig(participants=2, images=2)
        assert simulate_surrogate(cfg, RngState(1)) != simulate_surrogate(cfg, RngState(2))

    def test_invalid_config(self):
        with pytest.raises(InvalidConfig):
            SurrogateConfig(participants=0)
        with pytest.raises(InvalidConfig):
            SurrogateConfig(fixation_count_range=(5, 2))

    def test_config_json_round_trip(self):
        cfg = SurrogateConfig.overlapping()
        again = SurrogateConfig.from_dict(cfg.to_dict())
        assert again == cfg

    def test_fixation_counts_within_range(self):
        cfg = SurrogateConfig(participants=2, images=2, fixation_count_range=(4, 6))
        ds = simulate_surrogate(cfg, RngState(3))
        assert all(4 <= len(s) <= 6 for s in ds.samples)


class TestSplit:
    def test_paper_counts(self):
        ds = simulate_surrogate(SurrogateConfig.default(), RngState(2))
        train, test = stratified_split(ds, SplitSpec(seed=7))
        assert len(train) == 256 and len(test) == 64
        assert all(v == 64 for v in train.counts_per_task().values())
        assert all(v == 16 for v in test.counts_per_task().values())

    def test_too_few_samples(self):
        ds = Dataset([make_sample(t, pid=f"p{int(t)}") for t in TaskLabel])
        with pytest.raises(TooFewSamples):
            stratified_split(ds, SplitSpec(train_fraction=0.5, seed=1))

    def test_determinism(self):
        ds = small_dataset()
        a = stratified_split(ds, SplitSpec(seed=3))
        b = stratified_split(ds, SplitSpec(seed=3))
        assert a[0] == b[0] and a[1] == b[1]

    def test_exact_partition_for_any_seed(self):
        ds = small_dataset(per_task=5)
        for seed in range(10):
            train, test = stratified_split(ds, SplitSpec(seed=seed))
            assert len(train) + len(test) == len(ds)
            assert train.identities() | test.identities() == ds.identities()
            assert not (train.identities() & test.identities())


class TestRowTable:
    def test_single_sample(self):
        ds = Dataset([make_sample(TaskLabel.PEOPLE, n=3)])
        t = to_row_table(ds)
        assert t.n_rows == 3
        assert np.all(t.column("task") == 3.0)

    def test_paper_shape(self):
        ds = simulate_surrogate(SurrogateConfig(participants=2, images=2), RngState(4))
        t = to_row_table(ds)
        assert t.n_rows == ds.total_fixations()
        kinds = [s.kind for s in t.schema]
        assert kinds == ["continuous"] * 4 + ["discrete"]


class TestFixedLength:
    def test_exact_fit(self):
        s = make_sample(n=5)
        mat, mask = to_fixed_length(s, 5)
        assert np.array_equal(mat, s.fixations.T)
        assert np.all(mask == 1)

    def test_padding(self):
        s = make_sample(n=3)
        mat, mask = to_fixed_length(s, 5)
        assert mat.shape == (4, 5)
        assert np.all(mat[:, 3:] == 0)
        assert np.array_equal(mask, [1, 1, 1, 0, 0])

    def test_truncation(self):
        s = make_sample(n=8)
        mat, mask = to_fixed_length(s, 5)
        assert np.array_equal(mat, s.fixations[:5].T)
        assert np.all(mask == 1)

    def test_shape_invariant(self):
        for n in (1, 4, 9):
            for T in (1, 4, 9):
                mat, mask = to_fixed_length(make_sample(n=n), T)
                assert mat.shape == (4, T)
                assert mask.sum() == min(n, T)


class TestFeaturize:
    def test_single_fixation(self):
        s = ScanpathSample("p", "i", TaskLabel.DECADE,
                           np.array([[7.0, 8.0, 100.0, 3.0]]))
        v = featurize_summary(s)
        # per channel: mean=min=max=median=value, std=0
        assert np.array_equal(v[0:5], [7, 0, 7, 7, 7])
        assert np.array_equal(v[5:10], [8, 0, 8, 8, 8])

    def test_hand_arithmetic(self):
        arr = np.array([[0.0, 1.0, 100.0, 3.0], [10.0, 1.0, 100.0, 3.0]])
        v = featurize_summary(ScanpathSample("p", "i", TaskLabel.WEALTH, arr))
        assert np.array_equal(v[0:5], [5.0, 5.0, 0.0, 10.0, 5.0])

    def test_matches_bruteforce_oracle(self):
        gen = RngState(12).generator()
        arr = np.column_stack([
            gen.normal(0, 50, 17), gen.normal(0, 50, 17),
            gen.uniform(50, 400, 17), gen.uniform(2, 5, 17),
        ])
        s = ScanpathSample("p", "i", TaskLabel.MEMORIZE, arr)
        v = featurize_summary(s)
        expected = []
        for c in range(4):
            col = sorted(arr[:, c])
            n = len(col)
            mean = sum(col) / n
            std = (sum((x - mean) ** 2 for x in col) / n) ** 0.5
            median = col[n // 2] if n % 2 else 0.5 * (col[n // 2 - 1] + col[n // 2])
            expected.extend([mean, std, col[0], col[-1], median])
        assert np.allclose(v, expected, atol=1e-12)


class TestAssemble:
    def _table_and_model(self):
        ds = simulate_surrogate(
            SurrogateConfig(participants=12, images=8, fixation_count_range=(3, 6)),
            RngState(21),
        )
        return to_row_table(ds), fit_length_model(ds)

    def test_paper_sized_assembly(self):
        table, lm = self._table_and_model()
        out = assemble_scanpaths(table, lm, 10, RngState(1))
        assert len(out) == 40
        assert all(v == 10 for v in out.counts_per_task().values())

    def test_degenerate_length_model(self):
        table, _ = self._table_and_model()
        lm = {t: np.array([1]) for t in TaskLabel}
        out = assemble_scanpaths(table, lm, 5, RngState(2))
        assert all(len(s) == 1 for s in out.samples)

    def test_task_provenance(self):
        table, lm = self._table_and_model()
        out = assemble_scanpaths(table, lm, 10, RngState(3))
        task_col = table.column("task")
        by_task = {
            t: set(map(tuple, np.column_stack([table.column("x")[task_col == float(int(t))],
                                               table.column("y")[task_col == float(int(t))]])))
            for t in TaskLabel
        }
        for s in out.samples:
            for row in s.fixations:
                assert (row[0], row[1]) in by_task[s.task]

    def test_insufficient_rows(self):
        table, lm = self._table_and_model()
        with pytest.raises(InsufficientRows):
            assemble_scanpaths(table, lm, 10_000, RngState(4))

    def test_no_row_reuse_within_call(self):
        table, lm = self._table_and_model()
        out = assemble_scanpaths(table, lm, 8, RngState(5))
        seen = set()
        for s in out.samples:
            for row in s.fixations:
                key = tuple(row)
                assert key not in seen
                seen.add(key)
