"""Ingestion, splits, standardization, and windowing protocol."""
from __future__ import annotations

import numpy as np
import pytest

from qultsf import data, synth


def write(tmp_path, text, name="series.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


GOOD = "date,a,b\n2020-01-01 00:00:00,1.0,10.0\n2020-01-01 00:10:00,2.0,20.0\n2020-01-01 00:20:00,3.0,30.0\n"


class TestLoadCsv:
    def test_reads_values_and_timestamps(self, tmp_path):
        table = data.load_csv(write(tmp_path, GOOD))
        assert table.num_timestamps == 3 and table.num_channels == 2
        assert table.channel_names == ["a", "b"]
        np.testing.assert_array_equal(table.values, [[1, 10], [2, 20], [3, 30]])
        assert table.timestamps[0] == "2020-01-01 00:00:00"
        assert table.dropped_rows == 0

    def test_no_time_column(self, tmp_path):
        table = data.load_csv(write(tmp_path, "a,b\n1,2\n3,4\n"))
        assert table.timestamps is None
        assert table.num_channels == 2

    def test_forced_time_column_flag(self, tmp_path):
        # numeric first column, but the caller says it is a timestamp
        table = data.load_csv(write(tmp_path, "t,a\n0,5\n1,6\n"), time_column=True)
        assert table.timestamps == ["0", "1"]
        assert table.channel_names == ["a"]

    def test_malformed_row_names_file_row(self, tmp_path):
        path = write(tmp_path, "date,a\nx,1\ny,oops\n")
        with pytest.raises(data.DataError, match="row 3"):
            data.load_csv(path)

    def test_ragged_row_names_file_row(self, tmp_path):
        path = write(tmp_path, "date,a,b\nx,1,2\ny,3\n")
        with pytest.raises(data.DataError, match="row 3 has 2 fields"):
            data.load_csv(path)

    def test_drop_bad_rows_counts(self, tmp_path):
        path = write(tmp_path, "date,a\nx,1\ny,oops\nz,3\nw,4,9\n")
        table = data.load_csv(path, drop_bad_rows=True)
        assert table.dropped_rows == 2
        np.testing.assert_array_equal(table.values[:, 0], [1.0, 3.0])

    def test_missing_file(self, tmp_path):
        with pytest.raises(data.DataError, match="no such file"):
            data.load_csv(tmp_path / "absent.csv")

    def test_empty_file(self, tmp_path):
        with pytest.raises(data.DataError, match="empty"):
            data.load_csv(write(tmp_path, ""))

    def test_header_only(self, tmp_path):
        with pytest.raises(data.DataError, match="no data rows"):
            data.load_csv(write(tmp_path, "date,a\n"))

    def test_alternate_delimiter(self, tmp_path):
        table = data.load_csv(write(tmp_path, "a;b\n1;2\n"), delimiter=";")
        np.testing.assert_array_equal(table.values, [[1, 2]])

    def test_deterministic_reload(self, tmp_path):
        path = write(tmp_path, GOOD)
        one = data.load_csv(path)
        two = data.load_csv(path)
        np.testing.assert_array_equal(one.values, two.values)


class TestMakeSplits:
    def test_hundred_rows(self):
        spec = data.make_splits(100)
        assert (spec.train, spec.val, spec.test) == (range(0, 70), range(70, 80), range(80, 100))

    def test_reference_row_count(self):
        spec = data.make_splits(52696)
        assert len(spec.train) == 36887
        assert spec.val == range(36887, 42156)
        assert spec.test == range(42156, 52696)

    def test_small_n_float_boundaries(self):
        # 0.7 + 0.1 is not exactly 0.8 in floats; the boundary must not slip.
        spec = data.make_splits(10)
        assert (spec.train, spec.val, spec.test) == (range(0, 7), range(7, 8), range(8, 10))

    def test_covers_everything_in_order(self):
        for n in (3, 17, 101, 1024):
            spec = data.make_splits(n)
            assert spec.train.stop == spec.val.start and spec.val.stop == spec.test.start
            assert spec.train.start == 0 and spec.test.stop == n

    def test_bad_fractions_rejected(self):
        with pytest.raises(data.DataError, match="sum to 1"):
            data.make_splits(100, (0.5, 0.5, 0.1))
        with pytest.raises(data.DataError, match="positive"):
            data.make_splits(100, (1.0, -0.1, 0.1))


class TestStandardize:
    def make_table(self, values):
        values = np.asarray(values, dtype=np.float64)
        names = [f"c{i}" for i in range(values.shape[1])]
        return data.TimeSeriesTable(values, names)

    def test_hand_example(self):
        # train range mean 5, std 2 -> the value 9 maps to 2.0
        col = np.array([3.0, 7.0, 3.0, 7.0, 9.0])
        table = self.make_table(col[:, None])
        spec = data.SplitSpec(range(0, 4), range(4, 4), range(4, 5))
        scaled, scaler = data.standardize(table, spec)
        assert scaler.mean[0] == 5.0 and scaler.std[0] == 2.0
        assert scaled.values[4, 0] == 2.0

    def test_train_range_standardizes_to_zero_mean_unit_std(self):
        rng = np.random.default_rng(0)
        table = self.make_table(rng.normal(5, 3, size=(200, 4)))
        spec = data.make_splits(200)
        scaled, _ = data.standardize(table, spec)
        train = scaled.values[:140]
        np.testing.assert_allclose(train.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(train.std(axis=0), 1.0, atol=1e-12)

    def test_constant_channel_std_one_with_warning(self):
        table = self.make_table(np.column_stack([np.full(10, 4.0), np.arange(10.0)]))
        spec = data.make_splits(10)
        with pytest.warns(UserWarning, match="constant"):
            scaled, scaler = data.standardize(table, spec)
        assert scaler.std[0] == 1.0
        assert scaler.constant_channels == [0]
        np.testing.assert_array_equal(scaled.values[:7, 0], np.zeros(7))

    def test_no_leakage_from_later_ranges(self):
        rng = np.random.default_rng(1)
        values = rng.normal(size=(50, 3))
        table_a = self.make_table(values.copy())
        perturbed = values.copy()
        perturbed[40:] += 1000.0  # test range only
        table_b = self.make_table(perturbed)
        spec = data.make_splits(50)
        _, scaler_a = data.standardize(table_a, spec)
        _, scaler_b = data.standardize(table_b, spec)
        assert scaler_a.mean.tobytes() == scaler_b.mean.tobytes()
        assert scaler_a.std.tobytes() == scaler_b.std.tobytes()

    def test_round_trip(self):
        rng = np.random.default_rng(2)
        table = self.make_table(rng.normal(3, 7, size=(30, 2)))
        spec = data.make_splits(30)
        scaled, scaler = data.standardize(table, spec)
        np.testing.assert_allclose(scaler.inverse(scaled.values), table.values, atol=1e-10)


class TestWindows:
    def make_table(self, n, channels=1):
        values = np.arange(n * channels, dtype=np.float64).reshape(n, channels, order="F")
        return data.TimeSeriesTable(values, [f"c{i}" for i in range(channels)])

    def test_train_range_with_no_history(self):
        # split starting at 0: n_tr - L - T + 1 windows
        n_tr, lookback, horizon = 50, 12, 5
        samples = list(data.window_iter(self.make_table(60), range(0, n_tr), lookback, horizon, 0))
        assert len(samples) == n_tr - lookback - horizon + 1

    def test_range_of_length_horizon_with_history(self):
        samples = list(data.window_iter(self.make_table(60), range(40, 45), 12, 5, 0))
        assert len(samples) == 1
        assert samples[0].start_time == 40 - 12

    def test_later_split_counts_all_targets(self):
        # with a full lookback of history available, a split of length m
        # holds m - T + 1 windows
        m, horizon = 30, 7
        samples = list(data.window_iter(self.make_table(100), range(70, 100), 20, horizon, 0))
        assert len(samples) == m - horizon + 1

    def test_lookback_never_crosses_dataset_start(self):
        samples = list(data.window_iter(self.make_table(30), range(0, 30), 10, 3, 0))
        assert samples[0].start_time == 0
        assert all(s.start_time >= 0 for s in samples)

    def test_alignment_and_content(self):
        table = self.make_table(40)
        for s in data.window_iter(table, range(20, 30), 8, 4, 0):
            t0 = s.start_time + 8
            np.testing.assert_array_equal(s.lookback, table.values[t0 - 8:t0, 0])
            np.testing.assert_array_equal(s.target, table.values[t0:t0 + 4, 0])
            assert s.target[0] == table.values[s.start_time + 8, 0]

    def test_empty_split_yields_nothing(self):
        assert list(data.window_iter(self.make_table(30), range(10, 10), 5, 2, 0)) == []

    def test_too_short_split_yields_nothing(self):
        assert list(data.window_iter(self.make_table(30), range(25, 27), 5, 3, 0)) == []

    def test_ordering_ascending(self):
        starts = [s.start_time for s in
                  data.window_iter(self.make_table(50), range(10, 40), 6, 2, 0)]
        assert starts == sorted(starts)

    def test_bad_channel_rejected(self):
        with pytest.raises(data.DataError, match="channel"):
            list(data.window_iter(self.make_table(30), range(0, 30), 5, 2, 3))

    def test_index_matches_iterator(self):
        table = self.make_table(60, channels=3)
        split = range(20, 50)
        index = data.build_window_index(table, split, 9, 4)
        x, y = index.gather(table.values)
        pos = 0
        for ch in range(3):
            for s in data.window_iter(table, split, 9, 4, ch):
                np.testing.assert_array_equal(x[pos], s.lookback)
                np.testing.assert_array_equal(y[pos], s.target)
                assert index.channel[pos] == ch
                pos += 1
        assert pos == len(index)

    def test_gather_subset(self):
        table = self.make_table(60, channels=2)
        index = data.build_window_index(table, range(30, 60), 5, 5)
        sel = np.array([3, 0, 7])
        x, y = index.gather(table.values, sel)
        x_all, y_all = index.gather(table.values)
        np.testing.assert_array_equal(x, x_all[sel])
        np.testing.assert_array_equal(y, y_all[sel])


class TestPrepare:
    def test_end_to_end_counts(self):
        table = synth.synth_table(num_rows=400, num_channels=3, seed=1)
        splits = data.prepare(table, lookback=24, horizon=8)
        # train range [0, 280): 280 - 24 - 8 + 1 per channel
        assert len(splits.train) == (280 - 24 - 8 + 1) * 3
        # val range [280, 320): full history, 40 - 8 + 1 per channel
        assert len(splits.val) == (40 - 8 + 1) * 3
        assert len(splits.test) == (400 - 320 - 8 + 1) * 3

    def test_values_are_standardized(self):
        table = synth.synth_table(num_rows=300, num_channels=2, seed=2)
        splits = data.prepare(table, lookback=12, horizon=4)
        train = splits.values[:210]
        np.testing.assert_allclose(train.mean(axis=0), 0.0, atol=1e-10)
        np.testing.assert_allclose(train.std(axis=0), 1.0, atol=1e-10)


class TestSynth:
    def test_shape_and_determinism(self):
        a = synth.synth_table(num_rows=500, num_channels=4, seed=9)
        b = synth.synth_table(num_rows=500, num_channels=4, seed=9)
        assert a.values.shape == (500, 4)
        np.testing.assert_array_equal(a.values, b.values)
        assert len(a.timestamps) == 500
        c = synth.synth_table(num_rows=500, num_channels=4, seed=10)
        assert not np.array_equal(a.values, c.values)

    def test_timestamps_ten_minutes_apart(self):
        table = synth.synth_table(num_rows=3, num_channels=1, seed=0)
        assert table.timestamps == [
            "2020-01-01 00:00:00", "2020-01-01 00:10:00", "2020-01-01 00:20:00"
        ]

    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "synthetic.csv"
        synth.synth_csv(path, num_rows=50, num_channels=3, seed=4)
        table = data.load_csv(path)
        reference = synth.synth_table(num_rows=50, num_channels=3, seed=4)
        assert table.num_timestamps == 50 and table.num_channels == 3
        # file stores 6 decimal places
        np.testing.assert_allclose(table.values, reference.values, atol=1e-6)
        assert table.timestamps == reference.timestamps
