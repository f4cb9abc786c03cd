import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsgan import data
from tsgan.errors import DataError

CSV_HEADER = "timestamp,open,high,low,close\n"


def write_csv(path, rows, header=CSV_HEADER):
    path.write_text(header + "".join(rows))
    return path


def row(ts, o, h, lo, c):
    return f"{ts},{o},{h},{lo},{c}\n"


class TestLoadCsv:
    def test_three_rows_ascending(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", [
            row("2022-03-21T14:00:00Z", 10, 11, 9, 10.5),
            row("2022-03-21T14:01:00Z", 10.5, 11, 10, 10.8),
            row("2022-03-21T14:02:00Z", 10.8, 11, 10, 10.2),
        ])
        result = data.load_csv(p)
        assert result.n_rows == 3
        assert len(result.series) == 3
        ts = result.series.timestamps()
        assert ts == sorted(ts)

    def test_reverse_order_is_sorted(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", [
            row("2022-03-21T14:02:00Z", 1, 2, 1, 1.5),
            row("2022-03-21T14:01:00Z", 1, 2, 1, 1.4),
            row("2022-03-21T14:00:00Z", 1, 2, 1, 1.3),
        ])
        series = data.load_csv(p).series
        closes = series.closes()
        assert closes.tolist() == [1.3, 1.4, 1.5]

    def test_nan_close_rejected(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", [
            row("2022-03-21T14:00:00Z", 1, 2, 1, 1.5),
            row("2022-03-21T14:01:00Z", 1, 2, 1, "NaN"),
            row("2022-03-21T14:02:00Z", 1, 2, 1, 1.6),
        ])
        result = data.load_csv(p)
        assert len(result.series) == 2
        assert len(result.rejects) == 1
        assert result.rejects[0].row == 3  # header is row 1

    def test_missing_column_is_schema_error(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("time,price\n2022-03-21T14:00:00Z,1.5\n")
        with pytest.raises(DataError):
            data.load_csv(p)

    def test_epoch_seconds_timestamps(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", [
            row(1647871200, 1, 2, 1, 1.5),
            row(1647871260, 1, 2, 1, 1.6),
        ])
        series = data.load_csv(p).series
        assert series.bars[0].timestamp.hour == 14  # 2022-03-21T14:00Z

    def test_close_only_schema(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("timestamp,close\n2022-03-21T14:00:00Z,1.5\n")
        series = data.load_csv(p).series
        bar = series.bars[0]
        assert bar.open == bar.high == bar.low == bar.close == 1.5

    def test_roundtrip(self, tmp_path):
        rows = [
            row("2022-03-21T14:00:00+00:00", 10.0, 11.0, 9.0, 10.5),
            row("2022-03-21T14:01:00+00:00", 10.5, 11.0, 10.0, 10.8),
        ]
        p1 = write_csv(tmp_path / "a.csv", rows)
        s1 = data.load_csv(p1).series
        out = tmp_path / "b.csv"
        with open(out, "w") as fh:
            fh.write(CSV_HEADER)
            for b in s1.bars:
                fh.write(row(b.timestamp.isoformat(), b.open, b.high, b.low, b.close))
        s2 = data.load_csv(out).series
        assert s1.bars == s2.bars


class TestClean:
    def mkseries(self, bars):
        return data.TimeSeries(asset_id="T", bars=bars)

    def bar(self, minute, close=10.0, **kw):
        from datetime import datetime, timezone
        ts = datetime(2022, 3, 21, 14, minute, tzinfo=timezone.utc)
        fields = dict(open=close, high=close, low=close, close=close)
        fields.update(kw)
        return data.Bar(ts, **fields)

    def test_duplicate_minute_dropped(self):
        series = self.mkseries([self.bar(0), self.bar(1), self.bar(1)])
        cleaned, dropped = data.clean(series)
        assert len(cleaned) == 2
        assert dropped == 1

    def test_nonpositive_close_dropped(self):
        series = self.mkseries([self.bar(0), self.bar(1, close=-3.0)])
        cleaned, _ = data.clean(series)
        assert len(cleaned) == 1

    def test_ten_row_fixture_two_anomalies(self):
        bars = [self.bar(m) for m in range(8)]
        bars.append(self.bar(3))                       # duplicate minute
        bars.append(self.bar(9, high=5.0))             # high < close
        bars.sort(key=lambda b: b.timestamp)
        cleaned, dropped = data.clean(self.mkseries(bars))
        assert len(cleaned) == 8
        assert dropped == 2

    def test_empty_result_fatal(self):
        series = self.mkseries([self.bar(0, close=-1.0)])
        with pytest.raises(DataError, match="no usable data"):
            data.clean(series)

    def test_idempotent(self):
        bars = [self.bar(m) for m in range(5)] + [self.bar(2)]
        bars.sort(key=lambda b: b.timestamp)
        once, _ = data.clean(self.mkseries(bars))
        twice, dropped = data.clean(once)
        assert twice.bars == once.bars
        assert dropped == 0


class TestCalendar:
    def test_direct_read(self):
        from datetime import datetime, timezone
        bar = data.Bar(datetime(2022, 3, 21, 14, 7, tzinfo=timezone.utc),
                       1, 1, 1, 1)
        feats = data.extract_calendar(data.TimeSeries("T", [bar]))
        assert feats[0] == data.CalendarFeatures(3, 21, 14, 7)

    def test_midnight(self):
        from datetime import datetime, timezone
        bar = data.Bar(datetime(2022, 4, 1, 0, 0, tzinfo=timezone.utc),
                       1, 1, 1, 1)
        feats = data.extract_calendar(data.TimeSeries("T", [bar]))
        assert feats[0].hour == 0 and feats[0].minute == 0

    def test_month_boundary(self):
        from datetime import datetime, timezone
        bars = [
            data.Bar(datetime(2022, 3, 31, 23, 59, tzinfo=timezone.utc), 1, 1, 1, 1),
            data.Bar(datetime(2022, 4, 1, 0, 0, tzinfo=timezone.utc), 1, 1, 1, 1),
        ]
        feats = data.extract_calendar(data.TimeSeries("T", bars))
        assert [f.month for f in feats] == [3, 4]


class TestMakePairs:
    def test_minimal(self):
        pairs = data.make_pairs(np.array([1.0, 2.0, 3.0, 5.0]), d=3)
        assert len(pairs) == 1
        assert pairs.conditions.tolist() == [[1.0, 2.0, 3.0]]
        assert pairs.targets.tolist() == [5.0]

    def test_large_series_count(self):
        # N=22818, d=60 -> N-d pairs
        closes = np.linspace(0, 1, 22818)
        pairs = data.make_pairs(closes, d=60)
        assert len(pairs) == 22758

    def test_scalar_condition_d1(self):
        closes = np.array([1.0, 2.0, 3.0])
        pairs = data.make_pairs(closes, d=1)
        assert pairs.conditions.tolist() == [[1.0], [2.0]]
        assert pairs.targets.tolist() == [2.0, 3.0]

    def test_too_short_fatal(self):
        with pytest.raises(DataError):
            data.make_pairs(np.arange(5, dtype=float), d=5)

    @given(st.integers(1, 10), st.integers(1, 40))
    @settings(max_examples=50, deadline=None)
    def test_count_and_reconstruction(self, d, extra):
        n = d + extra
        closes = np.random.default_rng(d * 100 + extra).standard_normal(n)
        pairs = data.make_pairs(closes, d)
        assert len(pairs) == n - d
        rebuilt = np.concatenate([pairs.conditions[0], pairs.targets])
        np.testing.assert_array_equal(rebuilt, closes)
