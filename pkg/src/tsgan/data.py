"""Minute-bar CSV ingestion, cleaning, calendar features, and windowing.

Everything here is a pure function over immutable inputs: load once, clean,
then slice normalized closes into (condition window, next value) pairs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

from .errors import DataError

DEFAULT_SCHEMA = {
    "timestamp": "timestamp",
    "open": "open",
    "high": "high",
    "low": "low",
    "close": "close",
}

REQUIRED_COLUMNS = ("timestamp", "close")
OPTIONAL_COLUMNS = ("open", "high", "low")


@dataclass(frozen=True)
class Bar:
    """One minute-resolution OHLC record, timestamps in UTC."""

    timestamp: datetime
    open: float
    high: float
    low: float
    close: float

    def is_valid(self) -> bool:
        prices = (self.open, self.high, self.low, self.close)
        if not all(math.isfinite(p) and p > 0 for p in prices):
            return False
        return (self.low <= self.open <= self.high
                and self.low <= self.close <= self.high)


@dataclass
class TimeSeries:
    asset_id: str
    bars: list[Bar]
    period_label: str = ""

    def closes(self) -> np.ndarray:
        return np.array([b.close for b in self.bars], dtype=np.float64)

    def timestamps(self) -> list[datetime]:
        return [b.timestamp for b in self.bars]

    def __len__(self) -> int:
        return len(self.bars)


@dataclass(frozen=True)
class CalendarFeatures:
    month: int
    day: int
    hour: int
    minute: int


@dataclass
class Reject:
    row: int
    reason: str


@dataclass
class LoadResult:
    series: TimeSeries
    n_rows: int
    rejects: list[Reject] = field(default_factory=list)


@dataclass
class PairSet:
    """Windowed training units: row i of `conditions` is the d normalized
    closes preceding `targets[i]`. Order follows the source series."""

    conditions: np.ndarray  # (n_pairs, d)
    targets: np.ndarray     # (n_pairs,)

    def __len__(self) -> int:
        return self.targets.shape[0]

    @property
    def condition_dim(self) -> int:
        return self.conditions.shape[1]


def _parse_timestamp(raw: str, fmt: str | None) -> tuple[datetime, str]:
    """Parse RFC 3339 or epoch-seconds; returns (datetime, detected format).

    The format is detected from the first parseable row and must stay
    uniform for the rest of the file.
    """
    raw = raw.strip()
    if fmt in (None, "epoch"):
        try:
            ts = float(raw)
            return datetime.fromtimestamp(ts, tz=timezone.utc), "epoch"
        except ValueError:
            if fmt == "epoch":
                raise ValueError(f"timestamp {raw!r} is not epoch-seconds")
    try:
        dt = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError:
        raise ValueError(f"timestamp {raw!r} is not RFC 3339 or epoch-seconds")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc), "rfc3339"


def load_csv(path, schema: dict[str, str] | None = None,
             asset_id: str = "", period_label: str = "") -> LoadResult:
    """Load a price CSV into an ascending-time TimeSeries.

    `schema` maps logical names (timestamp, close, and optionally
    open/high/low) to the file's column headers. Rows that fail to parse
    are collected into the rejects report, never dropped silently.
    """
    schema = dict(DEFAULT_SCHEMA if schema is None else schema)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for logical in REQUIRED_COLUMNS:
            col = schema.get(logical)
            if col is None or col not in header:
                raise DataError(f"missing required column {col or logical!r} in {path}")
        have_ohlc = all(schema.get(c) in header for c in OPTIONAL_COLUMNS)

        bars: list[Bar] = []
        rejects: list[Reject] = []
        ts_format: str | None = None
        n_rows = 0
        for row_no, row in enumerate(reader, start=2):  # row 1 is the header
            n_rows += 1
            try:
                ts, detected = _parse_timestamp(row[schema["timestamp"]], ts_format)
                ts_format = ts_format or detected
                close = float(row[schema["close"]])
                if not math.isfinite(close):
                    raise ValueError(f"close {row[schema['close']]!r} is not finite")
                if have_ohlc:
                    o = float(row[schema["open"]])
                    h = float(row[schema["high"]])
                    lo = float(row[schema["low"]])
                    if not all(math.isfinite(v) for v in (o, h, lo)):
                        raise ValueError("non-finite OHLC value")
                else:
                    o = h = lo = close
                bars.append(Bar(ts, o, h, lo, close))
            except (ValueError, TypeError, KeyError) as exc:
                rejects.append(Reject(row_no, str(exc)))

    bars.sort(key=lambda b: b.timestamp)
    series = TimeSeries(asset_id=asset_id, bars=bars, period_label=period_label)
    return LoadResult(series=series, n_rows=n_rows, rejects=rejects)


def clean(series: TimeSeries) -> tuple[TimeSeries, int]:
    """Drop invariant-violating bars and duplicate timestamps (keep first).

    Returns the cleaned series and the number of bars dropped.
    """
    kept: list[Bar] = []
    seen: set[datetime] = set()
    for bar in series.bars:
        if bar.timestamp in seen or not bar.is_valid():
            continue
        seen.add(bar.timestamp)
        kept.append(bar)
    if not kept:
        raise DataError(f"no usable data in series {series.asset_id!r} after cleaning")
    dropped = len(series.bars) - len(kept)
    return replace(series, bars=kept), dropped


def extract_calendar(series: TimeSeries) -> list[CalendarFeatures]:
    """Month/day/hour/minute per bar, read from the UTC timestamp."""
    out = []
    for bar in series.bars:
        ts = bar.timestamp.astimezone(timezone.utc)
        out.append(CalendarFeatures(ts.month, ts.day, ts.hour, ts.minute))
    return out


def make_pairs(closes: np.ndarray, d: int) -> PairSet:
    """Slice a normalized close vector into (d-window, next value) pairs.

    Pair i conditions on closes[i : i+d] and targets closes[i+d], so a
    length-N input yields exactly N - d pairs.
    """
    closes = np.asarray(closes, dtype=np.float64)
    if d < 1:
        raise DataError(f"window length d must be >= 1, got {d}")
    n = closes.shape[0]
    if n <= d:
        raise DataError(f"series of length {n} is too short for window d={d} "
                        f"(need at least {d + 1} values)")
    if not np.all(np.isfinite(closes)):
        raise DataError("close vector contains non-finite values")
    # stride trick view, copied so the PairSet owns its memory
    windows = np.lib.stride_tricks.sliding_window_view(closes, d)[:-1].copy()
    return PairSet(conditions=windows, targets=closes[d:].copy())


def write_rejects_csv(path, rejects: list[Reject]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "reason"])
        for rej in rejects:
            writer.writerow([rej.row, rej.reason])
