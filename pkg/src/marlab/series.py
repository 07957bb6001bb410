"""
Time series container, CSV ingestion and elementary transformations.

Series are plain float arrays with optional monthly period labels. All
estimation downstream is index-based; timestamps only matter for file
ingestion, deflation and window selection in the pipelines.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .errors import DataError


def _check_monthly(timestamps: pd.PeriodIndex, what: str) -> None:
    if timestamps.freqstr not in ("M", "ME"):
        raise DataError(f"{what}: timestamps must be monthly periods")
    diffs = np.diff(timestamps.asi8)
    if np.any(diffs <= 0):
        raise DataError(f"{what}: timestamps must be strictly increasing")
    if np.any(diffs != 1):
        raise DataError(f"{what}: monthly timestamps contain gaps")


@dataclass(frozen=True)
class TimeSeries:
    """Ordered observations, optionally labelled with monthly periods."""

    values: np.ndarray
    timestamps: pd.PeriodIndex | None = None
    label: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size == 0:
            raise DataError("series must be a non-empty 1-d array")
        if not np.all(np.isfinite(vals)):
            raise DataError("series contains non-finite values")
        if self.timestamps is not None:
            ts = pd.PeriodIndex(self.timestamps, freq="M")
            object.__setattr__(self, "timestamps", ts)
            if len(ts) != vals.size:
                raise DataError("timestamps length does not match values")
            _check_monthly(ts, self.label or "series")

    def __len__(self) -> int:
        return self.values.size

    def index_of(self, period) -> int:
        """Position of a monthly period label within the series."""
        if self.timestamps is None:
            raise DataError("series has no timestamps")
        p = pd.Period(period, freq="M")
        loc = self.timestamps.get_indexer([p])[0]
        if loc < 0:
            raise DataError(f"period {p} outside series range")
        return int(loc)

    def slice(self, stop: int) -> "TimeSeries":
        """First `stop` observations, keeping timestamps."""
        ts = self.timestamps[:stop] if self.timestamps is not None else None
        return TimeSeries(self.values[:stop].copy(), ts, self.label)


@dataclass(frozen=True)
class DeflationIndex:
    """Price index (e.g. CPI) used to convert nominal series to real ones."""

    values: np.ndarray
    timestamps: pd.PeriodIndex
    label: str = "index"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        ts = pd.PeriodIndex(self.timestamps, freq="M")
        object.__setattr__(self, "timestamps", ts)
        if vals.ndim != 1 or vals.size == 0 or len(ts) != vals.size:
            raise DataError("index values/timestamps malformed")
        if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
            raise DataError("index values must be positive and finite")
        _check_monthly(ts, self.label)


def load_csv(path, value_column: str, date_column: str | None = None,
             label: str = "") -> TimeSeries:
    """
    Read one series from a CSV file with a header row.

    Values must all parse as finite reals; a blank or non-numeric cell is an
    error (no imputation). When `date_column` is given it is parsed to
    monthly periods, which must be strictly increasing without gaps.
    """
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError as exc:
        raise DataError(f"no such file: {path}") from exc
    except Exception as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if value_column not in frame.columns:
        raise DataError(f"{path}: no column named {value_column!r}")
    raw = frame[value_column]
    vals = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        raise DataError(f"{path}: unparseable value at row {bad[0] + 1} "
                        f"(column {value_column!r})")
    ts = None
    if date_column is not None:
        if date_column not in frame.columns:
            raise DataError(f"{path}: no column named {date_column!r}")
        try:
            ts = pd.PeriodIndex(pd.to_datetime(frame[date_column]), freq="M")
        except Exception as exc:
            raise DataError(f"{path}: unparseable dates: {exc}") from exc
        if ts.has_duplicates:
            raise DataError(f"{path}: duplicate dates")
    return TimeSeries(vals, ts, label or str(value_column))


def write_csv(series: TimeSeries, path, value_column: str = "value",
              date_column: str = "date") -> None:
    """Write a series back to CSV with full double precision."""
    cols = {}
    if series.timestamps is not None:
        cols[date_column] = series.timestamps.astype(str)
    cols[value_column] = [repr(float(v)) for v in series.values]
    pd.DataFrame(cols).to_csv(path, index=False)


def deflate(series: TimeSeries, index: DeflationIndex, base_period) -> TimeSeries:
    """
    Convert to real terms: out_t = value_t * index(base) / index(t).

    The index must cover every timestamp of the series and contain the
    base period.
    """
    if series.timestamps is None:
        raise DataError("deflation requires a series with timestamps")
    base = pd.Period(base_period, freq="M")
    pos_base = index.timestamps.get_indexer([base])[0]
    if pos_base < 0:
        raise DataError(f"base period {base} not covered by the index")
    pos = index.timestamps.get_indexer(series.timestamps)
    if np.any(pos < 0):
        missing = series.timestamps[pos < 0][0]
        raise DataError(f"index does not cover period {missing}")
    scale = index.values[pos_base] / index.values[pos]
    label = f"{series.label} real" if series.label else "real"
    return TimeSeries(series.values * scale, series.timestamps, label)


def reverse(series: TimeSeries) -> TimeSeries:
    """Time-reverse the values; timestamps are dropped."""
    return TimeSeries(series.values[::-1].copy(), None, series.label)


def empirical_sd(series) -> float:
    """Sample standard deviation (divisor n-1)."""
    vals = series.values if isinstance(series, TimeSeries) else np.asarray(series, float)
    if vals.size < 2:
        raise DataError("standard deviation needs at least 2 observations")
    return float(np.std(vals, ddof=1))


def as_values(series) -> np.ndarray:
    """Accept a TimeSeries or a bare array, return the float array."""
    if isinstance(series, TimeSeries):
        return series.values
    arr = np.asarray(series, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DataError("expected a non-empty 1-d array")
    return arr
