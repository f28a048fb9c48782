"""Precipitation series: CSV ingestion, wet-period filtering, aggregation, zero handling, summaries.

Wet seasons run from 1 October to 31 March and are labeled by the calendar
year in which they start.  Weekly windows are contiguous 7-day blocks starting
on 1 October; the trailing partial block of each season is dropped.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from typing import Optional

import numpy as np

from .errors import DegenerateSampleError, DomainError

__all__ = [
    "TimeSeries",
    "SummaryStats",
    "ingest_csv",
    "read_values",
    "wet_period_filter",
    "aggregate",
    "drop_zeros",
    "replace_zeros",
    "summary_stats",
    "WET_MONTHS",
    "RESOLUTIONS",
]

WET_MONTHS = (10, 11, 12, 1, 2, 3)
RESOLUTIONS = ("hourly", "daily", "weekly", "monthly", "seasonal")
_RANK = {r: i for i, r in enumerate(RESOLUTIONS)}
MIN_SEASON_DAYS = 150


@dataclass(frozen=True, eq=False)
class TimeSeries:
    timestamps: tuple  # datetime objects, strictly increasing
    values: np.ndarray
    resolution: str = "hourly"
    coverage: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        ts = tuple(self.timestamps)
        if len(ts) != values.size:
            raise DomainError("timestamps and values differ in length")
        if self.resolution not in RESOLUTIONS:
            raise DomainError(f"unknown resolution {self.resolution!r}")
        if not np.all(np.isfinite(values)):
            raise DomainError("amounts must be finite")
        if np.any(values < 0):
            i = int(np.argmax(values < 0))
            raise DomainError(f"negative amount {values[i]} at {ts[i].isoformat()}")
        for i in range(1, len(ts)):
            if not ts[i] > ts[i - 1]:
                raise DomainError(f"timestamps not strictly increasing at {ts[i].isoformat()}")
        values.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    def _subset(self, mask) -> "TimeSeries":
        mask = np.asarray(mask, dtype=bool)
        cov = None if self.coverage is None else np.asarray(self.coverage)[mask]
        return TimeSeries(tuple(t for t, m in zip(self.timestamps, mask) if m), self.values[mask],
                          self.resolution, cov)

    def to_csv(self, with_coverage: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["timestamp", "value_mm"] + (["coverage"] if with_coverage and self.coverage is not None else [])
        w.writerow(header)
        for i, (t, v) in enumerate(zip(self.timestamps, self.values)):
            row = [t.isoformat(), repr(float(v))]
            if len(header) == 3:
                row.append(repr(float(self.coverage[i])))
            w.writerow(row)
        return buf.getvalue()


def _infer_resolution(ts) -> str:
    if len(ts) < 2:
        return "daily"
    gaps = sorted((b - a).total_seconds() for a, b in zip(ts, ts[1:]))
    g = gaps[len(gaps) // 2]
    if g < 86400:
        return "hourly"
    if g < 7 * 86400:
        return "daily"
    if g < 28 * 86400:
        return "weekly"
    if g < 150 * 86400:
        return "monthly"
    return "seasonal"


def ingest_csv(path, timestamp_column: str = "timestamp", value_column: str = "value_mm",
               resolution: Optional[str] = None) -> TimeSeries:
    """Read a ``timestamp,value_mm`` CSV (ISO-8601 timestamps) into a validated series."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        for c in (timestamp_column, value_column):
            if c not in cols:
                raise DomainError(f"{path}: missing column {c!r} (have {cols})")
        stamps, values = [], []
        prev = None
        for row in reader:
            line = reader.line_num
            try:
                t = datetime.fromisoformat(row[timestamp_column].strip())
            except (ValueError, AttributeError):
                raise DomainError(f"{path}:{line}: cannot parse timestamp {row[timestamp_column]!r}") from None
            try:
                v = float(row[value_column])
            except (TypeError, ValueError):
                raise DomainError(f"{path}:{line}: cannot parse value {row[value_column]!r}") from None
            if not math.isfinite(v):
                raise DomainError(f"{path}:{line}: non-finite value")
            if v < 0:
                raise DomainError(f"{path}:{line}: negative amount {v}")
            if prev is not None and t == prev:
                raise DomainError(f"{path}:{line}: duplicate timestamp {t.isoformat()}")
            if prev is not None and t < prev:
                raise DomainError(f"{path}:{line}: timestamps out of order at {t.isoformat()}")
            prev = t
            stamps.append(t)
            values.append(v)
    return TimeSeries(tuple(stamps), np.array(values, dtype=float), resolution or _infer_resolution(stamps))


def read_values(path, column: Optional[str] = None) -> np.ndarray:
    """Amounts from a CSV; the column defaults to ``value_mm``, ``amount_mm``, or the only column."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        return np.zeros(0)
    header = [c.strip() for c in rows[0]]
    try:
        [float(c) for c in header]
        has_header = False
    except ValueError:
        has_header = True
    if has_header:
        if column is None:
            for cand in ("value_mm", "amount_mm", "z", "value"):
                if cand in header:
                    column = cand
                    break
            else:
                if len(header) == 1:
                    column = header[0]
                else:
                    raise DomainError(f"{path}: cannot choose a value column from {header}")
        if column not in header:
            raise DomainError(f"{path}: missing column {column!r}")
        idx, body = header.index(column), rows[1:]
    else:
        if len(rows[0]) != 1 and column is None:
            raise DomainError(f"{path}: headerless CSV must have one column")
        idx, body = 0, rows
    out = []
    for i, r in enumerate(body, start=2 if has_header else 1):
        try:
            out.append(float(r[idx]))
        except (ValueError, IndexError):
            raise DomainError(f"{path}:{i}: cannot parse value") from None
    arr = np.array(out, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{path}: non-finite values")
    return arr


def wet_period_filter(ts: TimeSeries) -> TimeSeries:
    """Keep October through March."""
    return ts._subset([t.month in WET_MONTHS for t in ts.timestamps])


def season_of(t) -> Optional[int]:
    """Start year of the wet season containing ``t``, or None outside the wet period."""
    if t.month >= 10:
        return t.year
    if t.month <= 3:
        return t.year - 1
    return None


def _season_bounds(year: int) -> tuple:
    return date(year, 10, 1), date(year + 1, 4, 1)  # half-open


def _steps_per_day(resolution: str) -> int:
    return 24 if resolution == "hourly" else 1


def _days_represented(d: date, resolution: str) -> list:
    if resolution in ("hourly", "daily"):
        return [d]
    if resolution == "weekly":
        return [d + timedelta(days=i) for i in range(7)]
    nxt = date(d.year + (d.month == 12), d.month % 12 + 1, 1)
    return [date(d.year, d.month, 1) + timedelta(days=i) for i in range((nxt - date(d.year, d.month, 1)).days)]


def _sum_groups(ts: TimeSeries, keys, window_starts: dict, expected: dict, resolution: str) -> TimeSeries:
    groups: dict = {}
    for k, v in zip(keys, ts.values):
        if k is not None:
            groups.setdefault(k, []).append(float(v))
    order = sorted(groups)
    stamps = tuple(window_starts[k] for k in order)
    values = np.array([math.fsum(groups[k]) for k in order], dtype=float)
    coverage = np.array([len(groups[k]) / expected[k] for k in order], dtype=float)
    return TimeSeries(stamps, values, resolution, coverage)


def aggregate(ts: TimeSeries, window: str) -> TimeSeries:
    """Sum a series over daily, weekly, monthly or seasonal windows.

    Missing steps inside a window count as zero; ``coverage`` records the
    fraction of expected steps present.  Weekly and seasonal windows only exist
    inside the wet period; seasons with fewer than 150 days of data are dropped.
    """
    if window not in ("daily", "weekly", "monthly", "seasonal"):
        raise DomainError(f"unknown aggregation window {window!r}")
    if _RANK[ts.resolution] >= _RANK[window]:
        raise DomainError(f"cannot aggregate {ts.resolution} data to {window} windows")
    if ts.resolution not in ("hourly", "daily") and window in ("daily", "weekly"):
        raise DomainError(f"cannot aggregate {ts.resolution} data to {window} windows")
    if ts.resolution in ("weekly",) and window == "monthly":
        raise DomainError("weekly blocks do not nest in calendar months")
    spd = _steps_per_day(ts.resolution)
    days = [t.date() if isinstance(t, datetime) else t for t in ts.timestamps]
    starts: dict = {}
    expected: dict = {}

    if window == "daily":
        keys = days
        for d in set(days):
            starts[d] = datetime(d.year, d.month, d.day)
            expected[d] = spd
    elif window == "monthly":
        keys = [(d.year, d.month) for d in days]
        for y, m in set(keys):
            starts[(y, m)] = datetime(y, m, 1)
            nxt = date(y + (m == 12), m % 12 + 1, 1)
            expected[(y, m)] = (nxt - date(y, m, 1)).days * spd
    elif window == "weekly":
        keys = []
        for d in days:
            s = season_of(d)
            if s is None:
                keys.append(None)
                continue
            first, end = _season_bounds(s)
            block = (d - first).days // 7
            if first + timedelta(days=7 * (block + 1)) > end:
                keys.append(None)  # trailing partial block
                continue
            k = (s, block)
            keys.append(k)
            if k not in starts:
                b0 = first + timedelta(days=7 * block)
                starts[k] = datetime(b0.year, b0.month, b0.day)
                expected[k] = 7 * spd
    else:
        keys = [season_of(d) for d in days]
        covered: dict = {}
        for d, s in zip(days, keys):
            if s is not None:
                covered.setdefault(s, set()).update(_days_represented(d, ts.resolution))
        keep = {s for s, ds in covered.items() if len(ds) >= MIN_SEASON_DAYS}
        keys = [s if s in keep else None for s in keys]
        for s in keep:
            first, end = _season_bounds(s)
            starts[s] = datetime(first.year, first.month, first.day)
            expected[s] = {"hourly": (end - first).days * 24, "daily": (end - first).days,
                           "weekly": 26, "monthly": 6}[ts.resolution]
    return _sum_groups(ts, keys, starts, expected, window)


def drop_zeros(ts: TimeSeries) -> tuple:
    """Return ``(series of strictly positive records, number removed)``."""
    mask = ts.values > 0
    return ts._subset(mask), int(np.count_nonzero(~mask))


def replace_zeros(ts: TimeSeries, small_value: float) -> TimeSeries:
    if not small_value > 0:
        raise DomainError("replacement value must be positive")
    vals = np.where(ts.values == 0, float(small_value), ts.values)
    return TimeSeries(ts.timestamps, vals, ts.resolution, ts.coverage)


@dataclass(frozen=True)
class SummaryStats:
    n: int
    n_zeros_removed: int
    mean: float
    median: float
    min: float
    max: float
    std: float
    cov: float
    skewness: float
    kurtosis: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def table(self) -> str:
        labels = {
            "n": "N", "n_zeros_removed": "N zeros removed", "mean": "mean", "median": "median",
            "min": "min", "max": "max", "std": "std", "cov": "cov", "skewness": "skewness",
            "kurtosis": "kurtosis",
        }
        width = max(len(v) for v in labels.values())
        lines = []
        for k, label in labels.items():
            v = getattr(self, k)
            lines.append(f"{label:<{width}}  {v:>14d}" if isinstance(v, int) else f"{label:<{width}}  {v:>14.6g}")
        return "\n".join(lines)


def summary_stats(values, n_zeros_removed: int = 0) -> SummaryStats:
    """Summary statistics; ``std`` uses N-1, skewness and (non-excess) kurtosis are biased moments."""
    x = np.asarray(values.values if isinstance(values, TimeSeries) else values, dtype=float).ravel()
    if x.size < 2:
        raise DegenerateSampleError("summary statistics need at least 2 values")
    mean = float(np.mean(x))
    d = x - mean
    m2 = float(np.mean(d ** 2))
    m3 = float(np.mean(d ** 3))
    m4 = float(np.mean(d ** 4))
    std = float(np.std(x, ddof=1))
    return SummaryStats(
        n=int(x.size),
        n_zeros_removed=int(n_zeros_removed),
        mean=mean,
        median=float(np.median(x)),
        min=float(np.min(x)),
        max=float(np.max(x)),
        std=std,
        cov=std / mean if mean != 0 else float("nan"),
        skewness=m3 / m2 ** 1.5 if m2 > 0 else 0.0,
        kurtosis=m4 / m2 ** 2 if m2 > 0 else float("nan"),
    )
