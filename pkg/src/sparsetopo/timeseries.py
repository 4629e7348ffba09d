"""Loading and preprocessing of raw multivariate series.

Raw series live on an integer day grid and may have gaps.  The pipeline is
``load_csv -> spline_fill -> log_returns -> assemble``; the last step stacks
the rows and removes their means.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DimensionError, DomainError, ExtrapolationError, ParseError

_GAP_TOKENS = {"", "nan", "NaN", "NAN", "na", "NA"}


@dataclass(frozen=True)
class RawSeries:
    node_id: str
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        vals = np.asarray(self.values, dtype=float)
        if ts.ndim != 1 or ts.shape != vals.shape:
            raise DimensionError(
                f"series {self.node_id!r}: timestamps and values must be 1-D of equal length"
            )
        if ts.size < 2:
            raise DimensionError(f"series {self.node_id!r} needs at least 2 samples")
        if np.any(np.diff(ts) <= 0):
            raise DomainError(f"series {self.node_id!r}: timestamps not strictly increasing")
        if not np.all(np.isfinite(vals)):
            raise DomainError(f"series {self.node_id!r}: non-finite values")
        ts.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size

    def gaps(self) -> np.ndarray:
        """Day indices between the first and last timestamp with no sample."""
        full = np.arange(self.timestamps[0], self.timestamps[-1] + 1)
        return np.setdiff1d(full, self.timestamps)

    @property
    def has_gaps(self) -> bool:
        return self.timestamps[-1] - self.timestamps[0] + 1 != self.timestamps.size


@dataclass(frozen=True)
class TimeSeriesSet:
    node_ids: list[str]
    data: np.ndarray
    mean_removed: bool = False

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim != 2:
            raise DimensionError("data must be an N x T matrix")
        n, T = data.shape
        if n < 2 or T < 2:
            raise DimensionError(f"need N >= 2 and T >= 2, got {n} x {T}")
        ids = [str(s) for s in self.node_ids]
        if len(ids) != n:
            raise DimensionError(f"{len(ids)} node ids for {n} rows")
        if len(set(ids)) != n:
            raise DimensionError("node ids must be distinct")
        data.setflags(write=False)
        object.__setattr__(self, "node_ids", ids)
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def T(self) -> int:
        return self.data.shape[1]

    def to_json(self) -> dict:
        return {
            "node_ids": list(self.node_ids),
            "T": self.T,
            "rows": self.data.tolist(),
            "mean_removed": self.mean_removed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TimeSeriesSet":
        data = np.asarray(obj["rows"], dtype=float)
        if data.shape[1] != obj["T"]:
            raise DimensionError(f"T={obj['T']} but rows have length {data.shape[1]}")
        return cls(obj["node_ids"], data, bool(obj.get("mean_removed", False)))

    def permuted(self, order: Sequence[int]) -> "TimeSeriesSet":
        order = list(order)
        return TimeSeriesSet([self.node_ids[k] for k in order], self.data[order], self.mean_removed)


@dataclass
class CsvSchema:
    """Column mapping for :func:`load_csv`.

    ``value_columns=None`` takes every column except the timestamp column.
    Timestamps are parsed as integers if possible, otherwise as ISO dates
    and converted to day offsets from the earliest date in the file.
    """

    time_column: str = "t"
    value_columns: list[str] | None = None
    delimiter: str = ","
    extra_gap_tokens: set[str] = field(default_factory=set)


def _parse_times(raw: list[str], column: str) -> np.ndarray:
    try:
        return np.array([int(s) for s in raw], dtype=np.int64)
    except ValueError:
        pass
    try:
        days = np.array([date.fromisoformat(s.strip()).toordinal() for s in raw], dtype=np.int64)
    except ValueError as exc:
        raise ParseError(f"column {column!r}: timestamps are neither integers nor ISO dates") from exc
    return days - days.min()


def load_csv(path: str | Path, schema: CsvSchema | None = None) -> list[RawSeries]:
    schema = schema or CsvSchema()
    gap_tokens = _GAP_TOKENS | schema.extra_gap_tokens
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        rows = [r for r in reader if r]

    for pos, name in enumerate(header):
        if not name:
            raise ParseError(f"{path}: empty column name at position {pos}")
    dupes = sorted({h for h in header if header.count(h) > 1})
    if dupes:
        raise ParseError(f"{path}: duplicate column {dupes[0]!r}")
    if schema.time_column not in header:
        raise ParseError(f"{path}: missing timestamp column {schema.time_column!r}")
    value_cols = schema.value_columns
    if value_cols is None:
        value_cols = [h for h in header if h != schema.time_column]
    for col in value_cols:
        if col not in header:
            raise ParseError(f"{path}: missing value column {col!r}")
    if len(value_cols) < 2:
        raise DimensionError(f"{path}: need at least 2 value columns, found {len(value_cols)}")

    for lineno, r in enumerate(rows, start=2):
        if len(r) != len(header):
            raise ParseError(f"{path}: line {lineno} has {len(r)} fields, header has {len(header)}")

    t_idx = header.index(schema.time_column)
    times = _parse_times([r[t_idx] for r in rows], schema.time_column)

    out = []
    for col in value_cols:
        c = header.index(col)
        keep_t, keep_v = [], []
        for t, r in zip(times, rows):
            cell = r[c].strip()
            if cell in gap_tokens:
                continue
            try:
                v = float(cell)
            except ValueError:
                continue
            if math.isfinite(v):
                keep_t.append(t)
                keep_v.append(v)
        out.append(RawSeries(col, np.array(keep_t), np.array(keep_v)))
    return out


def spline_fill(series: RawSeries, grid: Sequence[int] | np.ndarray) -> RawSeries:
    """Fill ``series`` onto ``grid`` with a natural cubic spline through its samples."""
    grid = np.asarray(grid, dtype=np.int64)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be strictly increasing with at least 2 points")
    if len(series) < 4:
        raise DimensionError(f"series {series.node_id!r}: spline fill needs at least 4 known points")
    lo, hi = series.timestamps[0], series.timestamps[-1]
    if grid[0] < lo or grid[-1] > hi:
        raise ExtrapolationError(
            f"series {series.node_id!r}: grid [{grid[0]}, {grid[-1]}] exceeds observed range [{lo}, {hi}]"
        )
    spline = CubicSpline(series.timestamps, series.values, bc_type="natural")
    filled = spline(grid)
    # knots are copied, not evaluated, so they are reproduced bit-for-bit
    pos = np.searchsorted(series.timestamps, grid)
    pos = np.minimum(pos, series.timestamps.size - 1)
    known = series.timestamps[pos] == grid
    filled[known] = series.values[pos[known]]
    return RawSeries(series.node_id, grid, filled)


def log_returns(series: RawSeries) -> RawSeries:
    if series.has_gaps:
        raise DomainError(f"series {series.node_id!r} has gaps; fill them first")
    bad = np.flatnonzero(series.values <= 0)
    if bad.size:
        raise DomainError(
            f"series {series.node_id!r}: nonpositive value {series.values[bad[0]]} at index {bad[0]}"
        )
    r = np.log(series.values[1:] / series.values[:-1])
    return RawSeries(series.node_id, series.timestamps[1:], r)


def assemble(series_list: Sequence[RawSeries]) -> TimeSeriesSet:
    if len(series_list) < 2:
        raise DimensionError("need at least 2 series")
    for s in series_list:
        if s.has_gaps:
            raise DimensionError(f"series {s.node_id!r} has gaps")
    ref = series_list[0]
    bad = [
        s.node_id
        for s in series_list
        if len(s) != len(ref) or not np.array_equal(s.timestamps, ref.timestamps)
    ]
    if bad:
        raise DimensionError(f"series not aligned with {ref.node_id!r}: {', '.join(bad)}")
    data = np.vstack([s.values for s in series_list])
    data = data - data.mean(axis=1, keepdims=True)
    return TimeSeriesSet([s.node_id for s in series_list], data, mean_removed=True)


def center(ts: TimeSeriesSet) -> TimeSeriesSet:
    """Remove each row's sample mean."""
    return TimeSeriesSet(ts.node_ids, ts.data - ts.data.mean(axis=1, keepdims=True), mean_removed=True)


def standardize(ts: TimeSeriesSet) -> TimeSeriesSet:
    """Center each row and scale it to unit sample variance.

    Channel norms of Wiener filters depend on input scale; unit-variance rows
    make them comparable across nodes.  Constant rows are only centered.
    """
    data = ts.data - ts.data.mean(axis=1, keepdims=True)
    std = data.std(axis=1, keepdims=True)
    data = np.divide(data, std, out=data.copy(), where=std > 0)
    return TimeSeriesSet(ts.node_ids, data, mean_removed=True)


def save_json(ts: TimeSeriesSet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(ts.to_json()))


def load_json(path: str | Path) -> TimeSeriesSet:
    return TimeSeriesSet.from_json(json.loads(Path(path).read_text()))


def write_csv(ts: TimeSeriesSet, path: str | Path, time_column: str = "t") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([time_column, *ts.node_ids])
        for t in range(ts.T):
            w.writerow([t, *(repr(float(v)) for v in ts.data[:, t])])
