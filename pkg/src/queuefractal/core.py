"""Time-series container, calendar helpers, CSV ingestion and preprocessing.

Gaps are carried inside a :class:`TimeSeries` as NaN samples.  Short gaps
are interpolated by :func:`interpolate_gaps`; long ones stay NaN and act as
split markers, so windowed analyses keep absolute (calendar) indexing and
simply skip any window that touches a NaN.  :func:`fill_gaps` returns the
contiguous segments as separate series.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Literal

import numpy as np

DayType = Literal["weekday", "weekend"]

DEFAULT_MAX_GAP = 15
DEFAULT_HAMPEL_HALF_WIDTH = 15
DEFAULT_HAMPEL_SIGMAS = 3.0
MAD_SCALE = 1.4826
HAMPEL_MAX_PASSES = 1000


class DataError(ValueError):
    """Input data cannot support the requested computation."""


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled real series.

    ``values`` may contain NaN only as gap markers produced by ingestion;
    every analysis routine either rejects such samples or skips the windows
    that contain them.
    """

    values: np.ndarray
    dt_seconds: float
    t0: datetime | None = None
    label: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise DataError("TimeSeries needs a non-empty 1-d array of values")
        if np.isinf(v).any():
            raise DataError("TimeSeries values must not be infinite")
        if not (self.dt_seconds > 0 and math.isfinite(self.dt_seconds)):
            raise DataError(f"dt_seconds must be positive, got {self.dt_seconds!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "dt_seconds", float(self.dt_seconds))

    def __len__(self) -> int:
        return self.values.size

    @property
    def fs(self) -> float:
        return 1.0 / self.dt_seconds

    @property
    def duration_seconds(self) -> float:
        return len(self) * self.dt_seconds

    @property
    def has_gaps(self) -> bool:
        return bool(np.isnan(self.values).any())

    def timestamp(self, index: int) -> datetime:
        if self.t0 is None:
            raise DataError("series has no wall-clock anchor (t0)")
        return self.t0 + timedelta(seconds=index * self.dt_seconds)

    def with_values(self, values) -> "TimeSeries":
        return replace(self, values=values)

    def slice(self, start: int, stop: int) -> "TimeSeries":
        t0 = None if self.t0 is None else self.timestamp(start)
        return TimeSeries(self.values[start:stop], self.dt_seconds, t0, self.label)


@dataclass(frozen=True)
class CalendarWindow:
    start_index: int
    length: int
    day_type: DayType | None = None

    def __post_init__(self):
        if self.start_index < 0 or self.length <= 0:
            raise ValueError(f"invalid window {self.start_index}+{self.length}")

    @property
    def stop(self) -> int:
        return self.start_index + self.length

    @classmethod
    def of(cls, x: TimeSeries, start_index: int, length: int,
           utc_offset_hours: float | None = None) -> "CalendarWindow":
        """Window over *x* with ``day_type`` filled in when *x* has an anchor."""
        if start_index + length > len(x):
            raise DataError(
                f"window {start_index}+{length} exceeds series length {len(x)}")
        dtype = None
        if x.t0 is not None:
            dtype = day_type(x.t0, start_index, x.dt_seconds, utc_offset_hours)
        return cls(start_index, length, dtype)


def to_local(ts: datetime, utc_offset_hours: float | None = None) -> datetime:
    """Express *ts* in a fixed UTC offset (no DST).

    Naive timestamps are taken to be local already.  With no offset given an
    aware timestamp keeps its own offset.
    """
    if utc_offset_hours is None or ts.tzinfo is None:
        return ts
    return ts.astimezone(timezone(timedelta(hours=utc_offset_hours)))


def day_type(t0: datetime | None, start_index: int, dt_seconds: float,
             utc_offset_hours: float | None = None) -> DayType:
    """Weekend if the instant ``t0 + start_index*dt`` falls on Saturday/Sunday."""
    if t0 is None:
        raise DataError("day type needs a wall-clock anchor (t0)")
    ts = to_local(t0 + timedelta(seconds=start_index * dt_seconds), utc_offset_hours)
    return "weekend" if ts.weekday() >= 5 else "weekday"


# ---------------------------------------------------------------- CSV I/O

def _parse_time(text: str) -> float:
    """Seconds since the epoch for ISO-8601 or numeric epoch input."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        # naive wall-clock time; keep it naive by measuring from a naive epoch
        return (ts - datetime(1970, 1, 1)).total_seconds()
    return ts.timestamp()


def ingest_csv(path, time_col: str = "timestamp", value_col: str = "value",
               label: str | None = None) -> TimeSeries:
    """Read a two-column series into a TimeSeries on a uniform grid.

    The sampling interval is the (lower) median gap between rows.  Rows land on the
    grid slot nearest to them; slots with no row (or an empty value cell)
    become NaN gap markers.  A row more than 1% of ``dt`` away from its slot
    is treated as a gap too.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise DataError(f"{path}: empty file")
            missing = {time_col, value_col} - set(reader.fieldnames)
            if missing:
                raise DataError(f"{path}: missing column(s) {sorted(missing)}")
            raw_t, raw_v, first_time = [], [], None
            for row in reader:
                t_text = row[time_col]
                if first_time is None:
                    first_time = t_text.strip()
                try:
                    raw_t.append(_parse_time(t_text))
                except ValueError as exc:
                    raise DataError(f"{path}: bad timestamp {t_text!r}") from exc
                v_text = (row[value_col] or "").strip()
                try:
                    raw_v.append(float(v_text) if v_text else math.nan)
                except ValueError as exc:
                    raise DataError(f"{path}: bad value {v_text!r}") from exc
    except (OSError, UnicodeDecodeError) as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc

    if len(raw_t) < 2:
        raise DataError(f"{path}: need at least 2 rows, got {len(raw_t)}")
    t = np.asarray(raw_t)
    gaps = np.diff(t)
    if (gaps <= 0).any():
        i = int(np.argmax(gaps <= 0)) + 1
        raise DataError(f"{path}: timestamps not strictly increasing at row {i}")
    # lower median: with an even gap count the midpoint of two gaps is not a gap
    dt = float(np.sort(gaps)[(gaps.size - 1) // 2])
    if not dt > 0:
        raise DataError(f"{path}: inferred sampling interval {dt} is not positive")

    offsets = (t - t[0]) / dt
    slots = np.rint(offsets).astype(np.int64)
    on_grid = np.abs(offsets - slots) <= 0.01
    if np.any(np.diff(slots) == 0):
        raise DataError(f"{path}: two rows map to the same sampling slot")
    values = np.full(int(slots[-1]) + 1, np.nan)
    values[slots[on_grid]] = np.asarray(raw_v)[on_grid]

    t0 = _anchor(first_time, t[0])
    return TimeSeries(values, dt, t0, label if label is not None else path.stem)


def _anchor(first_text: str, first_seconds: float) -> datetime:
    try:
        float(first_text)
        return datetime.fromtimestamp(first_seconds, tz=timezone.utc)
    except ValueError:
        text = first_text[:-1] + "+00:00" if first_text.endswith("Z") else first_text
        return datetime.fromisoformat(text)


def write_csv(x: TimeSeries, path, time_col: str = "timestamp",
              value_col: str = "value") -> None:
    """Write *x* in the format :func:`ingest_csv` reads back bit-identically.

    Without a wall-clock anchor the time column holds elapsed seconds.
    NaN gap markers are written as empty cells.
    """
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([time_col, value_col])
        for i, v in enumerate(x.values.tolist()):
            if x.t0 is None:
                stamp = repr(i * x.dt_seconds)
            else:
                stamp = x.timestamp(i).isoformat()
            w.writerow([stamp, "" if math.isnan(v) else repr(v)])


# ---------------------------------------------------------- preprocessing

def finite_runs(values: np.ndarray) -> list[tuple[int, int]]:
    """(start, stop) of maximal runs of non-NaN samples."""
    ok = ~np.isnan(values)
    edges = np.diff(np.concatenate(([0], ok.astype(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    return list(zip(starts.tolist(), stops.tolist()))


def hampel_filter(x: TimeSeries, window_half_width: int = DEFAULT_HAMPEL_HALF_WIDTH,
                  n_sigmas: float = DEFAULT_HAMPEL_SIGMAS,
                  max_passes: int | None = 1) -> TimeSeries:
    """Replace samples far from their rolling median by that median.

    A sample is an outlier when ``|x - med| > n_sigmas * 1.4826 * MAD`` over
    the centred window of ``2*window_half_width + 1`` samples (truncated at
    the ends).  With MAD = 0 every sample not equal to the median is
    replaced.  The output has the input's length.

    One pass by default, which never touches more samples than were flagged
    on that pass.  A single pass is not idempotent on noisy data because the
    replacements shift neighbouring medians; ``max_passes=None`` repeats
    until nothing is flagged, which is idempotent by construction.
    """
    k = int(window_half_width)
    if k < 1:
        raise ValueError("window_half_width must be >= 1")
    if n_sigmas <= 0:
        raise ValueError("n_sigmas must be positive")
    v = x.values
    if v.size <= 2 * k:
        raise DataError(f"series of length {v.size} too short for half-width {k}")
    if np.isnan(v).any():
        raise DataError("hampel_filter needs a gap-free series; see clean()")

    limit = HAMPEL_MAX_PASSES if max_passes is None else max_passes
    for _ in range(limit):
        med, mad = _rolling_median_mad(v, k)
        outlier = np.abs(v - med) > n_sigmas * MAD_SCALE * mad
        if not outlier.any():
            break
        v = np.where(outlier, med, v)
    else:
        if max_passes is None:
            raise RuntimeError(f"Hampel filter did not converge in {limit} passes")
    return x.with_values(v)


def _rolling_median_mad(v: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    n = v.size
    med = np.empty(n)
    mad = np.empty(n)
    win = np.lib.stride_tricks.sliding_window_view(v, 2 * k + 1)
    m = np.median(win, axis=1)
    med[k:n - k] = m
    mad[k:n - k] = np.median(np.abs(win - m[:, None]), axis=1)
    for i in list(range(k)) + list(range(n - k, n)):
        w = v[max(0, i - k):i + k + 1]
        med[i] = np.median(w)
        mad[i] = np.median(np.abs(w - med[i]))
    return med, mad


def interpolate_gaps(x: TimeSeries, max_gap: int = DEFAULT_MAX_GAP) -> TimeSeries:
    """Linearly fill interior NaN runs of at most *max_gap* samples.

    Longer runs, and runs touching either end, are left as NaN so they keep
    splitting the series.
    """
    v = np.array(x.values)
    runs = finite_runs(v)
    for (_, a), (b, _) in zip(runs, runs[1:]):
        if b - a <= max_gap:
            lo, hi = v[a - 1], v[b]
            frac = np.arange(1, b - a + 1) / (b - a + 1)
            v[a:b] = lo + (hi - lo) * frac
    return x.with_values(v)


def split_segments(x: TimeSeries, min_length: int = 1) -> list[TimeSeries]:
    """Contiguous NaN-free pieces of *x*, in time order, each with its own t0."""
    return [x.slice(a, b) for a, b in finite_runs(x.values) if b - a >= min_length]


def fill_gaps(x: TimeSeries, max_gap: int = DEFAULT_MAX_GAP) -> list[TimeSeries]:
    """Interpolate short gaps, split at long ones.

    Returns the ordered list of contiguous segments; an all-gap series gives
    an empty list.
    """
    return split_segments(interpolate_gaps(x, max_gap))


def clean(x: TimeSeries, max_gap: int = DEFAULT_MAX_GAP,
          hampel_half_width: int | None = DEFAULT_HAMPEL_HALF_WIDTH,
          n_sigmas: float = DEFAULT_HAMPEL_SIGMAS) -> TimeSeries:
    """Gap interpolation followed by Hampel filtering of each contiguous run.

    Long gaps survive as NaN.  Runs too short for the Hampel window are
    passed through untouched.  ``hampel_half_width=None`` skips filtering.
    """
    y = interpolate_gaps(x, max_gap)
    if hampel_half_width is None:
        return y
    v = np.array(y.values)
    for a, b in finite_runs(v):
        if b - a > 2 * hampel_half_width:
            seg = TimeSeries(v[a:b], y.dt_seconds)
            v[a:b] = hampel_filter(seg, hampel_half_width, n_sigmas).values
    return y.with_values(v)


def require_finite(x: TimeSeries, what: str = "this analysis") -> np.ndarray:
    if x.has_gaps:
        raise DataError(f"{what} needs a contiguous series without gaps")
    return x.values


def window_has_gap(x: TimeSeries, start: int, length: int) -> bool:
    return bool(np.isnan(x.values[start:start + length]).any())

