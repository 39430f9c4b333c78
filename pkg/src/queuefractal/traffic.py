"""Queue-length analytics: congestion indicator, daily exponent/congestion
pairs, weekday/weekend correlation and the beta ~ 2*alpha - 1 check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta

import numpy as np

from .core import CalendarWindow, DataError, DayType, TimeSeries, day_type, to_local
from .dfa import LOCAL_WINDOW, ScalingTrace, WindowSkipped, dfa_local

DAILY_THRESHOLD = 0.6
TRACE_THRESHOLD = 0.5
ANCHOR_HOUR = 7.0
BROWNIAN_RANGE = (1.0, 1.3)
MIN_PAIRS = 3


@dataclass(frozen=True)
class CongestionConfig:
    capacity: float
    threshold_fraction: float = DAILY_THRESHOLD

    def __post_init__(self):
        if not self.capacity > 0:
            raise ValueError(f"capacity must be positive, got {self.capacity!r}")
        if not 0 < self.threshold_fraction < 1:
            raise ValueError(
                f"threshold_fraction must be in (0, 1), got {self.threshold_fraction!r}")

    @property
    def threshold(self) -> float:
        return self.threshold_fraction * self.capacity


def congestion_q(x: TimeSeries, window: CalendarWindow, cfg: CongestionConfig) -> int:
    """Number of samples in the window strictly above the threshold."""
    if window.stop > len(x):
        raise DataError(f"window {window.start_index}+{window.length} exceeds series")
    v = x.values[window.start_index:window.stop]
    return int(np.count_nonzero(v > cfg.threshold))


# ------------------------------------------------------------ daily pairs

@dataclass(frozen=True)
class DailyPair:
    start_index: int
    date: date
    day_type: DayType
    alpha: float
    q: int
    r_squared: float = math.nan


@dataclass(frozen=True)
class DailyPairs:
    pairs: tuple[DailyPair, ...]
    skipped: tuple[tuple[date, str], ...] = field(default_factory=tuple)

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]


def daily_windows(x: TimeSeries, window_len: int = LOCAL_WINDOW,
                  anchor_hour: float = ANCHOR_HOUR,
                  utc_offset_hours: float | None = None) -> list[CalendarWindow]:
    """One window per calendar day starting at the first sample at or after
    ``anchor_hour`` local time; only windows that fit in the series."""
    if x.t0 is None:
        raise DataError("daily analysis needs a wall-clock anchor (t0)")
    local0 = to_local(x.t0, utc_offset_hours)
    anchor = local0.replace(hour=0, minute=0, second=0, microsecond=0) + \
        timedelta(hours=anchor_hour)
    if anchor < local0:
        anchor += timedelta(days=1)
    out = []
    while True:
        offset = (anchor - local0).total_seconds() / x.dt_seconds
        start = math.ceil(offset - 1e-9)
        if start + window_len > len(x):
            break
        out.append(CalendarWindow(start, window_len,
                                  day_type(x.t0, start, x.dt_seconds, utc_offset_hours)))
        anchor += timedelta(days=1)
    return out


def daily_pairs(x: TimeSeries, cfg: CongestionConfig, window_len: int = LOCAL_WINDOW,
                anchor_hour: float = ANCHOR_HOUR, utc_offset_hours: float | None = None,
                detrend_order: int = 1) -> DailyPairs:
    """Daily exponent and congestion indicator over identical windows.

    Days whose window touches a gap (or is degenerate) are left out and
    listed in ``skipped`` with the reason.
    """
    pairs, skipped = [], []
    for w in daily_windows(x, window_len, anchor_hour, utc_offset_hours):
        day = to_local(x.timestamp(w.start_index), utc_offset_hours).date()
        try:
            loc = dfa_local(x, w, detrend_order=detrend_order)
        except WindowSkipped as exc:
            skipped.append((day, str(exc)))
            continue
        pairs.append(DailyPair(w.start_index, day, w.day_type, loc.alpha,
                               congestion_q(x, w, cfg), loc.r_squared))
    return DailyPairs(tuple(pairs), tuple(skipped))


# ------------------------------------------------------------ correlation

def pearson(a, b) -> float | None:
    """Pearson r, or None with fewer than 3 points or zero variance."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < MIN_PAIRS:
        return None
    da, db = a - a.mean(), b - b.mean()
    sa, sb = math.sqrt(da @ da), math.sqrt(db @ db)
    if sa == 0 or sb == 0 or sa < 1e-12 * np.abs(a).max() or sb < 1e-12 * np.abs(b).max():
        return None
    return float(min(1.0, max(-1.0, (da @ db) / (sa * sb))))


@dataclass(frozen=True)
class CorrelationReport:
    r_all: float | None
    r_weekday: float | None
    r_weekend: float | None
    n_all: int
    n_weekday: int
    n_weekend: int
    pairs: tuple = ()

    def to_dict(self) -> dict:
        out = {}
        for key in ("all", "weekday", "weekend"):
            r = getattr(self, f"r_{key}")
            out[f"r_{key}"] = r
            out[f"n_{key}"] = getattr(self, f"n_{key}")
        out["undefined"] = [k for k in ("r_all", "r_weekday", "r_weekend") if out[k] is None]
        return out


def correlate(pairs) -> CorrelationReport:
    """Pearson r between alpha and q over all pairs and per day type.

    *pairs* are objects with ``alpha``, ``q`` and ``day_type`` attributes.
    Subsets with fewer than 3 pairs or no variance report ``None``.
    """
    pairs = tuple(pairs)
    if len(pairs) < MIN_PAIRS:
        raise DataError(f"need at least {MIN_PAIRS} pairs to correlate, got {len(pairs)}")

    def r_of(sub):
        return pearson([p.alpha for p in sub], [p.q for p in sub])

    wk = [p for p in pairs if p.day_type == "weekday"]
    we = [p for p in pairs if p.day_type == "weekend"]
    return CorrelationReport(r_of(pairs), r_of(wk), r_of(we),
                             len(pairs), len(wk), len(we), pairs)


@dataclass(frozen=True)
class WKCheck:
    beta: float
    alpha: float
    beta_tilde: float
    abs_diff: float
    rel_diff_pct: float | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def wk_check(beta: float, alpha: float) -> WKCheck:
    """Compare a spectral exponent with ``2*alpha - 1`` from DFA."""
    bt = 2.0 * alpha - 1.0
    diff = abs(beta - bt)
    rel = 100.0 * diff / abs(beta) if beta != 0 else None
    return WKCheck(beta, alpha, bt, diff, rel)


# ------------------------------------------------------------ alpha(t) / Q(t)

def q_trace(x: TimeSeries, trace: ScalingTrace, cfg: CongestionConfig) -> np.ndarray:
    """Congestion indicator over each window of *trace*."""
    return np.array([congestion_q(x, CalendarWindow(s, trace.window_len), cfg)
                     for s in trace.starts.tolist()], dtype=np.int64)


def _stats(alpha: np.ndarray, q: np.ndarray | None) -> dict:
    if alpha.size == 0:
        return {"n": 0}
    lo, hi = BROWNIAN_RANGE
    out = {
        "n": int(alpha.size),
        "alpha_mean": float(alpha.mean()),
        "alpha_std": float(alpha.std()),
        "alpha_min": float(alpha.min()),
        "alpha_max": float(alpha.max()),
        "frac_alpha_gt_1": float(np.mean(alpha > 1.0)),
        "brownian_fraction": float(np.mean((alpha >= lo) & (alpha <= hi))),
    }
    if q is not None:
        out["q_mean"] = float(q.mean())
        out["r_alpha_q"] = pearson(alpha, q)
    return out


def classify_trace(trace: ScalingTrace, q: np.ndarray | None = None,
                   utc_offset_hours: float | None = None) -> dict:
    """Descriptive statistics of an alpha(t) trace, overall and by day type.

    The Brownian-regime indicator is the fraction of windows with alpha in
    [1.0, 1.3].  Day types need ``trace.t0``; without it only the overall
    block is filled.
    """
    if len(trace) == 0:
        raise DataError("empty trace")
    alpha = trace.alphas
    if q is not None:
        q = np.asarray(q)
        if q.size != alpha.size:
            raise ValueError("q must have one value per trace entry")
    out = {"all": _stats(alpha, q)}
    if trace.t0 is not None:
        kinds = np.array([day_type(trace.t0, s, trace.dt_seconds, utc_offset_hours)
                          for s in trace.starts.tolist()])
        for kind in ("weekday", "weekend"):
            m = kinds == kind
            out[kind] = _stats(alpha[m], None if q is None else q[m])
    return out


def trace_timestamps(trace: ScalingTrace) -> list[datetime | None]:
    if trace.t0 is None:
        return [None] * len(trace)
    return [trace.t0 + timedelta(seconds=s * trace.dt_seconds) for s in trace.starts.tolist()]
