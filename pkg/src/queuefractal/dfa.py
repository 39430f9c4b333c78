"""Detrended fluctuation analysis: global, windowed and sliding exponents.

Segmentation detail: the profile is taken together with its origin (the
zero that precedes the first cumulative sum), giving ``N + 1`` points.  At
scale ``s`` the ``floor(N / s)`` segments cut from the front and the same
number cut from the back are pooled.  Because the origin-anchored profile
of a reversed series is the negated reverse of the original one, pooled
segmentation makes the exponent exactly reversal-symmetric.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime

import numpy as np

from .core import CalendarWindow, DataError, TimeSeries, require_finite

log = logging.getLogger(__name__)

GLOBAL_MIN_SCALE = 2 ** 4
GLOBAL_MAX_SCALE = 2 ** 13
LOCAL_WINDOW = 1024
TRACE_STEP = 15
MIN_DECADES_GLOBAL = 1.5


class WindowSkipped(DataError):
    """A window cannot be analysed (gap, degenerate data)."""


@dataclass(frozen=True, eq=False)
class FluctuationCurve:
    scales: np.ndarray
    fluctuation: np.ndarray
    detrend_order: int = 1
    n_segments: np.ndarray | None = None
    alpha: float | None = None
    intercept: float | None = None
    r_squared: float | None = None

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha, "intercept_log2": self.intercept,
            "r_squared": self.r_squared, "detrend_order": self.detrend_order,
            "scales": self.scales.tolist(), "min_scale": int(self.scales[0]),
            "max_scale": int(self.scales[-1]),
        }


@dataclass(frozen=True)
class LocalAlpha:
    alpha: float
    r_squared: float


@dataclass(frozen=True)
class TraceEntry:
    start_index: int
    alpha: float
    r_squared: float


@dataclass(frozen=True)
class ScalingTrace:
    entries: tuple[TraceEntry, ...]
    window_len: int
    step: int
    dt_seconds: float = 1.0
    t0: datetime | None = None
    skipped: tuple[tuple[int, str], ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def starts(self) -> np.ndarray:
        return np.array([e.start_index for e in self.entries], dtype=np.int64)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([e.alpha for e in self.entries])


def power_of_two_scales(min_scale: int, max_scale: int) -> np.ndarray:
    lo = math.ceil(math.log2(min_scale))
    hi = math.floor(math.log2(max_scale))
    return 2 ** np.arange(lo, hi + 1, dtype=np.int64)


def profile(x: TimeSeries | np.ndarray) -> np.ndarray:
    """Cumulative sum of the mean-removed series (same length as the input)."""
    v = require_finite(x, "profile") if isinstance(x, TimeSeries) else np.asarray(x, float)
    return np.cumsum(v - v.mean())


def _anchored_profile(v: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0], np.cumsum(v - v.mean())))


def _detrend_basis(s: int, order: int) -> np.ndarray:
    # centred, scaled abscissa keeps the Vandermonde matrix well conditioned
    t = np.linspace(-1.0, 1.0, s)
    q, _ = np.linalg.qr(np.vander(t, order + 1))
    return q


def _mean_sq_residual(z: np.ndarray, n: int, s: int, order: int) -> float:
    k = n // s
    segs = np.concatenate([z[:k * s].reshape(k, s), z[n + 1 - k * s:].reshape(k, s)])
    q = _detrend_basis(s, order)
    resid = segs - (segs @ q) @ q.T
    return float(np.mean(resid ** 2))


def fluctuation(x: TimeSeries | np.ndarray, scales, detrend_order: int = 1) -> FluctuationCurve:
    """F(s) for each scale: RMS residual of polynomial detrending, pooled
    over front and back segmentations of the profile."""
    v = require_finite(x, "DFA") if isinstance(x, TimeSeries) else np.asarray(x, float)
    n = v.size
    scales = np.asarray(sorted(set(int(s) for s in scales)), dtype=np.int64)
    if scales.size == 0:
        raise ValueError("no scales given")
    if detrend_order < 1:
        raise ValueError("detrend_order must be >= 1")
    if scales[0] < detrend_order + 2:
        raise ValueError(f"minimum scale must be >= detrend_order + 2 = {detrend_order + 2}")
    if scales[-1] > n / 4:
        raise DataError(f"max scale {scales[-1]} exceeds length/4 = {n / 4:g} (length {n})")
    if np.ptp(v) == 0:
        raise DataError("constant series: fluctuation function is identically zero")
    z = _anchored_profile(v)
    f2 = np.array([_mean_sq_residual(z, n, int(s), detrend_order) for s in scales])
    if not (f2 > 0).all():
        raise DataError("fluctuation function vanished at some scale")
    return FluctuationCurve(scales, np.sqrt(f2), detrend_order, 2 * (n // scales))


def fit_alpha(curve: FluctuationCurve) -> FluctuationCurve:
    """Least-squares slope of log2 F against log2 s."""
    s, f = curve.scales, curve.fluctuation
    if s.size < 4:
        raise DataError(f"need at least 4 scales to fit alpha, got {s.size}")
    if not (f > 0).all():
        raise DataError("fluctuation values must be positive to take logs")
    lx, ly = np.log2(s.astype(float)), np.log2(f)
    dx = lx - lx.mean()
    slope = float(dx @ (ly - ly.mean()) / (dx @ dx))
    icpt = float(ly.mean() - slope * lx.mean())
    resid = ly - (slope * lx + icpt)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return replace(curve, alpha=slope, intercept=icpt, r_squared=r2)


def dfa_global(x: TimeSeries, min_scale: int = GLOBAL_MIN_SCALE,
               max_scale: int = GLOBAL_MAX_SCALE, detrend_order: int = 1,
               min_decades: float = MIN_DECADES_GLOBAL) -> FluctuationCurve:
    """Whole-record exponent over power-of-two scales ``min_scale..max_scale``."""
    v = require_finite(x, "global DFA")
    if max_scale > v.size / 4:
        raise DataError(
            f"series of length {v.size} is too short for max scale {max_scale} "
            f"(needs >= {4 * max_scale} samples)")
    scales = power_of_two_scales(min_scale, max_scale)
    if scales.size < 2 or math.log10(scales[-1] / scales[0]) < min_decades:
        raise DataError(f"scales {min_scale}..{max_scale} span less than {min_decades} decades")
    return fit_alpha(fluctuation(v, scales, detrend_order))


def _local(v: np.ndarray, scales: np.ndarray, order: int) -> LocalAlpha:
    curve = fit_alpha(fluctuation(v, scales, order))
    return LocalAlpha(curve.alpha, curve.r_squared)


def dfa_local(x: TimeSeries, window: CalendarWindow, max_scale: int | None = None,
              min_scale: int = GLOBAL_MIN_SCALE, detrend_order: int = 1) -> LocalAlpha:
    """Exponent of one window; ``max_scale`` defaults to a quarter of its length.

    Raises :class:`WindowSkipped` when the window touches a gap or is
    degenerate.
    """
    if window.stop > len(x):
        raise DataError(f"window {window.start_index}+{window.length} exceeds series")
    v = x.values[window.start_index:window.stop]
    if np.isnan(v).any():
        raise WindowSkipped(f"window at {window.start_index} overlaps a gap")
    scales = power_of_two_scales(min_scale, max_scale or window.length // 4)
    try:
        return _local(v, scales, detrend_order)
    except WindowSkipped:
        raise
    except DataError as exc:
        raise WindowSkipped(f"window at {window.start_index}: {exc}") from exc


def alpha_t(x: TimeSeries, window_len: int = LOCAL_WINDOW, step: int = TRACE_STEP,
            max_scale: int | None = None, min_scale: int = GLOBAL_MIN_SCALE,
            detrend_order: int = 1, workers: int | None = None) -> ScalingTrace:
    """Sliding-window exponent at starts ``0, step, 2*step, ...``.

    Windows that touch a gap or hold constant data are omitted and listed in
    ``ScalingTrace.skipped``.  With ``workers`` > 1 windows run on a thread
    pool; entries stay in start order.
    """
    if window_len < 1 or step < 1:
        raise ValueError("window_len and step must be positive")
    n = len(x)
    if n < window_len:
        raise DataError(f"series of length {n} is shorter than the window ({window_len})")
    starts = range(0, n - window_len + 1, step)
    scales = power_of_two_scales(min_scale, max_scale or window_len // 4)
    values = x.values

    def one(start: int):
        v = values[start:start + window_len]
        if np.isnan(v).any():
            return start, "overlaps a gap"
        try:
            return start, _local(v, scales, detrend_order)
        except DataError as exc:
            return start, str(exc)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, starts))
    else:
        results = [one(s) for s in starts]

    entries, skipped = [], []
    for start, res in results:
        if isinstance(res, LocalAlpha):
            entries.append(TraceEntry(start, res.alpha, res.r_squared))
        else:
            skipped.append((start, res))
    if skipped:
        log.info("alpha_t: skipped %d of %d windows", len(skipped), len(results))
    return ScalingTrace(tuple(entries), window_len, step, x.dt_seconds, x.t0, tuple(skipped))
