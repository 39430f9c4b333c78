"""Periodogram, spectrum regions and spectral-exponent fits."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .core import DataError, TimeSeries, require_finite

log = logging.getLogger(__name__)

DAY = 86400.0
LOW_CUTOFF_PERIOD = 14 * DAY
HIGH_CUTOFF_PERIOD = 32 * 60.0
MIN_FIT_BINS = 8
LOW_HARMONICS = 6

_UNITS = {"s": 1.0, "m": 60.0, "h": 3600.0, "d": DAY, "w": 7 * DAY}


@dataclass(frozen=True, eq=False)
class Spectrum:
    """One-sided PSD without the DC bin; ``power`` is in value**2/Hz."""

    freqs: np.ndarray
    power: np.ndarray
    fs: float
    n: int

    @property
    def periods(self) -> np.ndarray:
        return 1.0 / self.freqs

    @property
    def df(self) -> float:
        return self.fs / self.n

    @property
    def record_seconds(self) -> float:
        return self.n / self.fs


@dataclass(frozen=True)
class BandFit:
    beta: float
    intercept: float
    f_lo: float
    f_hi: float
    r_squared: float
    n_bins: int
    n_dropped: int = 0
    method: str = "ols"

    def to_dict(self) -> dict:
        return {
            "beta": self.beta, "intercept": self.intercept,
            "f_lo_hz": self.f_lo, "f_hi_hz": self.f_hi,
            "period_hi_s": 1.0 / self.f_lo, "period_lo_s": 1.0 / self.f_hi,
            "r_squared": self.r_squared, "n_bins": self.n_bins,
            "n_dropped_zero_bins": self.n_dropped, "method": self.method,
        }


def periodogram(x: TimeSeries, method: str = "raw", nperseg: int | None = None) -> Spectrum:
    """FFT periodogram ``S(f) = |X(f)|**2 / (fs * N)`` made one-sided.

    The series is mean-removed first.  Interior bins are doubled, the
    Nyquist bin (even N) is not, and the DC bin is dropped, so that
    ``sum(power) * fs / N`` equals the population variance.

    ``method="welch"`` swaps in a Hann-windowed Welch average
    (``scipy.signal.welch``) with segments of ``nperseg`` samples (default
    N // 8), trading frequency resolution for variance.
    """
    v = require_finite(x, "periodogram")
    n = v.size
    if n < 16:
        raise DataError(f"periodogram needs at least 16 samples, got {n}")
    fs = x.fs
    if method == "raw":
        spec = np.fft.rfft(v - v.mean())
        power = (spec.real ** 2 + spec.imag ** 2) / (fs * n)
        power[1:] *= 2.0
        if n % 2 == 0:
            power[-1] /= 2.0
        freqs = np.arange(power.size) * fs / n
        return Spectrum(freqs[1:], power[1:], fs, n)
    if method == "welch":
        seg = nperseg or max(16, n // 8)
        freqs, power = signal.welch(v, fs=fs, window="hann", nperseg=min(seg, n),
                                    detrend="constant", scaling="density")
        return Spectrum(freqs[1:], power[1:], fs, min(seg, n))
    raise ValueError(f"unknown periodogram method {method!r}")


# ------------------------------------------------------------------ bands

def parse_duration(text: str) -> float:
    """Seconds in a duration such as ``"14d"``, ``"32m"``, ``"6h"`` or ``"1920"``."""
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+(?:e[+-]?\d+)?)\s*([smhdw]?)\s*", text, re.I)
    if not m:
        raise ValueError(f"cannot parse duration {text!r}")
    return float(m.group(1)) * _UNITS[(m.group(2) or "s").lower()]


def parse_band(text: str, spec: Spectrum | None = None) -> tuple[float, float] | None:
    """Band ``"LONG:SHORT"`` in periods (e.g. ``"14d:32m"``) to ``(f_lo, f_hi)`` in Hz.

    ``"full"`` returns the whole spectrum range when *spec* is given and
    ``None`` (meaning "all bins") otherwise.
    """
    if text.strip().lower() == "full":
        if spec is None:
            return None
        return float(spec.freqs[0]), float(spec.freqs[-1])
    try:
        long_s, short_s = (parse_duration(p) for p in text.split(":"))
    except ValueError as exc:
        raise ValueError(f"band must look like '14d:32m' or 'full', got {text!r}") from exc
    if not long_s > short_s > 0:
        raise ValueError(f"band {text!r}: first period must exceed the second")
    return 1.0 / long_s, 1.0 / short_s


@dataclass(frozen=True, eq=False)
class BandAnnotation:
    """Per-bin region labels: 0 low-frequency, 1 linear-decay, 2 high-frequency."""

    region: np.ndarray
    f_lo: float
    f_hi: float

    NAMES = ("low_frequency", "linear_decay", "high_frequency")

    def mask(self, name: str) -> np.ndarray:
        return self.region == self.NAMES.index(name)

    def labels(self) -> list[str]:
        return [self.NAMES[r] for r in self.region]

    def counts(self) -> dict[str, int]:
        return {name: int(self.mask(name).sum()) for name in self.NAMES}


def segment_bands(spec: Spectrum, record_days: float | None = None,
                  band: tuple[float, float] | None = None,
                  policy: str = "absolute") -> BandAnnotation:
    """Split a spectrum into low-frequency, linear-decay and high-frequency bins.

    Default edges are periods of 14 days and 32 minutes (both inclusive in
    the linear-decay region).  ``policy="harmonics"`` instead puts the first
    six bins in the low-frequency region regardless of record length.  A
    custom *band* ``(f_lo, f_hi)`` overrides the edges.
    """
    record_s = spec.record_seconds if record_days is None else record_days * DAY
    freqs = spec.freqs
    if band is None:
        if policy == "absolute":
            if record_s < LOW_CUTOFF_PERIOD * (1 - 1e-9):
                raise DataError(
                    f"record of {record_s / DAY:.2f} days is shorter than the 14-day "
                    "low-frequency cutoff; pass a custom band")
            f_lo = 1.0 / LOW_CUTOFF_PERIOD
        elif policy == "harmonics":
            if freqs.size <= LOW_HARMONICS:
                raise DataError("spectrum has too few bins for the six-harmonic rule")
            f_lo = float(freqs[LOW_HARMONICS])
        else:
            raise ValueError(f"unknown band policy {policy!r}")
        f_hi = 1.0 / HIGH_CUTOFF_PERIOD
    else:
        f_lo, f_hi = band
    if not f_lo < f_hi:
        raise ValueError(f"band edges must satisfy f_lo < f_hi, got {f_lo}, {f_hi}")
    # relative slack so edges landing exactly on a bin stay inclusive
    tol = 1e-9 * freqs[-1]
    region = np.ones(freqs.size, dtype=np.int8)
    region[freqs < f_lo - tol] = 0
    region[freqs > f_hi + tol] = 2
    return BandAnnotation(region, float(f_lo), float(f_hi))


def default_band(spec: Spectrum) -> tuple[float, float]:
    ann = segment_bands(spec)
    return ann.f_lo, ann.f_hi


# -------------------------------------------------------------------- fit

def _linfit(xv: np.ndarray, yv: np.ndarray) -> tuple[float, float]:
    xm, ym = xv.mean(), yv.mean()
    dx = xv - xm
    slope = float(dx @ (yv - ym) / (dx @ dx))
    return slope, float(ym - slope * xm)


def _lad_fit(xv: np.ndarray, yv: np.ndarray, iters: int = 100) -> tuple[float, float]:
    """Least absolute deviations line by iteratively reweighted least squares."""
    slope, icpt = _linfit(xv, yv)
    A = np.column_stack([xv, np.ones_like(xv)])
    for _ in range(iters):
        r = np.abs(yv - (slope * xv + icpt))
        w = 1.0 / np.maximum(r, 1e-8)
        sw = np.sqrt(w)
        (new_slope, new_icpt), *_ = np.linalg.lstsq(A * sw[:, None], yv * sw, rcond=None)
        if abs(new_slope - slope) < 1e-12 and abs(new_icpt - icpt) < 1e-12:
            break
        slope, icpt = float(new_slope), float(new_icpt)
    return slope, icpt


def fit_beta(spec: Spectrum, band: tuple[float, float] | None = None,
             robust: bool = False) -> BandFit:
    """Fit ``log10 S = intercept - beta * log10 f`` over the bins inside *band*.

    *band* defaults to the 14-day to 32-minute linear-decay region.  Band
    edges are inclusive.  Zero-power bins are dropped and counted; fewer
    than 8 usable bins is an error.  ``robust=True`` uses a least absolute
    deviations line, which is less sensitive to the harmonic spikes.
    """
    if band is None:
        band = default_band(spec)
    f_lo, f_hi = band
    if not f_lo < f_hi:
        raise ValueError(f"band edges must satisfy f_lo < f_hi, got {f_lo}, {f_hi}")
    tol = 1e-9 * spec.freqs[-1]
    inside = (spec.freqs >= f_lo - tol) & (spec.freqs <= f_hi + tol)
    f = spec.freqs[inside]
    p = spec.power[inside]
    positive = p > 0
    n_dropped = int(f.size - positive.sum())
    if n_dropped:
        log.warning("fit_beta: dropped %d zero-power bins", n_dropped)
    f, p = f[positive], p[positive]
    if f.size < MIN_FIT_BINS:
        raise DataError(
            f"band [{f_lo:.4g}, {f_hi:.4g}] Hz holds {f.size} usable bins; need {MIN_FIT_BINS}")
    lx, ly = np.log10(f), np.log10(p)
    slope, icpt = (_lad_fit if robust else _linfit)(lx, ly)
    resid = ly - (slope * lx + icpt)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return BandFit(-slope, icpt, float(f_lo), float(f_hi), min(max(r2, 0.0), 1.0),
                   int(f.size), n_dropped, "lad" if robust else "ols")


def spectrum_rows(spec: Spectrum, ann: BandAnnotation | None = None):
    """(freq_hz, period_s, power, region) rows for CSV export."""
    labels = ann.labels() if ann is not None else [""] * spec.freqs.size
    for f, p, lab in zip(spec.freqs.tolist(), spec.power.tolist(), labels):
        yield f, 1.0 / f, p, lab
