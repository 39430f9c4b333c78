"""Fractal scaling analysis of queue-length time series.

Spectral exponent from the FFT periodogram, DFA scaling exponent (global,
daily and sliding), congestion indicator and exponent/congestion
correlation, with synthetic fGn/fBm/power-law generators as ground truth.
"""

from .core import (
    CalendarWindow,
    DataError,
    TimeSeries,
    clean,
    day_type,
    fill_gaps,
    hampel_filter,
    ingest_csv,
    interpolate_gaps,
    split_segments,
    write_csv,
)
from .dfa import (
    FluctuationCurve,
    LocalAlpha,
    ScalingTrace,
    WindowSkipped,
    alpha_t,
    dfa_global,
    dfa_local,
    fit_alpha,
    fluctuation,
    profile,
)
from .spectral import BandFit, Spectrum, fit_beta, parse_band, periodogram, segment_bands
from .synth import (
    CorridorSpec,
    NoiseSpec,
    gen_corridor,
    gen_fbm,
    gen_fgn,
    gen_powerlaw,
    gen_white,
    load_spec,
    save_spec,
)
from .traffic import (
    CongestionConfig,
    CorrelationReport,
    classify_trace,
    congestion_q,
    correlate,
    daily_pairs,
    q_trace,
    wk_check,
)

__version__ = "0.1.0"

__all__ = [
    "BandFit", "CalendarWindow", "CongestionConfig", "CorrelationReport", "CorridorSpec",
    "DataError", "FluctuationCurve", "LocalAlpha", "NoiseSpec", "ScalingTrace", "Spectrum",
    "TimeSeries", "WindowSkipped", "alpha_t", "classify_trace", "clean", "congestion_q",
    "correlate", "daily_pairs", "day_type", "dfa_global", "dfa_local", "fill_gaps",
    "fit_alpha", "fit_beta", "fluctuation", "gen_corridor", "gen_fbm", "gen_fgn",
    "gen_powerlaw", "gen_white", "hampel_filter", "ingest_csv", "interpolate_gaps",
    "load_spec", "parse_band", "periodogram", "profile", "q_trace", "save_spec",
    "segment_bands", "split_segments", "wk_check", "write_csv",
]
