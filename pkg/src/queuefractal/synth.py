"""Synthetic signals with known scaling exponents.

Every generator draws from ``numpy.random.Generator(PCG64(SeedSequence(seed)))``.
Multi-series generators (the corridor) give intersection ``i`` the stream
``SeedSequence(seed).spawn(n)[i]``, so adding intersections never perturbs
the ones already there.  Output is bit-identical across runs on the same
numpy version; numpy does not promise identical ``standard_normal`` streams
across major releases.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, fields, replace
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .core import TimeSeries

NOISE_KINDS = ("white", "powerlaw", "fgn", "fbm")


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(s))
            for s in np.random.SeedSequence(seed).spawn(n)]


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "white"
    length: int = 2 ** 15
    seed: int = 0
    amplitude: float = 1.0
    beta: float | None = None
    hurst: float | None = None
    dt_seconds: float = 120.0
    t0: datetime | None = None

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; choose from {NOISE_KINDS}")
        if int(self.length) != self.length or self.length < 1:
            raise ValueError(f"length must be a positive integer, got {self.length!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        if self.dt_seconds <= 0:
            raise ValueError("dt_seconds must be positive")
        if self.kind == "powerlaw":
            if self.beta is None or not 0 <= self.beta <= 2:
                raise ValueError(f"powerlaw noise needs beta in [0, 2], got {self.beta!r}")
        if self.kind in ("fgn", "fbm"):
            if self.hurst is None or not 0 < self.hurst < 1:
                raise ValueError(f"{self.kind} needs hurst in (0, 1), got {self.hurst!r}")
            if self.length < 2:
                raise ValueError(f"{self.kind} needs length >= 2")

    def _series(self, values) -> TimeSeries:
        label = self.kind
        if self.kind == "powerlaw":
            label += f"_beta{self.beta:g}"
        elif self.kind in ("fgn", "fbm"):
            label += f"_H{self.hurst:g}"
        return TimeSeries(values, self.dt_seconds, self.t0, f"{label}_seed{self.seed}")


def gen_white(spec: NoiseSpec) -> TimeSeries:
    return spec._series(spec.amplitude * rng_for(spec.seed).standard_normal(spec.length))


def fgn_autocovariance(hurst: float, k) -> np.ndarray:
    """Unit-variance fGn autocovariance at integer lag(s) *k*."""
    k = np.abs(np.asarray(k, dtype=float))
    h2 = 2.0 * hurst
    return 0.5 * ((k + 1) ** h2 - 2 * k ** h2 + np.abs(k - 1) ** h2)


def _davies_harte(n: int, hurst: float, rng: np.random.Generator) -> np.ndarray:
    """Exact unit-variance fGn sample by circulant embedding of size 2n."""
    gamma = fgn_autocovariance(hurst, np.arange(n + 1))
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    m = row.size
    eig = np.fft.fft(row).real
    if eig.min() < -1e-10 * eig.max():
        raise ArithmeticError(
            f"circulant embedding not nonnegative definite (min eigenvalue {eig.min():.3g})")
    eig = np.clip(eig, 0.0, None)
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    y = np.fft.fft(np.sqrt(eig / m) * z)
    return y.real[:n]


def gen_fgn(spec: NoiseSpec) -> TimeSeries:
    """Fractional Gaussian noise (Davies-Harte), standard deviation ``amplitude``."""
    if spec.hurst is None:
        raise ValueError("gen_fgn needs spec.hurst")
    x = _davies_harte(spec.length, spec.hurst, rng_for(spec.seed))
    return spec._series(spec.amplitude * x)


def gen_fbm(spec: NoiseSpec) -> TimeSeries:
    """Fractional Brownian motion of ``spec.length`` samples starting at 0.

    Built as the running sum of ``gen_fgn`` with ``length - 1`` increments
    and the same seed, so ``np.diff`` of the output recovers that fGn.
    """
    inc = gen_fgn(replace(spec, kind="fgn", length=spec.length - 1)).values
    return spec._series(np.concatenate(([0.0], np.cumsum(inc))))


def gen_powerlaw(spec: NoiseSpec) -> TimeSeries:
    """Gaussian noise with power spectrum ~ f^-beta by spectral shaping.

    The output is mean-removed and rescaled to standard deviation
    ``amplitude``.
    """
    if spec.beta is None:
        raise ValueError("gen_powerlaw needs spec.beta")
    n = spec.length
    rng = rng_for(spec.seed)
    f = np.fft.rfftfreq(n)
    coef = rng.standard_normal(f.size) + 1j * rng.standard_normal(f.size)
    shape = np.zeros_like(f)
    shape[1:] = f[1:] ** (-spec.beta / 2.0)
    coef *= shape
    if n % 2 == 0:
        coef[-1] = coef[-1].real * math.sqrt(2.0)
    x = np.fft.irfft(coef, n)
    x -= x.mean()
    sd = x.std()
    if sd > 0:
        x *= spec.amplitude / sd
    else:
        x[:] = 0.0
    return spec._series(x)


GENERATORS = {"white": gen_white, "fgn": gen_fgn, "fbm": gen_fbm, "powerlaw": gen_powerlaw}


def generate(spec: NoiseSpec) -> TimeSeries:
    return GENERATORS[spec.kind](spec)


# ------------------------------------------------------------- corridor

@dataclass(frozen=True)
class CorridorSpec:
    """Synthetic intersection queues with a weekday/weekend diurnal demand.

    Demand is a baseline plus Gaussian peaks (hours of day, local time),
    scaled on weekends by ``weekend_ratio`` and per day by a lognormal
    factor with log-sd ``day_jitter``.  Noise has two parts: a persistent
    fGn (``hurst``) whose standard deviation is ``noise_amplitude`` times
    the demand, and white noise of fixed standard deviation
    ``noise_floor``.  Queues are clipped to ``[0, capacity]``.
    """

    n_days: int = 28
    dt_seconds: float = 120.0
    capacity: float = 40.0
    n_intersections: int = 1
    start: datetime = datetime(2018, 1, 1)
    baseline: float = 3.0
    peak_hours: tuple[float, ...] = (8.0, 17.5)
    peak_heights: tuple[float, ...] = (24.0, 30.0)
    peak_widths_hours: tuple[float, ...] = (1.5, 2.0)
    weekend_ratio: float = 0.5
    day_jitter: float = 0.1
    hurst: float = 0.8
    noise_amplitude: float = 0.3
    noise_floor: float = 8.0
    seed: int = 0

    def __post_init__(self):
        if self.n_days < 1 or self.n_intersections < 1:
            raise ValueError("n_days and n_intersections must be positive")
        if self.dt_seconds <= 0 or self.capacity < 0:
            raise ValueError("dt_seconds must be positive and capacity non-negative")
        if not (len(self.peak_hours) == len(self.peak_heights) == len(self.peak_widths_hours)):
            raise ValueError("peak_hours, peak_heights and peak_widths_hours differ in length")
        if not 0 < self.hurst < 1:
            raise ValueError("hurst must be in (0, 1)")
        if min(self.noise_amplitude, self.noise_floor, self.day_jitter, self.weekend_ratio) < 0:
            raise ValueError("noise, jitter and weekend_ratio must be non-negative")

    @property
    def length(self) -> int:
        return int(round(self.n_days * 86400.0 / self.dt_seconds))


def demand_profile(spec: CorridorSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """Deterministic mean queue over the corridor's time grid.

    With *rng* the per-day lognormal jitter is applied; without it every
    weekday (and every weekend day) is identical.
    """
    n = spec.length
    t = spec.start + np.arange(n) * timedelta(seconds=spec.dt_seconds)
    t = t.astype("datetime64[s]")
    day = t.astype("datetime64[D]")
    hours = (t - day).astype(float) / 3600.0
    weekday = (day.astype(np.int64) + 3) % 7  # 1970-01-01 was a Thursday
    day_index = (day - day[0]).astype(np.int64)

    shape = np.zeros(n)
    for h, a, w in zip(spec.peak_hours, spec.peak_heights, spec.peak_widths_hours):
        shape += a * np.exp(-0.5 * ((hours - h) / w) ** 2)
    scale = np.where(weekday >= 5, spec.weekend_ratio, 1.0)
    if rng is not None and spec.day_jitter > 0:
        factors = np.exp(spec.day_jitter * rng.standard_normal(int(day_index[-1]) + 1))
        scale = scale * factors[day_index]
    return spec.baseline + scale * shape


def gen_corridor(spec: CorridorSpec) -> list[TimeSeries]:
    out = []
    for i, rng in enumerate(spawn_rngs(spec.seed, spec.n_intersections)):
        demand = demand_profile(spec, rng)
        q = demand.copy()
        if spec.noise_amplitude > 0:
            q += spec.noise_amplitude * demand * _davies_harte(q.size, spec.hurst, rng)
        if spec.noise_floor > 0:
            q += spec.noise_floor * rng.standard_normal(q.size)
        q = np.clip(q, 0.0, spec.capacity)
        out.append(TimeSeries(q, spec.dt_seconds, spec.start, f"intersection{i + 1:02d}"))
    return out


# --------------------------------------------------------- config files

def _to_text(value) -> str:
    if isinstance(value, datetime):
        return value.isoformat()
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def _from_text(key: str, text: str, default):
    text = text.strip()
    if key in ("t0", "start"):
        return None if text.lower() in ("", "none") else datetime.fromisoformat(text)
    if isinstance(default, tuple):
        return tuple(float(v) for v in text.split(",") if v.strip())
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(text)
    if text.lower() in ("", "none"):
        return None
    if isinstance(default, float) or default is None:
        return float(text)
    return text


def spec_to_config(spec: NoiseSpec | CorridorSpec) -> configparser.ConfigParser:
    section = "corridor" if isinstance(spec, CorridorSpec) else "noise"
    cfg = configparser.ConfigParser()
    cfg[section] = {k: _to_text(v) for k, v in asdict(spec).items() if v is not None}
    return cfg


def save_spec(spec: NoiseSpec | CorridorSpec, path) -> None:
    """Write *spec* as an INI file with a ``[noise]`` or ``[corridor]`` section."""
    with Path(path).open("w", encoding="utf-8") as fh:
        spec_to_config(spec).write(fh)


def spec_from_mapping(section: str, items: dict) -> NoiseSpec | CorridorSpec:
    cls = {"noise": NoiseSpec, "corridor": CorridorSpec}[section]
    defaults = {f.name: f.default for f in fields(cls)}
    unknown = set(items) - set(defaults)
    if unknown:
        raise ValueError(f"unknown [{section}] keys: {sorted(unknown)}")
    kwargs = {}
    for k, v in items.items():
        if isinstance(v, str):
            v = _from_text(k, v, defaults[k])
        elif isinstance(v, list):
            v = tuple(v)
        kwargs[k] = v
    return cls(**kwargs)


def load_spec(path) -> NoiseSpec | CorridorSpec:
    """Read a spec written by :func:`save_spec` (or edited by hand).

    Keys are the dataclass field names; omitted keys take their defaults.
    """
    cfg = configparser.ConfigParser()
    if not cfg.read(path, encoding="utf-8"):
        raise OSError(f"cannot read spec file {path}")
    sections = [s for s in ("noise", "corridor") if cfg.has_section(s)]
    if len(sections) != 1:
        raise ValueError(f"{path}: expected exactly one [noise] or [corridor] section")
    return spec_from_mapping(sections[0], dict(cfg[sections[0]]))


__all__ = [
    "CorridorSpec", "NoiseSpec", "demand_profile", "fgn_autocovariance", "gen_corridor",
    "gen_fbm", "gen_fgn", "gen_powerlaw", "gen_white", "generate", "load_spec",
    "rng_for", "save_spec", "spawn_rngs",
]
