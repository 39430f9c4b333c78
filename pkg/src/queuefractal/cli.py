"""Command-line front end: ``queuefractal {generate,psd,dfa,report}``.

Every command writes plot-ready CSV/JSON plus ``manifest.json`` holding the
fully resolved parameters.  Passing that manifest back with ``--config``
reproduces the outputs byte for byte.

Exit codes: 0 success, 2 usage/validation error, 3 data error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from datetime import datetime
from pathlib import Path

import numpy as np

from . import __version__
from .core import (DEFAULT_HAMPEL_HALF_WIDTH, DEFAULT_HAMPEL_SIGMAS, DEFAULT_MAX_GAP,
                   DataError, TimeSeries, clean, finite_runs, ingest_csv, write_csv)
from .dfa import GLOBAL_MAX_SCALE, GLOBAL_MIN_SCALE, LOCAL_WINDOW, TRACE_STEP, alpha_t, dfa_global
from .spectral import fit_beta, parse_band, periodogram, segment_bands, spectrum_rows
from .synth import (CorridorSpec, NoiseSpec, gen_corridor, generate, load_spec,
                    spec_from_mapping)
from .traffic import (ANCHOR_HOUR, DAILY_THRESHOLD, TRACE_THRESHOLD, CongestionConfig,
                      DailyPair, classify_trace, correlate, daily_pairs, q_trace,
                      trace_timestamps, wk_check)

log = logging.getLogger("queuefractal")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_IO = 0, 2, 3, 4
MANIFEST = "manifest.json"


class UsageError(ValueError):
    pass


# ------------------------------------------------------------------ output

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, datetime):
        return obj.isoformat()
    if hasattr(obj, "isoformat"):
        return obj.isoformat()
    return obj


def write_json(path: Path, obj) -> None:
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def write_rows(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else repr(v) if isinstance(v, float) else v
                        for v in row])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _manifest(command: str, params: dict, inputs: list[Path] | None = None) -> dict:
    m = {"tool": "queuefractal", "version": __version__, "command": command,
         "params": params}
    if inputs:
        m["inputs"] = {str(p): _sha256(p) for p in inputs}
    return m


# ---------------------------------------------------------------- generate

def _resolve_spec(args) -> NoiseSpec | CorridorSpec:
    if args.spec_section:
        return spec_from_mapping(args.spec_section, args.spec_items)
    if args.kind == "corridor":
        kw = dict(n_days=args.n_days, dt_seconds=args.dt, seed=args.seed,
                  n_intersections=args.n_intersections)
        if args.capacity is not None:
            kw["capacity"] = args.capacity
        if args.start:
            kw["start"] = datetime.fromisoformat(args.start)
        return CorridorSpec(**kw)
    return NoiseSpec(kind=args.kind, length=args.length, seed=args.seed,
                     amplitude=args.amplitude, beta=args.beta, hurst=args.hurst,
                     dt_seconds=args.dt,
                     t0=datetime.fromisoformat(args.start) if args.start else None)


def cmd_generate(args) -> int:
    spec = _resolve_spec(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    series = gen_corridor(spec) if isinstance(spec, CorridorSpec) else [generate(spec)]
    files = []
    for s in series:
        path = out / f"{s.label}.csv"
        write_csv(s, path)
        files.append(path.name)
    section = "corridor" if isinstance(spec, CorridorSpec) else "noise"
    manifest = _manifest("generate", {"spec_section": section, "spec": asdict(spec)})
    manifest["outputs"] = files
    write_json(out / MANIFEST, manifest)
    return EXIT_OK


# ------------------------------------------------------------- shared input

def _load(path: Path, args) -> TimeSeries:
    x = ingest_csv(path, args.time_col, args.value_col)
    hw = args.hampel_half_width if args.hampel else None
    return clean(x, args.max_gap, hw, args.n_sigmas)


def _longest_segment(x: TimeSeries) -> tuple[TimeSeries, int]:
    """Longest gap-free stretch of *x* and its start index."""
    runs = finite_runs(x.values)
    if not runs:
        raise DataError("series has no valid samples (all gaps)")
    a, b = max(runs, key=lambda r: r[1] - r[0])
    return x.slice(a, b), a


def _series_info(x: TimeSeries, seg_start: int | None = None, seg_len: int | None = None) -> dict:
    info = {"label": x.label, "n": len(x), "dt_seconds": x.dt_seconds,
            "t0": x.t0.isoformat() if x.t0 else None,
            "n_gap_samples": int(np.isnan(x.values).sum())}
    if seg_start is not None:
        info["segment_start_index"] = seg_start
        info["segment_length"] = seg_len
    return info


def _preprocessing(args) -> dict:
    return {"max_gap": args.max_gap, "hampel": bool(args.hampel),
            "hampel_half_width": args.hampel_half_width, "n_sigmas": args.n_sigmas}


def _inputs(path: Path) -> list[Path]:
    if path.is_dir():
        files = sorted(path.glob("*.csv"))
        if not files:
            raise DataError(f"no .csv files in {path}")
        return files
    if not path.exists():
        raise FileNotFoundError(f"input {path} does not exist")
    return [path]


def _run_each(args, one) -> int:
    """Apply *one(path, outdir)* to each input; directories fan out to threads."""
    src = Path(args.input)
    files = _inputs(src)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if src.is_dir():
        dirs = [out / f.stem for f in files]
        for d in dirs:
            d.mkdir(exist_ok=True)
        with ThreadPoolExecutor(max(1, min(args.jobs, len(files)))) as pool:
            list(pool.map(one, files, dirs))
    else:
        one(files[0], out)
    write_json(out / MANIFEST, _manifest(args.command, _params(args), files))
    return EXIT_OK


# --------------------------------------------------------------------- psd

def cmd_psd(args) -> int:
    def one(path: Path, out: Path):
        x = _load(path, args)
        seg, start = _longest_segment(x)
        spec = periodogram(seg, method=args.method)
        text = args.band.strip().lower()
        if text == "full":
            band = (float(spec.freqs[0]), float(spec.freqs[-1]))
            ann = segment_bands(spec, band=band)
        elif text == DEFAULT_BAND:
            ann = segment_bands(spec, policy=args.band_policy)
            band = (ann.f_lo, ann.f_hi)
        else:
            band = parse_band(args.band)
            if seg.duration_seconds < 1.0 / band[0]:
                raise DataError(
                    f"record of {seg.duration_seconds:g} s is shorter than the band's "
                    f"longest period ({1.0 / band[0]:g} s)")
            ann = segment_bands(spec, band=band)
        fit = fit_beta(spec, band, robust=args.robust)
        write_rows(out / "spectrum.csv", ["freq_hz", "period_s", "power", "region"],
                   spectrum_rows(spec, ann))
        write_json(out / "fit.json", {
            "fit": fit.to_dict(), "band_counts": ann.counts(),
            "series": _series_info(x, start, len(seg)), "method": args.method,
            "preprocessing": _preprocessing(args)})
    return _run_each(args, one)


# --------------------------------------------------------------------- dfa

def cmd_dfa(args) -> int:
    if args.mode == "global":
        return _run_each(args, _dfa_global_one(args))
    if args.mode == "daily":
        if args.capacity is None:
            raise UsageError("--capacity is required for daily mode")
        return _run_each(args, _dfa_daily_one(args))
    return _run_each(args, _dfa_trace_one(args))


def _dfa_global_one(args):
    def one(path: Path, out: Path):
        x = _load(path, args)
        seg, start = _longest_segment(x)
        curve = dfa_global(seg, args.min_scale, args.max_scale, args.detrend_order)
        write_rows(out / "fluctuation.csv", ["scale", "fluctuation"],
                   zip(curve.scales.tolist(), curve.fluctuation.tolist()))
        body = curve.to_dict()
        body.update(series=_series_info(x, start, len(seg)),
                    beta_tilde=2 * curve.alpha - 1, preprocessing=_preprocessing(args))
        write_json(out / "dfa.json", body)
    return one


def _dfa_daily_one(args):
    cfg = CongestionConfig(args.capacity, _threshold(args, DAILY_THRESHOLD))

    def one(path: Path, out: Path):
        x = _load(path, args)
        res = daily_pairs(x, cfg, args.window, args.anchor_hour, args.utc_offset,
                          args.detrend_order)
        write_rows(out / "pairs.csv",
                   ["date", "day_type", "alpha", "q", "start_index", "r_squared"],
                   ((p.date.isoformat(), p.day_type, p.alpha, p.q, p.start_index,
                     p.r_squared) for p in res))
        body = {"series": _series_info(x), "n_pairs": len(res),
                "skipped": [{"date": d.isoformat(), "reason": r} for d, r in res.skipped],
                "capacity": cfg.capacity, "threshold_fraction": cfg.threshold_fraction,
                "window": args.window, "anchor_hour": args.anchor_hour,
                "preprocessing": _preprocessing(args)}
        if len(res) >= 3:
            body["correlation"] = correlate(res).to_dict()
        write_json(out / "daily.json", body)
    return one


def _dfa_trace_one(args):
    cfg = None
    if args.capacity is not None:
        cfg = CongestionConfig(args.capacity, _threshold(args, TRACE_THRESHOLD))

    def one(path: Path, out: Path):
        x = _load(path, args)
        trace = alpha_t(x, args.window, args.step, detrend_order=args.detrend_order)
        q = q_trace(x, trace, cfg) if cfg is not None else None
        stamps = trace_timestamps(trace)
        header = ["timestamp", "start_index", "alpha", "r_squared"]
        rows = []
        for i, e in enumerate(trace.entries):
            row = [stamps[i].isoformat() if stamps[i] else "", e.start_index, e.alpha,
                   e.r_squared]
            if q is not None:
                row.append(int(q[i]))
            rows.append(row)
        write_rows(out / "trace.csv", header + (["q"] if q is not None else []), rows)
        body = {"series": _series_info(x), "window": trace.window_len, "step": trace.step,
                "n_windows": len(trace),
                "skipped": [{"start_index": s, "reason": r} for s, r in trace.skipped],
                "preprocessing": _preprocessing(args)}
        if cfg is not None:
            body.update(capacity=cfg.capacity, threshold_fraction=cfg.threshold_fraction)
        if len(trace):
            body["summary"] = classify_trace(trace, q, args.utc_offset)
        write_json(out / "trace.json", body)
    return one


def _threshold(args, default: float) -> float:
    return default if args.threshold_fraction is None else args.threshold_fraction


# ------------------------------------------------------------------ report

def read_pairs(path: Path) -> list[DailyPair]:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"alpha", "q", "day_type"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise DataError(f"{path}: pairs CSV needs columns {sorted(need)}")
        pairs = []
        for i, row in enumerate(reader, start=2):
            try:
                dtype = row["day_type"].strip()
                if dtype not in ("weekday", "weekend"):
                    raise ValueError(f"day_type {dtype!r}")
                pairs.append(DailyPair(int(row.get("start_index") or 0),
                                       row.get("date") or "", dtype,
                                       float(row["alpha"]), float(row["q"])))
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path}:{i}: malformed row ({exc})") from exc
    return pairs


def cmd_report(args) -> int:
    if (args.beta is None) != (args.alpha is None):
        raise UsageError("--beta and --alpha must be given together")
    path = Path(args.input)
    if not path.is_file():
        raise FileNotFoundError(f"pairs file {path} does not exist")
    rep = correlate(read_pairs(path))
    body = rep.to_dict()
    if args.beta is not None:
        body["wk_check"] = wk_check(args.beta, args.alpha).to_dict()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "report.json", body)
    write_json(out / MANIFEST, _manifest("report", _params(args), [path]))
    return EXIT_OK


# ------------------------------------------------------------------ parser

DEFAULT_BAND = "14d:32m"
_NOT_PARAMS = {"out", "config", "command", "func", "verbose", "jobs", "spec_section",
               "spec_items"}


def _params(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_PARAMS}


def _add_input_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", nargs="?", help="CSV file, or a directory of CSV files")
    p.add_argument("--time-col", default="timestamp")
    p.add_argument("--value-col", default="value")
    p.add_argument("--max-gap", type=int, default=DEFAULT_MAX_GAP,
                   help="interpolate gaps up to this many samples (default 15)")
    p.add_argument("--hampel", action="store_true", help="apply the Hampel outlier filter")
    p.add_argument("--hampel-half-width", type=int, default=DEFAULT_HAMPEL_HALF_WIDTH,
                   help="samples each side of the rolling median (default 15 = 30 min)")
    p.add_argument("--n-sigmas", type=float, default=DEFAULT_HAMPEL_SIGMAS)
    p.add_argument("--jobs", type=int, default=4, help="parallel files for directory input")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="queuefractal", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--config", help="manifest.json or INI file; overrides flags")

    g = sub.add_parser("generate", help="write synthetic series")
    g.add_argument("--kind", choices=["white", "powerlaw", "fgn", "fbm", "corridor"],
                   default="fgn")
    g.add_argument("--length", type=int, default=2 ** 15)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--hurst", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--amplitude", type=float, default=1.0)
    g.add_argument("--dt", type=float, default=120.0, help="sampling interval, s (default 120)")
    g.add_argument("--start", help="ISO timestamp of the first sample")
    g.add_argument("--n-days", type=int, default=28)
    g.add_argument("--n-intersections", type=int, default=1)
    g.add_argument("--capacity", type=float)
    g.add_argument("--spec", help="INI spec file with a [noise] or [corridor] section")
    common(g)
    g.set_defaults(func=cmd_generate)

    p = sub.add_parser("psd", help="periodogram and spectral exponent")
    _add_input_opts(p)
    p.add_argument("--band", default=DEFAULT_BAND,
                   help="fit band as LONGEST:SHORTEST period, or 'full' (default 14d:32m)")
    p.add_argument("--band-policy", choices=["absolute", "harmonics"], default="absolute")
    p.add_argument("--method", choices=["raw", "welch"], default="raw")
    p.add_argument("--robust", action="store_true", help="least absolute deviations fit")
    common(p)
    p.set_defaults(func=cmd_psd)

    d = sub.add_parser("dfa", help="DFA exponent: global, daily pairs or alpha(t) trace")
    _add_input_opts(d)
    d.add_argument("--mode", choices=["global", "daily", "trace"], default="global")
    d.add_argument("--min-scale", type=int, default=GLOBAL_MIN_SCALE)
    d.add_argument("--max-scale", type=int, default=GLOBAL_MAX_SCALE,
                   help="global mode max scale (default 8192)")
    d.add_argument("--window", type=int, default=LOCAL_WINDOW,
                   help="daily/trace window, samples (default 1024)")
    d.add_argument("--step", type=int, default=TRACE_STEP, help="trace step (default 15)")
    d.add_argument("--detrend-order", type=int, default=1)
    d.add_argument("--capacity", type=float)
    d.add_argument("--threshold-fraction", type=float,
                   help="default 0.6 for daily, 0.5 for trace")
    d.add_argument("--anchor-hour", type=float, default=ANCHOR_HOUR,
                   help="daily window start, local hour (default 7)")
    d.add_argument("--utc-offset", type=float, help="local time offset from UTC in hours")
    common(d)
    d.set_defaults(func=cmd_dfa)

    r = sub.add_parser("report", help="alpha-Q correlation from a pairs CSV")
    r.add_argument("input", nargs="?", help="pairs CSV written by 'dfa --mode daily'")
    r.add_argument("--beta", type=float, help="spectral exponent for the beta/alpha check")
    r.add_argument("--alpha", type=float, help="global DFA exponent for the check")
    common(r)
    r.set_defaults(func=cmd_report)
    return ap


def _apply_config(ap: argparse.ArgumentParser, args) -> None:
    args.spec_section = None
    args.spec_items = None
    if args.command == "generate" and args.spec:
        spec = load_spec(args.spec)
        args.spec_section = "corridor" if isinstance(spec, CorridorSpec) else "noise"
        args.spec_items = asdict(spec)
    if not args.config:
        if args.command == "generate":
            args.spec = None
        return
    path = Path(args.config)
    if not path.is_file():
        raise FileNotFoundError(f"config {path} does not exist")
    if path.suffix == ".json":
        m = json.loads(path.read_text(encoding="utf-8"))
        if m.get("command") != args.command:
            raise UsageError(f"{path} is a manifest for {m.get('command')!r}, not {args.command!r}")
        items = m.get("params", {})
        if args.command == "generate":
            args.spec_section = items["spec_section"]
            args.spec_items = items["spec"]
            args.spec = None
            return
    else:
        cfg = configparser.ConfigParser()
        cfg.read(path, encoding="utf-8")
        if args.command == "generate" and (cfg.has_section("noise") or cfg.has_section("corridor")):
            spec = load_spec(path)
            args.spec_section = "corridor" if isinstance(spec, CorridorSpec) else "noise"
            args.spec_items = asdict(spec)
            args.spec = None
            return
        if not cfg.has_section(args.command):
            raise UsageError(f"{path} has no [{args.command}] section")
        items = dict(cfg[args.command])
    types = _dest_types(ap, args.command)
    for key, value in items.items():
        key = key.replace("-", "_")
        if key not in types:
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        setattr(args, key, _coerce(value, types[key]))
    if args.command == "generate":
        args.spec = None


def _dest_types(ap: argparse.ArgumentParser, command: str) -> dict:
    sub = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction))
    out = {}
    for act in sub.choices[command]._actions:
        if act.dest in ("help", "out", "config"):
            continue
        kind = bool if isinstance(act, argparse._StoreTrueAction) else act.type or str
        out[act.dest] = kind
    return out


def _coerce(value, kind):
    if value is None or not isinstance(value, str):
        return value
    if value.strip().lower() in ("", "none", "null"):
        return None
    if kind is bool:
        return value.strip().lower() in ("1", "true", "yes", "on")
    return kind(value)


def _validate(args) -> None:
    if args.command == "generate":
        return
    if not args.input:
        raise UsageError("an input path is required (directly or via --config)")
    if getattr(args, "max_gap", 0) < 0:
        raise UsageError("--max-gap must be >= 0")
    if args.command == "psd":
        parse_band(args.band)
    if args.command == "dfa":
        if args.window < 16 or args.step < 1:
            raise UsageError("--window must be >= 16 and --step >= 1")
        if args.min_scale < args.detrend_order + 2 or args.max_scale < args.min_scale:
            raise UsageError("invalid scale range")
        if args.threshold_fraction is not None and not 0 < args.threshold_fraction < 1:
            raise UsageError("--threshold-fraction must be in (0, 1)")
        if args.capacity is not None and not args.capacity > 0:
            raise UsageError("--capacity must be positive")


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _apply_config(ap, args)
        _validate(args)
        return args.func(args)
    except DataError as exc:
        print(f"queuefractal: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (UsageError, ValueError, KeyError) as exc:
        print(f"queuefractal: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"queuefractal: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
