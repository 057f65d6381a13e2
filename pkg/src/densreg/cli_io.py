"""Data ingestion, run configuration and the ``densreg`` command line.

Two input schemas are supported and must be chosen explicitly:

``raw_panel``
    One cross-sectional sample per period, either wide (header row of period
    labels, one column per period, blank cells allowed) or long (header
    ``period,value``).  Each sample is turned into a density by KDE.
``density_matrix``
    Header ``<label>,<x0>,<x1>,...`` giving uniformly spaced grid
    coordinates, then one row per period of nonnegative masses that sum to
    ``radix`` (e.g. life-table deaths with radix 100000).

Forecasts are written in the ``density_matrix`` layout, so they can be read
back with ``radix=1``.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    DensregError,
    NegativeInputError,
    NumericError,
    ParseError,
)
from .evaluation import expanding_window_backtest, make_forecaster, write_summary_table
from .grid_fn import Grid, as_density
from .kde import KdeConfig, as_sample, default_grid, kde_estimate, log_shift_transform
from .regression import (
    DensitySeries,
    forecast_sequence,
    gcv_select_bandwidth,
    random_walk_forecast,
)
from .simulation import DgpConfig, run_replications

log = logging.getLogger(__name__)

MODES = ("simulate", "backtest", "forecast")
SCHEMAS = ("raw_panel", "density_matrix")


def _fmt(x) -> str:
    return format(float(x), ".17g")


# ----------------------------------------------------------------------------
# ingestion


@dataclass(frozen=True)
class RawPanel:
    labels: tuple[str, ...]
    samples: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.samples) < 2:
            raise DataError(f"a panel needs at least 2 periods, got {len(self.samples)}")
        if len(self.labels) != len(self.samples):
            raise DataError("labels and samples differ in length")

    def __len__(self):
        return len(self.samples)


def _float(cell: str, line: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"not a number: {cell!r}", line) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite value: {cell!r}", line)
    return value


def _read_rows(path) -> list[list[str]]:
    try:
        with open(path, newline="") as fh:
            return [row for row in csv.reader(fh)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def ingest_raw_panel(path, preprocessing: str = "none", shift: float = 0.1) -> RawPanel:
    """Read a cross-sectional panel and apply ``preprocessing`` to each sample."""
    if preprocessing not in ("none", "log_shift"):
        raise ConfigError(f"unknown preprocessing {preprocessing!r}")
    rows = _read_rows(path)
    if not rows:
        raise ParseError("empty file", 1)
    header = [c.strip() for c in rows[0]]
    groups: dict[str, list[float]] = {}
    if [h.lower() for h in header] == ["period", "value"]:
        for lineno, row in enumerate(rows[1:], start=2):
            if not any(c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", lineno)
            groups.setdefault(row[0].strip(), []).append(_float(row[1], lineno))
    else:
        for h in header:
            groups[h] = []
        if len(groups) != len(header):
            raise ParseError("duplicate period labels in header", 1)
        for lineno, row in enumerate(rows[1:], start=2):
            if not any(c.strip() for c in row):
                continue
            if len(row) > len(header):
                raise ParseError(f"expected at most {len(header)} fields, got {len(row)}",
                                 lineno)
            for label, cell in zip(header, row):
                if cell.strip():
                    groups[label].append(_float(cell, lineno))
    samples = []
    for label, values in groups.items():
        x = np.asarray(values, dtype=np.float64)
        if preprocessing == "log_shift":
            if np.any(x < 0):
                raise NegativeInputError(f"period {label!r} has negative values")
            x = log_shift_transform(x, shift)
        try:
            samples.append(as_sample(x))
        except DensregError as exc:
            raise DataError(f"period {label!r}: {exc}") from None
    return RawPanel(tuple(groups), tuple(samples))


def panel_to_series(panel: RawPanel, grid: Grid | None = None, bandwidth: float | None = None,
                    n_points: int = 201) -> DensitySeries:
    """Kernel density estimate of every period on one shared grid."""
    if grid is None:
        grid = default_grid(panel.samples, n_points)
    cfg = KdeConfig(grid=grid, bandwidth=bandwidth)
    return DensitySeries(tuple(kde_estimate(s, cfg) for s in panel.samples), panel.labels)


def _grid_from_labels(coords: list[float]) -> Grid:
    grid = Grid(coords[0], coords[-1], len(coords))
    scale = max(abs(grid.a), abs(grid.b), grid.spacing)
    if not np.allclose(coords, grid.points, rtol=0, atol=1e-9 * scale):
        raise DataError("grid coordinates in the header are not uniformly spaced")
    return grid


def ingest_density_matrix(path, radix: float = 1.0) -> DensitySeries:
    """Read one density per row, dividing by ``radix`` and the grid spacing.

    Zero entries are raised to the positivity floor before renormalizing.
    """
    if not radix > 0:
        raise ConfigError(f"radix must be positive, got {radix}")
    rows = _read_rows(path)
    if not rows:
        raise ParseError("empty file", 1)
    header = rows[0]
    if len(header) < 4:
        raise ParseError("header needs a label column and at least 3 grid coordinates", 1)
    coords = [_float(c, 1) for c in header[1:]]
    try:
        grid = _grid_from_labels(coords)
    except ConfigError as exc:
        raise DataError(f"bad grid header: {exc}") from None
    labels, dens = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not any(c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"ragged matrix: expected {len(header)} fields, got {len(row)}",
                             lineno)
        v = np.array([_float(c, lineno) for c in row[1:]])
        if np.any(v < 0):
            raise NegativeInputError(f"line {lineno}: negative entry")
        if not np.any(v > 0):
            raise DataError(f"line {lineno}: row is identically zero")
        labels.append(row[0].strip())
        dens.append(as_density(grid, v / radix / grid.spacing))
    if not dens:
        raise DataError("density matrix has no rows")
    return DensitySeries(tuple(dens), tuple(labels))


def write_density_series(series: DensitySeries, path, labels=None):
    """Write ``series`` in the density-matrix layout (grid coordinates in the header)."""
    labels = labels or series.labels or [str(i) for i in range(len(series))]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["period"] + [_fmt(x) for x in series.grid.points])
        for label, d in zip(labels, series):
            w.writerow([label] + [_fmt(x) for x in d.values])


# ----------------------------------------------------------------------------
# configuration


def _floats(text) -> tuple[float, ...] | None:
    if text is None or text == "":
        return None
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    return tuple(float(x) for x in str(text).replace(";", ",").split(",") if x.strip())


@dataclass
class RunConfig:
    mode: str
    input: str | None = None
    schema: str | None = None
    out: str = "densreg_out"
    seed: int = 0
    # preprocessing / KDE
    preprocess: str = "none"
    shift: float = 0.1
    grid: tuple[float, ...] | None = None
    n_points: int = 201
    kde_bandwidth: float | None = None
    radix: float = 1.0
    # regression
    methods: tuple[str, ...] = ("bayes_nw", "rw")
    bandwidths: tuple[float, ...] | None = None
    h_reg: float | None = None
    horizon: int = 1
    initial_train: int | None = None
    # simulation
    reps: int = 1
    test_len: int = 50
    sigma: float = 0.1
    rho0: float = 0.5
    nu: float = 0.5
    period: float = 150
    length: int = 150
    workers: int = 1
    extra: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.preprocess not in ("none", "log_shift"):
            raise ConfigError(f"preprocess must be none or log_shift, got {self.preprocess!r}")
        if self.mode in ("backtest", "forecast"):
            if not self.input:
                raise ConfigError(f"mode {self.mode} needs an input file")
            if self.schema not in SCHEMAS:
                raise ConfigError(f"mode {self.mode} needs schema in {SCHEMAS}")
        if self.mode == "backtest" and self.initial_train is None:
            raise ConfigError("mode backtest needs initial_train")
        if self.grid is not None and len(self.grid) != 3:
            raise ConfigError("grid must be 'a,b,n_points'")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")

    def dgp(self) -> DgpConfig:
        return DgpConfig(sigma=self.sigma, rho0=self.rho0, nu=self.nu, period=self.period,
                         length=self.length, grid=Grid(-1.0, 1.0, self.n_points), seed=self.seed)

    def kde_grid(self) -> Grid | None:
        if self.grid is None:
            return None
        a, b, n = self.grid
        return Grid(a, b, int(n))


_CONVERTERS = {
    "seed": int, "n_points": int, "horizon": int, "initial_train": int, "reps": int,
    "test_len": int, "length": int, "workers": int,
    "shift": float, "kde_bandwidth": float, "radix": float, "h_reg": float,
    "sigma": float, "rho0": float, "nu": float, "period": float,
    "grid": _floats, "bandwidths": _floats,
    "methods": lambda s: tuple(m.strip() for m in str(s).split(",") if m.strip())
    if isinstance(s, str) else tuple(s),
}
_KEYS = {f.name for f in fields(RunConfig)} - {"extra"}


def read_config_file(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"config line {lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _KEYS:
                raise ConfigError(f"config line {lineno}: unknown key {key!r}")
            out[key] = value
    return out


def build_config(mode: str, file_values: dict | None = None, overrides: dict | None = None
                 ) -> RunConfig:
    """Merge config-file values with command-line overrides (overrides win)."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    merged.pop("mode", None)
    kwargs = {}
    for key, value in merged.items():
        if key not in _KEYS:
            raise ConfigError(f"unknown setting {key!r}")
        conv = _CONVERTERS.get(key)
        try:
            kwargs[key] = conv(value) if conv is not None and value is not None else value
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return RunConfig(mode=mode, **kwargs)


# ----------------------------------------------------------------------------
# runs


def load_series(cfg: RunConfig) -> DensitySeries:
    if cfg.schema == "density_matrix":
        return ingest_density_matrix(cfg.input, cfg.radix)
    panel = ingest_raw_panel(cfg.input, cfg.preprocess, cfg.shift)
    return panel_to_series(panel, cfg.kde_grid(), cfg.kde_bandwidth, cfg.n_points)


def _run_simulate(cfg: RunConfig, out: str):
    table = run_replications(cfg.dgp(), cfg.reps, cfg.test_len, cfg.methods,
                             workers=cfg.workers, candidates=cfg.bandwidths)
    table.write_csv(os.path.join(out, "replications.csv"))
    with open(os.path.join(out, "summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["quantity", "value"])
        for m in table.methods():
            w.writerow([f"mean_kld_{m}", _fmt(table.mean_kld(m))])
        w.writerow(["mean_nsr", _fmt(table.mean_nsr())])


def _run_backtest(cfg: RunConfig, out: str):
    series = load_series(cfg)
    reports = []
    for name in cfg.methods:
        kwargs = {"candidates": cfg.bandwidths} if name == "bayes_nw" else {}
        report = expanding_window_backtest(series, cfg.initial_train,
                                           make_forecaster(name, **kwargs))
        report.write_csv(os.path.join(out, f"backtest_{name}.csv"))
        if name == "bayes_nw":
            with open(os.path.join(out, "bandwidths_bayes_nw.csv"), "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["period", "h_reg"])
                for p, h in zip(report.periods, report.bandwidths):
                    w.writerow([p, _fmt(h)])
        reports.append(report)
    write_summary_table(reports, os.path.join(out, "summary.csv"))


def _run_forecast(cfg: RunConfig, out: str):
    series = load_series(cfg)
    method = cfg.methods[0]
    labels = [f"h{k}" for k in range(1, cfg.horizon + 1)]
    if method == "rw":
        fc = random_walk_forecast(series, cfg.horizon)
    elif method == "bayes_nw":
        with open(os.path.join(out, "bandwidth.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["candidate", "score", "selected"])
            if cfg.h_reg is not None:
                h = cfg.h_reg
                w.writerow([_fmt(h), "", 1])
            else:
                sel = gcv_select_bandwidth(series, candidates=cfg.bandwidths)
                h = sel.h_reg
                for c, s in zip(sel.candidate_grid, sel.scores):
                    w.writerow([_fmt(c), _fmt(s), int(c == h)])
        fc = forecast_sequence(series, cfg.horizon, h, widen_empty=True)
    else:
        raise ConfigError(f"unknown method {method!r}")
    write_density_series(fc, os.path.join(out, "forecast.csv"), labels)


_RUNNERS = {"simulate": _run_simulate, "backtest": _run_backtest, "forecast": _run_forecast}


def _error_record(exc: BaseException, code: int) -> dict:
    return {"error": type(exc).__name__, "message": str(exc), "exit_code": code}


def run(cfg: RunConfig) -> int:
    """Execute one run, writing artifacts under ``cfg.out``; returns the exit status."""
    try:
        os.makedirs(cfg.out, exist_ok=True)
    except OSError as exc:
        record = _error_record(exc, ConfigError.exit_code)
        print(json.dumps(record), file=sys.stderr)
        return record["exit_code"]
    try:
        _RUNNERS[cfg.mode](cfg, cfg.out)
    except DensregError as exc:
        record = _error_record(exc, exc.exit_code)
    except ArithmeticError as exc:
        record = _error_record(exc, NumericError.exit_code)
    else:
        return 0
    print(json.dumps(record), file=sys.stderr)
    with open(os.path.join(cfg.out, "error.json"), "w") as fh:
        json.dump(record, fh)
        fh.write("\n")
    return record["exit_code"]


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="densreg",
                                description="Forecast time series of densities.")
    sub = p.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sp = sub.add_parser(mode)
        sp.add_argument("--config", help="flat key = value settings file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--reps", type=int)
        sp.add_argument("--horizon", type=int)
        sp.add_argument("--initial-train", type=int)
        sp.add_argument("--preprocess", choices=("none", "log_shift"))
        sp.add_argument("--shift", type=float, help="c in ln(x + c)")
        sp.add_argument("--radix", type=float)
        sp.add_argument("--input")
        sp.add_argument("--schema", choices=SCHEMAS)
        sp.add_argument("--methods", help="comma list from bayes_nw, rw")
        sp.add_argument("--bandwidths", help="comma list of candidate h_reg values")
        sp.add_argument("--h-reg", type=float, help="fixed h_reg (forecast mode)")
        sp.add_argument("--grid", help="KDE grid 'a,b,n_points'")
        sp.add_argument("--n-points", type=int)
        sp.add_argument("--kde-bandwidth", type=float)
        sp.add_argument("--test-len", type=int)
        sp.add_argument("--sigma", type=float)
        sp.add_argument("--rho0", type=float)
        sp.add_argument("--nu", type=float)
        sp.add_argument("--period", type=float)
        sp.add_argument("--length", type=int)
        sp.add_argument("--workers", type=int)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: v for k, v in vars(args).items() if k not in ("mode", "config")}
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = build_config(args.mode, file_values, overrides)
    except ConfigError as exc:
        print(json.dumps(_error_record(exc, 2)), file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
