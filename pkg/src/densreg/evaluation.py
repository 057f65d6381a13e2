"""Forecast accuracy: symmetric KLD, Bayes MISE and expanding-window backtests."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .bayes_space import bayes_dist
from .errors import ConfigError, DensregError, LengthMismatchError
from .grid_fn import GriddedDensity, check_same_grid
from .regression import (
    DensitySeries,
    epanechnikov_halved,
    forecast_sequence,
    gcv_select_bandwidth,
)

log = logging.getLogger(__name__)

SUMMARY_LABELS = ("Min.", "1st Qu.", "Median", "Mean", "3rd Qu.", "Max.")


def sym_kld(f: GriddedDensity, g: GriddedDensity) -> float:
    """Symmetric Kullback-Leibler divergence ``KL(f||g) + KL(g||f)``.

    Written as the integral of ``(f - g)(ln f - ln g)``, which is the same
    quantity and is symmetric and nonnegative pointwise.
    """
    grid = check_same_grid(f, g)
    integrand = (f.values - g.values) * (np.log(f.values) - np.log(g.values))
    return float(grid.weights @ integrand)


def bayes_mise(estimates, truths) -> float:
    """Mean squared Bayes distance between paired estimates and truths."""
    if len(estimates) != len(truths):
        raise LengthMismatchError(
            f"{len(estimates)} estimates vs {len(truths)} truths")
    if len(estimates) == 0:
        raise LengthMismatchError("need at least one pair")
    return float(np.mean([bayes_dist(e, t) ** 2 for e, t in zip(estimates, truths)]))


@dataclass(frozen=True)
class Forecast:
    density: GriddedDensity
    h_reg: float | None = None


class BayesNWForecaster:
    """One-step Bayes Nadaraya-Watson forecast with bandwidth re-selected per call.

    With fewer than three training densities there is nothing to
    cross-validate; the single available pair is used with an unbounded
    bandwidth.
    """

    name = "bayes_nw"

    def __init__(self, kernel=epanechnikov_halved, candidates=None, empty="nearest"):
        self.kernel = kernel
        self.candidates = candidates
        self.empty = empty

    def __call__(self, train: DensitySeries) -> Forecast:
        if len(train) < 3:
            h = np.inf
        else:
            h = gcv_select_bandwidth(train, self.kernel, self.candidates, self.empty).h_reg
        pred = forecast_sequence(train, 1, h, self.kernel, widen_empty=True)[0]
        return Forecast(pred, h)


class RandomWalkForecaster:
    name = "rw"

    def __call__(self, train: DensitySeries) -> Forecast:
        return Forecast(train[-1])


FORECASTERS = {
    "bayes_nw": BayesNWForecaster,
    "rw": RandomWalkForecaster,
}


def make_forecaster(name: str, **kwargs):
    try:
        cls = FORECASTERS[name]
    except KeyError:
        raise ConfigError(f"unknown method {name!r}; choose from {sorted(FORECASTERS)}") from None
    return cls(**kwargs)


def summarize(values) -> dict:
    """Six-number summary (min, quartiles, mean, max) of the finite values."""
    v = np.asarray(values, dtype=np.float64)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return dict.fromkeys(SUMMARY_LABELS, float("nan"))
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {
        "Min.": float(v.min()),
        "1st Qu.": float(q1),
        "Median": float(med),
        "Mean": float(v.mean()),
        "3rd Qu.": float(q3),
        "Max.": float(v.max()),
    }


def _fmt(x) -> str:
    return format(float(x), ".17g")


@dataclass
class BacktestReport:
    """Per-period symmetric KLDs of one method on one holdout segment.

    Failed periods hold ``nan`` in ``per_period_kld`` and are listed in
    ``failures``; the summary ignores them.
    """

    method: str
    periods: list[str]
    per_period_kld: np.ndarray
    bandwidths: np.ndarray
    failures: list[tuple[str, str]] = field(default_factory=list)
    forecasts: list = field(default_factory=list, repr=False)

    @property
    def summary(self) -> dict:
        return summarize(self.per_period_kld)

    @property
    def mean_kld(self) -> float:
        return self.summary["Mean"]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["period", "kld"])
            for p, k in zip(self.periods, self.per_period_kld):
                w.writerow([p, _fmt(k)])
            w.writerow([])
            w.writerow(["statistic", self.method])
            for label, value in self.summary.items():
                w.writerow([label, _fmt(value)])
            w.writerow(["failures", len(self.failures)])


def read_backtest_csv(path) -> tuple[list[str], np.ndarray, dict]:
    """Parse a file written by :meth:`BacktestReport.write_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    blank = rows.index([])
    body = rows[1:blank]
    summary = {r[0]: float(r[1]) for r in rows[blank + 2:]}
    return [r[0] for r in body], np.array([float(r[1]) for r in body]), summary


def write_summary_table(reports, path):
    """Methods side by side, one row per summary statistic."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["Statistic"] + [r.method for r in reports])
        summaries = [r.summary for r in reports]
        for label in SUMMARY_LABELS:
            w.writerow([label] + [_fmt(s[label]) for s in summaries])


def expanding_window_backtest(series: DensitySeries, initial_train: int,
                              method) -> BacktestReport:
    """Score one-step forecasts of ``series[j]`` from ``series[:j]`` for every holdout ``j``.

    ``method`` is a forecaster (a callable taking the training series and
    returning a :class:`Forecast`) or the name of one.
    """
    if isinstance(method, str):
        method = make_forecaster(method)
    if initial_train < 2 or initial_train >= len(series):
        raise ConfigError(
            f"initial_train must lie in [2, {len(series) - 1}], got {initial_train}")
    name = getattr(method, "name", type(method).__name__)
    labels = series.labels or tuple(str(i) for i in range(len(series)))
    periods, klds, bws, failures, forecasts = [], [], [], [], []
    for j in range(initial_train, len(series)):
        periods.append(labels[j])
        try:
            fc = method(series[:j])
        except DensregError as exc:
            log.warning("%s failed at period %s: %s", name, labels[j], exc)
            failures.append((labels[j], str(exc)))
            klds.append(np.nan)
            bws.append(np.nan)
            forecasts.append(None)
            continue
        klds.append(sym_kld(series[j], fc.density))
        bws.append(np.nan if fc.h_reg is None else fc.h_reg)
        forecasts.append(fc.density)
    return BacktestReport(name, periods, np.array(klds), np.array(bws), failures, forecasts)
