"""Simulated density time series and Monte-Carlo replication runs.

The process is ``f[t+1] = m_t(f[t]) (+) eps[t]`` on ``[-1, 1]``, where
``m_t(f)`` is the density of ``rho0 * X + (1 - rho0) * Y`` with ``X ~ f`` and
``Y`` a truncated normal whose mean follows ``cos(2 pi t / period)``, and the
error ``eps[t]`` is the inverse clr of a random trigonometric polynomial.
"""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import PchipInterpolator

from .bayes_space import clr, clr_inv, perturb
from .errors import ConfigError, ZeroSignalError
from .evaluation import expanding_window_backtest, make_forecaster
from .grid_fn import (
    ClrFunction,
    Grid,
    GriddedDensity,
    as_density,
    check_same_grid,
    quadrature_weights,
)
from .regression import DensitySeries

log = logging.getLogger(__name__)

N_TRIG = 5


def trig_basis(grid: Grid) -> np.ndarray:
    """Rows ``cos(pi u), sin(pi u), cos(2 pi u), sin(2 pi u), cos(3 pi u)``."""
    u = grid.points
    return np.vstack([
        np.cos(np.pi * u),
        np.sin(np.pi * u),
        np.cos(2 * np.pi * u),
        np.sin(2 * np.pi * u),
        np.cos(3 * np.pi * u),
    ])


def trig_error(coeffs, grid: Grid) -> ClrFunction:
    """Model error in clr space: ``coeffs`` times the five trigonometric functions."""
    c = np.asarray(coeffs, dtype=np.float64)
    if c.shape != (N_TRIG,):
        raise ConfigError(f"expected {N_TRIG} coefficients, got shape {c.shape}")
    return ClrFunction(grid, c @ trig_basis(grid))


def truncated_normal_density(mu: float, nu: float, grid: Grid) -> GriddedDensity:
    """Normal kernel ``exp(-(x - mu)^2 / (2 nu^2))`` renormalized over the grid."""
    if not nu > 0:
        raise ConfigError(f"nu must be positive, got {nu}")
    x = grid.points
    return as_density(grid, np.exp(-0.5 * ((x - mu) / nu) ** 2))


def convolution_values(f: GriddedDensity, g: GriddedDensity, rho0: float) -> np.ndarray:
    """Density of ``rho0 X + (1 - rho0) Y`` (``X ~ f``, ``Y ~ g``) on the grid, unnormalized.

    For each output point the integral over ``x`` runs between the limits that
    keep both ``x`` and ``(y - rho0 x) / (1 - rho0)`` inside the support.  Both
    densities are interpolated (monotone cubic, so never negative) onto an
    ``n_points`` grid of that interval, which is integrated with the same
    quadrature rule as the outer grid.
    """
    if not 0 < rho0 < 1:
        raise ConfigError(f"rho0 must lie in (0, 1), got {rho0}")
    grid = f.grid
    check_same_grid(f, g)
    a, b, n = grid.a, grid.b, grid.n_points
    y = grid.points
    lo = np.maximum(a, (y - (1 - rho0) * b) / rho0)
    hi = np.minimum(b, (y - (1 - rho0) * a) / rho0)
    width = np.maximum(hi - lo, 0.0)
    t = np.linspace(0.0, 1.0, n)
    xs = lo[:, None] + width[:, None] * t[None, :]
    ys = np.clip((y[:, None] - rho0 * xs) / (1 - rho0), a, b)
    fx = PchipInterpolator(grid.points, f.values)(xs)
    gy = PchipInterpolator(grid.points, g.values)(ys)
    integrand = fx * gy
    integral = (width / (n - 1)) * (integrand @ quadrature_weights(n))
    return integral / (1 - rho0)


def convolution_operator(f: GriddedDensity, g: GriddedDensity, rho0: float) -> GriddedDensity:
    return as_density(f.grid, convolution_values(f, g, rho0))


@dataclass(frozen=True)
class DgpConfig:
    sigma: float = 0.1
    rho0: float = 0.5
    nu: float = 0.5
    period: float = 150
    length: int = 150
    grid: Grid = field(default_factory=lambda: Grid(-1.0, 1.0, 201))
    seed: int = 0

    def __post_init__(self):
        # sigma = 0 is allowed and gives the noise-free chain.
        if not self.sigma >= 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if not 0 < self.rho0 < 1:
            raise ConfigError(f"rho0 must lie in (0, 1), got {self.rho0}")
        if not self.nu > 0:
            raise ConfigError(f"nu must be positive, got {self.nu}")
        if not self.period > 0:
            raise ConfigError(f"period must be positive, got {self.period}")
        if int(self.length) != self.length or self.length < 2:
            raise ConfigError(f"length must be an integer >= 2, got {self.length}")
        if self.grid.a != -1.0 or self.grid.b != 1.0:
            raise ConfigError("the simulation grid must span exactly [-1, 1]")

    def driver(self, t: int) -> GriddedDensity:
        """Truncated normal driver ``g_t`` (``t`` counts from 1)."""
        return truncated_normal_density(np.cos(2 * np.pi * t / self.period), self.nu, self.grid)


@dataclass(frozen=True, eq=False)
class SimulatedSeries:
    densities: DensitySeries
    signals: DensitySeries
    errors: tuple[ClrFunction, ...]
    config: DgpConfig


def draw_coefficients(config: DgpConfig) -> np.ndarray:
    rng = np.random.default_rng(config.seed)
    return config.sigma * rng.standard_normal((config.length - 1, N_TRIG))


def generate_series(config: DgpConfig, coeffs=None) -> SimulatedSeries:
    """Run the chain for ``config.length`` steps.

    ``coeffs`` overrides the random error coefficients (one row of five per
    transition); by default they are drawn from ``config.seed``.
    """
    if coeffs is None:
        coeffs = draw_coefficients(config)
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape != (config.length - 1, N_TRIG):
        raise ConfigError(f"coeffs must have shape {(config.length - 1, N_TRIG)}")
    grid = config.grid
    f = config.driver(1)
    dens, sigs, errs = [f], [], []
    for t in range(1, config.length):
        signal = convolution_operator(f, config.driver(t + 1), config.rho0)
        eta = trig_error(coeffs[t - 1], grid)
        # eps = 0_B is the identity; skipping it keeps the noise-free chain exact
        f = perturb(signal, clr_inv(eta)) if np.any(eta.values) else signal
        dens.append(f)
        sigs.append(signal)
        errs.append(eta)
    return SimulatedSeries(DensitySeries(tuple(dens)), DensitySeries(tuple(sigs)),
                           tuple(errs), config)


def noise_to_signal(series: SimulatedSeries) -> float:
    """Mean over transitions of ``||eps_t||_B^2 / ||m(f_t)||_B^2``."""
    w = series.config.grid.weights
    ratios = []
    for eta, signal in zip(series.errors, series.signals):
        c = clr(signal).values
        denom = float(w @ (c * c))
        if denom <= 0:
            raise ZeroSignalError("signal density equals the uniform density")
        ratios.append(float(w @ (eta.values ** 2)) / denom)
    return float(np.mean(ratios))


@dataclass
class ReplicationTable:
    """Mean KLD of each method in each replication, plus the replication's nsr."""

    rows: list[tuple[int, str, float]]
    nsr: dict[int, float]

    def methods(self) -> list[str]:
        return list(dict.fromkeys(m for _, m, _ in self.rows))

    def klds(self, method: str) -> np.ndarray:
        return np.array([k for _, m, k in self.rows if m == method])

    def mean_kld(self, method: str) -> float:
        return float(np.mean(self.klds(method)))

    def mean_nsr(self) -> float:
        return float(np.mean(list(self.nsr.values())))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rep", "method", "KLD"])
            for rep, method, kld in self.rows:
                w.writerow([rep, method, format(kld, ".17g")])


def _run_one(config: DgpConfig, rep: int, test_len: int, methods, candidates):
    cfg = replace(config, seed=config.seed + rep)
    sim = generate_series(cfg)
    nsr = noise_to_signal(sim)
    out = []
    for name in methods:
        kwargs = {"candidates": candidates} if name == "bayes_nw" else {}
        report = expanding_window_backtest(
            sim.densities, cfg.length - test_len, make_forecaster(name, **kwargs))
        out.append((rep, name, report.mean_kld))
    return out, nsr


def run_replications(config: DgpConfig, reps: int, test_len: int = 50,
                     methods=("bayes_nw", "rw"), workers: int | None = 1,
                     candidates=None) -> ReplicationTable:
    """Repeat generate-then-backtest ``reps`` times.

    Replication ``r`` uses seed ``config.seed + r``, so results do not depend
    on ``workers``.  The last ``test_len`` densities of each series are the
    holdout, forecast one step ahead with an expanding window.
    """
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    if not 1 <= test_len <= config.length - 2:
        raise ConfigError(
            f"test_len must lie in [1, {config.length - 2}], got {test_len}")
    args = [(config, r, test_len, tuple(methods), candidates) for r in range(reps)]
    if workers is not None and workers <= 1:
        results = [_run_one(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, *zip(*args)))
    rows, nsr = [], {}
    for r, (rep_rows, rep_nsr) in enumerate(results):
        rows.extend(rep_rows)
        nsr[r] = rep_nsr
    return ReplicationTable(rows, nsr)
