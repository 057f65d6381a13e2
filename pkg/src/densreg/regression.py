"""Functional Nadaraya-Watson regression of density on density.

The estimator predicts the successor of a query density as a Bayes-space
weighted average of the successors of past densities, with weights given by
a kernel of the Bayes distance between each past density and the query.
All averaging happens on clr images, where the Bayes operations are linear.
"""
from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .bayes_space import clr_inv_values, clr_matrix
from .errors import (
    ConfigError,
    EmptyNeighborhoodError,
    LengthMismatchError,
    NoValidCandidateError,
)
from .grid_fn import Grid, GriddedDensity, check_same_grid

log = logging.getLogger(__name__)

Kernel = Callable[[np.ndarray], np.ndarray]


def epanechnikov_halved(u):
    """``K(u) = 1 - u**2`` on ``[0, 1)``, zero elsewhere."""
    u = np.asarray(u, dtype=np.float64)
    return np.where((u >= 0) & (u < 1), 1.0 - u * u, 0.0)


@dataclass(frozen=True, eq=False)
class DensitySeries(Sequence):
    """Time-ordered densities on one shared grid."""

    densities: tuple[GriddedDensity, ...]
    labels: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        dens = tuple(self.densities)
        if not dens:
            raise LengthMismatchError("a density series needs at least one density")
        check_same_grid(*dens)
        object.__setattr__(self, "densities", dens)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != len(dens):
                raise LengthMismatchError("labels and densities differ in length")
            object.__setattr__(self, "labels", labels)

    @property
    def grid(self) -> Grid:
        return self.densities[0].grid

    def __len__(self):
        return len(self.densities)

    def __getitem__(self, i):
        if isinstance(i, slice):
            labels = self.labels[i] if self.labels is not None else None
            return DensitySeries(self.densities[i], labels)
        return self.densities[i]

    @cached_property
    def clr(self) -> np.ndarray:
        """Clr images, one row per density (read-only)."""
        c = clr_matrix(self.densities, self.grid)
        c.flags.writeable = False
        return c

    def values(self) -> np.ndarray:
        return np.vstack([d.values for d in self.densities])

    def append(self, density: GriddedDensity, label=None) -> DensitySeries:
        labels = None
        if self.labels is not None:
            labels = self.labels + (str(label if label is not None else len(self)),)
        return DensitySeries(self.densities + (density,), labels)


def _query_distances(rows: np.ndarray, q: np.ndarray, w: np.ndarray) -> np.ndarray:
    diff = rows - q
    return np.sqrt((diff * diff) @ w)


def pairwise_distances(clr_rows: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Bayes distance matrix from clr rows (Gram expansion, clipped at 0)."""
    gram = (clr_rows * w) @ clr_rows.T
    sq = np.diag(gram)
    d2 = sq[:, None] + sq[None, :] - 2.0 * gram
    np.fill_diagonal(d2, 0.0)
    return np.sqrt(np.maximum(d2, 0.0))


def weights_from_distances(dist, h_reg: float, kernel: Kernel = epanechnikov_halved):
    """Normalized kernel weights ``K(d/h) / sum K(d/h)``.

    Raises
    ------
    EmptyNeighborhoodError
        If no distance is below ``h_reg``.
    """
    if not h_reg > 0:
        raise ConfigError(f"bandwidth must be positive, got {h_reg}")
    k = kernel(np.asarray(dist, dtype=np.float64) / h_reg)
    total = k.sum()
    if not total > 0:
        raise EmptyNeighborhoodError(
            f"no training density within bandwidth {h_reg:.6g} of the query"
        )
    return k / total


def nw_weights(train, query: GriddedDensity, h_reg: float,
               kernel: Kernel = epanechnikov_halved) -> np.ndarray:
    """Weights of the training densities ``train`` for predicting after ``query``."""
    train = train if isinstance(train, DensitySeries) else DensitySeries(tuple(train))
    check_same_grid(train[0], query)
    q = clr_matrix([query], train.grid)[0]
    dist = _query_distances(train.clr, q, train.grid.weights)
    return weights_from_distances(dist, h_reg, kernel)


def _predict_clr(clr_rows: np.ndarray, q: np.ndarray, w: np.ndarray, h_reg: float,
                 kernel: Kernel) -> np.ndarray:
    dist = _query_distances(clr_rows[:-1], q, w)
    weights = weights_from_distances(dist, h_reg, kernel)
    return weights @ clr_rows[1:]


def bayes_nw_predict(series: DensitySeries, query: GriddedDensity, h_reg: float,
                     kernel: Kernel = epanechnikov_halved) -> GriddedDensity:
    """Predict the density following ``query`` from the pairs in ``series``.

    Pairs are ``(series[t], series[t + 1])``; the prediction is the inverse clr
    of the weighted sum of successor clr images.
    """
    if len(series) < 2:
        raise LengthMismatchError("need at least one (density, successor) pair")
    check_same_grid(series[0], query)
    q = clr_matrix([query], series.grid)[0]
    pred = _predict_clr(series.clr, q, series.grid.weights, h_reg, kernel)
    return clr_inv_values(series.grid, pred)


@dataclass(frozen=True)
class BandwidthSelection:
    h_reg: float
    candidate_grid: np.ndarray
    scores: np.ndarray


def default_candidates(series: DensitySeries, n: int = 25) -> np.ndarray:
    """Log-spaced bandwidths between the 5th and 95th percentiles of pairwise distances."""
    d = pairwise_distances(series.clr, series.grid.weights)
    off = d[np.triu_indices_from(d, k=1)]
    off = off[off > 0]
    if off.size == 0:
        # Constant series: any positive bandwidth keeps every neighbour.
        return np.array([1.0])
    lo, hi = np.percentile(off, [5, 95])
    if hi <= lo:
        return np.array([hi])
    return np.geomspace(lo, hi, n)


EMPTY_POLICIES = ("nearest", "inf")


def loo_scores(clr_rows: np.ndarray, w: np.ndarray, candidates,
               kernel: Kernel = epanechnikov_halved, empty: str = "nearest") -> np.ndarray:
    """Leave-one-pair-out squared Bayes prediction error per candidate bandwidth.

    A left-out pair with no neighbour inside the bandwidth is predicted from
    its nearest remaining neighbour(s) when ``empty="nearest"``, which is what
    :func:`forecast_sequence` does with ``widen_empty=True``.  With
    ``empty="inf"`` such a candidate scores ``inf`` instead.
    """
    if empty not in EMPTY_POLICIES:
        raise ConfigError(f"empty must be one of {EMPTY_POLICIES}, got {empty!r}")
    x, y = clr_rows[:-1], clr_rows[1:]
    dist = pairwise_distances(x, w)
    np.fill_diagonal(dist, np.inf)
    nearest = (dist == dist.min(axis=1, keepdims=True)).astype(np.float64)
    scores = np.empty(len(candidates))
    for i, h in enumerate(candidates):
        k = kernel(dist / h)
        tot = k.sum(axis=1)
        lonely = tot <= 0
        if np.any(lonely):
            if empty == "inf":
                scores[i] = np.inf
                continue
            k[lonely] = nearest[lonely]
            tot[lonely] = k[lonely].sum(axis=1)
        resid = (k / tot[:, None]) @ y - y
        scores[i] = float(((resid * resid) @ w).sum())
    return scores


def gcv_select_bandwidth(series: DensitySeries, kernel: Kernel = epanechnikov_halved,
                         candidates=None, empty: str = "nearest") -> BandwidthSelection:
    """Choose the regression bandwidth by leave-one-pair-out cross-validation.

    See :func:`loo_scores` for the meaning of ``empty``.
    """
    if len(series) < 3:
        raise LengthMismatchError("bandwidth selection needs at least 3 densities")
    if candidates is None:
        candidates = default_candidates(series)
    cand = np.asarray(candidates, dtype=np.float64).ravel()
    if cand.size == 0 or np.any(~(cand > 0)):
        raise ConfigError("candidate bandwidths must be a nonempty set of positive values")
    scores = loo_scores(series.clr, series.grid.weights, cand, kernel, empty)
    if not np.any(np.isfinite(scores)):
        raise NoValidCandidateError("every candidate bandwidth leaves an empty neighbourhood")
    best = int(np.argmin(scores))
    return BandwidthSelection(float(cand[best]), cand, scores)


def forecast_sequence(series: DensitySeries, horizon: int, h_reg: float,
                      kernel: Kernel = epanechnikov_halved,
                      widen_empty: bool = False) -> DensitySeries:
    """Iterated one-step-ahead forecasts.

    Each prediction is appended to the training series before the next step.
    With ``widen_empty`` an empty neighbourhood enlarges the bandwidth just past
    the nearest training density instead of raising.
    """
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    if len(series) < 2:
        raise LengthMismatchError("need at least one (density, successor) pair")
    grid = series.grid
    w = grid.weights
    rows = list(series.clr)
    out = []
    for step in range(1, horizon + 1):
        c = np.vstack(rows)
        q = c[-1]
        dist = _query_distances(c[:-1], q, w)
        h = h_reg
        if widen_empty and not np.any(kernel(dist / h) > 0):
            dmin = float(dist.min())
            h = dmin + max(1e-12, 1e-12 * dmin)
            log.warning("step %d: empty neighbourhood at h=%.6g, widened to %.6g",
                        step, h_reg, h)
        try:
            weights = weights_from_distances(dist, h, kernel)
        except EmptyNeighborhoodError as exc:
            raise EmptyNeighborhoodError(str(exc), step=step) from None
        pred = clr_inv_values(grid, weights @ c[1:])
        out.append(pred)
        rows.append(clr_matrix([pred], grid)[0])
    return DensitySeries(tuple(out))


def random_walk_forecast(series: DensitySeries, horizon: int) -> DensitySeries:
    """Repeat the last observed density ``horizon`` times."""
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    return DensitySeries((series[-1],) * horizon)
