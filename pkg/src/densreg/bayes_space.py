"""Bayes Hilbert space algebra on gridded densities.

Perturbation (``perturb``) is the vector addition, powering (``power``) the
scalar multiplication, and the uniform density is the zero vector.  Inner
products and distances go through the clr isometry, so they cost one 1-D
quadrature.
"""
from __future__ import annotations

import numpy as np

from .grid_fn import (
    ClrFunction,
    Grid,
    GriddedDensity,
    check_same_grid,
    density_from_log,
    uniform_density,
)

__all__ = [
    "perturb",
    "power",
    "inverse",
    "perturb_sub",
    "clr",
    "clr_inv",
    "clr_matrix",
    "clr_inv_values",
    "bayes_inner",
    "bayes_norm",
    "bayes_dist",
    "uniform_density",
]


def perturb(f: GriddedDensity, g: GriddedDensity) -> GriddedDensity:
    r"""Perturbation :math:`(f \oplus g) = fg / \int fg`."""
    grid = check_same_grid(f, g)
    return density_from_log(grid, np.log(f.values) + np.log(g.values))


def power(r: float, f: GriddedDensity) -> GriddedDensity:
    r"""Powering :math:`(r \odot f) = f^r / \int f^r`.

    Evaluated as ``exp(r ln f)`` shifted by its maximum, so large ``|r|``
    cannot overflow.
    """
    return density_from_log(f.grid, r * np.log(f.values))


def inverse(f: GriddedDensity) -> GriddedDensity:
    return power(-1.0, f)


def perturb_sub(f: GriddedDensity, g: GriddedDensity) -> GriddedDensity:
    check_same_grid(f, g)
    return perturb(f, power(-1.0, g))


def _clr_rows(log_values: np.ndarray, grid: Grid) -> np.ndarray:
    mean = (log_values @ grid.weights) / grid.length
    return log_values - np.expand_dims(mean, -1)


def clr(f: GriddedDensity) -> ClrFunction:
    """Centred log-ratio: ``ln f`` minus its average over the support."""
    return ClrFunction(f.grid, _clr_rows(np.log(f.values), f.grid))


def clr_matrix(densities, grid: Grid) -> np.ndarray:
    """Stack the clr images of ``densities`` row-wise."""
    logs = np.log(np.vstack([d.values for d in densities]))
    return _clr_rows(logs, grid)


def clr_inv_values(grid: Grid, values: np.ndarray) -> GriddedDensity:
    """Inverse clr of a raw value vector; no zero-integral check."""
    return density_from_log(grid, values)


def clr_inv(g: ClrFunction) -> GriddedDensity:
    return clr_inv_values(g.grid, g.values)


def bayes_inner(f: GriddedDensity, g: GriddedDensity) -> float:
    grid = check_same_grid(f, g)
    return float(grid.weights @ (clr(f).values * clr(g).values))


def bayes_dist(f: GriddedDensity, g: GriddedDensity) -> float:
    """Bayes distance ``||f - g||_B``, i.e. the L2 norm of ``clr f - clr g``."""
    grid = check_same_grid(f, g)
    diff = clr(f).values - clr(g).values
    return float(np.sqrt(grid.weights @ (diff * diff)))


def bayes_norm(f: GriddedDensity) -> float:
    return bayes_dist(f, uniform_density(f.grid))
