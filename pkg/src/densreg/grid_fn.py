"""Functions sampled on a uniform grid.

Everything downstream (densities, clr images, forecasts) is a vector of
values on one shared :class:`Grid`.  Every integral is the dot product with
:attr:`Grid.weights` (composite Simpson, exact for cubics), and binary
operations refuse to mix grids.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    DomainError,
    GridMismatchError,
    InvalidBoundsError,
    InvariantError,
    TooFewPointsError,
)

#: Relative positivity floor applied to every density.
FLOOR_REL = 1e-10
#: Tolerance on the unit-integral (density) and zero-integral (clr) checks.
INTEGRAL_TOL = 1e-8


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n_points`` nodes spanning ``[a, b]``."""

    a: float
    b: float
    n_points: int

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (np.isfinite(a) and np.isfinite(b)) or a >= b:
            raise InvalidBoundsError(f"need a < b, got a={a}, b={b}")
        if int(self.n_points) != self.n_points or self.n_points < 3:
            raise TooFewPointsError(f"need n_points >= 3, got {self.n_points}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def spacing(self) -> float:
        return (self.b - self.a) / (self.n_points - 1)

    @property
    def length(self) -> float:
        return self.b - self.a

    def point(self, i: int) -> float:
        if not 0 <= i < self.n_points:
            raise IndexError(i)
        if i == self.n_points - 1:
            return self.b
        return self.a + i * self.spacing

    @cached_property
    def points(self) -> np.ndarray:
        x = self.a + np.arange(self.n_points) * self.spacing
        x[-1] = self.b
        x.flags.writeable = False
        return x

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weights; they sum to ``b - a``."""
        w = quadrature_weights(self.n_points) * self.spacing
        w.flags.writeable = False
        return w

    def shifted(self, delta: float) -> Grid:
        return Grid(self.a + delta, self.b + delta, self.n_points)


def quadrature_weights(n: int) -> np.ndarray:
    """Composite Simpson weights for ``n`` equispaced nodes at unit spacing.

    With an odd number of intervals the last three use Simpson's 3/8 rule.
    """
    if n < 3:
        raise TooFewPointsError(f"need n >= 3, got {n}")
    w = np.zeros(n)
    m = n - 1
    simpson_end = m if m % 2 == 0 else m - 3
    if simpson_end > 0:
        w[0:simpson_end + 1:2] += 2.0 / 3.0
        w[1:simpson_end:2] += 4.0 / 3.0
        w[0] -= 1.0 / 3.0
        w[simpson_end] -= 1.0 / 3.0
    if simpson_end < m:
        w[simpson_end:] += np.array([3.0, 9.0, 9.0, 3.0]) / 8.0
    return w


def make_grid(a: float, b: float, n_points: int) -> Grid:
    return Grid(a, b, n_points)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real values attached to a grid.  Immutable."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.shape != (self.grid.n_points,):
            raise InvariantError(
                f"expected {self.grid.n_points} values, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise InvariantError("grid function values must be finite")
        object.__setattr__(self, "values", vals)
        self._validate()

    def _validate(self):
        pass

    def integral(self) -> float:
        return integral(self)

    def __len__(self):
        return self.grid.n_points


class GriddedDensity(GridFunction):
    """Strictly positive grid function with unit integral.

    Build one from arbitrary nonnegative values with :func:`as_density`,
    which applies the positivity floor and renormalizes.  Bayes-space
    operations go through :func:`density_from_log` and do not re-floor, so
    the group laws hold exactly.
    """

    def _validate(self):
        if not self.values.min() > 0:
            raise InvariantError("density values must be strictly positive")
        total = integral(self)
        if abs(total - 1.0) > INTEGRAL_TOL:
            raise InvariantError(f"density integrates to {total!r}, not 1")


class ClrFunction(GridFunction):
    """Zero-integral grid function (the clr image of a density)."""

    def _validate(self):
        scale = max(1.0, self.grid.length * float(np.abs(self.values).max()))
        total = integral(self)
        if abs(total) > INTEGRAL_TOL * scale:
            raise InvariantError(f"clr function integrates to {total!r}, not 0")


def integral(f: GridFunction) -> float:
    return float(f.grid.weights @ f.values)


def as_density(grid: Grid, values) -> GriddedDensity:
    """Clip ``values`` at the relative floor and renormalize to unit mass.

    Raises
    ------
    DomainError
        If any value is negative or non-finite, or all values are zero.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.shape != (grid.n_points,):
        raise InvariantError(f"expected {grid.n_points} values, got shape {v.shape}")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise DomainError("density values must be finite and nonnegative")
    vmax = v.max()
    if vmax <= 0:
        raise DomainError("density values are identically zero")
    v = np.maximum(v, FLOOR_REL * vmax)
    v = v / (grid.weights @ v)
    return GriddedDensity(grid, v)


def density_from_log(grid: Grid, log_values) -> GriddedDensity:
    """Density proportional to ``exp(log_values)``, shifted by the max to avoid overflow.

    Underflowed entries are raised to the smallest normal double; nothing
    else is clipped.
    """
    lv = np.asarray(log_values, dtype=np.float64)
    if not np.all(np.isfinite(lv)):
        raise DomainError("log-density values must be finite")
    v = np.maximum(np.exp(lv - lv.max()), np.finfo(np.float64).tiny)
    return GriddedDensity(grid, v / (grid.weights @ v))


def uniform_density(grid: Grid) -> GriddedDensity:
    return GriddedDensity(grid, np.full(grid.n_points, 1.0 / grid.length))


def zero_function(grid: Grid) -> GridFunction:
    return GridFunction(grid, np.zeros(grid.n_points))


def check_same_grid(*fs: GridFunction) -> Grid:
    grid = fs[0].grid
    for f in fs[1:]:
        if f.grid != grid:
            raise GridMismatchError(f"grid mismatch: {grid} vs {f.grid}")
    return grid


_BINARY = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
    "div": np.divide,
}


def pointwise(
    f: GridFunction, g: GridFunction | None = None, op: str = "add", r: float | None = None
) -> GridFunction:
    """Elementwise arithmetic on grid functions.

    ``op`` is one of ``add``, ``sub``, ``mul``, ``div`` (binary, need ``g``),
    ``scale`` (needs ``r``), ``ln`` or ``exp`` (unary).  The result is always
    a plain :class:`GridFunction`.
    """
    if op in _BINARY:
        if g is None:
            raise TypeError(f"op {op!r} needs a second function")
        check_same_grid(f, g)
        if op == "div" and np.any(g.values == 0):
            raise DomainError("division by zero")
        return GridFunction(f.grid, _BINARY[op](f.values, g.values))
    if op == "scale":
        if r is None:
            raise TypeError("op 'scale' needs r")
        return GridFunction(f.grid, r * f.values)
    if op == "ln":
        if np.any(f.values <= 0):
            raise DomainError("log of nonpositive value")
        return GridFunction(f.grid, np.log(f.values))
    if op == "exp":
        with np.errstate(over="raise"):
            try:
                return GridFunction(f.grid, np.exp(f.values))
            except FloatingPointError as exc:
                raise DomainError("exp overflow") from exc
    raise ValueError(f"unknown op {op!r}")
