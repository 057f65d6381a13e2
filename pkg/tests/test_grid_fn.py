import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from densreg.errors import (
    DomainError,
    GridMismatchError,
    InvalidBoundsError,
    InvariantError,
    TooFewPointsError,
)
from densreg.grid_fn import (
    FLOOR_REL,
    ClrFunction,
    Grid,
    GridFunction,
    GriddedDensity,
    as_density,
    integral,
    pointwise,
    quadrature_weights,
    uniform_density,
    zero_function,
)


class TestGrid:
    def test_symmetric_unit_grid(self):
        g = Grid(-1, 1, 201)
        assert g.spacing == pytest.approx(0.01, abs=1e-15)
        assert g.point(100) == pytest.approx(0.0, abs=1e-15)
        assert g.point(200) == 1.0

    def test_three_points(self):
        np.testing.assert_array_equal(Grid(0, 1, 3).points, [0.0, 0.5, 1.0])

    def test_age_grid(self):
        g = Grid(0, 110, 111)
        assert g.spacing == 1.0
        np.testing.assert_array_equal(g.points, np.arange(111.0))

    @pytest.mark.parametrize("a, b", [(1, 1), (2, 1), (0, np.inf)])
    def test_bad_bounds(self, a, b):
        with pytest.raises(InvalidBoundsError):
            Grid(a, b, 10)

    def test_too_few_points(self):
        with pytest.raises(TooFewPointsError):
            Grid(0, 1, 2)

    def test_arrays_are_read_only(self):
        g = Grid(0, 1, 5)
        with pytest.raises(ValueError):
            g.points[0] = 3.0
        with pytest.raises(ValueError):
            g.weights[0] = 3.0


class TestQuadrature:
    @pytest.mark.parametrize("n", [3, 4, 5, 6, 11, 200, 201])
    def test_weights_sum_to_interval_count(self, n):
        assert quadrature_weights(n).sum() == pytest.approx(n - 1, rel=1e-14)

    def test_constant_on_unit_interval(self):
        g = Grid(0, 1, 11)
        assert integral(GridFunction(g, np.ones(11))) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("n", [3, 4, 7, 10, 101])
    def test_identity_on_unit_interval(self, n):
        g = Grid(0, 1, n)
        assert integral(GridFunction(g, g.points)) == pytest.approx(0.5, abs=1e-15)

    def test_square_on_symmetric_interval(self):
        g = Grid(-1, 1, 201)
        assert abs(integral(GridFunction(g, g.points ** 2)) - 2 / 3) < 1e-4

    @settings(max_examples=50, deadline=None)
    @given(
        a=st.floats(-10, 10),
        width=st.floats(0.1, 10),
        n=st.integers(3, 60),
        c0=st.floats(-5, 5),
        c1=st.floats(-5, 5),
    )
    def test_exact_for_affine(self, a, width, n, c0, c1):
        g = Grid(a, a + width, n)
        b = a + width
        exact = c0 * width + c1 * (b * b - a * a) / 2
        got = integral(GridFunction(g, c0 + c1 * g.points))
        assert abs(got - exact) < 1e-12 * max(1.0, abs(exact), width * (abs(c0) + abs(c1) * 10))

    @settings(max_examples=30, deadline=None)
    @given(r=st.floats(-100, 100), s=st.floats(-100, 100))
    def test_integral_is_linear(self, r, s):
        g = Grid(-1, 1, 51)
        f = GridFunction(g, np.sin(3 * g.points) + g.points ** 2)
        lhs = integral(pointwise(pointwise(f, op="scale", r=r), pointwise(f, op="scale", r=s)))
        assert abs(lhs - (r + s) * integral(f)) < 1e-10 * max(1.0, abs(r) + abs(s))

    def test_sub_self_integrates_to_zero(self, grid):
        f = GridFunction(grid, np.cos(grid.points) * 7.3)
        assert integral(pointwise(f, f, "sub")) == 0.0


class TestPointwise:
    def test_add_zero(self, grid):
        f = GridFunction(grid, np.sin(grid.points))
        np.testing.assert_array_equal(pointwise(f, zero_function(grid)).values, f.values)

    def test_ln_exp_round_trip(self, grid):
        f = GridFunction(grid, np.sin(5 * grid.points))
        back = pointwise(pointwise(f, op="exp"), op="ln")
        np.testing.assert_allclose(back.values, f.values, atol=1e-12, rtol=0)

    def test_mul_elementwise(self, grid, rng):
        x, y = rng.normal(size=(2, grid.n_points))
        prod = pointwise(GridFunction(grid, x), GridFunction(grid, y), "mul")
        assert prod.values[37] == x[37] * y[37]

    def test_ln_of_nonpositive(self, grid):
        with pytest.raises(DomainError):
            pointwise(GridFunction(grid, grid.points), op="ln")

    def test_division_by_zero(self, grid):
        f = GridFunction(grid, np.ones(grid.n_points))
        with pytest.raises(DomainError):
            pointwise(f, GridFunction(grid, grid.points), "div")

    def test_grid_mismatch(self, grid):
        f = zero_function(grid)
        with pytest.raises(GridMismatchError):
            pointwise(f, zero_function(Grid(-1, 1, 101)))

    def test_exp_overflow(self, grid):
        with pytest.raises(DomainError):
            pointwise(GridFunction(grid, np.full(grid.n_points, 1e4)), op="exp")


class TestDensities:
    def test_as_density_floors_and_normalizes(self, grid):
        v = np.exp(-50 * grid.points ** 2)
        v[:10] = 0.0
        f = as_density(grid, v)
        assert integral(f) == pytest.approx(1.0, abs=1e-12)
        assert f.values.min() >= FLOOR_REL * f.values.max() * (1 - 1e-12)

    @pytest.mark.parametrize("bad", [-1.0, np.nan, np.inf])
    def test_as_density_rejects(self, grid, bad):
        v = np.ones(grid.n_points)
        v[3] = bad
        with pytest.raises(DomainError):
            as_density(grid, v)

    def test_as_density_rejects_all_zero(self, grid):
        with pytest.raises(DomainError):
            as_density(grid, np.zeros(grid.n_points))

    def test_invariants_enforced(self, grid):
        with pytest.raises(InvariantError):
            GriddedDensity(grid, np.ones(grid.n_points))
        with pytest.raises(InvariantError):
            ClrFunction(grid, np.ones(grid.n_points))
        with pytest.raises(InvariantError):
            GridFunction(grid, np.ones(5))

    def test_uniform(self, grid):
        u = uniform_density(grid)
        np.testing.assert_allclose(u.values, 0.5)

    def test_values_immutable(self, grid):
        u = uniform_density(grid)
        with pytest.raises(ValueError):
            u.values[0] = 1.0
