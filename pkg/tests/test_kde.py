import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import truncnorm

from densreg.bayes_space import bayes_dist
from densreg.errors import ConfigError, DegenerateSampleError, NegativeInputError
from densreg.evaluation import bayes_mise, sym_kld
from densreg.grid_fn import FLOOR_REL, Grid, integral
from densreg.kde import (
    KdeConfig,
    default_grid,
    kde_estimate,
    log_shift_transform,
    silverman_rot,
    truncated_gaussian_kernel,
)
from densreg.simulation import truncated_normal_density

TARGET = truncnorm(-2.0, 2.0, loc=0.0, scale=0.5)  # TN(0, 0.5^2) on [-1, 1]


def standardized(n, sd, rng):
    x = rng.standard_normal(n)
    return sd * (x - x.mean()) / x.std(ddof=1)


class TestRuleOfThumb:
    def test_unit_sd(self, rng):
        assert silverman_rot(standardized(100, 1.0, rng)) == pytest.approx(0.93157, abs=1e-5)

    def test_half_sd(self, rng):
        assert silverman_rot(standardized(32, 0.5, rng)) == pytest.approx(0.58500, abs=1e-5)

    @pytest.mark.parametrize("sample", [[3.0] * 10, [1.0]])
    def test_degenerate(self, sample):
        with pytest.raises(DegenerateSampleError):
            silverman_rot(sample)


def test_kernel_has_unit_mass():
    g = Grid(-1, 1, 2001)
    assert g.weights @ truncated_gaussian_kernel(g.points) == pytest.approx(1.0, abs=1e-9)
    assert truncated_gaussian_kernel(1.0001) == 0.0


class TestEstimate:
    def test_post_conditions(self, grid, rng):
        f = kde_estimate(rng.normal(0, 0.3, 50), KdeConfig(grid))
        assert abs(integral(f) - 1) < 1e-8
        assert f.values.min() >= FLOOR_REL * f.values.max() * (1 - 1e-12)

    def test_consistency_large_sample(self, grid):
        x = TARGET.rvs(10_000, random_state=np.random.default_rng(7))
        f = kde_estimate(x, KdeConfig(grid))
        assert sym_kld(f, truncated_normal_density(0.0, 0.5, grid)) < 0.01

    @pytest.mark.slow
    def test_mise_decreases_with_n(self, grid):
        truth = truncated_normal_density(0.0, 0.5, grid)
        rng = np.random.default_rng(11)
        mise = {}
        for n in (100, 1000):
            est = [kde_estimate(TARGET.rvs(n, random_state=rng), KdeConfig(grid))
                   for _ in range(50)]
            mise[n] = bayes_mise(est, [truth] * 50)
        assert mise[1000] < mise[100]

    def test_fixed_bandwidth(self, grid, rng):
        x = rng.normal(0, 0.3, 40)
        a = kde_estimate(x, KdeConfig(grid, bandwidth=0.2))
        b = kde_estimate(x, KdeConfig(grid))
        assert bayes_dist(a, b) > 0

    def test_bad_config(self, grid):
        with pytest.raises(ConfigError):
            KdeConfig(grid, bandwidth=0.0)
        with pytest.raises(ConfigError):
            KdeConfig(grid, kernel="epanechnikov")

    def test_bandwidth_smooths(self, grid, rng):
        x = rng.normal(0, 0.4, 60)
        rough = []
        for k in range(6):
            v = kde_estimate(x, KdeConfig(grid, bandwidth=0.02 * 2 ** k)).values
            rough.append(np.abs(np.diff(v, 2)).max())
        assert all(b <= a for a, b in zip(rough, rough[1:]))

    @settings(max_examples=25, deadline=None)
    @given(delta=st.floats(-5, 5), seed=st.integers(0, 10_000))
    def test_translation_equivariance(self, delta, seed):
        g = Grid(-1, 1, 101)
        x = np.random.default_rng(seed).normal(0, 0.3, 30)
        a = kde_estimate(x, KdeConfig(g))
        b = kde_estimate(x + delta, KdeConfig(g.shifted(delta)))
        np.testing.assert_allclose(a.values, b.values, atol=1e-10, rtol=0)

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(-3, 3), min_size=2, max_size=40).filter(
        lambda v: np.std(v) > 1e-3))
    def test_mass_conservation(self, sample):
        f = kde_estimate(sample, KdeConfig(default_grid([sample])))
        assert abs(integral(f) - 1) < 1e-8


def test_default_grid_covers_every_sample(rng):
    a, b = rng.normal(0, 1, 30), rng.normal(5, 2, 30)
    g = default_grid([a, b])
    assert g.a < min(a.min(), b.min()) and g.b > max(a.max(), b.max())


class TestLogShift:
    def test_zero(self):
        assert log_shift_transform([0.0], 0.1)[0] == pytest.approx(-2.302585, abs=1e-6)

    def test_maps_to_zero(self):
        assert log_shift_transform([0.9], 0.1)[0] == pytest.approx(0.0, abs=1e-15)

    def test_negative(self):
        with pytest.raises(NegativeInputError):
            log_shift_transform([1.0, -0.5])
