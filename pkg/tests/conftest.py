import numpy as np
import pytest

from densreg.grid_fn import Grid, as_density


@pytest.fixture
def grid():
    return Grid(-1.0, 1.0, 201)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_density(grid, rng, n_terms=4, scale=1.0):
    """Smooth random density: exp of a random cosine/sine series."""
    u = (grid.points - grid.a) / grid.length
    k = np.arange(1, n_terms + 1)[:, None]
    a, b = rng.normal(scale=scale, size=(2, n_terms, 1))
    log_f = (a * np.cos(np.pi * k * u) + b * np.sin(np.pi * k * u)).sum(axis=0)
    return as_density(grid, np.exp(log_f))


@pytest.fixture
def make_density(grid, rng):
    def _make(**kw):
        return random_density(grid, rng, **kw)
    return _make


_ACCEPTANCE = []


@pytest.fixture
def record_criterion():
    """Log one PASS/FAIL line per acceptance criterion, then assert it."""
    def _record(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} ({detail})"
        _ACCEPTANCE.append((number, line))
        print(line)
        assert ok, line
    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
