"""Forecasting time series of densities by Bayes-space Nadaraya-Watson regression."""
from .bayes_space import (
    bayes_dist,
    bayes_inner,
    bayes_norm,
    clr,
    clr_inv,
    inverse,
    perturb,
    perturb_sub,
    power,
)
from .evaluation import (
    BacktestReport,
    BayesNWForecaster,
    RandomWalkForecaster,
    bayes_mise,
    expanding_window_backtest,
    sym_kld,
)
from .grid_fn import (
    ClrFunction,
    Grid,
    GriddedDensity,
    GridFunction,
    as_density,
    make_grid,
    pointwise,
    integral,
    quadrature_weights,
    uniform_density,
)
from .kde import KdeConfig, kde_estimate, log_shift_transform, silverman_rot
from .regression import (
    BandwidthSelection,
    DensitySeries,
    bayes_nw_predict,
    forecast_sequence,
    gcv_select_bandwidth,
    nw_weights,
    random_walk_forecast,
)
from .simulation import (
    DgpConfig,
    convolution_operator,
    generate_series,
    noise_to_signal,
    run_replications,
    trig_error,
    truncated_normal_density,
)

__version__ = "0.1.0"
