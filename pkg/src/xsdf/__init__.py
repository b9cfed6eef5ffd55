"""xsdf: cross-predictive stochastic-discount-factor trading strategies.

Jointly estimates a signal-weight vector and a cross-asset spillover matrix by
expected-return or Sharpe-ratio maximization, evaluates the resulting
strategies in rolling out-of-sample backtests, and summarizes the estimated
spillover structure with directed-network connectedness measures and
econometric spanning tests. A seeded synthetic generator with closed-form
oracles doubles as the correctness harness.
"""

__version__ = "0.1.0"

from .backtest import (
    BacktestConfig,
    BacktestResult,
    StateSeries,
    run,
    split_by_median,
    trailing_sharpe,
)
from .estimators import (
    DEFAULT_RIDGE_GRID,
    CvResult,
    IterationTrace,
    SdfParams,
    cross_validate,
    estimate_max_return,
    estimate_max_sharpe_eigen,
    estimate_max_sharpe_ridge,
)
from .managed import (
    CenteringProjector,
    ManagedSeries,
    SpilloverMatrix,
    build_managed,
    flatten_spillover,
    signal_weighted_returns,
    singular_value_dominance_check,
    spillover_weighted_returns,
    strategy_return_series,
    unflatten_spillover,
)
from .network import (
    BlockReport,
    ConnectednessReport,
    ImportanceReport,
    block_average,
    connectedness,
    signal_importance,
)
from .panel import (
    AlignedSample,
    MonthStamp,
    ReturnPanel,
    SignalPanel,
    align,
    load_returns,
    load_signals,
    standardize,
    write_returns,
    write_signals,
)
from .regress import (
    PanelRegressionResult,
    RegressionResult,
    cross_sectional_panel,
    factor_spanning,
    newey_west_lag,
    newey_west_tstats,
    ols,
)
from .strategy import (
    PerformanceReport,
    WeightVector,
    certainty_equivalent,
    performance,
    realized_return,
    weights,
)
from .synth import DgpSpec, generate, oracle_phi, pi_covariance, recover_b
