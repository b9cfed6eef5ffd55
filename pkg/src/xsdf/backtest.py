"""Rolling out-of-sample protocol: re-estimate monthly on a trailing window,
form next-month weights from the freshest signals, record realized returns.
Includes subsample splits by a state variable's median and trailing Sharpe
ratio series.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from ._fmt import ffmt
from . import strategy
from .errors import CoverageGap, InsufficientHistory, ParseError, TooShort
from .estimators import (
    DEFAULT_RIDGE_GRID,
    SdfParams,
    cross_validate,
    estimate_max_return,
    estimate_max_sharpe_ridge,
)
from .managed import build_managed
from .panel import MonthStamp, ReturnPanel, SignalPanel, align, standardize
from .strategy import PerformanceReport, realized_return

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BacktestConfig:
    """Configuration of one rolling backtest run.

    ``ridge`` is either a fixed shrinkage value or the string ``"cv"`` to
    re-select it by cross-validation in every window. ``warm_start`` seeds each
    window's iteration from the previous window's solution (first window falls
    back to the max-return initialization); it makes the run sequential and is
    recorded in run metadata since it can select among near-ties.
    """

    window_months: int = 120
    objective: str = "max_sharpe"  # "max_return" | "max_sharpe"
    restriction: str = "cross"  # "cross" | "self"
    zero_cost: bool = False
    leverage: Optional[float] = None
    ridge: Union[float, str] = 1.0
    cv_grid: Optional[tuple[float, ...]] = None
    cv_folds: int = 5
    oos_start: Optional[MonthStamp] = None
    tol: float = 1e-8
    max_iter: int = 500
    warm_start: bool = True
    standardize: bool = True

    def __post_init__(self):
        if self.window_months < 24:
            raise ValueError("window must cover at least 24 months")
        if self.objective not in ("max_return", "max_sharpe"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.restriction not in ("cross", "self"):
            raise ValueError(f"unknown restriction {self.restriction!r}")
        if self.objective == "max_return" and self.restriction == "self":
            raise ValueError("the self restriction applies to max_sharpe only")
        if self.restriction == "self" and self.zero_cost:
            raise ValueError(
                "self restriction with the zero-cost constraint has no analytic "
                "solution; drop one of the two"
            )
        if isinstance(self.ridge, str) and self.ridge != "cv":
            raise ValueError(f"ridge must be a number or 'cv', got {self.ridge!r}")
        if self.leverage is not None and self.leverage <= 0:
            raise ValueError("leverage target must be positive")

    @property
    def uses_cv(self) -> bool:
        return self.ridge == "cv"


@dataclass
class BacktestResult:
    """Dated out-of-sample returns plus everything needed to audit them."""

    return_dates: tuple[MonthStamp, ...]
    oos_returns: np.ndarray  # (T_oos,)
    weights_history: np.ndarray  # (T_oos, N)
    params_history: list[SdfParams]
    chosen_lambda_history: list[float]
    assets: tuple[str, ...]
    signals: tuple[str, ...]
    config: BacktestConfig

    @property
    def n_months(self) -> int:
        return len(self.return_dates)

    def report(self, gamma: float = 2.0) -> PerformanceReport:
        return strategy.performance(
            self.oos_returns, gamma=gamma, weights_history=self.weights_history
        )


def run(
    signals: SignalPanel,
    returns: ReturnPanel,
    config: BacktestConfig,
    threads: int = 1,
) -> BacktestResult:
    """Run the rolling protocol.

    For each out-of-sample month the estimator sees only the trailing
    ``window_months`` signal/return pairs; weights come from the signal matrix
    dated one month before the return they are applied to, so deleting all
    data at or after a month cannot change that month's position.

    ``threads`` > 1 estimates windows concurrently; that requires
    ``warm_start=False`` (each window then starts from the max-return
    initialization) and produces the same result as the sequential run.
    """
    if config.standardize:
        signals = standardize(signals)
    sample = align(signals, returns)
    W = config.window_months
    start = W
    if config.oos_start is not None:
        eligible = [
            k for k, d in enumerate(sample.return_dates) if d >= config.oos_start
        ]
        if not eligible:
            raise InsufficientHistory(
                f"no aligned return on or after {config.oos_start}"
            )
        if eligible[0] < W:
            raise InsufficientHistory(
                f"oos_start {config.oos_start} leaves only {eligible[0]} months of "
                f"history; {W} are required"
            )
        start = eligible[0]
    if sample.T <= start:
        raise InsufficientHistory(
            f"{sample.T} aligned months cannot support a {W}-month window plus "
            "at least one out-of-sample month"
        )

    if threads > 1 and config.warm_start:
        raise ValueError("parallel windows require warm_start=False")

    series = build_managed(sample, zero_cost=config.zero_cost)

    def estimate_window(k: int, init: Optional[SdfParams]) -> tuple[SdfParams, float]:
        window = series.subset(slice(k - W, k))
        if config.objective == "max_return":
            return estimate_max_return(window), 0.0
        if config.uses_cv:
            cv = cross_validate(
                window,
                grid=config.cv_grid or DEFAULT_RIDGE_GRID,
                folds=config.cv_folds,
                init=init,
                tol=config.tol,
                max_iter=config.max_iter,
                restriction=config.restriction,
            )
            lam = cv.chosen
        else:
            lam = float(config.ridge)
        params, _ = estimate_max_sharpe_ridge(
            window,
            lam,
            init=init,
            tol=config.tol,
            max_iter=config.max_iter,
            restriction=config.restriction,
        )
        return params, lam

    months = list(range(start, sample.T))
    fits: list[Optional[tuple[SdfParams, float]]] = [None] * len(months)
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            for i, fit in enumerate(pool.map(lambda k: estimate_window(k, None), months)):
                fits[i] = fit
    else:
        prev: Optional[SdfParams] = None
        for i, k in enumerate(months):
            params, lam = estimate_window(k, prev if config.warm_start else None)
            fits[i] = (params, lam)
            prev = params

    oos_dates: list[MonthStamp] = []
    oos_returns: list[float] = []
    weight_rows: list[np.ndarray] = []
    params_history: list[SdfParams] = []
    lambda_history: list[float] = []
    for k, (params, lam) in zip(months, fits):
        wv = strategy.weights(
            sample.S[k],
            params,
            zero_cost=config.zero_cost,
            leverage=config.leverage,
            date=sample.return_dates[k],
        )
        oos_dates.append(sample.return_dates[k])
        oos_returns.append(realized_return(wv, sample.r[k]))
        weight_rows.append(wv.weights)
        params_history.append(params)
        lambda_history.append(lam)

    return BacktestResult(
        return_dates=tuple(oos_dates),
        oos_returns=np.array(oos_returns),
        weights_history=np.array(weight_rows),
        params_history=params_history,
        chosen_lambda_history=lambda_history,
        assets=sample.assets,
        signals=sample.signals,
        config=config,
    )


# ---------------------------------------------------------------------------
# state splits and trailing Sharpe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StateSeries:
    """A dated scalar series (sentiment level, VIX, a benchmark return, ...)."""

    dates: tuple[MonthStamp, ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if v.shape != (len(self.dates),):
            raise ValueError("one value per date required")

    def lookup(self, dates: Sequence[MonthStamp]) -> np.ndarray:
        index = {d: i for i, d in enumerate(self.dates)}
        out = np.empty(len(dates))
        for i, d in enumerate(dates):
            if d not in index:
                raise CoverageGap(f"state series has no value for {d}")
            out[i] = self.values[index[d]]
        return out


def load_state(path) -> StateSeries:
    """Load a `date,value` CSV into a StateSeries."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    if list(df.columns) != ["date", "value"]:
        raise ParseError(f"{path}: expected header ['date', 'value'], got {list(df.columns)}")
    dates, values = [], []
    for row, rec in enumerate(df.itertuples(index=False), start=2):
        dates.append(MonthStamp.parse(rec.date))
        try:
            values.append(float(rec.value))
        except ValueError as exc:
            raise ParseError(f"{path} row {row}: bad value {rec.value!r}") from exc
    order = np.argsort([d.index for d in dates])
    return StateSeries(tuple(dates[i] for i in order), np.array(values)[order])


def split_by_median(
    result: BacktestResult, state: StateSeries, gamma: float = 2.0
) -> tuple[PerformanceReport, PerformanceReport]:
    """Performance in high- vs. low-state months, split at the state median.

    The median is taken over the backtest's own out-of-sample dates; months at
    or below it land in the low bucket. A bucket with fewer than two months
    (e.g. a constant state puts everything in the low bucket) gets a report
    with NaN moments rather than an error.
    """
    values = state.lookup(result.return_dates)
    median = float(np.median(values))
    high = values > median
    low = ~high
    reports = []
    for mask in (high, low):
        if mask.sum() < 2:
            reports.append(
                PerformanceReport(
                    mu_monthly_pct=float("nan"),
                    sigma_monthly_pct=float("nan"),
                    sharpe_annualized=float("nan"),
                    ce_annual=float("nan"),
                    sum_avg=float("nan"),
                    asum_avg=float("nan"),
                    n_months=int(mask.sum()),
                )
            )
            continue
        reports.append(
            strategy.performance(
                result.oos_returns[mask],
                gamma=gamma,
                weights_history=result.weights_history[mask],
            )
        )
    return reports[0], reports[1]


@dataclass(frozen=True)
class TrailingSharpeSeries:
    """Trailing annualized Sharpe per date, optionally relative to a benchmark."""

    dates: tuple[MonthStamp, ...]
    sharpe: np.ndarray
    ratio: Optional[np.ndarray] = None  # sharpe / benchmark sharpe


def _rolling_sharpe(values: np.ndarray, window: int) -> np.ndarray:
    out = np.empty(values.size - window + 1)
    for i in range(out.size):
        chunk = values[i : i + window]
        sd = chunk.std(ddof=1)
        out[i] = chunk.mean() / sd * np.sqrt(12.0) if sd > 0 else np.nan
    return out


def trailing_sharpe(
    result: BacktestResult,
    window: int = 120,
    benchmark: Optional[StateSeries] = None,
) -> TrailingSharpeSeries:
    """Trailing-window annualized Sharpe ratios of the out-of-sample returns.

    With a benchmark return series the ratio of the two trailing Sharpe series
    is reported as well.
    """
    if result.n_months < window:
        raise TooShort(
            f"{result.n_months} out-of-sample months cannot fill a {window}-month window"
        )
    dates = result.return_dates[window - 1 :]
    sharpe = _rolling_sharpe(result.oos_returns, window)
    ratio = None
    if benchmark is not None:
        bench = benchmark.lookup(result.return_dates)
        bench_sharpe = _rolling_sharpe(bench, window)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = sharpe / bench_sharpe
    return TrailingSharpeSeries(dates=dates, sharpe=sharpe, ratio=ratio)


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------


def write_oos_returns(result: BacktestResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("date,return\n")
        for d, v in zip(result.return_dates, result.oos_returns):
            fh.write(f"{d},{ffmt(v)}\n")


def write_weights(result: BacktestResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("date,asset,weight\n")
        for i, d in enumerate(result.return_dates):
            for j, a in enumerate(result.assets):
                fh.write(f"{d},{a},{ffmt(result.weights_history[i, j])}\n")


def write_lambda_history(result: BacktestResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("date,signal,value\n")
        for d, p in zip(result.return_dates, result.params_history):
            for s, v in zip(result.signals, p.signal_weights):
                fh.write(f"{d},{s},{ffmt(v)}\n")


def write_chosen_lambda(result: BacktestResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("date,ridge\n")
        for d, lam in zip(result.return_dates, result.chosen_lambda_history):
            fh.write(f"{d},{ffmt(lam)}\n")


def write_trailing_sharpe(series: TrailingSharpeSeries, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if series.ratio is None:
            fh.write("date,sharpe\n")
            for d, s in zip(series.dates, series.sharpe):
                fh.write(f"{d},{ffmt(s)}\n")
        else:
            fh.write("date,sharpe,ratio\n")
            for d, s, q in zip(series.dates, series.sharpe, series.ratio):
                fh.write(f"{d},{ffmt(s)},{ffmt(q)}\n")
