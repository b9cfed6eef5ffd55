"""Regression utilities: OLS, Newey-West HAC inference with a Bartlett kernel,
factor-spanning tests, and monthly cross-sectional panel regressions whose
mean coefficients get HAC t-statistics.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._fmt import ffmt
from .errors import (
    AllMonthsRankDeficient,
    DateMisalignment,
    DimensionMismatch,
    RankDeficient,
    TooShort,
)

logger = logging.getLogger(__name__)

# Exact-fit t-stats are capped so CSV output stays finite.
_T_STAT_CAP = 1e6

_RANK_RTOL = 1e-10


@dataclass
class RegressionResult:
    """OLS estimates with enough state to compute HAC inference afterwards."""

    coefficients: np.ndarray  # intercept first when one was added
    residuals: np.ndarray
    n_obs: int
    design: np.ndarray  # (T, K+1): the matrix actually regressed on
    names: tuple[str, ...]
    lag_used: Optional[int] = None
    hac_se: Optional[np.ndarray] = None
    hac_t_stats: Optional[np.ndarray] = None


def ols(
    y: np.ndarray,
    X: np.ndarray,
    add_intercept: bool = True,
    names: Optional[Sequence[str]] = None,
) -> RegressionResult:
    """Least-squares fit of y on X, intercept prepended unless the caller
    already supplies one (pass ``add_intercept=False``). Raises RankDeficient
    for singular designs."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if y.ndim != 1 or X.shape[0] != y.size:
        raise DimensionMismatch(f"y has {y.size} rows, X has {X.shape[0]}")
    design = np.column_stack([np.ones(y.size), X]) if add_intercept else X
    T, K = design.shape
    if T <= K:
        raise TooShort(f"{T} observations cannot support {K} coefficients")
    if np.linalg.matrix_rank(design, tol=_RANK_RTOL * max(T, K)) < K:
        raise RankDeficient(
            f"design matrix of shape {design.shape} is rank deficient"
        )
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    if names is None:
        base = [f"x{i + 1}" for i in range(X.shape[1])]
    else:
        base = list(names)
    full_names = tuple(["const"] + base) if add_intercept else tuple(base)
    return RegressionResult(
        coefficients=coef,
        residuals=resid,
        n_obs=T,
        design=design,
        names=full_names,
    )


def newey_west_lag(T: int) -> int:
    """Bandwidth rule floor(4 * (T/100)^(2/9))."""
    if T < 1:
        raise ValueError("need at least one observation")
    return int(math.floor(4.0 * (T / 100.0) ** (2.0 / 9.0)))


def newey_west_cov(
    design: np.ndarray, residuals: np.ndarray, lag: int
) -> np.ndarray:
    """HAC covariance of OLS coefficients with Bartlett weights 1 - l/(L+1).

    Lag 0 collapses to the heteroskedasticity-robust (White) covariance. The
    Bartlett kernel keeps the long-run score covariance positive semidefinite
    at every lag.
    """
    T = design.shape[0]
    if not 0 <= lag < T:
        raise ValueError(f"lag must be in [0, {T}), got {lag}")
    scores = design * residuals[:, None]  # (T, K)
    S = scores.T @ scores
    for ell in range(1, lag + 1):
        w = 1.0 - ell / (lag + 1.0)
        gamma = scores[ell:].T @ scores[:-ell]
        S += w * (gamma + gamma.T)
    bread = np.linalg.inv(design.T @ design)
    return bread @ S @ bread


def newey_west_tstats(result: RegressionResult, lag: int) -> np.ndarray:
    """Attach HAC standard errors and t-statistics to an OLS result."""
    cov = newey_west_cov(result.design, result.residuals, lag)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = result.coefficients / se
    t = np.where(np.isfinite(t), np.clip(t, -_T_STAT_CAP, _T_STAT_CAP), np.sign(result.coefficients) * _T_STAT_CAP)
    result.lag_used = lag
    result.hac_se = se
    result.hac_t_stats = t
    return t


def factor_spanning(
    strategy_returns: np.ndarray,
    factors: np.ndarray,
    factor_names: Optional[Sequence[str]] = None,
    strategy_dates: Optional[Sequence] = None,
    factor_dates: Optional[Sequence] = None,
) -> RegressionResult:
    """Regress strategy returns on factor returns, both scaled by 100, with
    HAC t-statistics at the bandwidth-rule lag. The intercept is the monthly
    alpha in percent."""
    if strategy_dates is not None or factor_dates is not None:
        if strategy_dates is None or factor_dates is None or tuple(strategy_dates) != tuple(factor_dates):
            raise DateMisalignment("strategy and factor dates do not match")
    y = np.asarray(strategy_returns, dtype=float) * 100.0
    X = np.asarray(factors, dtype=float) * 100.0
    result = ols(y, X, add_intercept=True, names=factor_names)
    newey_west_tstats(result, newey_west_lag(result.n_obs))
    return result


@dataclass
class PanelRegressionResult:
    """Monthly cross-sectional coefficients and HAC inference on their means."""

    monthly_coefficients: np.ndarray  # (T_used, K+1)
    mean_coefficients: np.ndarray  # (K+1,)
    t_stats: np.ndarray  # (K+1,) HAC t-stats of the means
    names: tuple[str, ...]
    months_used: int
    months_skipped: list  # identifiers of rank-deficient months


def cross_sectional_panel(
    dep: Sequence[np.ndarray],
    chars: Sequence[np.ndarray],
    names: Optional[Sequence[str]] = None,
    month_ids: Optional[Sequence] = None,
) -> PanelRegressionResult:
    """Run one cross-sectional OLS per month and summarize the coefficients.

    Rank-deficient months are skipped (and recorded), not imputed. The mean of
    each coefficient series gets a Newey-West t-statistic at the bandwidth-rule
    lag for the number of months used.
    """
    if len(dep) != len(chars):
        raise DimensionMismatch(
            f"{len(dep)} dependent months vs {len(chars)} characteristic months"
        )
    if month_ids is None:
        month_ids = list(range(len(dep)))
    rows = []
    skipped = []
    for month, (y, X) in zip(month_ids, zip(dep, chars)):
        try:
            res = ols(np.asarray(y, dtype=float), np.asarray(X, dtype=float), names=names)
        except (RankDeficient, TooShort) as exc:
            logger.warning("skipping month %s: %s", month, exc)
            skipped.append(month)
            continue
        rows.append((month, res.coefficients, res.names))
    if len(rows) < 2:
        raise AllMonthsRankDeficient(
            f"only {len(rows)} usable months out of {len(dep)}"
        )
    monthly = np.array([c for _, c, _ in rows])
    coef_names = rows[0][2]
    lag = newey_west_lag(monthly.shape[0])
    means = monthly.mean(axis=0)
    t_stats = np.empty_like(means)
    for k in range(monthly.shape[1]):
        series = monthly[:, k]
        # Mean-only regression: HAC t-stat of the time-series average.
        res = RegressionResult(
            coefficients=np.array([series.mean()]),
            residuals=series - series.mean(),
            n_obs=series.size,
            design=np.ones((series.size, 1)),
            names=("const",),
        )
        t_stats[k] = newey_west_tstats(res, lag)[0]
    return PanelRegressionResult(
        monthly_coefficients=monthly,
        mean_coefficients=means,
        t_stats=t_stats,
        names=coef_names,
        months_used=monthly.shape[0],
        months_skipped=skipped,
    )


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------


def write_spanning(result: RegressionResult, model: str, path) -> None:
    """`model,term,coefficient,t_stat` rows; the intercept row is the alpha."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("model,term,coefficient,t_stat\n")
        for name, coef, t in zip(result.names, result.coefficients, result.hac_t_stats):
            term = "alpha" if name == "const" else name
            fh.write(f"{model},{term},{ffmt(coef)},{ffmt(t)}\n")


def write_panel_regression(
    result: PanelRegressionResult, measure: str, path
) -> None:
    """Coefficients scaled by 1000 for readability, as `measure,characteristic,...`."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("measure,characteristic,coef_x1000,t_stat\n")
        for name, coef, t in zip(result.names, result.mean_coefficients, result.t_stats):
            fh.write(f"{measure},{name},{ffmt(coef * 1000.0)},{ffmt(t)}\n")
