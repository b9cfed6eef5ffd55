"""Portfolio weights from estimated parameters, constraint handling, and
performance metrics (monthly moments, annualized Sharpe, certainty equivalent).
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._fmt import ffmt
from .errors import DegenerateWeights, DimensionMismatch, TooShort
from .estimators import SdfParams
from .panel import MonthStamp

logger = logging.getLogger(__name__)

MONTHS_PER_YEAR = 12


@dataclass(frozen=True)
class WeightVector:
    """Portfolio weights for one month, with the constraints applied to them."""

    weights: np.ndarray  # (N,)
    zero_cost: bool
    leverage_target: Optional[float] = None
    date: Optional[MonthStamp] = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def position_sum(self) -> float:
        return float(self.weights.sum())

    @property
    def position_abs_sum(self) -> float:
        return float(np.abs(self.weights).sum())


def weights(
    signal_matrix: np.ndarray,
    params: SdfParams,
    zero_cost: bool = False,
    leverage: Optional[float] = None,
    date: Optional[MonthStamp] = None,
) -> WeightVector:
    """Map this month's signal matrix to portfolio weights.

    The raw weight on each asset aggregates every asset's signals through the
    spillover matrix; ``zero_cost`` then removes the cross-sectional mean, and
    ``leverage`` rescales so absolute positions sum to the target. Months whose
    weights are numerically zero are left at zero with a DegenerateWeights
    warning rather than blown up by the rescale.
    """
    S = np.asarray(signal_matrix, dtype=float)
    psi = params.spillover
    n = psi.shape[0]
    if S.ndim != 2 or S.shape != (n, params.n_signals):
        raise DimensionMismatch(
            f"signal matrix shape {S.shape}, expected ({n}, {params.n_signals})"
        )
    w = psi.T @ (S @ params.signal_weights)
    if zero_cost:
        w = w - w.mean()
    if leverage is not None:
        if leverage <= 0:
            raise ValueError("leverage target must be positive")
        gross = np.abs(w).sum()
        if gross < 1e-14:
            warnings.warn(
                f"weights at {date} are numerically zero; leverage rescale skipped",
                DegenerateWeights,
            )
            w = np.zeros_like(w)
        else:
            w = w * (leverage / gross)
    return WeightVector(w, zero_cost=zero_cost, leverage_target=leverage, date=date)


def realized_return(omega: WeightVector, r: np.ndarray) -> float:
    """Strategy return for one month: weights dotted with realized returns."""
    r = np.asarray(r, dtype=float)
    if r.shape != omega.weights.shape:
        raise DimensionMismatch(
            f"returns shape {r.shape} does not match weights {omega.weights.shape}"
        )
    return float(omega.weights @ r)


@dataclass(frozen=True)
class PerformanceReport:
    """Summary of a monthly return series (moments in %, Sharpe annualized)."""

    mu_monthly_pct: float
    sigma_monthly_pct: float
    sharpe_annualized: float  # NaN when volatility is zero
    ce_annual: float
    sum_avg: float  # time-series average of the position sum (NaN without weights)
    asum_avg: float  # time-series average of absolute positions (NaN without weights)
    n_months: int

    @property
    def sharpe_defined(self) -> bool:
        return not np.isnan(self.sharpe_annualized)

    def as_rows(self) -> list[tuple[str, float]]:
        return [
            ("mu_monthly_pct", self.mu_monthly_pct),
            ("sigma_monthly_pct", self.sigma_monthly_pct),
            ("sharpe_annualized", self.sharpe_annualized),
            ("ce_annual", self.ce_annual),
            ("sum_avg", self.sum_avg),
            ("asum_avg", self.asum_avg),
            ("n_months", float(self.n_months)),
        ]


def certainty_equivalent(
    mu_monthly: float, sigma_monthly: float, gamma: float
) -> float:
    """Annual certainty-equivalent return for mean-variance risk aversion gamma.

    Monthly moments (decimals) are annualized as 12*mu and 12*sigma^2.
    """
    if gamma < 0:
        raise ValueError("risk aversion must be nonnegative")
    return MONTHS_PER_YEAR * mu_monthly - 0.5 * gamma * MONTHS_PER_YEAR * sigma_monthly**2


def performance(
    pi: np.ndarray,
    annualization: int = MONTHS_PER_YEAR,
    gamma: float = 2.0,
    weights_history: Optional[np.ndarray] = None,
) -> PerformanceReport:
    """Summarize a monthly strategy return series.

    Mean and standard deviation (divisor n-1) are reported in percent; the
    Sharpe ratio is mean/sd scaled by sqrt(12). A zero-volatility series gets
    a NaN Sharpe. Pass the (T, N) weight history to also report average
    position sums.
    """
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1 or pi.size < 2:
        raise TooShort(f"need a return series of length >= 2, got shape {pi.shape}")
    mu = float(pi.mean())
    sd = float(pi.std(ddof=1))
    sharpe = mu / sd * np.sqrt(annualization) if sd > 0 else float("nan")
    sum_avg = asum_avg = float("nan")
    if weights_history is not None:
        weights_history = np.asarray(weights_history, dtype=float)
        if weights_history.shape[0] != pi.size:
            raise DimensionMismatch(
                f"{weights_history.shape[0]} weight rows for {pi.size} returns"
            )
        sum_avg = float(weights_history.sum(axis=1).mean())
        asum_avg = float(np.abs(weights_history).sum(axis=1).mean())
    return PerformanceReport(
        mu_monthly_pct=mu * 100.0,
        sigma_monthly_pct=sd * 100.0,
        sharpe_annualized=sharpe,
        ce_annual=certainty_equivalent(mu, sd, gamma),
        sum_avg=sum_avg,
        asum_avg=asum_avg,
        n_months=pi.size,
    )


def write_report(report: PerformanceReport, path) -> None:
    """Flat key-value CSV dump of a performance report."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("metric,value\n")
        for key, value in report.as_rows():
            fh.write(f"{key},{ffmt(value)}\n")
