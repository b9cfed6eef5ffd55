"""Joint estimation of signal weights and the spillover matrix.

Two objectives:

  - ``max_return``: the leading singular pair of the mean managed matrix;
    closed form.
  - ``max_sharpe``: alternate between the two one-block subproblems until the
    parameters stop moving. Each subproblem is a tangency-portfolio fit over
    the managed returns collapsed with the current other block; it is solved
    either exactly (generalized eigenproblem, small instances only) or by a
    ridge regression of a vector of ones on those returns. Both parameter
    blocks are rescaled to unit Euclidean norm after every update.

The ``self`` restriction pins all off-diagonal spillover entries to zero and
fits only the diagonal; it is unavailable on zero-cost managed series (the
centered diagonal subproblem has no analytic solution).
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from ._fmt import ffmt
from .errors import DimensionMismatch, SingularMoment, ZeroMatrix
from .managed import (
    ManagedSeries,
    signal_weighted_returns,
    spillover_weighted_returns,
    strategy_return_series,
    unflatten_spillover,
)

logger = logging.getLogger(__name__)

#: Shrinkage grid searched by cross-validation: 1e4 down to 1e-6, log-spaced.
DEFAULT_RIDGE_GRID: tuple[float, ...] = tuple(10.0 ** x for x in range(4, -7, -1))

_UNIT_NORM_TOL = 1e-10
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class SdfParams:
    """Estimated signal weights and flattened spillover vector, both unit norm."""

    signal_weights: np.ndarray  # (M,)
    spillover_flat: np.ndarray  # (N^2,)
    objective: str  # "max_return" | "max_sharpe"
    restriction: str = "cross"  # "cross" | "self"
    ridge: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.signal_weights, dtype=float)
        f = np.asarray(self.spillover_flat, dtype=float)
        w.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "signal_weights", w)
        object.__setattr__(self, "spillover_flat", f)
        if abs(np.linalg.norm(w) - 1.0) > _UNIT_NORM_TOL:
            raise ValueError(f"signal weights not unit norm: {np.linalg.norm(w)}")
        if abs(np.linalg.norm(f) - 1.0) > _UNIT_NORM_TOL:
            raise ValueError(f"spillover vector not unit norm: {np.linalg.norm(f)}")
        if self.objective not in ("max_return", "max_sharpe"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.restriction not in ("cross", "self"):
            raise ValueError(f"unknown restriction {self.restriction!r}")
        if self.restriction == "self":
            psi = self.spillover
            if np.any(psi[~np.eye(psi.shape[0], dtype=bool)] != 0.0):
                raise ValueError("self restriction produced off-diagonal spillover")

    @property
    def spillover(self) -> np.ndarray:
        """The spillover matrix (N x N) recovered from its flattened form."""
        return unflatten_spillover(self.spillover_flat)

    @property
    def n_assets(self) -> int:
        return int(round(np.sqrt(self.spillover_flat.size)))

    @property
    def n_signals(self) -> int:
        return self.signal_weights.size


@dataclass
class IterationTrace:
    """Convergence diagnostics of the alternating max-Sharpe estimation."""

    sharpe_sq: list[float] = field(default_factory=list)
    delta_weights: list[float] = field(default_factory=list)
    delta_spillover: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.sharpe_sq)


@dataclass(frozen=True)
class CvResult:
    """Cross-validation outcome for the ridge shrinkage parameter."""

    grid: tuple[float, ...]
    fold_scores: np.ndarray  # mean held-out score per grid value
    chosen: float


def in_sample_sharpe_sq(series: ManagedSeries, weights, spill) -> float:
    """Squared in-sample Sharpe ratio (population variance) of the strategy."""
    pi = strategy_return_series(series, weights, spill)
    var = float(pi.var())
    if var == 0.0:
        return float("nan")
    return float(pi.mean()) ** 2 / var


def _apply_sign_convention(weights: np.ndarray, spill: np.ndarray, mean: np.ndarray):
    """Make output deterministic: in-sample expected return nonnegative, and the
    largest-magnitude signal weight positive (a joint flip keeps returns fixed)."""
    expected = float(spill @ mean @ weights)
    if expected < 0:
        spill = -spill
    if weights[np.argmax(np.abs(weights))] < 0:
        weights, spill = -weights, -spill
    return weights, spill


def estimate_max_return(series: ManagedSeries) -> SdfParams:
    """Expected-return-maximizing parameters: the leading singular pair of the
    mean managed matrix (pair weights from the left, signal weights from the
    right singular vector)."""
    mean = series.mean
    if np.linalg.norm(mean) < 1e-14:
        raise ZeroMatrix("mean managed matrix is numerically zero")
    u, s, vt = np.linalg.svd(mean, full_matrices=False)
    weights = vt[0] / np.linalg.norm(vt[0])
    spill = u[:, 0] / np.linalg.norm(u[:, 0])
    weights, spill = _apply_sign_convention(weights, spill, mean)
    return SdfParams(weights, spill, objective="max_return", restriction="cross", ridge=0.0)


def _population_cov(x: np.ndarray) -> np.ndarray:
    """Covariance of the rows of x with divisor T, always returned as 2-D."""
    return np.atleast_2d(np.cov(x, rowvar=False, bias=True))


def _principal_direction(mu: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Unit-norm maximizer of (v'mu)^2 / v'cov v via the generalized eigenproblem."""
    if np.linalg.cond(cov) > _COND_LIMIT:
        raise SingularMoment(
            f"moment matrix condition {np.linalg.cond(cov):.2e} exceeds {_COND_LIMIT:.0e}; "
            "use the ridge path"
        )
    try:
        vals, vecs = scipy.linalg.eigh(np.outer(mu, mu), cov)
    except scipy.linalg.LinAlgError as exc:
        raise SingularMoment(f"moment matrix not positive definite: {exc}") from exc
    v = vecs[:, -1]
    return v / np.linalg.norm(v)


def _align(new: np.ndarray, prev: np.ndarray) -> np.ndarray:
    """Resolve the sign ambiguity of an iterate against the previous one."""
    return -new if float(new @ prev) < 0 else new


def estimate_max_sharpe_eigen(
    series: ManagedSeries,
    init: Optional[SdfParams] = None,
    tol: float = 1e-8,
    max_iter: int = 500,
) -> tuple[SdfParams, IterationTrace]:
    """Exact alternating solution of the Sharpe maximization (small instances).

    Each half-step solves the generalized eigenproblem of the rank-one
    outer-product of mean returns against their covariance, i.e. exactly
    maximizes the squared Sharpe ratio given the other block, so the in-sample
    squared Sharpe is non-decreasing across iterations. Raises SingularMoment
    when a covariance is numerically singular; callers should then fall back
    to the ridge path.
    """
    if series.T < 2:
        raise DimensionMismatch("need at least two dates to estimate")
    if init is None:
        init = estimate_max_return(series)
    weights = np.array(init.signal_weights)
    spill = np.array(init.spillover_flat)
    trace = IterationTrace()

    for _ in range(max_iter):
        pair_returns = signal_weighted_returns(series, weights)  # (T, N^2)
        new_spill = _principal_direction(
            pair_returns.mean(axis=0), _population_cov(pair_returns)
        )
        new_spill = _align(new_spill, spill)

        sig_returns = spillover_weighted_returns(series, new_spill)  # (T, M)
        mu = sig_returns.mean(axis=0)
        if sig_returns.shape[1] == 1:
            new_weights = np.array([1.0 if mu[0] >= 0 else -1.0])
        else:
            new_weights = _principal_direction(mu, _population_cov(sig_returns))
        new_weights = _align(new_weights, weights)

        dw = float(np.max(np.abs(new_weights - weights)))
        df = float(np.max(np.abs(new_spill - spill)))
        weights, spill = new_weights, new_spill
        trace.delta_weights.append(dw)
        trace.delta_spillover.append(df)
        trace.sharpe_sq.append(in_sample_sharpe_sq(series, weights, spill))
        if max(dw, df) < tol:
            trace.converged = True
            break

    weights, spill = _apply_sign_convention(weights, spill, series.mean)
    params = SdfParams(
        weights, spill, objective="max_sharpe", restriction="cross", ridge=0.0
    )
    return params, trace


def ridge_weights(X: np.ndarray, shrinkage: float) -> np.ndarray:
    """Solve the ones-on-returns regression with an L2 penalty.

    At zero shrinkage this is the plain least-squares (tangency portfolio)
    solve. For more columns than rows the equivalent dual system of size T is
    used, keeping the cost polynomial in T rather than in the column count.
    """
    X = np.asarray(X, dtype=float)
    T, p = X.shape
    y = np.ones(T)
    if shrinkage < 0:
        raise ValueError("shrinkage must be nonnegative")
    if shrinkage == 0.0:
        return np.linalg.lstsq(X, y, rcond=None)[0]
    if p <= T:
        gram = X.T @ X + shrinkage * np.eye(p)
        try:
            return scipy.linalg.solve(gram, X.T @ y, assume_a="pos")
        except scipy.linalg.LinAlgError:
            return np.linalg.lstsq(gram, X.T @ y, rcond=None)[0]
    dual = X @ X.T + shrinkage * np.eye(T)
    try:
        return X.T @ scipy.linalg.solve(dual, y, assume_a="pos")
    except scipy.linalg.LinAlgError:
        return X.T @ np.linalg.lstsq(dual, y, rcond=None)[0]


def _diag_indices(n: int) -> np.ndarray:
    return np.arange(n) * (n + 1)


def estimate_max_sharpe_ridge(
    series: ManagedSeries,
    shrinkage: float,
    init: Optional[SdfParams] = None,
    tol: float = 1e-8,
    max_iter: int = 500,
    restriction: str = "cross",
) -> tuple[SdfParams, IterationTrace]:
    """Alternating ridge regressions for the Sharpe maximization.

    Each half-step regresses a vector of ones on the collapsed managed returns
    with penalty ``shrinkage`` and renormalizes the solution to unit norm.
    Under ``restriction='self'`` the spillover update runs only over the N
    diagonal coordinates; off-diagonals stay exactly zero. Non-convergence
    within ``max_iter`` is reported in the trace, never raised.
    """
    if series.T < 2:
        raise DimensionMismatch("need at least two dates to estimate")
    if restriction not in ("cross", "self"):
        raise ValueError(f"unknown restriction {restriction!r}")
    if restriction == "self" and series.zero_cost:
        raise ValueError(
            "the self restriction has no analytic solution on zero-cost managed "
            "returns; estimate without zero_cost"
        )
    if init is None:
        init = estimate_max_return(series)
    weights = np.array(init.signal_weights)
    spill = np.array(init.spillover_flat)
    n_pairs = series.per_date.shape[1]
    diag = _diag_indices(series.n_assets)
    trace = IterationTrace()

    for _ in range(max_iter):
        pair_returns = signal_weighted_returns(series, weights)  # (T, N^2)
        if restriction == "self":
            coef = ridge_weights(pair_returns[:, diag], shrinkage)
            new_spill = np.zeros(n_pairs)
            new_spill[diag] = coef
        else:
            new_spill = ridge_weights(pair_returns, shrinkage)
        norm = np.linalg.norm(new_spill)
        if norm < 1e-14:
            logger.warning("spillover update vanished; keeping previous iterate")
            break
        new_spill = _align(new_spill / norm, spill)

        sig_returns = spillover_weighted_returns(series, new_spill)  # (T, M)
        new_weights = ridge_weights(sig_returns, shrinkage)
        norm = np.linalg.norm(new_weights)
        if norm < 1e-14:
            logger.warning("signal-weight update vanished; keeping previous iterate")
            break
        new_weights = _align(new_weights / norm, weights)

        dw = float(np.max(np.abs(new_weights - weights)))
        df = float(np.max(np.abs(new_spill - spill)))
        weights, spill = new_weights, new_spill
        trace.delta_weights.append(dw)
        trace.delta_spillover.append(df)
        trace.sharpe_sq.append(in_sample_sharpe_sq(series, weights, spill))
        if max(dw, df) < tol:
            trace.converged = True
            break

    weights, spill = _apply_sign_convention(weights, spill, series.mean)
    if restriction == "self":
        # Sign flips turn exact zeros into -0.0; normalize them back.
        mask = np.ones(n_pairs, dtype=bool)
        mask[diag] = False
        spill = spill.copy()
        spill[mask] = 0.0
    params = SdfParams(
        weights, spill, objective="max_sharpe", restriction=restriction, ridge=shrinkage
    )
    return params, trace


def _contiguous_folds(T: int, folds: int) -> list[np.ndarray]:
    return [a for a in np.array_split(np.arange(T), folds)]


def cross_validate(
    series: ManagedSeries,
    grid: Optional[Sequence[float]] = None,
    folds: int = 5,
    init: Optional[SdfParams] = None,
    tol: float = 1e-8,
    max_iter: int = 500,
    restriction: str = "cross",
) -> CvResult:
    """Pick the shrinkage by k-fold validation over contiguous time blocks.

    For each grid value the estimator is fit on the other k-1 folds and scored
    by the annualized Sharpe ratio of the strategy returns on the held-out
    block; the value with the best mean score wins, ties going to the heavier
    shrinkage.
    """
    if folds < 2:
        raise ValueError("need at least two folds")
    if series.T < folds:
        raise ValueError(f"T={series.T} is smaller than folds={folds}")
    grid = DEFAULT_RIDGE_GRID if grid is None else tuple(grid)
    # Descending order makes argmax resolve ties toward heavier shrinkage.
    grid = tuple(sorted(grid, reverse=True))
    blocks = _contiguous_folds(series.T, folds)

    fold_scores = np.empty(len(grid))
    for gi, lam in enumerate(grid):
        scores = []
        for vi, val_idx in enumerate(blocks):
            train_idx = np.concatenate([b for bi, b in enumerate(blocks) if bi != vi])
            params, _ = estimate_max_sharpe_ridge(
                series.subset(train_idx),
                lam,
                init=init,
                tol=tol,
                max_iter=max_iter,
                restriction=restriction,
            )
            pi = strategy_return_series(
                series.subset(val_idx), params.signal_weights, params.spillover_flat
            )
            sd = pi.std(ddof=1) if pi.size > 1 else 0.0
            scores.append(pi.mean() / sd * np.sqrt(12.0) if sd > 0 else -np.inf)
        fold_scores[gi] = np.mean(scores)
    chosen = grid[int(np.argmax(fold_scores))]
    return CvResult(grid=grid, fold_scores=fold_scores, chosen=chosen)


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def export_params(
    params: SdfParams,
    signal_names: Sequence[str],
    asset_names: Sequence[str],
    out_dir,
    trace: Optional[IterationTrace] = None,
    extra_meta: Optional[dict] = None,
) -> None:
    """Write lambda.csv / psi.csv plus a JSON metadata sidecar into ``out_dir``.

    psi.csv lists only the diagonal cells under the self restriction.
    """
    if len(signal_names) != params.n_signals:
        raise DimensionMismatch(
            f"{len(signal_names)} signal names for {params.n_signals} weights"
        )
    if len(asset_names) != params.n_assets:
        raise DimensionMismatch(
            f"{len(asset_names)} asset names for {params.n_assets} assets"
        )
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "lambda.csv"), "w", encoding="utf-8") as fh:
        fh.write("signal,value\n")
        for name, v in zip(signal_names, params.signal_weights):
            fh.write(f"{name},{ffmt(v)}\n")
    psi = params.spillover
    with open(os.path.join(out_dir, "psi.csv"), "w", encoding="utf-8") as fh:
        fh.write("from_asset,to_asset,value\n")
        for i, src in enumerate(asset_names):
            for j, dst in enumerate(asset_names):
                if params.restriction == "self" and i != j:
                    continue
                fh.write(f"{src},{dst},{ffmt(psi[i, j])}\n")
    meta = {
        "objective": params.objective,
        "restriction": params.restriction,
        "ridge": params.ridge,
        "iterations": trace.iterations if trace else None,
        "converged": trace.converged if trace else None,
    }
    if extra_meta:
        meta.update(extra_meta)
    with open(os.path.join(out_dir, "run_meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
