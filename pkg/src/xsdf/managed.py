"""Managed-portfolio construction: asset x signal interaction returns and the
flattening machinery that connects the spillover matrix to its vector form.

For one date the managed block matrix is the Kronecker interaction of the
return vector with every asset's lagged signal row: block i (rows i*N..i*N+N-1)
holds r_{t+1} * S[i, :], so row p = i*N + j is "asset i's signals applied to
asset j's realized return". The flattened spillover vector uses the same
indexing: entry p = i*N + j of the vector is spillover[i, j].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._fmt import ffmt
from .errors import DimensionMismatch, NotSquare
from .panel import AlignedSample, MonthStamp


@dataclass(frozen=True)
class CenteringProjector:
    """Projection onto the zero-sum subspace: identity minus the all-ones averager."""

    n: int

    @property
    def matrix(self) -> np.ndarray:
        return np.eye(self.n) - np.full((self.n, self.n), 1.0 / self.n)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Apply the projector along axis 0 (subtract the cross-sectional mean)."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.n:
            raise DimensionMismatch(f"expected leading dimension {self.n}, got {x.shape}")
        return x - x.mean(axis=0, keepdims=True)


def flatten_spillover(psi: np.ndarray) -> np.ndarray:
    """Flatten an N x N spillover matrix row-major: entry i*N+j <- psi[i, j]."""
    psi = np.asarray(psi, dtype=float)
    if psi.ndim != 2 or psi.shape[0] != psi.shape[1]:
        raise NotSquare(f"spillover matrix must be square, got shape {psi.shape}")
    return psi.reshape(-1).copy()


def unflatten_spillover(phi: np.ndarray) -> np.ndarray:
    """Inverse of flatten_spillover; the length must be a perfect square."""
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 1:
        raise NotSquare(f"expected a flat vector, got shape {phi.shape}")
    n = int(round(np.sqrt(phi.size)))
    if n * n != phi.size:
        raise NotSquare(f"length {phi.size} is not a perfect square")
    return phi.reshape(n, n).copy()


@dataclass(frozen=True)
class SpilloverMatrix:
    """A spillover matrix together with its flattened vector form."""

    psi: np.ndarray

    @property
    def phi(self) -> np.ndarray:
        return flatten_spillover(self.psi)

    @classmethod
    def from_flat(cls, phi: np.ndarray) -> "SpilloverMatrix":
        return cls(unflatten_spillover(phi))

    @property
    def n(self) -> int:
        return self.psi.shape[0]


class ManagedSeries:
    """Per-date N^2 x M managed-portfolio return matrices plus their sample mean.

    The matrices live in one (T, N^2, M) array whose slices are the per-date
    blocks, so rolling windows can re-weight sub-ranges without copying.
    """

    def __init__(
        self,
        per_date: np.ndarray,
        n_assets: int,
        zero_cost: bool,
        return_dates: Optional[tuple[MonthStamp, ...]] = None,
        signal_dates: Optional[tuple[MonthStamp, ...]] = None,
    ):
        per_date = np.asarray(per_date, dtype=float)
        if per_date.ndim != 3 or per_date.shape[1] != n_assets * n_assets:
            raise DimensionMismatch(
                f"per_date must be (T, N^2, M) with N={n_assets}, got {per_date.shape}"
            )
        per_date.setflags(write=False)
        self.per_date = per_date
        self.n_assets = n_assets
        self.n_signals = per_date.shape[2]
        self.zero_cost = zero_cost
        self.return_dates = return_dates
        self.signal_dates = signal_dates
        mean = per_date.mean(axis=0)
        mean.setflags(write=False)
        self.mean = mean

    @property
    def T(self) -> int:
        return self.per_date.shape[0]

    def __len__(self) -> int:
        return self.T

    def subset(self, index) -> "ManagedSeries":
        """A new series over a date subset (slice or index array); mean is recomputed."""
        dates = None
        sdates = None
        if self.return_dates is not None:
            dates = tuple(np.array(self.return_dates, dtype=object)[index])
        if self.signal_dates is not None:
            sdates = tuple(np.array(self.signal_dates, dtype=object)[index])
        return ManagedSeries(
            self.per_date[index],
            self.n_assets,
            self.zero_cost,
            return_dates=dates,
            signal_dates=sdates,
        )


def build_managed(sample: AlignedSample, zero_cost: bool = False) -> ManagedSeries:
    """Interact each month's realized returns with the prior month's signals.

    With ``zero_cost`` the return vector is centered first (every block is
    premultiplied by the zero-sum projector), which is the managed-return
    counterpart of constraining portfolio weights to sum to zero.
    """
    if sample.T == 0:
        raise DimensionMismatch("aligned sample is empty")
    T, N, M = sample.S.shape
    r = sample.r
    if zero_cost:
        r = r - r.mean(axis=1, keepdims=True)
    # per_date[t, i*N+j, m] = r[t, j] * S[t, i, m]
    per_date = (sample.S[:, :, None, :] * r[:, None, :, None]).reshape(T, N * N, M)

    # Cross-check one sampled date against the explicit Kronecker construction.
    t_check = T // 2
    direct = np.kron(np.eye(N), r[t_check][:, None]) @ sample.S[t_check]
    if not np.allclose(per_date[t_check], direct, rtol=0, atol=1e-12):
        raise AssertionError("managed block construction disagrees with Kronecker form")

    return ManagedSeries(
        per_date,
        n_assets=N,
        zero_cost=zero_cost,
        return_dates=sample.return_dates,
        signal_dates=sample.signal_dates,
    )


def spillover_weighted_returns(series: ManagedSeries, phi: np.ndarray) -> np.ndarray:
    """Collapse the asset-pair axis with a flattened spillover vector.

    Returns the (T, M) matrix whose row t holds the M signal-portfolio returns
    realized at date t under pair weights ``phi``.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (series.per_date.shape[1],):
        raise DimensionMismatch(
            f"phi has shape {phi.shape}, expected ({series.per_date.shape[1]},)"
        )
    if not np.linalg.norm(phi) > 0:
        raise ValueError("phi must be nonzero")
    return np.einsum("tpm,p->tm", series.per_date, phi)


def signal_weighted_returns(series: ManagedSeries, weights: np.ndarray) -> np.ndarray:
    """Collapse the signal axis with a signal-weight vector.

    Returns the (T, N^2) matrix whose row t holds the asset-pair portfolio
    returns realized at date t under signal weights ``weights``.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (series.per_date.shape[2],):
        raise DimensionMismatch(
            f"weights has shape {weights.shape}, expected ({series.per_date.shape[2]},)"
        )
    return np.einsum("tpm,m->tp", series.per_date, weights)


def strategy_return_series(
    series: ManagedSeries, signal_weights: np.ndarray, spillover_flat: np.ndarray
) -> np.ndarray:
    """Realized strategy return per date via the managed-portfolio path.

    Equals the weight-vector path (portfolio weights dotted with returns) for
    the same parameters; both collapse the same interaction blocks.
    """
    signal_weights = np.asarray(signal_weights, dtype=float)
    spillover_flat = np.asarray(spillover_flat, dtype=float)
    if signal_weights.shape != (series.n_signals,):
        raise DimensionMismatch(
            f"signal weights shape {signal_weights.shape}, expected ({series.n_signals},)"
        )
    if spillover_flat.shape != (series.per_date.shape[1],):
        raise DimensionMismatch(
            f"spillover vector shape {spillover_flat.shape}, "
            f"expected ({series.per_date.shape[1]},)"
        )
    return np.einsum("tpm,p,m->t", series.per_date, spillover_flat, signal_weights)


@dataclass(frozen=True)
class DominanceReport:
    """Sorted singular values of the centered mean vs. the plain mean."""

    ok: bool
    singular_plain: np.ndarray
    singular_centered: np.ndarray
    max_excess: float


def singular_value_dominance_check(
    plain: ManagedSeries, centered: ManagedSeries, tol: float = 1e-10
) -> DominanceReport:
    """Check that centering never inflates any singular value of the mean matrix."""
    if plain.per_date.shape != centered.per_date.shape:
        raise DimensionMismatch(
            f"series shapes differ: {plain.per_date.shape} vs {centered.per_date.shape}"
        )
    sv_plain = np.linalg.svd(plain.mean, compute_uv=False)
    sv_centered = np.linalg.svd(centered.mean, compute_uv=False)
    excess = float(np.max(sv_centered - sv_plain))
    return DominanceReport(
        ok=bool(excess <= tol),
        singular_plain=sv_plain,
        singular_centered=sv_centered,
        max_excess=excess,
    )


def write_managed_mean(series: ManagedSeries, path) -> None:
    """Debug dump of the mean managed matrix as `p,signal,value` (p is 1-based)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("p,signal,value\n")
        for p in range(series.mean.shape[0]):
            for m in range(series.mean.shape[1]):
                fh.write(f"{p + 1},{m + 1},{ffmt(series.mean[p, m])}\n")
