"""Directed-network analytics on an estimated spillover matrix, plus
signal-importance summaries from the history of estimated signal weights.

All connectedness measures aggregate absolute off-diagonal entries, so they
are non-negative and scale linearly with the matrix. A negative net value
marks a net transmitter of predictive information, a positive one a net
receiver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from ._fmt import ffmt
from .errors import LabelMismatch, NotSquare
from .estimators import SdfParams
from .panel import MonthStamp


@dataclass(frozen=True)
class ConnectednessReport:
    """Row/column aggregates of absolute spillover strength for one matrix."""

    from_: np.ndarray  # signal strength sent by each asset (row sums)
    to: np.ndarray  # signal strength received by each asset (column sums)
    net: np.ndarray  # to - from
    total: float  # average off-diagonal mass per asset
    date: Optional[MonthStamp] = None


def connectedness(psi: np.ndarray, date: Optional[MonthStamp] = None) -> ConnectednessReport:
    """Directed connectedness of a square spillover matrix.

    Entry (i, j) measures how strongly asset i's signals predict asset j, so
    row sums of absolute values (diagonal excluded) are what i sends, column
    sums what j receives. ``total`` is the grand off-diagonal sum divided by
    the number of assets.
    """
    psi = np.asarray(psi, dtype=float)
    if psi.ndim != 2 or psi.shape[0] != psi.shape[1]:
        raise NotSquare(f"spillover matrix must be square, got {psi.shape}")
    a = np.abs(psi).copy()
    np.fill_diagonal(a, 0.0)
    from_ = a.sum(axis=1)
    to = a.sum(axis=0)
    return ConnectednessReport(
        from_=from_,
        to=to,
        net=to - from_,
        total=float(a.sum() / psi.shape[0]),
        date=date,
    )


@dataclass(frozen=True)
class BlockReport:
    """Mean absolute spillover per ordered (from-group, to-group) block."""

    groups: tuple[str, ...]
    averages: dict  # (from_group, to_group) -> mean |entry| over the block
    date: Optional[MonthStamp] = None


def block_average(
    psi: np.ndarray, labels: Sequence[str], date: Optional[MonthStamp] = None
) -> BlockReport:
    """Average absolute spillover within each ordered group-pair block.

    Blocks include their diagonal cells; only the market-wide ``total`` of
    ``connectedness`` excludes diagonals.
    """
    psi = np.asarray(psi, dtype=float)
    if psi.ndim != 2 or psi.shape[0] != psi.shape[1]:
        raise NotSquare(f"spillover matrix must be square, got {psi.shape}")
    if len(labels) != psi.shape[0]:
        raise LabelMismatch(
            f"{len(labels)} labels for {psi.shape[0]} assets"
        )
    labels = [str(l) for l in labels]
    groups = tuple(dict.fromkeys(labels))  # first-appearance order
    a = np.abs(psi)
    averages = {}
    for g_from in groups:
        rows = [i for i, l in enumerate(labels) if l == g_from]
        for g_to in groups:
            cols = [j for j, l in enumerate(labels) if l == g_to]
            averages[(g_from, g_to)] = float(a[np.ix_(rows, cols)].mean())
    return BlockReport(groups=groups, averages=averages, date=date)


@dataclass(frozen=True)
class ImportanceReport:
    """Time-series average absolute signal weight, optionally rolled up by theme."""

    signals: tuple[str, ...]
    importance: np.ndarray  # (M,)
    theme_importance: Optional[dict] = None  # theme -> mean over member signals

    def ranking(self) -> list[tuple[str, float]]:
        order = np.argsort(-self.importance)
        return [(self.signals[i], float(self.importance[i])) for i in order]


def signal_importance(
    params_history: Sequence[SdfParams],
    signals: Sequence[str],
    theme_map: Optional[Mapping[str, str]] = None,
) -> ImportanceReport:
    """Average absolute signal weight across estimation windows.

    Sign-invariant by construction. With a signal->theme map, theme importance
    is the plain mean over member signals.
    """
    if not params_history:
        raise ValueError("params history is empty")
    stack = np.abs(np.array([p.signal_weights for p in params_history]))
    if stack.shape[1] != len(signals):
        raise LabelMismatch(
            f"{len(signals)} signal names for weight vectors of length {stack.shape[1]}"
        )
    importance = stack.mean(axis=0)
    theme_importance = None
    if theme_map is not None:
        themes: dict[str, list[float]] = {}
        for name, value in zip(signals, importance):
            themes.setdefault(theme_map.get(name, "unmapped"), []).append(float(value))
        theme_importance = {k: float(np.mean(v)) for k, v in themes.items()}
    return ImportanceReport(
        signals=tuple(signals),
        importance=importance,
        theme_importance=theme_importance,
    )


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------


def _date_str(date) -> str:
    return "" if date is None else str(date)


def write_connectedness(
    reports: Sequence[ConnectednessReport], assets: Sequence[str], path, total_path=None
) -> None:
    """Per-asset series as `date,asset,from,to,net`; totals separately as `date,total`."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("date,asset,from,to,net\n")
        for rep in reports:
            for j, asset in enumerate(assets):
                fh.write(
                    f"{_date_str(rep.date)},{asset},{ffmt(rep.from_[j])},{ffmt(rep.to[j])},{ffmt(rep.net[j])}\n"
                )
    if total_path is not None:
        with open(total_path, "w", encoding="utf-8") as fh:
            fh.write("date,total\n")
            for rep in reports:
                fh.write(f"{_date_str(rep.date)},{ffmt(rep.total)}\n")


def write_blocks(reports: Sequence[BlockReport], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("date,from_group,to_group,avg_abs\n")
        for rep in reports:
            for (g_from, g_to), value in rep.averages.items():
                fh.write(f"{_date_str(rep.date)},{g_from},{g_to},{ffmt(value)}\n")


def write_importance(
    report: ImportanceReport, path, theme_map: Optional[Mapping[str, str]] = None
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("signal,theme,importance\n")
        for name, value in zip(report.signals, report.importance):
            theme = (theme_map or {}).get(name, "")
            fh.write(f"{name},{theme},{ffmt(value)}\n")
