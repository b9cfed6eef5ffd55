"""Panel ingestion: load, validate, standardize and time-align asset x signal x time data.

Conventions (shared by every CSV this package reads or writes):
  - dates are month-granular strings ``YYYY-MM``; intramonth dates are rejected,
  - long signal CSVs have header ``date,asset,signal,value``,
  - wide signal CSVs have header ``date,asset,<sig1>,...,<sigM>``,
  - return CSVs have header ``date,asset,ret_excess`` with decimal returns (0.01 = 1%),
  - UTF-8, comma separator, ``.`` decimal point.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ._fmt import ffmt
from .errors import (
    AssetMismatch,
    DuplicateKey,
    MissingCell,
    NoOverlap,
    ParseError,
)

logger = logging.getLogger(__name__)

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")

# Columns of a standardized panel whose cross-sectional spread is below this
# are treated as constant and zeroed out instead of dividing by ~0.
_CONSTANT_SD_TOL = 1e-12

#: Recorded in run manifests: the cross-sectional scaling convention.
STANDARDIZATION_POLICY = "per-date, population divisor N, constant columns zeroed"


@dataclass(frozen=True, order=True)
class MonthStamp:
    """A calendar month. Ordering and month arithmetic are exact."""

    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ParseError(f"month out of range in {self.year!r}-{self.month!r}")

    @classmethod
    def parse(cls, text: str) -> "MonthStamp":
        m = _MONTH_RE.match(str(text).strip())
        if m is None:
            raise ParseError(
                f"bad date {text!r}: expected YYYY-MM (month granularity only)"
            )
        return cls(int(m.group(1)), int(m.group(2)))

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"

    @property
    def index(self) -> int:
        """Months since 0000-01; differences of indices are month counts."""
        return self.year * 12 + (self.month - 1)

    def shift(self, months: int) -> "MonthStamp":
        idx = self.index + months
        return MonthStamp(idx // 12, idx % 12 + 1)

    def months_until(self, other: "MonthStamp") -> int:
        return other.index - self.index


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SignalPanel:
    """Dated sequence of N x M signal matrices over a fixed asset universe."""

    dates: tuple[MonthStamp, ...]
    assets: tuple[str, ...]
    signals: tuple[str, ...]
    values: np.ndarray  # (T, N, M)

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        if self.values.shape != (len(self.dates), len(self.assets), len(self.signals)):
            raise ValueError(
                f"values shape {self.values.shape} inconsistent with "
                f"{len(self.dates)} dates x {len(self.assets)} assets x "
                f"{len(self.signals)} signals"
            )
        if not np.all(np.isfinite(self.values)):
            raise ParseError("signal panel contains non-finite values")

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    @property
    def n_signals(self) -> int:
        return len(self.signals)


@dataclass(frozen=True)
class ReturnPanel:
    """Dated sequence of N-vectors of monthly excess returns (decimal units)."""

    dates: tuple[MonthStamp, ...]
    assets: tuple[str, ...]
    values: np.ndarray  # (T, N)

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        if self.values.shape != (len(self.dates), len(self.assets)):
            raise ValueError(
                f"values shape {self.values.shape} inconsistent with "
                f"{len(self.dates)} dates x {len(self.assets)} assets"
            )
        if not np.all(np.isfinite(self.values)):
            raise ParseError("return panel contains non-finite values")


@dataclass(frozen=True)
class AlignedSample:
    """(S_t, r_{t+1}) pairs: each return dated exactly one month after its signals."""

    signal_dates: tuple[MonthStamp, ...]
    return_dates: tuple[MonthStamp, ...]
    assets: tuple[str, ...]
    signals: tuple[str, ...]
    S: np.ndarray  # (T, N, M)
    r: np.ndarray  # (T, N)

    def __post_init__(self):
        object.__setattr__(self, "S", _readonly(self.S))
        object.__setattr__(self, "r", _readonly(self.r))
        for t_sig, t_ret in zip(self.signal_dates, self.return_dates):
            if t_sig.months_until(t_ret) != 1:
                raise ValueError(
                    f"pair ({t_sig}, {t_ret}) violates the one-month signal lag"
                )

    @property
    def T(self) -> int:
        return len(self.signal_dates)

    def __len__(self) -> int:
        return self.T


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


def _read_csv(path) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    df.columns = [c.strip() for c in df.columns]
    return df


def _parse_dates(raw: pd.Series, path) -> list[MonthStamp]:
    """Parse a date column through its unique values; name the first bad row."""
    mapping = {}
    for value in pd.unique(raw):
        try:
            mapping[value] = MonthStamp.parse(value)
        except ParseError as exc:
            row = int((raw == value).idxmax()) + 2
            raise ParseError(f"{path} row {row}: {exc}") from exc
    return [mapping[v] for v in raw]


def _parse_values(raw: pd.Series, path, what: str) -> np.ndarray:
    strings = raw.to_numpy(dtype=object)
    try:
        # numpy's string conversion round-trips exactly; pandas' fast parser does not
        values = strings.astype(np.float64)
    except ValueError:
        for i, s in enumerate(strings):
            try:
                float(s)
            except ValueError:
                raise ParseError(f"{path} row {i + 2}: bad {what} {s!r}") from None
        raise
    bad = ~np.isfinite(values)
    if bad.any():
        row = int(np.argmax(bad))
        raise ParseError(f"{path} row {row + 2}: bad {what} {raw.iloc[row]!r}")
    return values


def _reject_duplicates(df: pd.DataFrame, keys: list[str], path) -> None:
    dup = df.duplicated(subset=keys, keep="first")
    if dup.any():
        row = int(dup.idxmax()) + 2
        label = ", ".join(f"{k}={df.iloc[row - 2][k]}" for k in keys)
        raise DuplicateKey(f"{path} row {row}: duplicate key ({label})")


def _grid_scatter(
    dates, date_codes, assets, asset_codes, shape_tail, values, path, signals=None
):
    """Scatter rows into a dense grid, naming the first hole if any."""
    grid = np.full((len(dates), len(assets)) + shape_tail, np.nan)
    grid[date_codes, asset_codes] = values
    holes = np.isnan(grid)
    if holes.any():
        idx = np.unravel_index(int(np.argmax(holes)), grid.shape)
        cell = f"date={dates[idx[0]]}, asset={assets[idx[1]]}"
        if signals is not None and len(idx) > 2:
            cell += f", signal={signals[idx[2]]}"
        raise MissingCell(f"{path}: missing cell ({cell})")
    return grid


def load_signals(path, layout: str = "long") -> SignalPanel:
    """Load a signal CSV into a complete date x asset x signal grid.

    ``layout`` is ``"long"`` (date,asset,signal,value) or ``"wide"``
    (date,asset,<one column per signal>). Incomplete grids raise MissingCell,
    repeated keys raise DuplicateKey; both name the offending cell or row.
    """
    if layout == "long":
        return _load_signals_long(path)
    if layout == "wide":
        return _load_signals_wide(path)
    raise ValueError(f"unknown layout {layout!r}; expected 'long' or 'wide'")


def _index_columns(df: pd.DataFrame, path):
    """Parsed dates plus grid codes for the date and asset columns."""
    parsed = _parse_dates(df["date"].str.strip(), path)
    dates = sorted(set(parsed))
    date_index = {d: i for i, d in enumerate(dates)}
    date_codes = np.array([date_index[d] for d in parsed])
    assets = list(dict.fromkeys(df["asset"].str.strip()))  # first-appearance order
    asset_index = {a: i for i, a in enumerate(assets)}
    asset_codes = np.array([asset_index[a] for a in df["asset"].str.strip()])
    return dates, date_codes, tuple(assets), asset_codes


def _load_signals_long(path) -> SignalPanel:
    df = _read_csv(path)
    expected = ["date", "asset", "signal", "value"]
    if list(df.columns) != expected:
        raise ParseError(f"{path}: expected header {expected}, got {list(df.columns)}")
    _reject_duplicates(df, ["date", "asset", "signal"], path)
    dates, date_codes, assets, asset_codes = _index_columns(df, path)
    signals = list(dict.fromkeys(df["signal"].str.strip()))
    signal_index = {s: i for i, s in enumerate(signals)}
    signal_codes = np.array([signal_index[s] for s in df["signal"].str.strip()])
    values = _parse_values(df["value"], path, "value")

    grid = np.full((len(dates), len(assets), len(signals)), np.nan)
    grid[date_codes, asset_codes, signal_codes] = values
    holes = np.isnan(grid)
    if holes.any():
        ti, ai, si = np.unravel_index(int(np.argmax(holes)), grid.shape)
        raise MissingCell(
            f"{path}: missing cell (date={dates[ti]}, asset={assets[ai]}, "
            f"signal={signals[si]})"
        )
    return SignalPanel(tuple(dates), assets, tuple(signals), grid)


def _load_signals_wide(path) -> SignalPanel:
    df = _read_csv(path)
    if list(df.columns[:2]) != ["date", "asset"] or df.shape[1] < 3:
        raise ParseError(
            f"{path}: expected header date,asset,<sig1>,... got {list(df.columns)}"
        )
    signals = list(df.columns[2:])
    _reject_duplicates(df, ["date", "asset"], path)
    dates, date_codes, assets, asset_codes = _index_columns(df, path)
    values = np.column_stack(
        [_parse_values(df[s], path, f"signal {s!r}") for s in signals]
    )
    grid = _grid_scatter(
        dates, date_codes, assets, asset_codes, (len(signals),), values, path,
        signals=signals,
    )
    return SignalPanel(tuple(dates), assets, tuple(signals), grid)


def load_returns(path) -> ReturnPanel:
    """Load a return CSV (header date,asset,ret_excess) into a complete grid."""
    df = _read_csv(path)
    expected = ["date", "asset", "ret_excess"]
    if list(df.columns) != expected:
        raise ParseError(f"{path}: expected header {expected}, got {list(df.columns)}")
    _reject_duplicates(df, ["date", "asset"], path)
    dates, date_codes, assets, asset_codes = _index_columns(df, path)
    values = _parse_values(df["ret_excess"], path, "ret_excess")
    grid = _grid_scatter(dates, date_codes, assets, asset_codes, (), values, path)
    return ReturnPanel(tuple(dates), assets, grid)


# ---------------------------------------------------------------------------
# writing (round-trips bit-exactly: floats are emitted with shortest repr)
# ---------------------------------------------------------------------------


def write_signals(panel: SignalPanel, path, layout: str = "long") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if layout == "long":
            fh.write("date,asset,signal,value\n")
            for ti, date in enumerate(panel.dates):
                for ai, asset in enumerate(panel.assets):
                    for si, signal in enumerate(panel.signals):
                        fh.write(f"{date},{asset},{signal},{ffmt(panel.values[ti, ai, si])}\n")
        elif layout == "wide":
            fh.write("date,asset," + ",".join(panel.signals) + "\n")
            for ti, date in enumerate(panel.dates):
                for ai, asset in enumerate(panel.assets):
                    row = ",".join(ffmt(v) for v in panel.values[ti, ai])
                    fh.write(f"{date},{asset},{row}\n")
        else:
            raise ValueError(f"unknown layout {layout!r}")


def write_returns(panel: ReturnPanel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("date,asset,ret_excess\n")
        for ti, date in enumerate(panel.dates):
            for ai, asset in enumerate(panel.assets):
                fh.write(f"{date},{asset},{ffmt(panel.values[ti, ai])}\n")


# ---------------------------------------------------------------------------
# standardization and alignment
# ---------------------------------------------------------------------------


def standardize(panel: SignalPanel) -> SignalPanel:
    """Cross-sectionally demean and scale each signal column to unit variance.

    Uses the population standard deviation (divisor N), so a two-asset column
    [lo, hi] maps to [-1, 1] exactly. Columns that are constant within a date
    carry no ranking information and are set to all-zero with a logged warning.
    Idempotent: standardizing twice equals standardizing once.
    """
    if panel.n_assets < 2:
        raise ValueError("standardization needs at least two assets per date")
    values = np.array(panel.values)  # copy; input is immutable
    mean = values.mean(axis=1, keepdims=True)
    sd = values.std(axis=1, keepdims=True)  # population divisor N
    dead = sd[:, 0, :] <= _CONSTANT_SD_TOL
    sd = np.where(sd <= _CONSTANT_SD_TOL, 1.0, sd)
    values = (values - mean) / sd
    if np.any(dead):
        for ti, si in zip(*np.nonzero(dead)):
            values[ti, :, si] = 0.0
            logger.warning(
                "constant signal column zeroed: date=%s signal=%s",
                panel.dates[ti],
                panel.signals[si],
            )
    return SignalPanel(panel.dates, panel.assets, panel.signals, values)


def align(signals: SignalPanel, returns: ReturnPanel) -> AlignedSample:
    """Pair each signal date t with the return realized one month later.

    Raises AssetMismatch if the two panels do not cover the identical asset
    list (same order), NoOverlap if no (t, t+1) pair exists.
    """
    if signals.assets != returns.assets:
        raise AssetMismatch(
            f"asset universes differ: signals={list(signals.assets)} "
            f"returns={list(returns.assets)}"
        )
    ret_index = {d: i for i, d in enumerate(returns.dates)}
    sig_idx, ret_idx = [], []
    for ti, date in enumerate(signals.dates):
        nxt = date.shift(1)
        if nxt in ret_index:
            sig_idx.append(ti)
            ret_idx.append(ret_index[nxt])
    if not sig_idx:
        raise NoOverlap(
            "no signal date has a return one month later "
            f"(signals {signals.dates[0]}..{signals.dates[-1]}, "
            f"returns {returns.dates[0]}..{returns.dates[-1]})"
        )
    return AlignedSample(
        signal_dates=tuple(signals.dates[i] for i in sig_idx),
        return_dates=tuple(returns.dates[i] for i in ret_idx),
        assets=signals.assets,
        signals=signals.signals,
        S=signals.values[sig_idx],
        r=returns.values[ret_idx],
    )
