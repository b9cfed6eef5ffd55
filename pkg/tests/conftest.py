import numpy as np
import pytest

from xsdf.managed import ManagedSeries
from xsdf.panel import AlignedSample, MonthStamp, ReturnPanel, SignalPanel


def month_range(start: MonthStamp, n: int):
    return tuple(start.shift(k) for k in range(n))


def make_aligned(T=24, N=3, M=2, seed=0, scale=0.05):
    """Random aligned sample with standardized-looking signals."""
    rng = np.random.default_rng(seed)
    S = rng.standard_normal((T, N, M))
    r = rng.normal(scale=scale, size=(T, N))
    sig_dates = month_range(MonthStamp(2000, 1), T)
    ret_dates = tuple(d.shift(1) for d in sig_dates)
    return AlignedSample(
        signal_dates=sig_dates,
        return_dates=ret_dates,
        assets=tuple(f"a{i + 1}" for i in range(N)),
        signals=tuple(f"s{j + 1}" for j in range(M)),
        S=S,
        r=r,
    )


def series_from_mean(mean: np.ndarray) -> ManagedSeries:
    """A one-date managed series whose mean is exactly the given matrix."""
    mean = np.asarray(mean, dtype=float)
    n = int(round(np.sqrt(mean.shape[0])))
    assert n * n == mean.shape[0]
    return ManagedSeries(mean[None, :, :], n_assets=n, zero_cost=False)


def signal_panel(values, start=MonthStamp(2000, 1)):
    values = np.asarray(values, dtype=float)
    T, N, M = values.shape
    return SignalPanel(
        month_range(start, T),
        tuple(f"a{i + 1}" for i in range(N)),
        tuple(f"s{j + 1}" for j in range(M)),
        values,
    )


def return_panel(values, start=MonthStamp(2000, 2)):
    values = np.asarray(values, dtype=float)
    T, N = values.shape
    return ReturnPanel(
        month_range(start, T),
        tuple(f"a{i + 1}" for i in range(N)),
        values,
    )


@pytest.fixture
def aligned_small():
    return make_aligned(T=30, N=3, M=2, seed=7)
