"""Synthetic data generation and closed-form oracles.

The generating process draws a signal vector each month and produces next
month's returns as a linear map of it plus noise: r_{t+1} = B s_t + eps_{t+1}.
Under this process the mean managed vector and its covariance are available in
closed form (Gaussian draws), which pins down the optimal spillover direction
for both objectives and therefore serves as an independent oracle for the
estimators:

  - expected-return objective:  direction of the mean managed vector,
  - Sharpe objective:           that mean premultiplied by the inverse managed
                                covariance.

Both map back to the slope matrix B, enabling full recovery round trips.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NotPsd, SingularCovariance
from .panel import MonthStamp, ReturnPanel, SignalPanel

_PSD_TOL = 1e-10
_COND_LIMIT = 1e12


def _as_cov(value, n: int, name: str) -> np.ndarray:
    """Accept a full matrix or a scalar meaning scalar * identity."""
    a = np.asarray(value, dtype=float)
    if a.ndim == 0:
        a = float(a) * np.eye(n)
    if a.shape != (n, n):
        raise ValueError(f"{name} must be {n}x{n} or scalar, got shape {a.shape}")
    return a


def _check_psd(a: np.ndarray, name: str) -> np.ndarray:
    if not np.allclose(a, a.T, atol=1e-12):
        raise NotPsd(f"{name} is not symmetric")
    w = np.linalg.eigvalsh(a)
    if w.min() < -_PSD_TOL * max(1.0, w.max()):
        raise NotPsd(f"{name} has negative eigenvalue {w.min():.3e}")
    return a


def _psd_factor(a: np.ndarray) -> np.ndarray:
    """L with L L' = a, valid for any PSD matrix (zero blocks allowed)."""
    w, v = np.linalg.eigh(a)
    return v * np.sqrt(np.clip(w, 0.0, None))


@dataclass(frozen=True)
class DgpSpec:
    """Parameters of the synthetic return-generating process.

    ``slopes`` is (N, N) for a single signal or (M, N, N) for the multi-signal
    extension r = sum_m slopes[m] @ S[:, m] + eps. ``sigma_signal`` follows the
    same shape rule ((N, N) shared, or (M, N, N) per signal). All closed-form
    oracles require M = 1.
    """

    slopes: np.ndarray
    sigma_signal: np.ndarray
    sigma_noise: np.ndarray
    T: int
    seed: int
    start: MonthStamp = MonthStamp(2000, 1)

    def __post_init__(self):
        slopes = np.asarray(self.slopes, dtype=float)
        if slopes.ndim == 2:
            slopes = slopes[None, :, :]
        if slopes.ndim != 3 or slopes.shape[1] != slopes.shape[2]:
            raise ValueError(f"slopes must be (N,N) or (M,N,N), got {np.shape(self.slopes)}")
        n = slopes.shape[1]
        sig_s = np.asarray(self.sigma_signal, dtype=float)
        if sig_s.ndim <= 2:
            sig_s = np.repeat(_as_cov(sig_s, n, "sigma_signal")[None], slopes.shape[0], axis=0)
        if sig_s.shape != (slopes.shape[0], n, n):
            raise ValueError(
                f"sigma_signal must be (N,N) or (M,N,N), got {np.shape(self.sigma_signal)}"
            )
        sig_e = _as_cov(self.sigma_noise, n, "sigma_noise")
        for m in range(slopes.shape[0]):
            _check_psd(sig_s[m], f"sigma_signal[{m}]")
        _check_psd(sig_e, "sigma_noise")
        if self.T < 1:
            raise ValueError("T must be positive")
        for name, arr in (("slopes", slopes), ("sigma_signal", sig_s), ("sigma_noise", sig_e)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_assets(self) -> int:
        return self.slopes.shape[1]

    @property
    def n_signals(self) -> int:
        return self.slopes.shape[0]


def generate(spec: DgpSpec) -> tuple[SignalPanel, ReturnPanel]:
    """Draw one sample path of the process.

    Signals are emitted raw (not re-standardized) so estimates can be compared
    against the closed-form oracles; standardize explicitly for the trading
    pipeline. Signal and noise draws come from independently spawned streams of
    the same seed, so either can be reproduced in isolation.
    """
    n, m, T = spec.n_assets, spec.n_signals, spec.T
    ss = np.random.SeedSequence(spec.seed)
    child_signal, child_noise = ss.spawn(2)
    rng_signal = np.random.default_rng(child_signal)
    rng_noise = np.random.default_rng(child_noise)

    S = np.empty((T, n, m))
    for j in range(m):
        L = _psd_factor(spec.sigma_signal[j])
        S[:, :, j] = rng_signal.standard_normal((T, n)) @ L.T
    eps = rng_noise.standard_normal((T, n)) @ _psd_factor(spec.sigma_noise).T
    r = np.einsum("mij,tjm->ti", spec.slopes, S) + eps

    signal_dates = tuple(spec.start.shift(k) for k in range(T))
    return_dates = tuple(spec.start.shift(k + 1) for k in range(T))
    assets = tuple(f"a{i + 1}" for i in range(n))
    names = tuple(f"s{j + 1}" for j in range(m))
    return (
        SignalPanel(signal_dates, assets, names, S),
        ReturnPanel(return_dates, assets, r),
    )


def _require_single_signal(spec: DgpSpec, what: str):
    if spec.n_signals != 1:
        raise ValueError(f"{what} is defined for single-signal processes only")


def managed_mean(spec: DgpSpec) -> np.ndarray:
    """Population mean of the managed vector: entry i*N+j is E[S_i * r_j]."""
    _require_single_signal(spec, "managed_mean")
    C = spec.slopes[0] @ spec.sigma_signal[0]  # C[j, i] = E[r_j S_i]
    return C.T.reshape(-1).copy()


def pi_covariance(spec: DgpSpec) -> np.ndarray:
    """Population covariance of the managed vector under Gaussian draws.

    Uses the Gaussian fourth-moment identity, so it is exact for any PSD
    signal/noise covariances, not only diagonal ones.
    """
    _require_single_signal(spec, "pi_covariance")
    sig_s = spec.sigma_signal[0]
    B = spec.slopes[0]
    C = B @ sig_s
    sig_r = B @ sig_s @ B.T + spec.sigma_noise
    # Cov(S_i r_j, S_k r_l) = sig_s[i,k] sig_r[j,l] + C[j,k] C[l,i]
    n = spec.n_assets
    cov = np.einsum("ik,jl->ijkl", sig_s, sig_r) + np.einsum("jk,li->ijkl", C, C)
    return cov.reshape(n * n, n * n)


def empirical_pi_covariance(spec: DgpSpec, T: int = 100_000) -> np.ndarray:
    """Covariance of the managed vector estimated from one long simulated path.

    A cross-check for pi_covariance; draws come from a dedicated spawned
    stream so they are independent of generate()'s output.
    """
    _require_single_signal(spec, "empirical_pi_covariance")
    child = np.random.SeedSequence(spec.seed).spawn(3)[2]
    rng = np.random.default_rng(child)
    n = spec.n_assets
    S = rng.standard_normal((T, n)) @ _psd_factor(spec.sigma_signal[0]).T
    eps = rng.standard_normal((T, n)) @ _psd_factor(spec.sigma_noise).T
    r = S @ spec.slopes[0].T + eps
    pis = (S[:, :, None] * r[:, None, :]).reshape(T, n * n)
    return np.cov(pis, rowvar=False, bias=True)


def oracle_phi(
    spec: DgpSpec, objective: str, sigma_lambda: Optional[np.ndarray] = None
) -> np.ndarray:
    """Closed-form optimal spillover direction (unit norm) under the process.

    ``max_return`` aligns with the mean managed vector; ``max_sharpe``
    premultiplies it by the inverse managed covariance (supplied via
    ``sigma_lambda`` or derived analytically).
    """
    mean = managed_mean(spec)
    if objective == "max_return":
        norm = np.linalg.norm(mean)
        if norm == 0:
            raise ValueError("mean managed vector is zero; oracle undefined")
        return mean / norm
    if objective != "max_sharpe":
        raise ValueError(f"unknown objective {objective!r}")
    cov = pi_covariance(spec) if sigma_lambda is None else np.asarray(sigma_lambda, dtype=float)
    if np.linalg.cond(cov) > _COND_LIMIT:
        raise SingularCovariance(
            f"managed covariance condition {np.linalg.cond(cov):.2e} too large"
        )
    direction = np.linalg.solve(cov, mean)
    return direction / np.linalg.norm(direction)


def recover_b(
    phi: np.ndarray,
    sigma_lambda: Optional[np.ndarray],
    sigma_signal: np.ndarray,
    objective: str,
) -> tuple[np.ndarray, float]:
    """Invert an oracle direction back to the slope matrix, up to scale.

    Returns the unit-Frobenius-norm matrix and the proportionality constant
    that was divided out.
    """
    phi = np.asarray(phi, dtype=float)
    n = int(round(np.sqrt(phi.size)))
    if n * n != phi.size:
        raise ValueError(f"phi length {phi.size} is not a perfect square")
    sigma_signal = np.asarray(sigma_signal, dtype=float)
    if np.linalg.cond(sigma_signal) > _COND_LIMIT:
        raise SingularCovariance("signal covariance is numerically singular")
    if objective == "max_sharpe":
        if sigma_lambda is None:
            raise ValueError("max_sharpe recovery needs the managed covariance")
        vec = np.asarray(sigma_lambda, dtype=float) @ phi
    elif objective == "max_return":
        vec = phi
    else:
        raise ValueError(f"unknown objective {objective!r}")
    # vec[i*N+j] = (B sigma_signal)[j, i]: undo the managed-vector layout.
    scaled = vec.reshape(n, n).T
    raw = scaled @ np.linalg.inv(sigma_signal)
    scale = float(np.linalg.norm(raw))
    if scale == 0:
        raise ValueError("recovered slope matrix is zero")
    return raw / scale, scale


# ---------------------------------------------------------------------------
# spec files
# ---------------------------------------------------------------------------

#: Documented keys of a DGP spec file (TOML):
#:   t          - months to simulate (positive integer)
#:   seed       - RNG seed (integer)
#:   start      - first signal month "YYYY-MM" (optional, default 2000-01)
#:   b          - N x N slope matrix, or M x N x N nested list for M signals
#:   sigma_s    - signal covariance: scalar, N x N, or M x N x N
#:   sigma_eps  - noise covariance: scalar or N x N


def load_dgp_spec(path) -> DgpSpec:
    """Read a DGP spec from a TOML file (see documented keys above)."""
    try:
        import tomllib  # py >= 3.11
    except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
        import tomli as tomllib
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    unknown = set(raw) - {"t", "seed", "start", "b", "sigma_s", "sigma_eps"}
    if unknown:
        raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
    for key in ("t", "seed", "b", "sigma_s", "sigma_eps"):
        if key not in raw:
            raise ValueError(f"{path}: missing key {key!r}")
    start = MonthStamp.parse(raw.get("start", "2000-01"))
    return DgpSpec(
        slopes=np.asarray(raw["b"], dtype=float),
        sigma_signal=np.asarray(raw["sigma_s"], dtype=float),
        sigma_noise=np.asarray(raw["sigma_eps"], dtype=float),
        T=int(raw["t"]),
        seed=int(raw["seed"]),
        start=start,
    )
