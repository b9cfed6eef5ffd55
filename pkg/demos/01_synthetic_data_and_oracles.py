#!/usr/bin/env python3
"""Generate a synthetic cross-predictive market and check the estimators
against its closed-form optimum.

The data-generating process is r_{t+1} = B s_t + noise: entry B[j, i] says how
much asset i's signal moves asset j's next-month return. Because we know B,
the optimal spillover direction is known in closed form for both objectives,
which makes this process the package's correctness oracle.
"""

import numpy as np

from xsdf import align, build_managed
from xsdf.estimators import estimate_max_return, estimate_max_sharpe_ridge
from xsdf.synth import DgpSpec, generate, oracle_phi, pi_covariance, recover_b

rng = np.random.default_rng(0)
N = 5

# a market with genuine cross-asset predictability and heterogeneous vol
B = rng.normal(scale=0.4, size=(N, N))
spec = DgpSpec(
    slopes=B,
    sigma_signal=np.diag(np.linspace(0.5, 1.5, N)),
    sigma_noise=np.diag(np.linspace(0.1, 0.4, N)),
    T=5000,
    seed=42,
)

signals, returns = generate(spec)
print(f"simulated {spec.T} months, {N} assets, 1 signal (seed {spec.seed})")

sample = align(signals, returns)
series = build_managed(sample)

mr = estimate_max_return(series)
ms, trace = estimate_max_sharpe_ridge(series, shrinkage=1e-6)
print(f"max-sharpe ridge converged in {trace.iterations} iterations")

for name, params, objective in (("max-return", mr, "max_return"),
                                ("max-sharpe", ms, "max_sharpe")):
    target = oracle_phi(spec, objective)
    cos = abs(params.spillover_flat @ target)
    print(f"{name}: |cos(estimate, closed form)| = {cos:.4f}")

# the two objectives imply genuinely different spillover structure
cos_between = abs(oracle_phi(spec, "max_return") @ oracle_phi(spec, "max_sharpe"))
print(f"|cos(max-return optimum, max-sharpe optimum)| = {cos_between:.4f}")

# and the estimated direction maps back to the slope matrix that made the data
cov = pi_covariance(spec)
recovered, scale = recover_b(ms.spillover_flat, cov, spec.sigma_signal[0], "max_sharpe")
cos_b = abs(np.sum(recovered * B) / np.linalg.norm(B))
print(f"slope matrix recovered from the estimate: |cos| = {cos_b:.4f} (scale {scale:.2f})")
