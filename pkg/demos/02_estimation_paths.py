#!/usr/bin/env python3
"""Compare the three estimation paths on one sample.

- max-return: closed form, the leading singular pair of the mean managed
  matrix. Concentrates on the single strongest direction.
- max-sharpe via generalized eigenproblems: exact but needs well-conditioned
  covariances, so it only suits small cross-sections.
- max-sharpe via alternating ridge regressions: the production path; at tiny
  shrinkage it lands on the eigen solution, at heavier shrinkage it trades
  in-sample fit for out-of-sample stability. The shrinkage is picked by
  cross-validation on contiguous time folds.
"""

import numpy as np

from xsdf import align, build_managed
from xsdf.estimators import (
    cross_validate,
    estimate_max_return,
    estimate_max_sharpe_eigen,
    estimate_max_sharpe_ridge,
    in_sample_sharpe_sq,
)
from xsdf.synth import DgpSpec, generate

rng = np.random.default_rng(7)
N, M, T = 9, 5, 120  # nine assets, five signals, ten years

spec = DgpSpec(
    slopes=rng.normal(scale=0.25, size=(M, N, N)),
    sigma_signal=1.0,
    sigma_noise=0.4,
    T=T,
    seed=5,
)
signals, returns = generate(spec)
series = build_managed(align(signals, returns))


def annualized_sr(params):
    sr2 = in_sample_sharpe_sq(series, params.signal_weights, params.spillover_flat)
    return np.sqrt(12.0 * sr2)


mr = estimate_max_return(series)
print(f"max-return        : in-sample SR {annualized_sr(mr):6.2f} (closed form)")

eigen, trace_e = estimate_max_sharpe_eigen(series)
print(
    f"max-sharpe (eigen): in-sample SR {annualized_sr(eigen):6.2f} "
    f"after {trace_e.iterations} iterations"
)

for lam in (1e-6, 1e-2, 1.0, 1e2):
    ridge, trace_r = estimate_max_sharpe_ridge(series, lam)
    print(
        f"max-sharpe (ridge, shrinkage {lam:7.0e}): in-sample SR "
        f"{annualized_sr(ridge):6.2f} after {trace_r.iterations:3d} iterations"
    )

print("\nthe squared Sharpe climbs monotonically along the eigen path:")
print("  " + " -> ".join(f"{v:.3f}" for v in trace_e.sharpe_sq[:6]) + " -> ...")

cv = cross_validate(series, folds=5, tol=1e-6, max_iter=200)
print("\nfive-fold cross-validation over the default grid:")
for lam, score in zip(cv.grid, cv.fold_scores):
    marker = "  <- chosen" if lam == cv.chosen else ""
    print(f"  shrinkage {lam:8.0e}: held-out SR {score:7.3f}{marker}")
