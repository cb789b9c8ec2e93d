"""Partially observed robust PCA: multi-block ADMM vs. the single-multiplier
baseline.

A checkerboard low-rank matrix is corrupted on ~15% of entries and observed
on ~40%.  Both methods split the recovery into three blocks (a residual fit
constrained to a small ball on the observed entries, a sparse part under an
elementwise penalty, a low-rank part under a spectral penalty) and differ
only in how multipliers are carried between block sweeps.
"""

import numpy as np

from minsplit import (
    PartialMatrix,
    admm_solve,
    asalm_solve,
    gen_rpca,
    rpca_problem,
    svd,
)

m = n = 20
lam, delta, gamma, iters = 0.25, 0.1, 0.8, 2000

inst = gen_rpca(m, n, seed=1)
observed = PartialMatrix(values=inst.observed, mask=inst.omega)
print(f"{m}x{n} instance: {inst.omega.mean():.0%} observed, "
      f"{inst.sparse.astype(bool).mean():.0%} corrupted, "
      f"true rank {int((svd(inst.low_rank).sigma > 1e-10).sum())}")

problem = rpca_problem(observed, lam, delta)
rep = admm_solve(problem, form="averaged", gamma=gamma, tol=0.0, max_iter=iters,
                 metric_blocks=(1, 2))
admm_low = rep.w[2].reshape(m, n)
admm_sparse = rep.w[1].reshape(m, n)
print(f"\nmulti-block ADMM ({iters} sweeps, gamma={gamma}):")
print(f"  relative change  {rep.trace.last('relative_change'):.2e}")
print(f"  constraint gap   {rep.trace.last('primal_residual'):.2e}")
print(f"  recovered rank   {int((svd(admm_low).sigma > 1e-6).sum())}")

state, trace = asalm_solve(observed, lam, delta, max_iter=iters)
print(f"\nsingle-multiplier baseline ({iters} sweeps):")
print(f"  relative change  {trace.last('relative_change'):.2e}")
print(f"  constraint gap   {trace.last('primal_residual_omega'):.2e} (observed set)")
print(f"  recovered rank   {int((svd(state.low_rank).sigma > 1e-6).sum())}")

agree = np.linalg.norm(admm_low - state.low_rank) / (1 + np.linalg.norm(state.low_rank))
err = np.linalg.norm(admm_low - inst.low_rank) / np.linalg.norm(inst.low_rank)
print(f"\nlow-rank parts of the two methods agree to {agree:.2e} (relative)")
print(f"ADMM low-rank part vs ground truth: {err:.2e} (relative; exact recovery"
      "\nis not expected from 40% observations with this penalty pair)")
