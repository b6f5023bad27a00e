"""Compare the nonnegative fit against the SVD and the clipped SVD.

For rank one the nonnegative problem has the same optimum as the SVD, so
the errors agree. For higher ranks the SVD error bounds the nonnegative
fit from below, and clipping the negative entries of the truncated SVD
can only move it closer to A.
"""
import numpy as np

from nmfdescent import Algorithm, SolverConfig, StopRule, nonneg_part_baseline, run, svd, truncate

A = np.random.default_rng(3).random((12, 9))
for r in (1, 2, 3):
    rep = run(A, SolverConfig(Algorithm.RRI, rank=r, stop=StopRule(epsilon_rel=1e-8)))
    e_nmf = np.linalg.norm(A - rep.final.U @ rep.final.V.T)
    e_svd = np.linalg.norm(A - truncate(svd(A), r))
    _, e_pos = nonneg_part_baseline(A, r)
    print(f"r={r}: clipped {e_pos:.6f} <= svd {e_svd:.6f} <= nmf {e_nmf:.6f}")
