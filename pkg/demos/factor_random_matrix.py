"""Factor a random nonnegative matrix with three solvers from one shared start.

The residue iteration usually reaches the tolerance in the least wall time,
while the multiplicative rule tends to crawl near the boundary.
"""
import numpy as np

from nmfdescent import Algorithm, SolverConfig, StopRule, init_scaled, run

A = np.random.default_rng(7).random((50, 40))
start = init_scaled(A, 5, seed=1)
stop = StopRule(epsilon_rel=1e-4, max_seconds=20)

for alg in (Algorithm.RRI, Algorithm.CLINE, Algorithm.MULT):
    rep = run(A, SolverConfig(alg, rank=5, stop=stop), start=start)
    print(f"{alg.value:>6}: {rep.stop_reason.value:<10} sweeps={rep.sweeps:<6} "
          f"time={rep.elapsed:.3f}s objective={rep.trace[-1].objective:.5f}")
