"""N-BBM particles against the free boundary solution.

N branching Brownian motions; each branching kills the leftmost particle.
For large N the empirical measure should follow rho(., t) and the leftmost
particle should track L_t.
"""

# %%
import time

import numpy as np

from fbp import SolverConfig, compare_to_pde, simulate, solve_fbp, wave_datum

datum = wave_datum(1.0)
_, field, _ = solve_fbp(SolverConfig(T=0.25, M=256), datum)

# %%
for n in (1_000, 10_000):
    tic = time.perf_counter()
    measures = simulate(n, datum, 0.25, seed=12345, snapshot_times=[0.1])
    elapsed = time.perf_counter() - tic
    print(f"N = {n} ({elapsed:.2f} s, {measures[-1].n_branch_events} branchings)")
    for row in compare_to_pde(measures, field):
        print(f"  t = {row['t']:.2f}: KS {row['ks_distance']:.4f}, leftmost {row['leftmost']:.4f}, L_t {row['L_t']:.4f}")
    print(f"  KS scale 1.63/sqrt(N) = {1.63 / np.sqrt(n):.4f}")
