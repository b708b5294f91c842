"""Product integration on the Abel equation phi = 1 + lam int phi/sqrt(t - tau).

The exact solution exp(z^2 t) erfc(-z sqrt t), z = lam sqrt(pi), has a sqrt(t)
singularity in its derivative.  Uniform grids therefore give first order only;
grading the nodes like (i/M)^2 restores second order.
"""

# %%
import numpy as np

from fbp import SingularKernel, TimeGrid, solve_weakly_singular
from fbp.volterra import picard_series_oracle

lam, T = 0.5, 0.25
kernel = SingularKernel.constant(lam)

for kind in ("uniform", "graded"):
    prev = None
    print(kind)
    for M in (128, 256, 512, 1024):
        grid = getattr(TimeGrid, kind)(T, M)
        phi = solve_weakly_singular(kernel, np.ones(M + 1), grid)
        err = np.max(np.abs(phi.values - picard_series_oracle(lam, grid, terms=40).values))
        order = "" if prev is None else f"  order {np.log2(prev / err):.2f}"
        print(f"  M = {M:5d}  sup error {err:.3e}{order}")
        prev = err
