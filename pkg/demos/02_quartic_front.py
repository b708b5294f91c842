"""A compactly supported initial density relaxing towards a front.

rho0 = 2 s r (1 - r)^3 with r = (x - b)/s on [b, b + s], s = sqrt(10), has
unit mass and rho0'(b) = 2.  We follow the boundary, the conserved
quantities and the Stefan-type velocity law on [0, 1/4].
"""

# %%
import numpy as np

from fbp import SolverConfig, make_initial_datum, solve_fbp
from fbp import density as D

datum = make_initial_datum(1.0)
curve, field, report = solve_fbp(SolverConfig(T=0.25, M=256), datum)
print(f"converged in {report.iterates} iterations; Lipschitz seminorm {report.lipschitz_seminorm:.3f} (A = {report.budget:.3f})")

# %%
print(" t       L_t        mass-1      v_mass     slope-2     Ldot      -rho_xx/4")
for t in (0.025, 0.075, 0.125, 0.175, 0.225):
    lhs, rhs = D.stefan_velocity_check(field, t)
    print(
        f"{t:.3f}  {float(curve(t)):.6f}  {D.mass(field, t) - 1:+.2e}  {D.v_mass(field, t):+.2e}"
        f"  {D.boundary_slope(field, t) - 2:+.2e}  {lhs:+.5f}  {rhs:+.5f}"
    )

# %% the boundary advances at roughly 0.94, well below the asymptotic speed sqrt(2)
print("L_t at 0, T/2, T:", np.round(curve(np.array([0.0, 0.125, 0.25])), 5))
