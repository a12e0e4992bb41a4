"""
Optimal power split between training and data
==============================================

For a fixed schedule (N_l, N_t, N_d) the optimal training and data powers
come in closed form. Which of the interference caps binds depends on N_t:
training capped for short training, neither for medium, data capped for long.
"""

# %%
import numpy as np

from crsim import DEFAULT_CONFIG
from crsim.allocation import AllocationProblem, boundary_n1, boundary_n2, power_arrays

prob = AllocationProblem.from_config(DEFAULT_CONFIG)
n_l = 200
print("beta2 =", prob.beta2, " cap chi1*N_l =", prob.cap(n_l))
print("S2 ends near N_t =", boundary_n1(n_l, prob), " S3 starts near N_d =", boundary_n2(n_l, prob))

# %%
n_t = np.arange(prob.k1, prob.n - n_l)
rho_t, rho_d, rho_eff, case = power_arrays(n_l, n_t, prob)
for i in (0, 20, 100, 300, 500, 700, len(n_t) - 1):
    print(f"N_t={n_t[i]:4d}  S{case[i] + 1}  rho_t={rho_t[i]:8.2f}  rho_d={rho_d[i]:7.2f}  "
          f"rho_eff={rho_eff[i]:8.3f}")
