"""
Jointly choosing learning, training and data times
===================================================

The frame-averaged bound C_AL = (N_d/N) C is maximized over integer
(N_l, N_t) with the optimal powers inside. The golden-section search agrees
with an exhaustive scan on the same eigenvalue batch.
"""

# %%
from crsim import DEFAULT_CONFIG
from crsim.allocation import AllocationProblem, equal_power_baseline, exhaustive_search, optimize_time

prob = AllocationProblem.from_config(DEFAULT_CONFIG.replace(trials=300))
best = optimize_time(prob)
print(best.as_dict())
print("exhaustive:", exhaustive_search(prob).as_dict())

# %% larger interference allowance: learning shrinks, training power grows
for chi1 in (0.05, 0.5, 5.0, 50.0):
    p = prob.with_chi1(chi1)
    opt, eq = optimize_time(p), equal_power_baseline(p)
    print(f"chi1={chi1:6.2f}  N_l*={opt.n_l:4d}  N_t*={opt.n_t:3d}  C_AL*={opt.c_al:.4f}  "
          f"equal power={eq.c_al:.4f}")
