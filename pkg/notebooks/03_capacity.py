"""
Capacity lower bound with imperfect CSI
========================================

Training and data powers combine into one effective SNR. The capacity
bound water-fills that SNR over the eigenvalues of a Wishart matrix; one
shared batch of eigenvalue draws serves every candidate schedule.
"""

# %%
import numpy as np

from crsim._rng import derive_rng
from crsim.capacity import (EigenBatch, breakpoints, effective_snr, g_eval,
                            mean_bit_loading_rate, waterfill)

lam = np.array([3.1, 0.4])
res = waterfill(lam, 2.0)
print("powers", res.x, "level", res.mu, "rate", res.value, "closed form", g_eval(2.0, lam))
print("breakpoints", breakpoints(lam))

# %% ergodic rate versus effective SNR, and a practical bit-loading rate
batch = EigenBatch.draw(2, 2, 2000, derive_rng(0, 2))
for rho_d in (1.0, 10.0, 100.0):
    rho = effective_snr(rho_d, rho_t=50.0, n_t=10, gamma2=1.01, k1=2)
    print(f"rho_d={rho_d:6.1f}  rho_eff={rho:7.3f}  C={batch.mean_g(rho):.3f}  "
          f"bit-loaded={mean_bit_loading_rate(batch, rho, 3.0, 0.5):.3f}")
