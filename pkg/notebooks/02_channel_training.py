"""
Training the beamformed CR channel
===================================

After learning, CR-T1 sends orthogonal pilots and CR-T2 forms an LMMSE
estimate of the K2 x K1 effective channel. Residual PR leak inflates the
training noise to gamma2 = beta2/N_l + sigma^2, and the per-entry estimation
error variance is eta2 = gamma2 K1 / (gamma2 K1 + rho_t N_t).
"""

# %%
import numpy as np

from crsim.channel import cscg
from crsim.training import build_training_matrix, error_variance, gamma2, lmmse_estimate

k1, k2, n_t, rho_t = 2, 2, 8, 5.0
g = gamma2(beta2=2.07, n_l=200, sigma_n2_2=1.0)
t = build_training_matrix(k1, rho_t, n_t)
print("T T^H =\n", np.round(t.t1 @ t.t1.conj().T, 12))

# %% Monte Carlo check of the error variance
rng = np.random.default_rng(0)
f = cscg(rng, (5000, k2, k1))
y = f @ t.t1 + cscg(rng, (5000, k2, n_t), g)
err = f - np.stack([lmmse_estimate(yi, t, g) for yi in y])
print("MC error variance:", np.mean(np.abs(err) ** 2))
print("predicted eta2:   ", error_variance(rho_t, n_t, g, k1))
