"""
Learning the primary radio's channel subspace
==============================================

A CR terminal listens to the primary radio (PR) for N_l symbols, estimates
the received covariance, splits it into signal and noise subspaces and
beamforms through the noise subspace. The residual leak decays like 1/N_l.
"""

# %%
import numpy as np

from crsim import DEFAULT_CONFIG
from crsim._rng import derive_rng
from crsim.channel import draw_channels, draw_pr_block, receive
from crsim.learning import (compute_beta, estimate_q, exact_outcome, leak_gain, sample_covariance,
                            subspace_decompose, subspace_distance)

cfg = DEFAULT_CONFIG
ch = draw_channels(cfg, derive_rng(cfg.seed, 0))
exact = exact_outcome(ch, cfg)
print("true beta1 =", exact.beta1)

# %% learn over growing windows and watch the subspace error shrink
for n_l in (10, 100, 1000, 10_000):
    rng = derive_rng(cfg.seed, 1, n_l)
    y = receive(ch.g1, draw_pr_block(cfg, n_l, rng), cfg.sigma_n1_2, rng)
    dec = subspace_decompose(sample_covariance(y), cfg.mp)
    beta = compute_beta(estimate_q(dec), cfg.sigma_n1_2, cfg.mp)
    print(f"N_l={n_l:6d}  dist={subspace_distance(dec.u_hat, exact.u1_hat):.4f}  "
          f"beta1_hat={beta:.4f}  leak gain={leak_gain(ch.g1, dec.u_hat):.2e}")

# %% the exact subspace nulls the PR channel completely
print("leak with exact subspace:", leak_gain(ch.g1, exact.u1_hat))
