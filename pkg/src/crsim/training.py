"""Channel training: MSE-optimal pilots and LMMSE estimation of the beamformed CR channel."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, PrSignalBlock, cscg, draw_pr_block
from .config import SystemConfig
from .learning import LearningOutcome


@dataclass(frozen=True)
class TrainingMatrix:
    t1: np.ndarray  # K1 x N_t
    rho_t: float
    n_t: int

    @property
    def energy(self) -> float:
        """``tr(T T^H) = rho_t N_t``."""
        return self.rho_t * self.n_t


@dataclass(frozen=True)
class ChannelEstimate:
    f_hat: np.ndarray  # K2 x K1
    gamma2: float
    eta2: float

    @property
    def error_row_covariance(self) -> np.ndarray:
        return self.eta2 * np.eye(self.f_hat.shape[1])

    @property
    def estimate_row_covariance(self) -> np.ndarray:
        return (1.0 - self.eta2) * np.eye(self.f_hat.shape[1])


def build_training_matrix(k1: int, rho_t: float, n_t: int) -> TrainingMatrix:
    """Orthogonal pilot rows of equal energy ``rho_t n_t / k1``.

    Rows are the first ``k1`` rows of the ``n_t``-point DFT matrix, so
    ``T T^H = (rho_t n_t / k1) I``.
    """
    if n_t < k1:
        raise ValueError(f"training length n_t={n_t} shorter than K1={k1}")
    if rho_t < 0:
        raise ValueError("rho_t must be non-negative")
    n = np.arange(n_t)
    dft_rows = np.exp(-2j * np.pi * np.outer(np.arange(k1), n) / n_t) / np.sqrt(n_t)
    return TrainingMatrix(t1=np.sqrt(rho_t * n_t / k1) * dft_rows, rho_t=rho_t, n_t=n_t)


def gamma2(beta2: float, n_l: float, sigma_n2_2: float) -> float:
    """Effective training noise: residue PR leak ``beta2 / N_l`` plus thermal noise."""
    return beta2 / n_l + sigma_n2_2


def error_variance(rho_t: float, n_t: float, gamma: float, k1: int) -> float:
    """Per-entry LMMSE error variance ``eta2`` under optimal pilots."""
    return gamma * k1 / (gamma * k1 + rho_t * n_t)


def effective_channel(channels: ChannelSet, learn: LearningOutcome) -> np.ndarray:
    """Beamformed CR channel ``U2^H H U1*`` (K2 x K1)."""
    return learn.u2_hat.conj().T @ channels.h @ learn.u1_hat.conj()


def simulate_training_block(f: np.ndarray, t1: TrainingMatrix, channels: ChannelSet,
                            learn: LearningOutcome, cfg: SystemConfig,
                            rng: np.random.Generator,
                            pr_block: PrSignalBlock | None = None) -> np.ndarray:
    """Received pilots at CR-T2 after receive beamforming.

    ``F T + U2_hat^H (G2 s_p + z)``: the PR keeps transmitting with its own
    activity pattern, so any error in ``U2_hat`` leaks into the observation.
    """
    n_t = t1.t1.shape[1]
    if pr_block is None:
        pr_block = draw_pr_block(cfg, n_t, rng)
    raw = channels.g2 @ pr_block.symbols
    if cfg.sigma_n2_2 > 0:
        raw = raw + cscg(rng, raw.shape, cfg.sigma_n2_2)
    return f @ t1.t1 + learn.u2_hat.conj().T @ raw


def lmmse_estimate(y2: np.ndarray, t1: TrainingMatrix | np.ndarray, gamma: float) -> np.ndarray:
    """LMMSE channel estimate ``Y (T^H T + gamma I)^-1 T^H``.

    Evaluated through the push-through identity as ``Y T^H (T T^H + gamma I)^-1``,
    which only inverts a K1 x K1 matrix.
    """
    if gamma <= 0:
        raise ValueError("gamma2 must be > 0")
    t = t1.t1 if isinstance(t1, TrainingMatrix) else np.asarray(t1)
    gram = t @ t.conj().T + gamma * np.eye(t.shape[0])
    # solve from the right: X gram = Y T^H
    return np.linalg.solve(gram.T, (y2 @ t.conj().T).T).T


def estimate_channel(y2: np.ndarray, t1: TrainingMatrix, beta2: float, n_l: float,
                     sigma_n2_2: float) -> ChannelEstimate:
    g = gamma2(beta2, n_l, sigma_n2_2)
    k1 = t1.t1.shape[0]
    return ChannelEstimate(f_hat=lmmse_estimate(y2, t1, g), gamma2=g,
                           eta2=error_variance(t1.rho_t, t1.n_t, g, k1))


def training_it_avg(t1: TrainingMatrix, beta1: float, alpha: float, sigma_s2: float,
                    n_l: float) -> float:
    """Interference temperature at the PR averaged over the training interval."""
    energy = float(np.real(np.trace(t1.t1 @ t1.t1.conj().T)))
    return beta1 * energy / (alpha * sigma_s2 * n_l * t1.n_t)
