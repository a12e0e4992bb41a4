"""Random channels, the intermittent primary-radio signal and received blocks.

Complex Gaussian convention used throughout the package: a "unit-variance"
complex entry has real and imaginary parts each of variance 1/2.
Reverse links are transposes of the forward ones (TDD reciprocity) and are
never stored separately.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig

ORTHONORMAL_TOL = 1e-8


def cscg(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly symmetric complex Gaussian draws with per-entry ``variance``."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True)
class ChannelSet:
    """One realization of the PR->CR-T1 (g1), PR->CR-T2 (g2) and CR-T1->CR-T2 (h) links."""

    g1: np.ndarray  # M1 x Mp
    g2: np.ndarray  # M2 x Mp
    h: np.ndarray   # M2 x M1


@dataclass(frozen=True)
class PrSignalBlock:
    symbols: np.ndarray   # Mp x L, silent columns exactly zero
    activity: np.ndarray  # bool, length L

    @property
    def length(self) -> int:
        return self.symbols.shape[1]


@dataclass(frozen=True)
class ReceivedBlock:
    samples: np.ndarray  # M x L, one column per symbol period

    @property
    def n_antennas(self) -> int:
        return self.samples.shape[0]

    @property
    def length(self) -> int:
        return self.samples.shape[1]


def draw_channels(cfg: SystemConfig, rng: np.random.Generator) -> ChannelSet:
    g1 = cscg(rng, (cfg.m1, cfg.mp))
    g2 = cscg(rng, (cfg.m2, cfg.mp))
    h = cscg(rng, (cfg.m2, cfg.m1))
    return ChannelSet(g1=g1, g2=g2, h=h)


def draw_pr_block(cfg: SystemConfig, length: int, rng: np.random.Generator,
                  alpha: float | None = None) -> PrSignalBlock:
    """PR transmit signal over ``length`` symbol periods.

    Each period is active independently with probability ``alpha`` (the
    config's duty fraction unless overridden); active symbols are i.i.d.
    complex Gaussian with covariance ``sigma_s2 * I``.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    alpha = cfg.alpha if alpha is None else alpha
    activity = rng.random(length) < alpha
    symbols = cscg(rng, (cfg.mp, length), cfg.sigma_s2)
    symbols[:, ~activity] = 0.0
    return PrSignalBlock(symbols=symbols, activity=activity)


def receive(channel: np.ndarray, pr_block: PrSignalBlock, noise_power: float,
            rng: np.random.Generator) -> ReceivedBlock:
    """``channel @ symbols`` plus white complex Gaussian noise of ``noise_power``."""
    channel = np.asarray(channel)
    if channel.ndim != 2 or channel.shape[1] != pr_block.symbols.shape[0]:
        raise ValueError(
            f"channel shape {channel.shape} incompatible with PR block of "
            f"{pr_block.symbols.shape[0]} antennas")
    samples = channel @ pr_block.symbols
    if noise_power > 0.0:
        samples = samples + cscg(rng, samples.shape, noise_power)
    return ReceivedBlock(samples=samples)


def check_orthonormal(u: np.ndarray, tol: float = ORTHONORMAL_TOL) -> None:
    gram = u.conj().T @ u
    err = np.linalg.norm(gram - np.eye(u.shape[1]))
    if err > tol:
        raise ValueError(f"basis columns are not orthonormal (||U^H U - I|| = {err:.3g})")


def apply_receive_beamforming(u_hat: np.ndarray, block: ReceivedBlock) -> ReceivedBlock:
    """Project received samples onto the estimated noise subspace: ``u_hat^H y``."""
    u_hat = np.asarray(u_hat)
    if u_hat.shape[0] != block.n_antennas:
        raise ValueError(
            f"beamformer has {u_hat.shape[0]} rows but block has {block.n_antennas} antennas")
    check_orthonormal(u_hat)
    return ReceivedBlock(samples=u_hat.conj().T @ block.samples)
