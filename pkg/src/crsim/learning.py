"""Environment learning: blind noise-subspace estimation and interference constants.

During learning each CR terminal only listens to the PR. From the sample
covariance of what it hears it estimates the noise subspace ``U`` (the
orthogonal complement of the PR channel's column space) and the scalar
``beta`` that sets the residue interference power ``beta / N_l`` left after
beamforming with the estimate.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, ReceivedBlock, cscg, draw_pr_block, receive
from .config import SystemConfig

PINV_RTOL = 1e-10
DEGENERATE_GAP = 1e-12


class DegenerateSplitWarning(RuntimeWarning):
    """Signal/noise eigenvalues coincide, so the subspace split is arbitrary."""


@dataclass(frozen=True)
class CovarianceEstimate:
    r_hat: np.ndarray
    n_samples: int


@dataclass(frozen=True)
class SubspaceDecomposition:
    v_hat: np.ndarray          # M x Mp, signal subspace
    u_hat: np.ndarray          # M x (M - Mp), noise subspace
    sigma_hat: np.ndarray      # top Mp eigenvalues, descending
    noise_power_hat: float     # mean of the M - Mp smallest eigenvalues
    eigenvalues: np.ndarray    # all M eigenvalues, descending


@dataclass(frozen=True)
class LearningOutcome:
    u1_hat: np.ndarray
    u2_hat: np.ndarray
    beta1: float
    beta2: float
    chi1: float
    n_l: int


def hermitian_part(r: np.ndarray) -> np.ndarray:
    return 0.5 * (r + np.conj(np.swapaxes(r, -1, -2)))


def sample_covariance(block: ReceivedBlock | np.ndarray) -> CovarianceEstimate:
    """``(1/L) sum_n y(n) y(n)^H``, symmetrized to be exactly Hermitian."""
    y = block.samples if isinstance(block, ReceivedBlock) else np.asarray(block)
    if y.ndim != 2 or y.shape[1] < 1:
        raise ValueError("sample covariance needs at least one sample column")
    r_hat = hermitian_part(y @ y.conj().T / y.shape[1])
    return CovarianceEstimate(r_hat=r_hat, n_samples=y.shape[1])


def true_covariance(g: np.ndarray, alpha: float, sigma_s2: float,
                    noise_power: float) -> np.ndarray:
    """Ensemble covariance ``alpha sigma_s^2 G G^H + sigma_n^2 I`` of the learning samples."""
    return true_q(g, alpha, sigma_s2) + noise_power * np.eye(g.shape[0])


def true_q(g: np.ndarray, alpha: float, sigma_s2: float) -> np.ndarray:
    return alpha * sigma_s2 * (g @ g.conj().T)


def sorted_eigh(r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian EVD with eigenvalues descending; works on stacks of matrices.

    Ties keep LAPACK's output order (stable sort), so results are deterministic.
    """
    w, v = np.linalg.eigh(hermitian_part(r))
    order = np.argsort(-w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[..., None, :], axis=-1)
    return w, v


def subspace_decompose(cov: CovarianceEstimate | np.ndarray, mp: int) -> SubspaceDecomposition:
    r = cov.r_hat if isinstance(cov, CovarianceEstimate) else np.asarray(cov)
    m = r.shape[0]
    if not 0 < mp < m:
        raise ValueError(f"need 0 < mp < M (mp={mp}, M={m})")
    w, v = sorted_eigh(r)
    if w[mp - 1] - w[mp] < DEGENERATE_GAP:
        warnings.warn(
            f"eigenvalue gap between positions {mp} and {mp + 1} is "
            f"{w[mp - 1] - w[mp]:.3g}; subspace split is not unique",
            DegenerateSplitWarning, stacklevel=2)
    return SubspaceDecomposition(
        v_hat=v[:, :mp],
        u_hat=v[:, mp:],
        sigma_hat=w[:mp],
        noise_power_hat=float(np.mean(w[mp:])),
        eigenvalues=w,
    )


def estimate_q(dec: SubspaceDecomposition) -> np.ndarray:
    """Truncated-EVD estimate ``V (Sigma - sigma^2 I)^+ V^H`` of the PR signal covariance."""
    gains = np.clip(dec.sigma_hat - dec.noise_power_hat, 0.0, None)
    return hermitian_part((dec.v_hat * gains) @ dec.v_hat.conj().T)


def pinv_trace(q: np.ndarray, mp: int | None = None) -> float:
    """Trace of the pseudo-inverse of a PSD matrix, from its nonzero eigenvalues."""
    lam = np.linalg.eigvalsh(hermitian_part(np.asarray(q)))[::-1]
    if lam[0] <= 0.0:
        raise ValueError("matrix is zero; pseudo-inverse trace undefined")
    keep = lam > PINV_RTOL * lam[0]
    if mp is not None:
        keep[mp:] = False
    return float(np.sum(1.0 / lam[keep]))


def compute_beta(q_hat: np.ndarray, noise_power: float, mp: int) -> float:
    """Interference constant ``sigma_n^2 (Mp + sigma_n^2 tr(Q^+))``.

    Raises:
        ValueError: if ``q_hat`` is zero (the PR was never observed).
    """
    return noise_power * (mp + noise_power * pinv_trace(q_hat, mp))


def compute_chi(zeta: float, alpha: float, sigma_s2: float, beta1: float) -> float:
    return zeta * alpha * sigma_s2 / beta1


def predicted_residue_power(beta: float, n_l: int) -> float:
    """Per-antenna PR leak power after receive beamforming with a learned subspace."""
    if n_l < 1:
        raise ValueError("n_l must be >= 1")
    return beta / n_l


def predicted_data_it(trace_rd: float, beta1: float, alpha: float, sigma_s2: float,
                      n_l: int) -> float:
    """Interference temperature at the PR caused by CR data of total power ``trace_rd``."""
    return trace_rd * beta1 / (alpha * sigma_s2 * n_l)


def leak_gain(g: np.ndarray, u_hat: np.ndarray) -> float:
    """``||G^T U*||_F^2``: IT per unit of isotropic transmit power per beam."""
    return float(np.sum(np.abs(g.T @ u_hat.conj()) ** 2))


def measured_it_mc(g: np.ndarray, u_hat: np.ndarray, rd_trace: float, trials: int,
                   rng: np.random.Generator) -> float:
    """Monte Carlo IT ``E ||G^T U* d||^2`` with isotropic Gaussian data of total power ``rd_trace``."""
    if g.shape[0] != u_hat.shape[0]:
        raise ValueError(f"shape mismatch: G {g.shape}, U {u_hat.shape}")
    k = u_hat.shape[1]
    d = cscg(rng, (k, trials), rd_trace / k)
    leak = g.T @ (u_hat.conj() @ d)
    return float(np.mean(np.sum(np.abs(leak) ** 2, axis=0)))


def first_order_perturbation(q: np.ndarray, delta_r: np.ndarray, u: np.ndarray) -> np.ndarray:
    """First-order noise-subspace error ``-Q^+ dR U`` caused by covariance error ``dR``."""
    return -np.linalg.pinv(q, rtol=PINV_RTOL, hermitian=True) @ delta_r @ u


def subspace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Projector distance ``||A A^H - B B^H||_F``; invariant to the choice of basis."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a @ a.conj().T - b @ b.conj().T))


def align_basis(u_hat: np.ndarray, u_ref: np.ndarray) -> np.ndarray:
    """Rotate ``u_hat`` within its span to be closest to ``u_ref`` (orthogonal Procrustes).

    Eigenvector bases are only defined up to a unitary mixing; aligning to a
    reference makes ``u_hat - u_ref`` meaningful as a perturbation.
    """
    w, _, vh = np.linalg.svd(u_hat.conj().T @ u_ref)
    return u_hat @ (w @ vh)


def learn_environment(channels: ChannelSet, cfg: SystemConfig, n_l: int,
                      rng: np.random.Generator) -> LearningOutcome:
    """Run the learning stage at both CR terminals over ``n_l`` shared PR symbols.

    ``beta`` is evaluated from the estimated ``Q`` with the known noise powers;
    ``chi1`` comes from the config directly or from ``zeta`` and the estimated ``beta1``.
    """
    pr = draw_pr_block(cfg, n_l, rng)
    y1 = receive(channels.g1, pr, cfg.sigma_n1_2, rng)
    y2 = receive(channels.g2, pr, cfg.sigma_n2_2, rng)
    dec1 = subspace_decompose(sample_covariance(y1), cfg.mp)
    dec2 = subspace_decompose(sample_covariance(y2), cfg.mp)
    beta1 = compute_beta(estimate_q(dec1), cfg.sigma_n1_2, cfg.mp)
    beta2 = compute_beta(estimate_q(dec2), cfg.sigma_n2_2, cfg.mp)
    if cfg.chi1 is not None:
        chi1 = cfg.chi1
    else:
        chi1 = compute_chi(cfg.zeta, cfg.alpha, cfg.sigma_s2, beta1)
    return LearningOutcome(u1_hat=dec1.u_hat, u2_hat=dec2.u_hat,
                           beta1=beta1, beta2=beta2, chi1=chi1, n_l=n_l)


def exact_outcome(channels: ChannelSet, cfg: SystemConfig, n_l: int = 1) -> LearningOutcome:
    """Learning outcome from the ensemble covariances (infinite learning time)."""
    out = []
    for g, noise in ((channels.g1, cfg.sigma_n1_2), (channels.g2, cfg.sigma_n2_2)):
        dec = subspace_decompose(true_covariance(g, cfg.alpha, cfg.sigma_s2, noise), cfg.mp)
        beta = compute_beta(true_q(g, cfg.alpha, cfg.sigma_s2), noise, cfg.mp)
        out.append((dec.u_hat, beta))
    (u1, beta1), (u2, beta2) = out
    chi1 = cfg.chi1 if cfg.chi1 is not None else compute_chi(cfg.zeta, cfg.alpha, cfg.sigma_s2, beta1)
    return LearningOutcome(u1_hat=u1, u2_hat=u2, beta1=beta1, beta2=beta2, chi1=chi1, n_l=n_l)


def learn_batch(g: np.ndarray, alpha: float, sigma_s2: float, noise_power: float, mp: int,
                n_l: int, trials: int, rng: np.random.Generator):
    """Vectorized learning at one terminal for ``trials`` independent sample blocks.

    Returns ``(u_hat, beta_hat)`` with shapes ``(trials, M, M - Mp)`` and
    ``(trials,)``; each trial matches :func:`subspace_decompose` followed by
    :func:`compute_beta` on the same samples.
    """
    m = g.shape[0]
    active = rng.random((trials, n_l)) < alpha
    s = cscg(rng, (trials, g.shape[1], n_l), sigma_s2) * active[:, None, :]
    y = g @ s
    if noise_power > 0:
        y = y + cscg(rng, y.shape, noise_power)
    r = hermitian_part(y @ np.conj(np.swapaxes(y, 1, 2)) / n_l)
    return beta_from_covariances(r, noise_power, mp, m)


def beta_from_covariances(r: np.ndarray, noise_power: float, mp: int, m: int | None = None):
    """Noise subspaces and ``beta`` estimates for a stack of sample covariances."""
    w, v = sorted_eigh(r)
    sig_noise = w[:, mp:].mean(axis=1, keepdims=True)
    gains = np.clip(w[:, :mp] - sig_noise, 0.0, None)
    top = gains.max(axis=1, keepdims=True)
    with np.errstate(divide="ignore"):
        inv = np.where(gains > PINV_RTOL * top, 1.0 / np.where(gains > 0, gains, 1.0), 0.0)
    if np.any(top <= 0):
        raise ValueError("a sample covariance shows no signal; beta undefined")
    beta = noise_power * (mp + noise_power * inv.sum(axis=1))
    return v[:, :, mp:], beta
