"""Ergodic-capacity lower bound of the trained CR link.

With optimal pilots the bound depends on the powers and times only through
one scalar, the effective SNR. For a given effective SNR the per-realization
value is the water-filled log-det over the eigenvalues of the whitened channel
estimate, which has a closed-form piecewise ("segment") expression. The
eigenvalues are Wishart distributed and independent of every system
parameter except ``(K1, K2)``, so one immutable batch of draws can be reused
for every candidate allocation (common random numbers).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import cscg

LN2 = math.log(2.0)


@dataclass(frozen=True)
class WaterfillResult:
    x: np.ndarray
    mu: float
    value: float


@dataclass(frozen=True)
class CapacityEstimate:
    mean: float
    stderr: float
    n_trials: int


def _log(base: float | None) -> float:
    return 1.0 if base is None else math.log(base)


def effective_snr(rho_d, rho_t, n_t, gamma2, k1):
    """Effective SNR after LMMSE training with optimal pilots.

    ``rho_d rho_t N_t / (gamma2 (rho_d K1 + gamma2 K1 + rho_t N_t))``; broadcasts
    over array arguments.
    """
    rho_d = np.asarray(rho_d, dtype=float)
    rho_t = np.asarray(rho_t, dtype=float)
    energy = rho_t * n_t
    out = rho_d * energy / (gamma2 * (rho_d * k1 + gamma2 * k1 + energy))
    return out if out.ndim else float(out)


def waterfill(lambdas, rho_eff: float, base: float | None = 2.0) -> WaterfillResult:
    """Maximize ``sum log(1 + x_i lambda_i)`` over ``x >= 0``, ``sum x = rho_eff``.

    Returns allocations in the input order, the water level ``mu`` and the
    objective (bits by default; ``base=None`` for nats).
    """
    lam = np.asarray(lambdas, dtype=float)
    if rho_eff < 0:
        raise ValueError("rho_eff must be non-negative")
    if not np.any(lam > 0):
        raise ValueError("all eigenvalues are zero; channel has rank zero")
    order = np.argsort(-lam, kind="stable")
    pos = lam[order][lam[order] > 0]
    inv = 1.0 / pos
    # number of active modes: the largest k with mu_k > 1/lambda_k
    k = 1
    for cand in range(len(pos), 0, -1):
        mu = (rho_eff + inv[:cand].sum()) / cand
        if mu > inv[cand - 1] or cand == 1:
            k = cand
            break
    mu = (rho_eff + inv[:k].sum()) / k
    x_sorted = np.zeros_like(lam)
    x_sorted[:k] = np.maximum(mu - inv[:k], 0.0)
    x = np.empty_like(lam)
    x[order] = x_sorted
    value = float(np.sum(np.log1p(x * lam))) / _log(base)
    return WaterfillResult(x=x, mu=float(mu), value=value)


def breakpoints(lambdas) -> np.ndarray:
    """Segment boundaries ``q_0 = 0, q_k = k/lambda_{k+1} - sum_{j<=k} 1/lambda_j``.

    ``lambdas`` must be sorted descending. The final boundary is +inf and is
    not stored; zero eigenvalues give infinite breakpoints.
    """
    lam = np.asarray(lambdas, dtype=float)
    with np.errstate(divide="ignore"):
        inv = 1.0 / lam
    s = np.cumsum(inv, axis=-1)
    k = np.arange(1, lam.shape[-1])
    q = np.zeros_like(lam)
    with np.errstate(invalid="ignore"):
        q[..., 1:] = k * inv[..., 1:] - s[..., :-1]
    q[..., 1:][~np.isfinite(inv[..., 1:])] = np.inf
    return q


def g_eval(rho_eff: float, lambdas, base: float | None = 2.0) -> float:
    """Closed-form water-filled capacity for one eigenvalue draw.

    On the ``k``-th segment ``(q_{k-1}, q_k]`` the first ``k`` modes are
    active and the value is ``sum_{i<=k} log(lambda_i/k (rho_eff + sum_{j<=k} 1/lambda_j))``.
    """
    if rho_eff < 0:
        raise ValueError("rho_eff must be non-negative")
    lam = np.sort(np.asarray(lambdas, dtype=float))[::-1]
    if rho_eff == 0.0:
        return 0.0
    q = breakpoints(lam)
    k = int(np.count_nonzero(rho_eff > q))
    head = lam[:k]
    level = (rho_eff + np.sum(1.0 / head)) / k
    return float(np.sum(np.log(head * level))) / _log(base)


def sample_eigenvalues(k1: int, k2: int, rng: np.random.Generator) -> np.ndarray:
    """Eigenvalues (descending) of ``W^H W`` for a K2 x K1 standard complex Gaussian ``W``."""
    if k1 > k2:
        raise ValueError(f"need k1 <= k2 (k1={k1}, k2={k2})")
    w = cscg(rng, (k2, k1))
    return np.linalg.eigvalsh(w.conj().T @ w)[::-1].clip(min=0.0)


class EigenBatch:
    """Immutable batch of Wishart eigenvalue draws with precomputed segment data.

    Evaluating the mean segment function on a fixed batch makes the capacity
    bound a deterministic, increasing and concave function of the effective SNR.
    """

    _CHUNK = 1 << 21

    def __init__(self, lambdas: np.ndarray):
        lam = np.sort(np.asarray(lambdas, dtype=float), axis=-1)[:, ::-1].copy()
        if lam.ndim != 2 or lam.shape[0] < 1:
            raise ValueError("lambdas must be a non-empty (trials, K1) array")
        if np.any(lam[:, 0] <= 0):
            raise ValueError("every draw needs a positive leading eigenvalue")
        lam.setflags(write=False)
        self.lambdas = lam
        with np.errstate(divide="ignore"):
            inv = 1.0 / lam
            self._inv_cum = np.cumsum(inv, axis=1)
            self._log_cum = np.cumsum(np.log(lam), axis=1)
        self._q = breakpoints(lam)
        for arr in (self._inv_cum, self._log_cum, self._q):
            arr.setflags(write=False)

    @classmethod
    def draw(cls, k1: int, k2: int, trials: int, rng: np.random.Generator) -> "EigenBatch":
        if k1 > k2:
            raise ValueError(f"need k1 <= k2 (k1={k1}, k2={k2})")
        w = cscg(rng, (trials, k2, k1))
        lam = np.linalg.eigvalsh(np.conj(np.swapaxes(w, 1, 2)) @ w).clip(min=0.0)
        return cls(lam)

    @property
    def trials(self) -> int:
        return self.lambdas.shape[0]

    @property
    def k1(self) -> int:
        return self.lambdas.shape[1]

    def _active(self, rho: np.ndarray) -> np.ndarray:
        """Number of water-filled modes per (rho, draw); breakpoints are increasing."""
        k = np.zeros((len(rho), self.trials), dtype=np.intp)
        for j in range(self.k1):
            k += rho[:, None] > self._q[None, :, j]
        return k

    def g_matrix(self, rho_eff, base: float | None = 2.0) -> np.ndarray:
        """Per-draw segment function, shape ``(len(rho_eff), trials)``."""
        rho = np.atleast_1d(np.asarray(rho_eff, dtype=float))
        if np.any(rho < 0):
            raise ValueError("rho_eff must be non-negative")
        k = self._active(rho)
        flat = np.arange(self.trials) * self.k1 + (np.maximum(k, 1) - 1)
        s = self._inv_cum.ravel()[flat]
        lg = self._log_cum.ravel()[flat]
        kk = np.maximum(k, 1)
        val = lg + kk * np.log((rho[:, None] + s) / kk)
        val[k == 0] = 0.0
        return val / _log(base)

    def mean_g(self, rho_eff, base: float | None = 2.0):
        """Batch-mean segment function for each value of ``rho_eff`` (a float for scalar input)."""
        rho = np.atleast_1d(np.asarray(rho_eff, dtype=float)).ravel()
        step = max(1, self._CHUNK // (self.trials * self.k1))
        out = np.empty(len(rho))
        for start in range(0, len(rho), step):
            out[start:start + step] = self.g_matrix(rho[start:start + step], base).mean(axis=1)
        return float(out[0]) if np.ndim(rho_eff) == 0 else out

    def waterfill_allocations(self, rho_eff: float, gain_scale: float = 1.0) -> np.ndarray:
        """Per-draw water-filling allocations for gains ``lambdas * gain_scale``."""
        scaled = EigenBatch(self.lambdas * gain_scale) if gain_scale != 1.0 else self
        if rho_eff == 0:
            return np.zeros_like(self.lambdas)
        k = scaled._active(np.array([float(rho_eff)]))[0]
        rows = np.arange(self.trials)
        mu = (rho_eff + scaled._inv_cum[rows, k - 1]) / k
        with np.errstate(divide="ignore"):
            x = mu[:, None] - 1.0 / scaled.lambdas
        x[np.arange(self.k1)[None, :] >= k[:, None]] = 0.0
        return np.maximum(x, 0.0)


def c_l2(rho_eff: float, k1: int, k2: int, trials: int,
         rng: np.random.Generator | None = None, batch: EigenBatch | None = None,
         base: float | None = 2.0) -> CapacityEstimate:
    """Monte Carlo capacity lower bound at effective SNR ``rho_eff``.

    Pass ``batch`` to reuse one set of eigenvalue draws across calls; otherwise
    ``trials`` fresh draws are taken from ``rng``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if batch is None:
        if rng is None:
            raise ValueError("need an rng or a shared batch")
        batch = EigenBatch.draw(k1, k2, trials, rng)
    vals = batch.g_matrix([rho_eff], base)[0]
    n = vals.size
    stderr = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return CapacityEstimate(mean=float(vals.mean()), stderr=stderr, n_trials=n)


def frame_average(c_l2_val, n_d, n: int):
    """Scale a per-data-symbol rate to the whole frame: ``(N_d / N) C``."""
    n_d = np.asarray(n_d, dtype=float)
    if np.any(n_d < 0) or np.any(n_d > n):
        raise ValueError("need 0 <= n_d <= n")
    out = n_d / n * c_l2_val
    return out if np.ndim(out) else float(out)


def bit_loading_rate(lambdas, rho_eff: float, gap_db: float, granularity: float) -> float:
    """Achievable rate of a practical code with SNR gap ``gap_db`` and rate step ``granularity``.

    Power is water-filled on the gap-reduced gains ``lambda / Gamma`` and each
    mode's rate ``log2(1 + x lambda / Gamma)`` is rounded down to the grid.
    """
    if gap_db < 0 or granularity <= 0:
        raise ValueError("need gap_db >= 0 and granularity > 0")
    gap = 10.0 ** (gap_db / 10.0)
    lam = np.asarray(lambdas, dtype=float) / gap
    if rho_eff == 0:
        return 0.0
    x = waterfill(lam, rho_eff).x
    return float(np.sum(_quantize(np.log2(1.0 + x * lam), granularity)))


def _quantize(rate, granularity: float):
    # small slack so exact grid points are not lost to rounding
    return granularity * np.floor(np.asarray(rate) / granularity + 1e-12)


def mean_bit_loading_rate(batch: EigenBatch, rho_eff: float, gap_db: float,
                          granularity: float) -> float:
    """Batch mean of :func:`bit_loading_rate`."""
    if rho_eff == 0:
        return 0.0
    gap = 10.0 ** (gap_db / 10.0)
    x = batch.waterfill_allocations(rho_eff, gain_scale=1.0 / gap)
    rates = np.log2(1.0 + x * batch.lambdas / gap)
    return float(_quantize(rates, granularity).sum(axis=1).mean())
