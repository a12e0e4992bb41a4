"""Power and time allocation maximizing the frame-averaged capacity bound.

For a fixed schedule ``(N_l, N_t)`` the best split of power between training
and data maximizes the effective SNR under two per-symbol interference caps
``rho <= chi1 N_l`` and the frame budget ``rho_t N_t + rho_d N_d <= P``. The
solution is closed form and falls in one of four subcases:

* ``S1`` both caps bind (budget slack), which happens iff ``chi1 N_l (N - N_l) <= P``;
* ``S2`` the training cap binds and the budget is spent;
* ``S3`` the data cap binds and the budget is spent;
* ``S4`` only the budget binds.

Time allocation is a search over integer schedules that uses the structure of
these subcases to avoid scanning most of the ``(N_l, N_t)`` grid.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._rng import BATCH_STREAM, CHANNEL_STREAM, derive_rng
from .capacity import EigenBatch, effective_snr
from .channel import ChannelSet, draw_channels
from .config import ConfigError, SystemConfig
from .learning import compute_beta, compute_chi, true_q

CAP_SLACK = 1e-9
BOUNDARY_TOL = 1e-6
SUBCASES = ("S1", "S2", "S3", "S4")


class InfeasibleProblemError(ValueError):
    """No schedule or power split satisfies the constraints."""


@dataclass(frozen=True)
class AllocationProblem:
    n: int
    p: float
    chi1: float
    beta2: float
    sigma_n2_2: float
    k1: int
    k2: int
    trials: int = 500
    seed: int = 0
    batch_override: EigenBatch | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.k1 < 1 or self.k1 > self.k2:
            raise ValueError(f"need 1 <= k1 <= k2 (k1={self.k1}, k2={self.k2})")
        if self.n < self.k1 + 2:
            raise InfeasibleProblemError(
                f"frame length N={self.n} leaves no room for N_l >= 1, N_t >= K1={self.k1}, N_d >= 1")
        if self.p <= 0 or self.chi1 <= 0 or self.sigma_n2_2 <= 0 or self.beta2 < 0:
            raise ValueError("P, chi1 and sigma_n2_2 must be positive and beta2 non-negative")

    @classmethod
    def from_config(cls, cfg: SystemConfig, channels: ChannelSet | None = None,
                    **overrides) -> "AllocationProblem":
        """Problem for ``cfg``; ``beta`` constants come from the ensemble ``Q`` of ``channels``.

        Without explicit channels one realization is drawn from the config seed.
        """
        if channels is None:
            channels = draw_channels(cfg, derive_rng(cfg.seed, CHANNEL_STREAM))
        beta2 = compute_beta(true_q(channels.g2, cfg.alpha, cfg.sigma_s2), cfg.sigma_n2_2, cfg.mp)
        if cfg.chi1 is not None:
            chi1 = cfg.chi1
        else:
            beta1 = compute_beta(true_q(channels.g1, cfg.alpha, cfg.sigma_s2), cfg.sigma_n1_2, cfg.mp)
            chi1 = compute_chi(cfg.zeta, cfg.alpha, cfg.sigma_s2, beta1)
        kwargs = dict(n=cfg.n_frame, p=cfg.power_total, chi1=chi1, beta2=beta2,
                      sigma_n2_2=cfg.sigma_n2_2, k1=cfg.k1, k2=cfg.k2,
                      trials=cfg.trials, seed=cfg.seed)
        kwargs.update(overrides)
        return cls(**kwargs)

    def gamma2(self, n_l):
        return self.beta2 / np.asarray(n_l, dtype=float) + self.sigma_n2_2

    def cap(self, n_l):
        """Per-symbol interference cap ``chi1 N_l`` shared by training and data."""
        return self.chi1 * np.asarray(n_l, dtype=float)

    @cached_property
    def batch(self) -> EigenBatch:
        """Shared eigenvalue draws used for every capacity evaluation of this problem."""
        if self.batch_override is not None:
            return self.batch_override
        return EigenBatch.draw(self.k1, self.k2, self.trials, derive_rng(self.seed, BATCH_STREAM))

    def with_chi1(self, chi1: float) -> "AllocationProblem":
        return AllocationProblem(self.n, self.p, chi1, self.beta2, self.sigma_n2_2, self.k1,
                                 self.k2, self.trials, self.seed, batch_override=self.batch)


@dataclass(frozen=True)
class PowerSolution:
    rho_t: float
    rho_d: float
    subcase: str
    rho_eff: float


@dataclass(frozen=True)
class TimeSolution:
    n_l: int
    n_t: int
    n_d: int
    power: PowerSolution
    c_al: float

    def as_dict(self) -> dict[str, object]:
        return {
            "n_l": self.n_l, "n_t": self.n_t, "n_d": self.n_d,
            "rho_t": self.power.rho_t, "rho_d": self.power.rho_d,
            "subcase": self.power.subcase, "rho_eff": self.power.rho_eff,
            "c_al": self.c_al,
        }


def in_tl(n_l, prob: AllocationProblem):
    """True where both interference caps can be met without exhausting the budget."""
    out = prob.chi1 * np.asarray(n_l, dtype=float) * (prob.n - np.asarray(n_l, dtype=float)) <= prob.p
    return bool(out) if np.ndim(out) == 0 else out


def tl_interval(prob: AllocationProblem) -> tuple[float, float]:
    """Roots of ``chi1 x (N - x) = P``; ``N_l`` lies outside ``T_l`` strictly between them.

    Returns ``(nan, nan)`` when every ``N_l`` belongs to ``T_l``.
    """
    disc = prob.n ** 2 - 4.0 * prob.p / prob.chi1
    if disc < 0:
        return math.nan, math.nan
    root = math.sqrt(disc)
    return (prob.n - root) / 2.0, (prob.n + root) / 2.0


def power_case1(n_l, n_t, prob: AllocationProblem) -> PowerSolution:
    if not in_tl(n_l, prob):
        raise ValueError(f"N_l={n_l} is not in T_l; both caps cannot bind")
    cap = float(prob.cap(n_l))
    rho_eff = effective_snr(cap, cap, n_t, float(prob.gamma2(n_l)), prob.k1)
    return PowerSolution(rho_t=cap, rho_d=cap, subcase="S1", rho_eff=rho_eff)


def _prime_split(n_l, n_t, prob: AllocationProblem):
    """Budget fractions of data and training at the uncapped optimum.

    With ``r = sqrt(1 - 1/c)`` the data share is ``1/(1+r)`` and the training
    share ``r/(1+r)``; this single expression covers ``N_d`` above, at and
    below ``K1`` and avoids the cancellation in ``c - sqrt(c(c-1))``.
    """
    n_t = np.asarray(n_t, dtype=float)
    n_d = prob.n - np.asarray(n_l, dtype=float) - n_t
    g = prob.gamma2(n_l)
    inv_c = (n_d - prob.k1) * prob.p / ((prob.p + g * prob.k1) * n_d)
    r = np.sqrt(1.0 - inv_c)
    return 1.0 / (1.0 + r), r / (1.0 + r), n_d, g


def rho_primes(n_l, n_t, prob: AllocationProblem):
    """Uncapped optimal ``(rho_d', rho_t', rho_eff')`` with the budget fully spent."""
    data_share, train_share, n_d, g = _prime_split(n_l, n_t, prob)
    if np.any(n_d < 1) or np.any(np.asarray(n_t) < prob.k1):
        raise ValueError("need N_d >= 1 and N_t >= K1")
    rho_d = prob.p * data_share / n_d
    rho_t = prob.p * train_share / np.asarray(n_t, dtype=float)
    rho_eff = effective_snr(rho_d, rho_t, n_t, g, prob.k1)
    if np.ndim(rho_d) == 0:
        return float(rho_d), float(rho_t), float(rho_eff)
    return rho_d, rho_t, rho_eff


def power_arrays(n_l: int, n_t, prob: AllocationProblem):
    """Vectorized optimal power split over an array of ``N_t`` at fixed ``N_l``.

    Returns ``(rho_t, rho_d, rho_eff, subcase_index)`` with subcase index 0..3
    for S1..S4.
    """
    n_t = np.atleast_1d(np.asarray(n_t, dtype=float))
    n_d = prob.n - n_l - n_t
    if np.any(n_d < 1) or np.any(n_t < prob.k1):
        raise InfeasibleProblemError(f"schedule outside N_t >= K1, N_d >= 1 at N_l={n_l}")
    g = float(prob.gamma2(n_l))
    cap = float(prob.cap(n_l))
    if in_tl(n_l, prob):
        rho_t = np.full_like(n_t, cap)
        rho_d = np.full_like(n_t, cap)
        case = np.zeros(n_t.shape, dtype=int)
    else:
        rho_d_p, rho_t_p, _ = rho_primes(n_l, n_t, prob)
        rho_d_p = np.atleast_1d(rho_d_p)
        rho_t_p = np.atleast_1d(rho_t_p)
        s2 = rho_t_p >= cap - CAP_SLACK
        s3 = ~s2 & (rho_d_p >= cap - CAP_SLACK)
        rho_t = np.where(s2, cap, np.where(s3, (prob.p - cap * n_d) / n_t, rho_t_p))
        rho_d = np.where(s2, (prob.p - cap * n_t) / n_d, np.where(s3, cap, rho_d_p))
        if np.any(rho_t < 0) or np.any(rho_d < 0):
            raise InfeasibleProblemError(
                f"capped stage exhausts the budget at N_l={n_l}; no power left for the other stage")
        case = np.where(s2, 1, np.where(s3, 2, 3))
    rho_eff = effective_snr(rho_d, rho_t, n_t, g, prob.k1)
    return rho_t, rho_d, np.atleast_1d(rho_eff), case


def optimize_power(n_l, n_t, prob: AllocationProblem) -> PowerSolution:
    """Closed-form effective-SNR-maximizing ``(rho_t, rho_d)`` for one schedule."""
    rho_t, rho_d, rho_eff, case = power_arrays(n_l, [n_t], prob)
    return PowerSolution(rho_t=float(rho_t[0]), rho_d=float(rho_d[0]),
                         subcase=SUBCASES[case[0]], rho_eff=float(rho_eff[0]))


def _bisect(f, lo: float, hi: float, tol: float = BOUNDARY_TOL) -> float:
    """Root of a function with ``f(lo) >= 0 > f(hi)``."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def boundary_n1(n_l, prob: AllocationProblem) -> float:
    """Training length where the uncapped training power meets the cap (end of S2)."""
    cap = float(prob.cap(n_l))
    lo, hi = float(prob.k1), float(prob.n - n_l - 1)

    def excess(n_t):
        return rho_primes(n_l, n_t, prob)[1] - cap

    if excess(lo) < 0:
        return lo
    if excess(hi) >= 0:
        return hi
    return _bisect(excess, lo, hi)


def boundary_n2(n_l, prob: AllocationProblem) -> float:
    """Data length where the uncapped data power meets the cap (S3 is ``N_d <= N2``)."""
    cap = float(prob.cap(n_l))
    lo, hi = 1.0, float(prob.n - n_l - prob.k1)

    def excess(n_d):
        return rho_primes(n_l, prob.n - n_l - n_d, prob)[0] - cap

    if excess(lo) < 0:
        return lo
    if excess(hi) >= 0:
        return hi
    return _bisect(excess, lo, hi)


def c_al_values(n_l: int, n_t, prob: AllocationProblem) -> np.ndarray:
    """Frame-averaged bound ``(N_d/N) C_L2`` on the shared batch, over an array of ``N_t``."""
    n_t = np.atleast_1d(np.asarray(n_t))
    _, _, rho_eff, _ = power_arrays(n_l, n_t, prob)
    n_d = prob.n - n_l - n_t
    return n_d / prob.n * prob.batch.mean_g(rho_eff)


def c_al(n_l: int, n_t: int, prob: AllocationProblem) -> float:
    return float(c_al_values(n_l, [n_t], prob)[0])


def _solution(n_l: int, n_t: int, value: float, prob: AllocationProblem) -> TimeSolution:
    return TimeSolution(n_l=int(n_l), n_t=int(n_t), n_d=int(prob.n - n_l - n_t),
                        power=optimize_power(n_l, n_t, prob), c_al=float(value))


def _golden_integer_max(f, lo: int, hi: int, polish: int = 2) -> int:
    """Argmax of a unimodal function on ``lo..hi`` (smallest index on ties)."""
    cache: dict[int, float] = {}

    def val(i):
        if i not in cache:
            cache[i] = f(i)
        return cache[i]

    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    while b - a > 3:
        c = int(round(b - inv_phi * (b - a)))
        d = int(round(a + inv_phi * (b - a)))
        if c >= d:
            d = c + 1
        if val(c) >= val(d):
            b = d
        else:
            a = c
    cand = range(max(lo, a - polish), min(hi, b + polish) + 1)
    return max(cand, key=lambda i: (val(i), -i))


def _best_over(n_l: int, candidates: np.ndarray, prob: AllocationProblem) -> tuple[int, float]:
    vals = c_al_values(n_l, candidates, prob)
    i = int(np.argmax(vals))
    return int(candidates[i]), float(vals[i])


def worker_count() -> int:
    """Worker cap from ``CRSIM_THREADS`` (default 1, i.e. serial)."""
    raw = os.environ.get("CRSIM_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"CRSIM_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def _map_nl(fn, n_ls):
    workers = min(worker_count(), len(n_ls))
    if workers <= 1:
        return [fn(n_l) for n_l in n_ls]
    # numpy releases the GIL in the batch kernels; the batch itself is read-only
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, n_ls))


def _reduce(results) -> tuple[float, int, int]:
    """Deterministic argmax: strict improvement only, so the smallest N_l wins ties."""
    best = None
    for value, n_l, n_t in results:
        if best is None or value > best[0]:
            best = (value, n_l, n_t)
    if best is None:
        raise InfeasibleProblemError("no feasible (N_l, N_t) schedule")
    return best


def optimize_time(prob: AllocationProblem, exhaustive: bool = False) -> TimeSolution:
    """Best integer schedule ``(N_l, N_t)`` and its power split.

    For ``N_l`` in ``T_l`` the bound is concave in ``N_t`` and a golden-section
    search with a small exhaustive polish is used. Otherwise only the S2
    stretch ``[K1, ceil(N1)]`` is scanned, which also covers the left edge of
    S4 where that subcase peaks; S3 never beats S4. ``exhaustive=True`` scans
    every ``N_t`` instead. Ties go to the smallest ``N_l``, then ``N_t``.
    """
    prob.batch  # materialize once before any worker touches it

    def inner(n_l):
        hi = prob.n - n_l - 1
        if exhaustive:
            n_t, value = _best_over(n_l, np.arange(prob.k1, hi + 1), prob)
        elif in_tl(n_l, prob):
            n_t = _golden_integer_max(lambda t: c_al(n_l, t, prob), prob.k1, hi)
            value = c_al(n_l, n_t, prob)
        else:
            top = min(hi, int(math.ceil(boundary_n1(n_l, prob))))
            n_t, value = _best_over(n_l, np.arange(prob.k1, top + 1), prob)
        return value, n_l, n_t

    value, n_l, n_t = _reduce(_map_nl(inner, list(range(1, prob.n - prob.k1))))
    return _solution(n_l, n_t, value, prob)


def exhaustive_search(prob: AllocationProblem) -> TimeSolution:
    """Brute-force optimum over every feasible integer schedule."""
    return optimize_time(prob, exhaustive=True)


def equal_power_values(n_l: int, n_t, prob: AllocationProblem):
    """Bound under ``rho_t = rho_d = min(chi1 N_l, P / (N - N_l))``; returns ``(rho, rho_eff, c_al)``."""
    n_t = np.atleast_1d(np.asarray(n_t))
    rho = min(float(prob.cap(n_l)), prob.p / (prob.n - n_l))
    rho_eff = np.atleast_1d(effective_snr(rho, rho, n_t.astype(float), float(prob.gamma2(n_l)), prob.k1))
    n_d = prob.n - n_l - n_t
    return rho, rho_eff, n_d / prob.n * prob.batch.mean_g(rho_eff)


def equal_power_baseline(prob: AllocationProblem) -> TimeSolution:
    """Best schedule when training and data use the same per-symbol power (exhaustive)."""
    prob.batch

    def inner(n_l):
        n_t = np.arange(prob.k1, prob.n - n_l)
        _, _, vals = equal_power_values(n_l, n_t, prob)
        i = int(np.argmax(vals))
        return float(vals[i]), n_l, int(n_t[i])

    value, n_l, n_t = _reduce(_map_nl(inner, list(range(1, prob.n - prob.k1))))
    rho, rho_eff, _ = equal_power_values(n_l, [n_t], prob)
    power = PowerSolution(rho_t=rho, rho_d=rho, subcase="equal", rho_eff=float(rho_eff[0]))
    return TimeSolution(n_l=n_l, n_t=n_t, n_d=prob.n - n_l - n_t, power=power, c_al=value)
