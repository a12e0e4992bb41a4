"""Figure-class experiments producing :class:`~crsim.tableio.ResultTable` objects.

Every experiment is a pure function of its config and seed. Random streams
are keyed by position in the sweep (not by execution order) through
:func:`crsim._rng.derive_rng`, and one channel realization drawn from the
channel stream is held fixed for the whole experiment.
"""
from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from ._rng import CHANNEL_STREAM, TRIAL_STREAM, derive_rng
from .allocation import (AllocationProblem, InfeasibleProblemError, TimeSolution, c_al_values, equal_power_baseline,
                         optimize_time, power_arrays)
from .capacity import mean_bit_loading_rate
from .channel import ChannelSet, cscg, draw_channels
from .config import ConfigError, SystemConfig, db_to_linear, format_config, linear_to_db
from .learning import beta_from_covariances, compute_beta, hermitian_part, learn_batch, true_q
from .tableio import ResultTable

SMOKE_TRIALS = 500
FULL_TRIALS = 10_000
CHUNK = 1000

IT_N_L = (100.0, 200.0, 400.0, 800.0)
IT_SIGMA_DB = (0.0, 20.0)
BETA_N_L = (10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0)
BETA_PATHS = 100
POWER_N_L = 200
CHI_GRID = tuple(np.logspace(-2.0, 3.0, 20))
NL_STEP = 10
NT_STEP = 5
BIT_GAP_DB = 3.0
BIT_GRANULARITY = 0.5


class UsageError(ValueError):
    """Unknown experiment or malformed experiment request."""


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    config: SystemConfig = field(default_factory=SystemConfig)
    sweep: tuple[str, tuple[float, ...]] | None = None
    trials: int | None = None
    seed: int | None = None
    out_dir: str = "."
    deterministic: bool = False
    nl_step: int = NL_STEP
    nt_step: int = NT_STEP

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise UsageError(f"unknown experiment {self.name!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.trials is not None and self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.seed is not None and self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.nl_step < 1 or self.nt_step < 1:
            raise ConfigError("grid steps must be >= 1")
        if self.sweep is not None:
            values = np.asarray(self.sweep[1], dtype=float)
            if values.size == 0 or np.any(np.diff(values) <= 0):
                raise ConfigError(f"sweep values for {self.sweep[0]!r} must be strictly increasing")

    def resolved_config(self) -> SystemConfig:
        changes = {}
        if self.trials is not None:
            changes["trials"] = self.trials
        if self.seed is not None:
            changes["seed"] = self.seed
        return self.config.replace(**changes) if changes else self.config

    def sweep_values(self, name: str, default) -> tuple[float, ...]:
        if self.sweep is None:
            return tuple(default)
        if self.sweep[0] != name:
            raise ConfigError(f"experiment {self.name!r} sweeps {name!r}, not {self.sweep[0]!r}")
        return tuple(float(v) for v in self.sweep[1])


def fixed_channels(cfg: SystemConfig) -> ChannelSet:
    return draw_channels(cfg, derive_rng(cfg.seed, CHANNEL_STREAM))


def true_beta(g: np.ndarray, cfg: SystemConfig, noise_power: float) -> float:
    return compute_beta(true_q(g, cfg.alpha, cfg.sigma_s2), noise_power, cfg.mp)


def _metadata(spec_name: str, cfg: SystemConfig, deterministic: bool, **extra) -> dict[str, str]:
    meta = {
        "experiment": spec_name,
        "crsim_version": __version__,
        "seed": str(cfg.seed),
        "trials": str(cfg.trials),
        "config": ";".join(format_config(cfg).splitlines()),
    }
    meta.update({k: str(v) for k, v in extra.items()})
    if not deterministic:
        meta["created"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return meta


# --- learning-stage experiments ---------------------------------------------

def mc_data_it(g1: np.ndarray, cfg: SystemConfig, n_l: int, trials: int, seed: int,
               key: tuple[int, ...], rd_trace: float = 1.0) -> float:
    """Mean IT at the PR from isotropic CR data of power ``rd_trace`` beamformed on learned subspaces.

    The expectation over data symbols is taken analytically,
    ``(rd/K1) ||G1^T U1_hat*||^2``; learning noise is sampled.
    """
    total = 0.0
    k1 = cfg.k1
    for c, start in enumerate(range(0, trials, CHUNK)):
        size = min(CHUNK, trials - start)
        rng = derive_rng(seed, TRIAL_STREAM, *key, c)
        u_hat, _ = learn_batch(g1, cfg.alpha, cfg.sigma_s2, cfg.sigma_n1_2, cfg.mp, n_l, size, rng)
        leak = np.abs(g1.T @ np.conj(u_hat)) ** 2
        total += float(leak.sum()) * rd_trace / k1
    return total / trials


def run_it_vs_learning(cfg: SystemConfig, n_l_grid=IT_N_L, sigma_db=IT_SIGMA_DB,
                       deterministic: bool = False) -> ResultTable:
    """Inverse normalized IT ``1/(sigma_s^2 I_d1)`` versus learning time: theory and Monte Carlo."""
    g1 = fixed_channels(cfg).g1
    rows = []
    for i, sdb in enumerate(sigma_db):
        c = cfg.replace(sigma_s2=db_to_linear(sdb))
        beta1 = true_beta(g1, c, c.sigma_n1_2)
        for j, n_l in enumerate(n_l_grid):
            theory_it = beta1 / (c.alpha * c.sigma_s2 * n_l)
            it = mc_data_it(g1, c, int(n_l), cfg.trials, cfg.seed, (i, j))
            rows.append((sdb, n_l, 1.0 / (c.sigma_s2 * theory_it), 1.0 / (c.sigma_s2 * it), beta1))
    data = np.array(rows)
    cols = ("sigma_s_db", "n_l", "inv_it_theory", "inv_it_mc", "beta1_true")
    return ResultTable({n: data[:, k] for k, n in enumerate(cols)},
                       _metadata("it-vs-learning", cfg, deterministic, rd_trace=1.0))


def beta_paths(cfg: SystemConfig, n_l_grid=BETA_N_L, paths: int = BETA_PATHS,
               g1: np.ndarray | None = None) -> tuple[float, np.ndarray]:
    """Running estimates of ``beta1`` along independent learning paths.

    Path ``p`` is one growing stream of PR samples; entry ``[p, j]`` is the
    estimate from its first ``n_l_grid[j]`` samples. Returns the true
    ``beta1`` and the ``(paths, len(grid))`` estimate matrix.
    """
    if g1 is None:
        g1 = fixed_channels(cfg).g1
    grid = np.asarray(n_l_grid, dtype=int)
    if np.any(grid < 1) or np.any(np.diff(grid) <= 0):
        raise ConfigError("learning-time grid must be positive and strictly increasing")
    n_max = int(grid[-1])
    out = np.empty((paths, len(grid)))
    for p in range(paths):
        rng = derive_rng(cfg.seed, TRIAL_STREAM, p)
        active = rng.random(n_max) < cfg.alpha
        s = cscg(rng, (cfg.mp, n_max), cfg.sigma_s2) * active
        y = g1 @ s + cscg(rng, (g1.shape[0], n_max), cfg.sigma_n1_2)
        outer = np.einsum("in,jn->nij", y, np.conj(y))
        cum = np.cumsum(outer, axis=0)[grid - 1] / grid[:, None, None]
        _, out[p] = beta_from_covariances(hermitian_part(cum), cfg.sigma_n1_2, cfg.mp)
    return true_beta(g1, cfg, cfg.sigma_n1_2), out


def run_beta_vs_learning(cfg: SystemConfig, n_l_grid=BETA_N_L, paths: int = BETA_PATHS,
                         deterministic: bool = False) -> ResultTable:
    beta1, est = beta_paths(cfg, n_l_grid, paths)
    rel = np.abs(est - beta1) / beta1
    cols = {
        "n_l": np.asarray(n_l_grid, dtype=float),
        "beta1_true": np.full(len(n_l_grid), beta1),
        "beta1_mean": est.mean(axis=0),
        "beta1_p05": np.quantile(est, 0.05, axis=0),
        "beta1_p95": np.quantile(est, 0.95, axis=0),
        "frac_within_10pct": (rel < 0.10).mean(axis=0),
    }
    return ResultTable(cols, _metadata("beta-vs-learning", cfg, deterministic, paths=paths,
                                       sigma_s_db=linear_to_db(cfg.sigma_s2)))


# --- allocation experiments --------------------------------------------------

def run_power_vs_nt(cfg: SystemConfig, n_l: int = POWER_N_L, deterministic: bool = False,
                    prob: AllocationProblem | None = None) -> ResultTable:
    """Optimal per-symbol and total stage powers versus training length at fixed ``N_l``."""
    prob = prob or AllocationProblem.from_config(cfg)
    n_t = np.arange(prob.k1, prob.n - n_l)
    if n_l < 1 or n_t.size == 0:
        raise InfeasibleProblemError(f"N_l={n_l} leaves no room for N_t >= K1 and N_d >= 1")
    rho_t, rho_d, rho_eff, case = power_arrays(n_l, n_t, prob)
    n_d = prob.n - n_l - n_t
    cols = {
        "n_t": n_t, "n_d": n_d, "rho_t": rho_t, "rho_d": rho_d,
        "p_t": rho_t * n_t, "p_d": rho_d * n_d, "rho_eff": rho_eff, "subcase": case + 1,
    }
    return ResultTable(cols, _metadata("power-vs-nt", cfg, deterministic, n_l=n_l,
                                       beta2=repr(prob.beta2), chi1=repr(prob.chi1)))


def run_surface(cfg: SystemConfig, nl_step: int = NL_STEP, nt_step: int = NT_STEP,
                deterministic: bool = False, prob: AllocationProblem | None = None) -> ResultTable:
    """``C_AL`` with optimal power on an integer ``(N_l, N_t)`` grid."""
    prob = prob or AllocationProblem.from_config(cfg)
    rows = []
    for n_l in range(nl_step, prob.n - prob.k1, nl_step):
        n_t = np.arange(prob.k1, prob.n - n_l, nt_step)
        vals = c_al_values(n_l, n_t, prob)
        rows.extend(zip(np.full(len(n_t), n_l), n_t, vals))
    data = np.array(rows, dtype=float)
    return ResultTable({"n_l": data[:, 0], "n_t": data[:, 1], "c_al": data[:, 2]},
                       _metadata("cal-surface", cfg, deterministic, nl_step=nl_step,
                                 nt_step=nt_step, beta2=repr(prob.beta2)))


@dataclass(frozen=True)
class ChiPoint:
    chi1: float
    optimal: TimeSolution
    equal_power: TimeSolution | None
    bitloaded: float


def chi_sweep(prob: AllocationProblem, chi_grid=CHI_GRID, baselines: bool = True) -> list[ChiPoint]:
    """Optimum, equal-power baseline and bit-loaded rate over ``chi1``, on one shared batch.

    The bit-loaded rate uses the equal-power schedule and powers.
    """
    out = []
    for chi1 in chi_grid:
        p = prob.with_chi1(float(chi1))
        opt = optimize_time(p)
        eq, bits = None, float("nan")
        if baselines:
            eq = equal_power_baseline(p)
            rate = mean_bit_loading_rate(p.batch, eq.power.rho_eff, BIT_GAP_DB, BIT_GRANULARITY)
            bits = eq.n_d / p.n * rate
        out.append(ChiPoint(float(chi1), opt, eq, bits))
    return out


def run_chi_sweeps(cfg: SystemConfig, chi_grid=CHI_GRID, baselines: bool = True,
                   deterministic: bool = False, prob: AllocationProblem | None = None,
                   name: str = "capacity-vs-chi") -> ResultTable:
    prob = prob or AllocationProblem.from_config(cfg)
    pts = chi_sweep(prob, chi_grid, baselines)
    cols = {
        "chi1": [p.chi1 for p in pts],
        "n_l_opt": [p.optimal.n_l for p in pts],
        "n_t_opt": [p.optimal.n_t for p in pts],
        "rho_t_opt": [p.optimal.power.rho_t for p in pts],
        "rho_d_opt": [p.optimal.power.rho_d for p in pts],
        "c_al_opt": [p.optimal.c_al for p in pts],
    }
    if baselines:
        cols["c_al_equal_power"] = [p.equal_power.c_al for p in pts]
        cols["c_al_bitloaded"] = [p.bitloaded for p in pts]
    meta = _metadata(name, cfg, deterministic, beta2=repr(prob.beta2))
    if baselines:
        meta.update(bit_gap_db=repr(BIT_GAP_DB), bit_granularity=repr(BIT_GRANULARITY))
    return ResultTable(cols, meta)


def run_optimize(cfg: SystemConfig, deterministic: bool = False) -> ResultTable:
    prob = AllocationProblem.from_config(cfg)
    sol = optimize_time(prob)
    d = sol.as_dict()
    d["subcase"] = ("S1", "S2", "S3", "S4").index(d["subcase"]) + 1
    return ResultTable({k: [float(v)] for k, v in d.items()},
                       _metadata("optimize", cfg, deterministic, beta2=repr(prob.beta2),
                                 chi1=repr(prob.chi1)))


def format_solution(sol: TimeSolution) -> str:
    return "\n".join(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}"
                     for k, v in sol.as_dict().items()) + "\n"


EXPERIMENTS = (
    "it-vs-learning", "beta-vs-learning", "power-vs-nt", "cal-surface",
    "optimal-time-vs-chi", "capacity-vs-chi", "optimize",
)


def run(spec: ExperimentSpec) -> ResultTable:
    """Dispatch ``spec`` to its experiment; deterministic per (spec, seed)."""
    cfg = spec.resolved_config()
    det = spec.deterministic
    name = spec.name
    if name == "it-vs-learning":
        return run_it_vs_learning(cfg, spec.sweep_values("n_l", IT_N_L), deterministic=det)
    if name == "beta-vs-learning":
        return run_beta_vs_learning(cfg, spec.sweep_values("n_l", BETA_N_L), deterministic=det)
    if name == "power-vs-nt":
        (n_l,) = spec.sweep_values("n_l", (POWER_N_L,))[:1]
        return run_power_vs_nt(cfg, int(n_l), deterministic=det)
    if name == "cal-surface":
        return run_surface(cfg, spec.nl_step, spec.nt_step, deterministic=det)
    if name == "optimal-time-vs-chi":
        return run_chi_sweeps(cfg, spec.sweep_values("chi1", CHI_GRID), baselines=False,
                              deterministic=det, name=name)
    if name == "capacity-vs-chi":
        return run_chi_sweeps(cfg, spec.sweep_values("chi1", CHI_GRID), deterministic=det, name=name)
    if name == "optimize":
        return run_optimize(cfg, deterministic=det)
    raise UsageError(f"unknown experiment {name!r}")
