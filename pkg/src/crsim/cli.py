"""Command-line entry point: ``crsim <experiment> [options]``.

Exit codes: 0 success, 2 config or usage error, 3 infeasible problem,
4 numeric failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .allocation import InfeasibleProblemError, worker_count
from .config import DEFAULT_CONFIG, ConfigError, load_config
from .experiments import (EXPERIMENTS, FULL_TRIALS, SMOKE_TRIALS, ExperimentSpec, UsageError,
                          run)
from .tableio import ResultTable, write_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4

_SWEEP_VAR = {
    "it-vs-learning": "n_l", "beta-vs-learning": "n_l", "power-vs-nt": "n_l",
    "optimal-time-vs-chi": "chi1", "capacity-vs-chi": "chi1",
}

# x column and y columns for the optional gnuplot script
_PLOTS = {
    "it-vs-learning": ("n_l", ("inv_it_theory", "inv_it_mc")),
    "beta-vs-learning": ("n_l", ("beta1_true", "beta1_mean", "beta1_p05", "beta1_p95")),
    "power-vs-nt": ("n_t", ("rho_t", "rho_d", "p_t", "p_d")),
    "optimal-time-vs-chi": ("chi1", ("n_l_opt", "n_t_opt")),
    "capacity-vs-chi": ("chi1", ("c_al_opt", "c_al_equal_power", "c_al_bitloaded")),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crsim",
                                description="Cognitive-radio learning/training/allocation experiments.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", type=Path, help="key=value config file (defaults to the built-in example)")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--trials", type=int, help="Monte Carlo trials (overrides profile and config)")
    p.add_argument("--profile", choices=("smoke", "full"),
                   help=f"trial budget preset: smoke={SMOKE_TRIALS}, full={FULL_TRIALS}")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--deterministic", action="store_true",
                   help="omit the timestamp so identical runs give byte-identical files")
    p.add_argument("--sweep", help="comma-separated values replacing the default sweep grid")
    p.add_argument("--nl-step", type=int, default=10, help="N_l step of the cal-surface grid")
    p.add_argument("--nt-step", type=int, default=5, help="N_t step of the cal-surface grid")
    p.add_argument("--plot", action="store_true", help="also write a gnuplot script next to the CSV")
    return p


def _parse_sweep(name: str, text: str | None):
    if text is None:
        return None
    var = _SWEEP_VAR.get(name)
    if var is None:
        raise ConfigError(f"experiment {name!r} has no sweep to override")
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"malformed --sweep value {text!r}") from None
    return var, values


def make_spec(args: argparse.Namespace) -> ExperimentSpec:
    cfg = load_config(args.config) if args.config else DEFAULT_CONFIG
    trials = args.trials
    if trials is None and args.profile:
        trials = SMOKE_TRIALS if args.profile == "smoke" else FULL_TRIALS
    return ExperimentSpec(name=args.experiment, config=cfg, sweep=_parse_sweep(args.experiment, args.sweep),
                          trials=trials, seed=args.seed, out_dir=str(args.out),
                          deterministic=args.deterministic, nl_step=args.nl_step, nt_step=args.nt_step)


def gnuplot_script(table: ResultTable, name: str, csv_name: str) -> str:
    lines = [
        'set datafile separator ","',
        "set key autotitle columnhead",
        f'set title "{name}"',
    ]
    if name == "cal-surface":
        lines += ['set xlabel "N_l"', 'set ylabel "N_t"', 'set zlabel "C_AL"',
                  f'splot "{csv_name}" using "n_l":"n_t":"c_al" with points pt 7 ps 0.3']
    elif name in _PLOTS:
        x, ys = _PLOTS[name]
        if x == "chi1":
            lines.append("set logscale x")
        lines.append(f'set xlabel "{x}"')
        parts = [f'"{csv_name}" using "{x}":"{y}" with linespoints' for y in ys if y in table.columns]
        lines.append("plot " + ", \\\n     ".join(parts))
    else:
        return ""
    return "\n".join(lines) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        worker_count()
        spec = make_spec(args)
        table = run(spec)
    except (ConfigError, UsageError) as exc:
        print(f"crsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleProblemError as exc:
        print(f"crsim: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
        print(f"crsim: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    out = Path(spec.out_dir)
    csv_path = out / f"{spec.name}.csv"
    write_csv(table, csv_path)
    if spec.name == "optimize":
        for key, col in table.columns.items():
            v = float(col[0])
            print(f"{key}={int(v)}" if key in ("n_l", "n_t", "n_d", "subcase") else f"{key}={v!r}")
    else:
        print(f"wrote {csv_path} ({table.n_rows} rows)")
    if args.plot:
        script = gnuplot_script(table, spec.name, csv_path.name)
        if script:
            (out / f"{spec.name}.gp").write_text(script)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
