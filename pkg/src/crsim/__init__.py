"""Learning-based multi-antenna cognitive radio link: simulation and power/time allocation."""
from __future__ import annotations

__version__ = "0.1.0"

from .allocation import (AllocationProblem, InfeasibleProblemError, PowerSolution,
                         TimeSolution, equal_power_baseline, optimize_power, optimize_time)
from .capacity import EigenBatch, c_l2, effective_snr, g_eval, waterfill
from .config import DEFAULT_CONFIG, ConfigError, SystemConfig, load_config, parse_config
from .tableio import ResultTable, read_csv, write_csv

__all__ = [
    "AllocationProblem", "ConfigError", "DEFAULT_CONFIG", "EigenBatch", "InfeasibleProblemError",
    "PowerSolution", "ResultTable", "SystemConfig", "TimeSolution", "c_l2", "effective_snr",
    "equal_power_baseline", "g_eval", "load_config", "optimize_power", "optimize_time",
    "parse_config", "read_csv", "waterfill", "write_csv",
]
