"""
Reproducible experiment tables
===============================

Each experiment returns a ResultTable that round-trips through CSV exactly.
The same tables come out of the ``crsim`` command, e.g.
``crsim power-vs-nt --deterministic --out results``.
"""

# %%
import tempfile
from pathlib import Path

from crsim import DEFAULT_CONFIG
from crsim.cli import main
from crsim.experiments import run_beta_vs_learning, run_power_vs_nt
from crsim.tableio import read_csv, write_csv

tab = run_beta_vs_learning(DEFAULT_CONFIG, paths=20, deterministic=True)
for row in zip(tab["n_l"], tab["beta1_mean"], tab["frac_within_10pct"]):
    print("N_l=%6.0f  mean beta1_hat=%.4f  within 10%%: %.2f" % row)

# %%
out = Path(tempfile.mkdtemp())
write_csv(run_power_vs_nt(DEFAULT_CONFIG, deterministic=True), out / "power.csv")
print(read_csv(out / "power.csv").metadata)

# %% the command-line route
main(["optimize", "--profile", "smoke", "--deterministic", "--out", str(out)])
