# %% [markdown]
# # Thermal bath
#
# Finite temperature enters through an ensemble of thermally displaced
# initial fields.  The channel is averaged over N_T samples, and the spread of
# the per-sample fidelities gives a standard error on the mean.

# %%
import math
import sys

import numpy as np

from mcegate.cli import run_channel
from _common import load, save

n_t = int(sys.argv[1]) if len(sys.argv) > 1 else 100
threads = int(sys.argv[2]) if len(sys.argv) > 2 else 1

rows = []
for beta in (math.inf, 10.0, 5.0):
    res = run_channel(load("thermal.cfg", **{"temperature.beta": beta, "temperature.N_T": n_t}), threads)
    save(f"thermal_beta_{beta:g}.csv", res.csv)
    k = int(np.argmax(res.fidelity))
    se = 0.0 if res.fidelity_stderr is None else res.fidelity_stderr[k]
    rows.append((beta, res.fidelity[k], se, res.times[k]))

# %% [markdown]
# Lower temperature should always win, by more than the sampling error.

# %%
for beta, f, se, t in rows:
    print(f"beta = {beta:>4g}   peak F = {f:.4f} +- {se:.4f}   at g1*t = {t:.2f}")
