# %% [markdown]
# # Which coupling asymmetry gives the best CZ gate?
#
# Ten modes, qubit 1 coupled with g1 = 1 and qubit 2 with a swept g2.  For
# each value we record the peak Choi fidelity against CZ.  Expect roughly ten
# seconds per point at N = 201; use ``--threads`` on the CLI to parallelize.

# %%
import sys

import numpy as np

from mcegate.cli import run_sweep
from _common import load, save

threads = int(sys.argv[1]) if len(sys.argv) > 1 else 1
res = run_sweep(load("coupling_sweep.cfg"), threads)
save("coupling_sweep.csv", res.csv)
save("coupling_sweep_traces.csv", res.traces_csv)

# %%
for g2, f, t in zip(res.values, res.peak_F, res.peak_t):
    print(f"g2 = {g2:.1f}   peak F = {f:.4f}   at g1*t = {t:.2f}")
print("best g2:", res.values[int(np.argmax(res.peak_F))])
