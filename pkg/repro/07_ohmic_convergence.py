# %% [markdown]
# # Ohmic bath at reduced size
#
# Discretizing an Ohmic spectral density with more modes should leave the
# early-time channel unchanged once M is large enough.  The basis size here
# is well below what a converged run would need; only the M trend matters.

# %%
import numpy as np

from mcegate.cli import run_bath, run_channel
from _common import load, save

traces = {}
for M in (25, 50):
    cfg = load("ohmic_scaled.cfg", **{"bath.M": M})
    save(f"ohmic_bath_M{M}.txt", run_bath(cfg))
    res = run_channel(cfg)
    save(f"ohmic_channel_M{M}.csv", res.csv)
    traces[M] = res

# %%
a, b = traces[25], traces[50]
print("  g1*t   F(M=25)   F(M=50)")
for t, f1, f2 in zip(a.times, a.fidelity, b.fidelity):
    print(f"  {t:4.1f}   {f1:.4f}    {f2:.4f}")
print(f"max |F(25) - F(50)| = {np.max(abs(a.fidelity - b.fidelity)):.4f}")
