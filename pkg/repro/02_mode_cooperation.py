# %% [markdown]
# # Several modes speed up the gate
#
# With M identical modes the qubits couple to one collective mode whose
# coupling grows like sqrt(M), so the fidelity peak should arrive sqrt(M)
# times earlier.

# %%
import math

import numpy as np

from mcegate.cli import run_channel
from _common import load, save

one = run_channel(load("single_mode.cfg", **{"time.t_max": 4.0, "time.output_stride": 1}))
three = run_channel(load("cooperation_m3.cfg"))
save("cooperation_m1.csv", one.csv)
save("cooperation_m3.csv", three.csv)

# %%
t1 = one.times[np.argmax(one.fidelity)]
t3 = three.times[np.argmax(three.fidelity)]
print(f"peak time M=1: {t1:.2f}  peak F {one.fidelity.max():.4f}")
print(f"peak time M=3: {t3:.2f}  peak F {three.fidelity.max():.4f}")
print(f"ratio {t3 / t1:.4f}, 1/sqrt(3) = {1 / math.sqrt(3):.4f}")
