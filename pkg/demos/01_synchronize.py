# %% [markdown]
# # Two machines, one secret input stream
#
# Two Tree Parity Machines start from independent random weights. Both
# expand a shared 64-bit seed into the same input vectors, trade output bits
# ten at a time, and learn only when their outputs agree. After enough
# agreements in a row they declare themselves synchronized.

# %%
import numpy as np

from tpmauth import make_session_config, run_honest_pair, weight_distance
from tpmauth.experiments import pair_configs
from tpmauth.protocol import distance_trace

base = make_session_config()
cfg_a, cfg_b = pair_configs(2024, "demo", 0, base)
print("K, N, L =", base.params.shape[0], base.params.shape[1], base.params.L)
print("package size", base.b, "| agreements needed", base.t_min)

# %%
tr = run_honest_pair(cfg_a, cfg_b, trace=True)
print("status:", tr.status_a, tr.status_b)
print("weights first equal at step", tr.weights_equal_at)
print("confirming run started at", tr.sync_start, "and finished at", tr.sync_iteration)
print("distance now", weight_distance(tr.session_a.tpm, tr.session_b.tpm))

# %% [markdown]
# The normalised weight distance falls from about 0.4 to 0. Printing it every
# 25 steps:

# %%
d = distance_trace(tr)
for t, dist in d[::25]:
    print(f"{int(t):5d}  {dist:.3f}  " + "#" * int(60 * dist))
