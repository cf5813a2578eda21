# %% [markdown]
# # Noisy channel
#
# One party flips each outgoing synchronisation bit with probability p and
# learns with the flipped bit as its own output. Synchronisation still
# happens, it just takes longer.

# %%
from dataclasses import replace

import numpy as np

from tpmauth import make_session_config, run_honest_pair
from tpmauth.experiments import pair_configs

base = make_session_config(mode="secret_inputs_only", max_iterations=10_000)
for p in (0.0, 0.05, 0.1, 0.2):
    times = []
    for run in range(100):
        a, b = pair_configs(7, "noise-demo", run, base)
        tr = run_honest_pair(replace(a, noise_rate=p), b, stop="weights")
        times.append(np.nan if tr.weights_equal_at is None else tr.weights_equal_at)
    times = np.array(times, dtype=float)
    print(f"p={p:.2f}: {np.isfinite(times).mean():.0%} synchronized, mean {np.nanmean(times):.0f} steps")
