# %% [markdown]
# # Zero-knowledge authentication inside the bit stream
#
# Input vectors whose last four components read 0101 are set aside as
# challenges. Instead of the machine output, each party sends the parity of
# the challenge input. Only a party holding the secret seed can compute it.
# Fourteen matching challenges give confidence 1 - 2^-14 >= 0.9999, and a
# single mismatch aborts the session.

# %%
from dataclasses import replace

from tpmauth import Status, derive_alpha, impostor_trials, make_session_config, run_honest_pair
from tpmauth.experiments import pair_configs

for eps in (0.5, 0.9, 0.99, 0.9999):
    print(f"confidence {eps}: {derive_alpha(eps)} challenges")

# %%
cfg_a, cfg_b = pair_configs(2024, "auth-demo", 0, make_session_config())
tr = run_honest_pair(cfg_a, cfg_b)
print("honest pair:", tr.status_a, "| challenges at steps", tr.session_a.auth_steps)

# %% [markdown]
# An impostor who guesses the seed fails on the first challenge half the
# time, so it gets through all fourteen about once in 16384 attempts.

# %%
wrong = replace(cfg_b, stream=replace(cfg_b.stream, seed=cfg_b.stream.seed ^ 0xBEEF))
tr = run_honest_pair(cfg_a, wrong)
print("impostor:", tr.status_a, "after", tr.session_a.t, "steps,",
      tr.session_a.auth_passed, "challenges passed")

res = impostor_trials(make_session_config(epsilon=0.9), 20_000, master_seed=1)
print(f"alpha={res.alpha}: {res.accepted}/20000 impostors accepted "
      f"(expected about {20_000 * 2.0 ** -res.alpha:.0f})")
assert tr.status_a == Status.REJECTED
