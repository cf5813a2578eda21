# %% [markdown]
# # Attackers
#
# An eavesdropper sees every bit on the wire and runs its own machine. With
# public inputs it can sometimes follow along. With secret inputs it has to
# guess the stream, and a wrong guess leaves it at distance ~0.4 forever.
# A man in the middle must additionally answer the challenges.

# %%
from tpmauth import AttackScenario, make_session_config, run_eavesdropper, run_mitm
from tpmauth.tpm import TpmParams

zk = make_session_config()
for inputs in ("offset", "different", "wrong_seed"):
    rep = run_eavesdropper(AttackScenario("eavesdrop", inputs, 50, zk, master_seed=3))
    print(f"eavesdropper, {inputs:10s}: {rep.attacker_sync_count}/50 synced, "
          f"final distance {rep.mean_attacker_final_distance:.3f}")

# %% [markdown]
# With public inputs and a very small machine (L = 1) the eavesdropper wins
# now and then; this is the weakness that secret inputs remove.

# %%
weak = make_session_config(mode="secret_inputs_only", params=TpmParams(3, 101, 1))
rep = run_eavesdropper(AttackScenario("eavesdrop", "public", 200, weak, master_seed=3))
print(f"public inputs, L=1: {rep.attacker_sync_count}/200 eavesdroppers synced")

# %%
rep = run_mitm(AttackScenario("mitm", "wrong_seed", 2000, zk, master_seed=3))
print("man in the middle:", rep.summary())
base = make_session_config(mode="secret_inputs_only")
rep = run_mitm(AttackScenario("mitm", "public", 200, base, master_seed=3))
print("man in the middle vs public inputs:", rep.summary())
