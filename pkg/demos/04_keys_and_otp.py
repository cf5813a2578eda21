# %% [markdown]
# # From synchronized weights to keys and pads
#
# Once synchronized, each party keeps stepping its machine on its own, using
# its own output as the peer bit. Both follow the same trajectory without
# sending anything, so every snapshot of the weights is shared key material.

# %%
import numpy as np

from tpmauth import TrajectoryWalker, derive_key, keystream_bytes, run_honest_pair, xor_bytes
from tpmauth import make_session_config
from tpmauth.experiments import pair_configs

tr = run_honest_pair(*pair_configs(2024, "key-demo", 0, make_session_config()))
wa = TrajectoryWalker.from_session(tr.session_a)
wb = TrajectoryWalker.from_session(tr.session_b)

ka, kb = derive_key(wa.copy(), 256), derive_key(wb.copy(), 256)
print("A:", ka.hex)
print("B:", kb.hex)
print("equal:", ka.hex == kb.hex)

# %% [markdown]
# A one-time pad is the same idea, carried on for as many bits as needed.
# Raw weight bits are not uniform, so the pad can be whitened with SHA-256.

# %%
message = b"attack at dawn, bring the synchronized weights"
pad_a = keystream_bytes(wa.copy(), len(message), whitened=True)
pad_b = keystream_bytes(wb.copy(), len(message), whitened=True)
cipher = xor_bytes(message, pad_a)
print(cipher.hex())
print(xor_bytes(cipher, pad_b))

raw = np.unpackbits(np.frombuffer(keystream_bytes(wa.copy(), 4096), np.uint8))
white = np.unpackbits(np.frombuffer(keystream_bytes(wa.copy(), 4096, whitened=True), np.uint8))
print(f"fraction of ones: raw {raw.mean():.3f}, whitened {white.mean():.3f}")
