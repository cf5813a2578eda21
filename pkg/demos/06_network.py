# %% [markdown]
# # Over TCP
#
# Two peers exchange length-prefixed frames: HELLO with a nonce, then
# PACKAGE frames carrying ten bits and a sequence number, until both have
# synchronized. The command line does the same thing:
#
#     tpmauth peer --listen 127.0.0.1:9000 --config shared.conf
#     tpmauth peer --connect 127.0.0.1:9000 --config shared.conf

# %%
import socket
import threading

from tpmauth import PeerConfig, make_session_config, run_peer
from tpmauth.experiments import pair_configs

cfg_a, cfg_b = pair_configs(2024, "tcp-demo", 0, make_session_config())
srv = socket.create_server(("127.0.0.1", 0))
port = srv.getsockname()[1]
box = {}
t = threading.Thread(target=lambda: box.setdefault(
    "r", run_peer(PeerConfig("responder", "127.0.0.1", port, cfg_b, key_bits=256), srv)))
t.start()
init = run_peer(PeerConfig("initiator", "127.0.0.1", port, cfg_a, key_bits=256))
t.join()
srv.close()
resp = box["r"]
print("initiator:", init.exit_code.name, init.sync_iteration, init.key_hex)
print("responder:", resp.exit_code.name, resp.sync_iteration, resp.key_hex)
