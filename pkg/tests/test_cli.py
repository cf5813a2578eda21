import os
import socket
import subprocess
import sys
import time
from dataclasses import replace

import pytest

from tpmauth.cli import main
from tpmauth.config import dump_session_config, make_session_config
from tpmauth.experiments import pair_configs


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def write_configs(tmp_path, label, tamper=None):
    a, b = pair_configs(0, label, 0, make_session_config())
    if tamper:
        b = tamper(b)
    pa, pb = tmp_path / "a.conf", tmp_path / "b.conf"
    pa.write_text(dump_session_config(a))
    pb.write_text(dump_session_config(b))
    return pa, pb


def run_peers(tmp_path, pa, pb, *extra):
    port = free_port()
    cmd = [sys.executable, "-m", "tpmauth", "peer"]
    resp = subprocess.Popen(cmd + ["--listen", f"127.0.0.1:{port}", "--config", str(pb),
                                   "--out", str(tmp_path / "b.key"), *extra],
                            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    time.sleep(1.0)
    init = subprocess.run(cmd + ["--connect", f"127.0.0.1:{port}", "--config", str(pa), *extra],
                          capture_output=True, text=True, timeout=60)
    out, err = resp.communicate(timeout=60)
    return init, (resp.returncode, out, err)


def test_peer_processes_agree(tmp_path):
    pa, pb = write_configs(tmp_path, "cli")
    init, (code, out, err) = run_peers(tmp_path, pa, pb, "--key-bits", "1024")
    assert init.returncode == code == 0, (init.stderr, err)
    key = init.stdout.strip()
    assert len(key) == 256 and key == out.strip()
    assert (tmp_path / "b.key").read_bytes() == bytes.fromhex(key)
    assert "status=synchronized" in init.stderr


def test_peer_wrong_seed_exit_code(tmp_path):
    pa, pb = write_configs(tmp_path, "cli-wrong",
                           lambda c: replace(c, stream=replace(c.stream, seed=c.stream.seed ^ 3)))
    init, (code, out, _) = run_peers(tmp_path, pa, pb)
    assert init.returncode == code == 2
    assert init.stdout == out == ""


def test_peer_transport_error():
    assert main(["peer", "--connect", f"127.0.0.1:{free_port()}"]) == 1


def test_bad_endpoint():
    with pytest.raises(SystemExit):
        main(["peer", "--connect", "nohostport"])


def test_experiment_and_summarize(tmp_path, capsys):
    assert main(["experiment", "synctime_dist", "--runs", "3", "--seed", "2",
                 "--out", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert "synctime_dist.sync_start.median=" in text
    assert main(["summarize", str(tmp_path / "synctime_dist.csv")]) == 0
    assert "[summary]" in capsys.readouterr().out
    assert main(["summarize"]) == 0
    assert capsys.readouterr().out == ""


def test_experiment_sweep(tmp_path, capsys):
    assert main(["experiment", "soundness", "--runs", "20", "--sweep", "0.5,0.875",
                 "--out", str(tmp_path)]) == 0
    assert "soundness.alpha=3.rate" in capsys.readouterr().out


def test_xor_roundtrip(tmp_path):
    pa, _ = write_configs(tmp_path, "cli-xor")
    msg = os.urandom(3000)
    (tmp_path / "m").write_bytes(msg)
    assert main(["xor", str(tmp_path / "m"), str(tmp_path / "c"), "--config", str(pa)]) == 0
    assert (tmp_path / "c").read_bytes() != msg
    assert main(["xor", str(tmp_path / "c"), str(tmp_path / "d"), "--config", str(pa)]) == 0
    assert (tmp_path / "d").read_bytes() == msg


def test_xor_needs_weight_seed(tmp_path):
    p = tmp_path / "c.conf"
    p.write_text("mode = explicit_zk\n")
    (tmp_path / "m").write_bytes(b"x")
    with pytest.raises(SystemExit):
        main(["xor", str(tmp_path / "m"), str(tmp_path / "c"), "--config", str(p)])
