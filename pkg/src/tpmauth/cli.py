"""Command line: ``tpmauth peer | experiment | summarize | xor``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import config_from_entries, parse_config
from .experiments import EXPERIMENTS, ExperimentSpec, run_experiment, summarize
from .keying import TrajectoryWalker, keystream_bytes, xor_bytes
from .net import ExitCode, PeerConfig, run_peer
from .protocol import Status, run_honest_pair

MODES = {
    "zk": "explicit_zk",
    "secret-inputs": "secret_inputs_only",
    # same mechanics as secret-inputs; the seed is simply assumed public
    "baseline-public": "secret_inputs_only",
}


def _endpoint(value: str) -> tuple[str, int]:
    host, _, port = value.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected host:port, got {value!r}")
    return host, int(port)


def _session_config(args, *, need_weight_seed=False):
    entries = parse_config(Path(args.config).read_text()) if args.config else {}
    cfg = config_from_entries(entries)
    if need_weight_seed and "weight_seed" not in entries:
        raise SystemExit("error: the keystream is only reproducible with weight_seed set in --config")
    if "weight_seed" not in entries:
        # a peer's weights are its private secret; never fall back to a fixed default
        cfg = replace(cfg, weight_seed=os.urandom(16))
    if getattr(args, "mode", None):
        mode = MODES[args.mode]
        cfg = replace(cfg, auth=replace(cfg.auth, mode=mode,
                                        epsilon=cfg.auth.epsilon if mode == "explicit_zk" else 0.0))
    return cfg


def cmd_peer(args) -> int:
    cfg = _session_config(args)
    role, (host, port) = ("responder", args.listen) if args.listen else ("initiator", args.connect)
    result = run_peer(PeerConfig(role, host, port, cfg, key_bits=args.key_bits))
    status = result.status.value if result.status else "error"
    print(f"status={status} iterations={result.iterations}", file=sys.stderr)
    if result.detail:
        print(f"detail={result.detail}", file=sys.stderr)
    if result.key_hex:
        print(result.key_hex)
        if args.out:
            Path(args.out).write_bytes(bytes.fromhex(result.key_hex))
    return int(result.exit_code)


def cmd_experiment(args) -> int:
    sweep = tuple(s for s in args.sweep.split(",") if s) if args.sweep else ()
    spec = ExperimentSpec(args.name, runs=args.runs, sweep=sweep, master_seed=args.seed,
                          out_dir=Path(args.out), iterations=args.iterations,
                          key_bits=args.key_bits, workers=args.workers)
    paths = run_experiment(spec)
    for p in paths:
        print(p)
    sys.stdout.write(summarize(paths))
    return 0


def cmd_summarize(args) -> int:
    sys.stdout.write(summarize(args.files))
    return 0


def cmd_xor(args) -> int:
    """XOR a file with the trajectory keystream of an in-process exchange.

    Running it twice with the same config decrypts.
    """
    cfg = _session_config(args, need_weight_seed=True)
    b_cfg = replace(cfg, weight_seed=cfg.weight_seed + b"/peer")
    tr = run_honest_pair(cfg, b_cfg)
    if tr.status_a != Status.SYNCHRONIZED:
        print(f"exchange ended {tr.status_a}", file=sys.stderr)
        return int(ExitCode.EXHAUSTED)
    data = Path(args.input).read_bytes()
    pad = keystream_bytes(TrajectoryWalker.from_session(tr.session_a), len(data))
    Path(args.output).write_bytes(xor_bytes(data, pad))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tpmauth", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    peer = sub.add_parser("peer", help="run one side of a networked key exchange")
    where = peer.add_mutually_exclusive_group(required=True)
    where.add_argument("--listen", type=_endpoint, metavar="HOST:PORT")
    where.add_argument("--connect", type=_endpoint, metavar="HOST:PORT")
    peer.add_argument("--config", help="key=value session configuration")
    peer.add_argument("--mode", choices=sorted(MODES))
    peer.add_argument("--key-bits", type=int, default=2048)
    peer.add_argument("--out", help="also write the raw key bytes here")
    peer.set_defaults(func=cmd_peer)

    exp = sub.add_parser("experiment", help="run a Monte Carlo reproduction")
    exp.add_argument("name", choices=EXPERIMENTS)
    exp.add_argument("--runs", type=int, default=100)
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--out", default="results")
    exp.add_argument("--sweep", help="comma-separated sweep points")
    exp.add_argument("--iterations", type=int, default=5000)
    exp.add_argument("--key-bits", type=int, default=2048)
    exp.add_argument("--workers", type=int, default=1)
    exp.set_defaults(func=cmd_experiment)

    summ = sub.add_parser("summarize", help="summarise experiment CSV files")
    summ.add_argument("files", nargs="*")
    summ.set_defaults(func=cmd_summarize)

    xor = sub.add_parser("xor", help="one-time-pad a file with a trajectory keystream")
    xor.add_argument("input")
    xor.add_argument("output")
    xor.add_argument("--config", required=True)
    xor.add_argument("--mode", choices=sorted(MODES))
    xor.set_defaults(func=cmd_xor)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
