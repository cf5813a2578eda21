"""Plain-text ``key=value`` session configuration.

Example::

    # shared secrets
    seed = 0x1d2c3b4a59687766
    mode = explicit_zk
    epsilon = 0.9999
    pattern = 0101
    K = 3
    N = 101
    L = 3
    b = 10
    weight_seed = alice-private

``seed`` is the shared LFSR seed, ``weight_seed`` the party's own secret
(hex when prefixed with ``0x``, otherwise its UTF-8 bytes). Unknown keys are
an error.
"""
from __future__ import annotations

from dataclasses import replace
from pathlib import Path

from .errors import ParameterError
from .inputs import DEFAULT_TAPS, DEFAULT_WIDTH, AuthPattern, StreamConfig
from .protocol import AuthPolicy, SessionConfig
from .tpm import TpmParams

# an LFSR's first outputs are its seed bits, so small seeds give lopsided early inputs
DEFAULT_SEED = 0x1D2C3B4A59687766

KEYS = {
    "K", "N", "L", "rule", "seed", "offset", "lfsr_width", "lfsr_taps", "mode", "epsilon",
    "pattern", "b", "t_min", "noise_rate", "max_iterations", "weight_seed", "noise_seed",
}


def make_session_config(
    seed: int = DEFAULT_SEED,
    *,
    params: TpmParams | None = None,
    mode: str = "explicit_zk",
    epsilon: float = 0.9999,
    pattern: str = "0101",
    offset: int = 0,
    width: int = DEFAULT_WIDTH,
    taps: tuple[int, ...] = DEFAULT_TAPS,
    **session_kw,
) -> SessionConfig:
    params = params or TpmParams()
    auth = AuthPolicy(mode, epsilon if mode == "explicit_zk" else 0.0, AuthPattern.from_string(pattern))
    stream = StreamConfig(seed, params, offset, width, tuple(taps))
    return SessionConfig(params, stream, auth, **session_kw)


def _parse_bytes(value: str) -> bytes:
    if value.startswith("0x"):
        return bytes.fromhex(value[2:])
    return value.encode()


def parse_config(text: str) -> dict[str, str]:
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ParameterError(f"line {lineno}: unknown key {key!r}")
        entries[key] = value
    return entries


def config_from_entries(entries: dict[str, str]) -> SessionConfig:
    params = TpmParams(
        int(entries.get("K", 3)), int(entries.get("N", 101)), int(entries.get("L", 3)),
        entries.get("rule", "hebbian"),
    )
    taps = entries.get("lfsr_taps")
    kw = {}
    for key, conv in (("b", int), ("t_min", int), ("max_iterations", int), ("noise_rate", float)):
        if key in entries:
            kw[key] = conv(entries[key])
    for key in ("weight_seed", "noise_seed"):
        if key in entries:
            kw[key] = _parse_bytes(entries[key])
    return make_session_config(
        int(entries.get("seed", str(DEFAULT_SEED)), 0),
        params=params,
        mode=entries.get("mode", "explicit_zk"),
        epsilon=float(entries.get("epsilon", 0.9999)),
        pattern=entries.get("pattern", "0101"),
        offset=int(entries.get("offset", 0)),
        width=int(entries.get("lfsr_width", DEFAULT_WIDTH)),
        taps=tuple(int(t) for t in taps.split(",")) if taps else DEFAULT_TAPS,
        **kw,
    )


def load_session_config(path) -> SessionConfig:
    return config_from_entries(parse_config(Path(path).read_text()))


def dump_session_config(cfg: SessionConfig) -> str:
    p, s, a = cfg.params, cfg.stream, cfg.auth
    lines = [
        f"K = {p.K}", f"N = {p.N}", f"L = {p.L}", f"rule = {p.rule}",
        f"seed = {s.seed:#x}", f"offset = {s.offset}", f"lfsr_width = {s.width}",
        f"lfsr_taps = {','.join(map(str, s.taps))}", f"mode = {a.mode}",
        f"epsilon = {a.epsilon!r}", f"pattern = {a.pattern}", f"b = {cfg.b}",
        f"t_min = {cfg.t_min}", f"noise_rate = {cfg.noise_rate!r}",
        f"max_iterations = {cfg.max_iterations}",
        f"weight_seed = 0x{cfg.weight_seed.hex()}", f"noise_seed = 0x{cfg.noise_seed.hex()}",
    ]
    return "\n".join(lines) + "\n"


def with_party_seed(cfg: SessionConfig, weight_seed: bytes) -> SessionConfig:
    return replace(cfg, weight_seed=weight_seed)
