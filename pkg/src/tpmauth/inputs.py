"""Shared pseudo-random inputs generated by a Fibonacci LFSR.

The LFSR seed is the second secret both honest parties hold. Sequence
convention: bit ``i`` of the register is sequence element ``s[n+i]``, the
output is ``s[n]`` and the new element is

    s[n+R] = XOR over taps t of s[n+R-t]

so a tap set always contains the width ``R`` itself. Bits map to spins
0 -> -1 and 1 -> +1 and fill the K x N input matrix row-major.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import InvalidStateError, ParameterError
from .tpm import INPUT_DTYPE, TpmParams

# x^64 + x^63 + x^61 + x^60 + 1
DEFAULT_WIDTH = 64
DEFAULT_TAPS = (64, 63, 61, 60)
# a second, unrelated generator used for "completely different inputs"
ALT_WIDTH = 63
ALT_TAPS = (63, 62)


def _validate_lfsr(width: int, taps: tuple[int, ...]) -> None:
    if not 2 <= width <= 64:
        raise ParameterError(f"LFSR width must be in [2, 64], got {width}")
    if not taps or max(taps) != width or min(taps) < 1:
        raise ParameterError(f"taps {taps} must lie in [1, {width}] and include {width}")


@dataclass(frozen=True)
class LfsrState:
    register: int
    width: int = DEFAULT_WIDTH
    taps: tuple[int, ...] = DEFAULT_TAPS
    step_count: int = 0

    def __post_init__(self):
        _validate_lfsr(self.width, tuple(self.taps))


def lfsr_next_bit(state: LfsrState) -> tuple[int, LfsrState]:
    """One LFSR step, bit by bit. Reference implementation for the block kernel."""
    reg = state.register
    if reg == 0:
        raise InvalidStateError("LFSR register is all-zero")
    out = reg & 1
    fb = 0
    for t in state.taps:
        fb ^= (reg >> (state.width - t)) & 1
    reg = (reg >> 1) | (fb << (state.width - 1))
    return out, replace(state, register=reg, step_count=state.step_count + 1)


def lfsr_bits(state: LfsrState, n: int) -> tuple[np.ndarray, LfsrState]:
    """``n`` output bits as a uint8 array, using the compiled kernel."""
    if state.register == 0:
        raise InvalidStateError("LFSR register is all-zero")
    out = np.empty(n, dtype=np.uint8)
    tap_idx = np.array([state.width - t for t in state.taps], dtype=np.int64)
    reg = _kernels.lfsr_fill(np.uint64(state.register), state.width, tap_idx, out)
    return out, replace(state, register=int(reg), step_count=state.step_count + n)


@dataclass(frozen=True)
class StreamConfig:
    """Seed (the shared secret), offset in input vectors, and generator shape."""

    seed: int
    params: TpmParams = field(default_factory=TpmParams)
    offset: int = 0
    width: int = DEFAULT_WIDTH
    taps: tuple[int, ...] = DEFAULT_TAPS

    def __post_init__(self):
        _validate_lfsr(self.width, tuple(self.taps))
        if not 0 < self.seed < (1 << self.width):
            raise ParameterError(f"seed must be a non-zero {self.width}-bit value")
        if self.offset < 0:
            raise ParameterError("offset must be non-negative")

    def initial_state(self) -> LfsrState:
        state = LfsrState(self.seed, self.width, tuple(self.taps))
        skip = self.offset * self.params.n_weights
        while skip:
            chunk = min(skip, 1 << 20)
            _, state = lfsr_bits(state, chunk)
            skip -= chunk
        return state


def bits_to_inputs(bits: np.ndarray, params: TpmParams) -> np.ndarray:
    spins = bits.astype(INPUT_DTYPE) * 2 - 1
    return spins.reshape(-1, params.K, params.N)


def next_input(cfg: StreamConfig, state: LfsrState) -> tuple[np.ndarray, LfsrState]:
    bits, state = lfsr_bits(state, cfg.params.n_weights)
    return bits_to_inputs(bits, cfg.params)[0], state


class InputStream:
    """Mutable cursor over a :class:`StreamConfig`'s input vectors."""

    def __init__(self, cfg: StreamConfig, state: LfsrState | None = None):
        self.cfg = cfg
        self.state = cfg.initial_state() if state is None else state

    @property
    def vectors_drawn(self) -> int:
        """Vectors drawn since the seed, offset included."""
        return self.state.step_count // self.cfg.params.n_weights

    def next(self) -> np.ndarray:
        x, self.state = next_input(self.cfg, self.state)
        return x

    def take(self, n: int) -> np.ndarray:
        """The next ``n`` input vectors as an (n, K, N) int8 array."""
        bits, self.state = lfsr_bits(self.state, n * self.cfg.params.n_weights)
        return bits_to_inputs(bits, self.cfg.params)

    def copy(self) -> "InputStream":
        return InputStream(self.cfg, self.state)


@dataclass(frozen=True)
class AuthPattern:
    """The last ``m`` input bits that mark an authentication step.

    ``pattern`` is read most-significant bit first against the last ``m``
    entries in row-major order, so ``AuthPattern.from_string("0101")``
    matches inputs ending in (-1, +1, -1, +1).
    """

    m: int = 4
    pattern: int = 0b0101

    def __post_init__(self):
        if self.m < 1:
            raise ParameterError("pattern width m must be >= 1")
        if not 0 <= self.pattern < (1 << self.m):
            raise ParameterError(f"pattern {self.pattern} does not fit in {self.m} bits")

    @classmethod
    def from_string(cls, bits: str) -> "AuthPattern":
        if not bits or set(bits) - {"0", "1"}:
            raise ParameterError(f"pattern must be a string of 0/1, got {bits!r}")
        return cls(len(bits), int(bits, 2))

    def __str__(self):
        return format(self.pattern, f"0{self.m}b")

    def spins(self) -> np.ndarray:
        bits = [(self.pattern >> (self.m - 1 - i)) & 1 for i in range(self.m)]
        return np.array(bits, dtype=INPUT_DTYPE) * 2 - 1


def matches_auth_pattern(x: np.ndarray, p: AuthPattern) -> bool:
    flat = np.asarray(x).ravel()
    if p.m > flat.size:
        raise ParameterError(f"pattern width {p.m} exceeds input size {flat.size}")
    return bool(np.array_equal(flat[-p.m:], p.spins()))


def input_parity(x: np.ndarray) -> int:
    """Product of all entries: +1 for an even number of -1 entries."""
    negatives = int(np.count_nonzero(np.asarray(x) < 0))
    return -1 if negatives % 2 else 1


def package_pattern_matches(xs: np.ndarray, p: AuthPattern) -> np.ndarray:
    flat = xs.reshape(xs.shape[0], -1)
    if p.m > flat.shape[1]:
        raise ParameterError(f"pattern width {p.m} exceeds input size {flat.shape[1]}")
    return (flat[:, -p.m:] == p.spins()).all(axis=1)


def package_parities(xs: np.ndarray) -> np.ndarray:
    negatives = np.count_nonzero(xs < 0, axis=tuple(range(1, xs.ndim)))
    return np.where(negatives % 2 == 1, -1, 1).astype(INPUT_DTYPE)
