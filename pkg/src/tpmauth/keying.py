"""Keys from synchronised weights and from the post-synchronisation trajectory.

Once two parties are synchronised their outputs always agree, so each can
keep applying the learning rule with its own output and no further traffic.
Both walk the same weight trajectory; snapshots along it are concatenated
into longer keys or used as a one-time-pad stream.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import ParameterError, ProtocolOrderError
from .inputs import InputStream
from .tpm import Tpm, learn_package, package_outputs


def bits_per_weight(L: int) -> int:
    return math.ceil(math.log2(2 * L + 1))


def encode_weights(tpm: Tpm) -> np.ndarray:
    """Canonical snapshot: each ``w + L`` as a fixed-width big-endian field, row-major.

    Returns a uint8 array of 0/1 of length ``K * N * ceil(log2(2L+1))``.
    """
    width = bits_per_weight(tpm.params.L)
    values = (tpm.weights.ravel() + tpm.params.L).astype(np.uint32)
    shifts = np.arange(width - 1, -1, -1, dtype=np.uint32)
    return ((values[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def decode_weights(bits: np.ndarray, params) -> np.ndarray:
    width = bits_per_weight(params.L)
    fields = np.asarray(bits, dtype=np.int64).reshape(-1, width)
    values = fields @ (1 << np.arange(width - 1, -1, -1))
    return (values - params.L).reshape(params.shape)


def bits_to_hex(bits: np.ndarray) -> str:
    """Lowercase hex of a bit string, MSB first, zero-padded to whole bytes."""
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes().hex()


def whiten(bits: np.ndarray) -> np.ndarray:
    """SHA-256 in counter mode over a snapshot, returning as many bits as it received."""
    data = np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()
    n = len(bits)
    out = b""
    counter = 0
    while len(out) * 8 < n:
        out += hashlib.sha256(counter.to_bytes(4, "big") + data).digest()
        counter += 1
    return np.unpackbits(np.frombuffer(out, dtype=np.uint8))[:n]


@dataclass
class KeyMaterial:
    bits: np.ndarray
    source_iterations: list[int] = field(default_factory=list)

    @property
    def hex(self) -> str:
        return bits_to_hex(self.bits)

    def __len__(self):
        return len(self.bits)


class TrajectoryWalker:
    """A synchronised machine that keeps learning from its own output, silently.

    Inputs are drawn in packages of ``b`` exactly as in the communicating
    protocol, so a walker reproduces the weight sequence the session would
    have followed had communication continued.
    """

    def __init__(self, tpm: Tpm, stream: InputStream, b: int = 10, step: int = 0):
        self.tpm = tpm.copy()
        self.stream = stream.copy()
        self.b = b
        self.step = step
        self._buffer = None
        self._pos = 0

    @classmethod
    def from_session(cls, session) -> "TrajectoryWalker":
        if session.in_flight:
            raise ProtocolOrderError("session has a package in flight")
        return cls(session.tpm, session.stream, session.cfg.b, session.t)

    def copy(self) -> "TrajectoryWalker":
        w = TrajectoryWalker(self.tpm, self.stream, self.b, self.step)
        if self._buffer is not None:
            w._buffer = self._buffer
            w._pos = self._pos
        return w

    def advance(self, steps: int = 1) -> "TrajectoryWalker":
        for _ in range(steps):
            if self._buffer is None or self._pos == self.b:
                xs = self.stream.take(self.b)
                hidden, outputs = package_outputs(self.tpm, xs)
                self._buffer = (xs, hidden, outputs)
                self._pos = 0
            xs, hidden, outputs = self._buffer
            i = self._pos
            learn_package(
                self.tpm, xs[i : i + 1], hidden[i : i + 1], outputs[i : i + 1],
                outputs[i : i + 1], np.ones(1, dtype=bool),
            )
            self._pos += 1
            self.step += 1
        return self

    def snapshot(self) -> np.ndarray:
        return encode_weights(self.tpm)


def advance_trajectory(walker: TrajectoryWalker) -> TrajectoryWalker:
    return walker.advance(1)


def derive_key(
    walker: TrajectoryWalker, target_bits: int, stride: int = 1, whitened: bool = False
) -> KeyMaterial:
    """Concatenate snapshots taken every ``stride`` steps, starting with the current one.

    The walker is advanced in place; the result is truncated to ``target_bits``.
    """
    if target_bits < 1 or stride < 1:
        raise ParameterError("target_bits and stride must be >= 1")
    parts, sources = [], []
    total = 0
    while True:
        snap = walker.snapshot()
        parts.append(whiten(snap) if whitened else snap)
        sources.append(walker.step)
        total += len(snap)
        if total >= target_bits:
            break
        walker.advance(stride)
    return KeyMaterial(np.concatenate(parts)[:target_bits], sources)


def otp_stream(walker: TrajectoryWalker, whitened: bool = False) -> Iterator[int]:
    """Endless bit stream: the encoding of every trajectory step in turn."""
    while True:
        walker.advance(1)
        snap = walker.snapshot()
        if whitened:
            snap = whiten(snap)
        yield from snap.tolist()


def keystream_bytes(walker: TrajectoryWalker, n_bytes: int, whitened: bool = False) -> bytes:
    """The first ``8 * n_bytes`` bits of :func:`otp_stream`, packed MSB first."""
    needed = 8 * n_bytes
    chunks, total = [], 0
    while total < needed:
        walker.advance(1)
        snap = walker.snapshot()
        chunks.append(whiten(snap) if whitened else snap)
        total += len(snap)
    bits = np.concatenate(chunks)[:needed] if chunks else np.zeros(0, np.uint8)
    return np.packbits(bits).tobytes()


def xor_bytes(data: bytes, pad: bytes) -> bytes:
    if len(pad) < len(data):
        raise ParameterError("pad shorter than data")
    a = np.frombuffer(data, dtype=np.uint8)
    b = np.frombuffer(pad[: len(data)], dtype=np.uint8)
    return (a ^ b).tobytes()
