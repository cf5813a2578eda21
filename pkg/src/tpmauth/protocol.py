"""Authenticated synchronisation sessions.

One :class:`Session` is one party. Each round both parties call
:meth:`Session.produce_package`, swap the returned bit packages and call
:meth:`Session.consume_package` with the peer's bits. In ``explicit_zk`` mode
an input whose last ``m`` bits equal the authentication pattern becomes an
authentication step until ``alpha`` of them have passed: the party sends the
parity of the input vector instead of its TPM output, and never learns from
it. On the wire the two kinds of step look the same.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Literal, Optional

import numpy as np

from .errors import FramingError, ParameterError, ProtocolOrderError
from .inputs import (
    AuthPattern,
    InputStream,
    StreamConfig,
    package_parities,
    package_pattern_matches,
)
from .tpm import INPUT_DTYPE, Tpm, TpmParams, _seed_to_int, learn_package, new_tpm, package_outputs

AuthMode = Literal["secret_inputs_only", "explicit_zk"]


def derive_alpha(epsilon: float) -> int:
    """Number of authentication steps for statistical security ``epsilon``.

    ``ceil(log2(1 / (1 - epsilon)))`` with a minimum of 1, i.e. the smallest
    alpha with ``1 - 2**-alpha >= epsilon``.
    """
    if not 0.0 <= epsilon < 1.0:
        raise ParameterError(f"epsilon must lie in [0, 1), got {epsilon}")
    alpha = max(1, math.ceil(math.log2(1.0 / (1.0 - epsilon))))
    # guard the float log against off-by-one at exact powers of two
    while 1.0 - 2.0**-alpha < epsilon:
        alpha += 1
    while alpha > 1 and 1.0 - 2.0 ** -(alpha - 1) >= epsilon:
        alpha -= 1
    return alpha


@dataclass(frozen=True)
class AuthPolicy:
    mode: AuthMode = "explicit_zk"
    epsilon: float = 0.9999
    pattern: AuthPattern = field(default_factory=AuthPattern)

    def __post_init__(self):
        if self.mode not in ("secret_inputs_only", "explicit_zk"):
            raise ParameterError(f"unknown auth mode {self.mode!r}")
        if self.mode == "explicit_zk":
            derive_alpha(self.epsilon)

    @property
    def alpha(self) -> int:
        return derive_alpha(self.epsilon) if self.mode == "explicit_zk" else 0

    @classmethod
    def secret_inputs_only(cls) -> "AuthPolicy":
        return cls(mode="secret_inputs_only", epsilon=0.0)

    @classmethod
    def explicit_zk(cls, epsilon: float = 0.9999, pattern: str = "0101") -> "AuthPolicy":
        return cls("explicit_zk", epsilon, AuthPattern.from_string(pattern))


@dataclass(frozen=True)
class SessionConfig:
    params: TpmParams
    stream: StreamConfig
    auth: AuthPolicy = field(default_factory=AuthPolicy)
    b: int = 10
    t_min: int = 200
    noise_rate: float = 0.0
    max_iterations: int = 10_000
    weight_seed: bytes = b"weights"
    noise_seed: bytes = b"noise"

    def __post_init__(self):
        if self.stream.params != self.params:
            raise ParameterError("stream params differ from session params")
        if self.b < 1 or self.t_min < 1 or self.max_iterations < 1:
            raise ParameterError("b, t_min and max_iterations must be >= 1")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ParameterError("noise_rate must lie in [0, 1]")
        if self.auth.mode == "explicit_zk" and self.auth.pattern.m > self.params.n_weights:
            raise ParameterError("authentication pattern is wider than the input vector")


class Status(str, Enum):
    AUTHENTICATING = "authenticating"
    SYNCHRONISING = "synchronising"
    SYNCHRONIZED = "synchronized"
    REJECTED = "rejected"
    EXHAUSTED = "exhausted"

    def __str__(self):
        return self.value


FINISHED = (Status.REJECTED, Status.EXHAUSTED)


@dataclass(frozen=True)
class StepRecord:
    t: int
    kind: Literal["auth", "sync"]
    own_bit: int
    peer_bit: Optional[int]
    hidden: Optional[np.ndarray]


@dataclass
class _Package:
    xs: np.ndarray
    hidden: np.ndarray
    bits: np.ndarray
    auth: np.ndarray


class Session:
    """Protocol state of one party.

    ``enforce_auth=False`` gives a party that never aborts on a failed
    authentication step; the adversary harness uses it for impostors.
    """

    def __init__(
        self,
        cfg: SessionConfig,
        *,
        tpm: Tpm | None = None,
        stream: InputStream | None = None,
        enforce_auth: bool = True,
    ):
        self.cfg = cfg
        self.tpm = tpm.copy() if tpm is not None else new_tpm(cfg.params, cfg.weight_seed)
        self.stream = stream if stream is not None else InputStream(cfg.stream)
        self.enforce_auth = enforce_auth
        self.alpha = cfg.auth.alpha
        self._noise = (
            np.random.default_rng(_seed_to_int(cfg.noise_seed)) if cfg.noise_rate > 0 else None
        )
        self.t = 0
        self.auth_passed = 0
        self.equal_run = 0
        self.run_start: int | None = None
        self.sync_iteration: int | None = None
        self.sync_start: int | None = None
        self.status = Status.AUTHENTICATING if self.alpha > 0 else Status.SYNCHRONISING
        self.auth_steps: list[int] = []
        self.history = np.empty((0,) + cfg.params.shape, dtype=np.int32)
        self.last_steps: list[StepRecord] = []
        self.last_statuses: list[Status] = []
        self._pending: _Package | None = None

    @property
    def in_flight(self) -> bool:
        return self._pending is not None

    @property
    def pending_records(self) -> list[StepRecord]:
        p = self._pending
        if p is None:
            return []
        return [
            StepRecord(
                self.t + i + 1,
                "auth" if p.auth[i] else "sync",
                int(p.bits[i]),
                None,
                None if p.auth[i] else p.hidden[i].copy(),
            )
            for i in range(len(p.bits))
        ]

    def produce_package(self) -> np.ndarray:
        """Draw ``b`` inputs and return the ``b`` outgoing bits (+-1)."""
        if self._pending is not None:
            raise ProtocolOrderError("a package is already in flight")
        if self.status in FINISHED:
            raise ProtocolOrderError(f"session is {self.status}")
        cfg = self.cfg
        xs = self.stream.take(cfg.b)
        hidden, bits = package_outputs(self.tpm, xs)
        auth = np.zeros(cfg.b, dtype=bool)
        # tentative passes inside this package count toward the cutoff
        need = self.alpha - self.auth_passed
        if need > 0:
            idx = np.flatnonzero(package_pattern_matches(xs, cfg.auth.pattern))[:need]
            auth[idx] = True
            bits[idx] = package_parities(xs[idx])
        if self._noise is not None:
            flips = (self._noise.random(cfg.b) < cfg.noise_rate) & ~auth
            bits[flips] *= -1
        self._pending = _Package(xs, hidden, bits, auth)
        return bits.copy()

    def consume_package(self, peer_bits) -> Status:
        """Process the peer's package step by step and return the new status."""
        p = self._pending
        if p is None:
            raise ProtocolOrderError("no package in flight")
        peer = np.asarray(peer_bits).ravel()
        if peer.shape != p.bits.shape:
            raise FramingError(f"peer package has {peer.size} bits, expected {p.bits.size}")
        if (np.abs(peer) != 1).any():
            raise FramingError("package bits must be +-1")
        peer = peer.astype(INPUT_DTYPE)
        self._pending = None

        cfg = self.cfg
        active = np.zeros(cfg.b, dtype=bool)
        steps: list[StepRecord] = []
        statuses: list[Status] = []
        for i in range(cfg.b):
            if self.t >= cfg.max_iterations:
                break
            self.t += 1
            own, theirs = int(p.bits[i]), int(peer[i])
            if p.auth[i]:
                self.auth_steps.append(self.t)
                steps.append(StepRecord(self.t, "auth", own, theirs, None))
                if theirs == own:
                    self.auth_passed += 1
                    if self.status == Status.AUTHENTICATING and self.auth_passed >= self.alpha:
                        self.status = Status.SYNCHRONISING
                elif self.enforce_auth:
                    self.status = Status.REJECTED
                    statuses.append(self.status)
                    break
            else:
                active[i] = True
                steps.append(StepRecord(self.t, "sync", own, theirs, p.hidden[i]))
                if own == theirs:
                    if self.equal_run == 0:
                        self.run_start = self.t
                    self.equal_run += 1
                else:
                    self.equal_run = 0
                if self.status == Status.SYNCHRONISING and self.equal_run >= cfg.t_min:
                    self.status = Status.SYNCHRONIZED
                    self.sync_iteration = self.t
                    self.sync_start = self.run_start
                    statuses.append(self.status)
                    break
            statuses.append(self.status)

        self.history = learn_package(self.tpm, p.xs, p.hidden, p.bits, peer, active)[: len(steps)]
        self.last_steps = steps
        self.last_statuses = statuses
        if self.status not in FINISHED + (Status.SYNCHRONIZED,) and self.t >= cfg.max_iterations:
            self.status = Status.EXHAUSTED
            if statuses:
                statuses[-1] = self.status
        return self.status


def exchange_round(a: Session, b: Session) -> tuple[np.ndarray, np.ndarray]:
    """One package swap between two in-process sessions; returns both packages."""
    pa = a.produce_package()
    pb = b.produce_package()
    a.consume_package(pb)
    b.consume_package(pa)
    return pa, pb


@dataclass(frozen=True)
class TraceRow:
    t: int
    d: float
    status_a: str
    status_b: str
    kind: str


@dataclass
class TranscriptPair:
    session_a: Session
    session_b: Session
    weights_equal_at: int | None = None
    rows: list[TraceRow] = field(default_factory=list)

    @property
    def status_a(self) -> Status:
        return self.session_a.status

    @property
    def status_b(self) -> Status:
        return self.session_b.status

    @property
    def iterations(self) -> int:
        return max(self.session_a.t, self.session_b.t)

    @property
    def synchronized(self) -> bool:
        return self.status_a == self.status_b == Status.SYNCHRONIZED

    @property
    def sync_iteration(self) -> int | None:
        return self.session_a.sync_iteration if self.synchronized else None

    @property
    def sync_start(self) -> int | None:
        """First iteration of the equal-output window that confirmed synchrony."""
        return self.session_a.sync_start if self.synchronized else None


def _package_distances(a: Session, b: Session) -> np.ndarray:
    n = max(len(a.history), len(b.history))
    ha, hb = _pad(a.history, a.tpm, n), _pad(b.history, b.tpm, n)
    p = a.cfg.params
    diff = np.abs(ha.astype(np.int64) - hb).sum(axis=(1, 2))
    return diff / (p.K * p.N * 2 * p.L)


def _pad(history: np.ndarray, tpm: Tpm, n: int) -> np.ndarray:
    if len(history) == n:
        return history
    tail = np.repeat(tpm.weights[None], n - len(history), axis=0)
    return np.concatenate([history, tail])


def _first_settled(dists: np.ndarray) -> int:
    """Index from which every entry is zero (the last entry must be zero)."""
    nonzero = np.flatnonzero(dists)
    return int(nonzero[-1]) + 1 if nonzero.size else 0


def run_honest_pair(
    cfg_a: SessionConfig,
    cfg_b: SessionConfig,
    *,
    trace: bool = False,
    stop: Literal["declared", "weights"] = "declared",
    tpm_a: Tpm | None = None,
    tpm_b: Tpm | None = None,
    enforce_auth_b: bool = True,
) -> TranscriptPair:
    """Drive two in-process sessions to a terminal status.

    ``stop="declared"`` runs until both parties declare synchrony or either
    aborts. ``stop="weights"`` also stops once an observer sees identical
    weights; noisy runs need it because persistent noise keeps breaking the
    equal-output window.
    """
    a = Session(cfg_a, tpm=tpm_a)
    b = Session(cfg_b, tpm=tpm_b, enforce_auth=enforce_auth_b)
    tr = TranscriptPair(a, b)
    if np.array_equal(a.tpm.weights, b.tpm.weights):
        tr.weights_equal_at = 0
    t0 = 0
    while True:
        exchange_round(a, b)
        if trace:
            dists = _package_distances(a, b)
            kinds = [s.kind for s in a.last_steps]
            for i, d in enumerate(dists):
                sa = a.last_statuses[min(i, len(a.last_statuses) - 1)]
                sb = b.last_statuses[min(i, len(b.last_statuses) - 1)]
                kind = kinds[i] if i < len(kinds) else "sync"
                tr.rows.append(TraceRow(t0 + i + 1, float(d), str(sa), str(sb), kind))
        if tr.weights_equal_at is None and np.array_equal(a.tpm.weights, b.tpm.weights):
            dists = _package_distances(a, b)
            tr.weights_equal_at = t0 + _first_settled(dists) + 1 if dists.size else t0
        t0 = max(a.t, b.t)
        if a.status in FINISHED or b.status in FINISHED:
            break
        if a.status == b.status == Status.SYNCHRONIZED:
            break
        if stop == "weights" and tr.weights_equal_at is not None:
            break
    return tr


def distance_trace(transcript: TranscriptPair) -> np.ndarray:
    """(t, d) pairs recorded by a ``trace=True`` run, as an (n, 2) array."""
    return np.array([(r.t, r.d) for r in transcript.rows], dtype=float).reshape(-1, 2)


def write_transcript_csv(transcript: TranscriptPair, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "d", "statusA", "statusB", "kind"])
        for r in transcript.rows:
            w.writerow([r.t, f"{r.d:.6f}", r.status_a, r.status_b, r.kind])


def distance_series(
    cfg_a: SessionConfig, cfg_b: SessionConfig, iterations: int
) -> tuple[np.ndarray, TranscriptPair]:
    """Weight distance after each of exactly ``iterations`` steps.

    Communication carries on after synchrony, so a matched pair shows d
    reaching zero and staying there. Both configs need
    ``max_iterations >= iterations``.
    """
    a, b = Session(cfg_a), Session(cfg_b)
    tr = TranscriptPair(a, b)
    out = np.empty(iterations)
    n = 0
    while n < iterations:
        if a.status in FINISHED or b.status in FINISHED:
            break
        exchange_round(a, b)
        d = _package_distances(a, b)[: iterations - n]
        out[n : n + len(d)] = d
        n += len(d)
    return out[:n], tr
