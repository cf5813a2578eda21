"""Attack scenarios against the plain and the authenticated protocol.

Only the naive attacker is implemented: an identical TPM that learns from
the public traffic whenever the two honest parties agree and its own output
matches theirs. Other strategies plug in through :class:`AttackerStrategy`.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Literal, Protocol

import numpy as np

from .errors import ParameterError
from .inputs import ALT_TAPS, ALT_WIDTH, InputStream, StreamConfig
from .protocol import (
    FINISHED,
    SessionConfig,
    Session,
    Status,
    exchange_round,
    run_honest_pair,
)
from .seeding import derive_lfsr_seed, derive_seed
from .tpm import Tpm, learn_package, new_tpm, package_outputs, weight_distance

AttackerInputs = Literal["public", "offset", "different", "wrong_seed"]


class AttackerStrategy(Protocol):
    def update(self, tpm: Tpm, xs, hidden, own, bits_a, bits_b) -> None:
        """Adapt ``tpm`` in place after observing one exchanged package pair."""


class NaiveStrategy:
    """Learn like a party, on steps where A and B agree and the attacker agrees too."""

    def update(self, tpm, xs, hidden, own, bits_a, bits_b):
        active = np.zeros(len(own), dtype=bool)
        n = len(bits_a)
        active[:n] = bits_a == bits_b
        peer = np.ones(len(own), dtype=own.dtype)
        peer[:n] = bits_a
        learn_package(tpm, xs, hidden, own, peer, active)


class Eavesdropper:
    def __init__(self, tpm: Tpm, stream: InputStream, b: int, strategy: AttackerStrategy | None = None):
        self.tpm = tpm
        self.stream = stream
        self.b = b
        self.strategy = strategy or NaiveStrategy()

    def observe(self, bits_a: np.ndarray, bits_b: np.ndarray) -> None:
        xs = self.stream.take(self.b)
        hidden, own = package_outputs(self.tpm, xs)
        self.strategy.update(self.tpm, xs, hidden, own, bits_a, bits_b)


@dataclass(frozen=True)
class AttackScenario:
    kind: Literal["eavesdrop", "mitm"]
    attacker_inputs: AttackerInputs
    trials: int
    honest_cfg: SessionConfig
    offset: int = 1
    master_seed: int = 0
    grace: int = 100

    def __post_init__(self):
        if self.kind not in ("eavesdrop", "mitm"):
            raise ParameterError(f"unknown attack kind {self.kind!r}")
        if self.attacker_inputs not in ("public", "offset", "different", "wrong_seed"):
            raise ParameterError(f"unknown attacker inputs {self.attacker_inputs!r}")
        if self.attacker_inputs == "public" and self.honest_cfg.auth.mode != "secret_inputs_only":
            raise ParameterError("public inputs only make sense against the baseline protocol")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")

    def honest_stream(self, trial: int) -> StreamConfig:
        base = self.honest_cfg.stream
        return replace(base, seed=derive_lfsr_seed(self.master_seed, "inputs", trial, width=base.width))

    def attacker_stream(self, trial: int) -> StreamConfig:
        honest = self.honest_stream(trial)
        kind = self.attacker_inputs
        if kind == "public":
            return honest
        if kind == "offset":
            return replace(honest, offset=honest.offset + self.offset)
        if kind == "different":
            seed = derive_lfsr_seed(self.master_seed, "alt", trial, width=ALT_WIDTH)
            return replace(honest, seed=seed, width=ALT_WIDTH, taps=ALT_TAPS, offset=0)
        seed = derive_lfsr_seed(self.master_seed, "guess", trial, width=honest.width)
        return replace(honest, seed=seed)

    def party_cfg(self, trial: int, role: str, stream: StreamConfig | None = None) -> SessionConfig:
        return replace(
            self.honest_cfg,
            stream=stream or self.honest_stream(trial),
            weight_seed=derive_seed(self.master_seed, "weights", role, trial),
            noise_seed=derive_seed(self.master_seed, "noise", role, trial),
        )


@dataclass
class AttackReport:
    trials: int
    attacker_sync_count: int = 0
    honest_sync_count: int = 0
    mean_attacker_final_distance: float = float("nan")
    auth_reject_count: int = 0
    auth_pass_count: int = 0
    attacked_sessions: int = 0
    rows: list[dict] = field(default_factory=list)

    @property
    def acceptance_rate(self) -> float:
        """Fraction of attacked honest sessions that let the attacker through authentication."""
        return self.auth_pass_count / self.attacked_sessions if self.attacked_sessions else 0.0

    def summary(self) -> str:
        return (
            f"trials={self.trials} attacker_sync={self.attacker_sync_count} "
            f"honest_sync={self.honest_sync_count} "
            f"mean_final_distance={self.mean_attacker_final_distance:.4f} "
            f"auth_reject={self.auth_reject_count} auth_pass={self.auth_pass_count}/"
            f"{self.attacked_sessions}"
        )

    def write_csv(self, path) -> None:
        if not self.rows:
            return
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(self.rows[0]))
            w.writeheader()
            w.writerows(self.rows)


def _eavesdrop_trial(s: AttackScenario, trial: int) -> dict:
    a = Session(s.party_cfg(trial, "A"))
    b = Session(s.party_cfg(trial, "B"))
    e_cfg = s.party_cfg(trial, "E", s.attacker_stream(trial))
    eve = Eavesdropper(new_tpm(e_cfg.params, e_cfg.weight_seed), InputStream(e_cfg.stream), e_cfg.b)
    success_at = None
    deadline = None
    while True:
        pa, pb = exchange_round(a, b)
        n = len(a.last_steps)
        eve.observe(pa[:n], pb[:n])
        if success_at is None and np.array_equal(eve.tpm.weights, a.tpm.weights):
            success_at = a.t
        if a.status in FINISHED or b.status in FINISHED:
            break
        if deadline is None and a.status == b.status == Status.SYNCHRONIZED:
            deadline = a.t + s.grace
        if deadline is not None and a.t >= deadline:
            break
    honest_sync = a.status == b.status == Status.SYNCHRONIZED
    return {
        "trial": trial,
        "honest_status": str(a.status),
        "honest_sync_iteration": a.sync_iteration if honest_sync else "",
        "attacker_synced": int(success_at is not None),
        "attacker_sync_iteration": success_at if success_at is not None else "",
        "final_distance": round(weight_distance(eve.tpm, a.tpm), 6),
    }


def run_eavesdropper(s: AttackScenario) -> AttackReport:
    """Naive identical-TPM eavesdropper on ``s.trials`` honest exchanges.

    The attacker succeeds when its weights equal A's by the time the honest
    pair has declared synchrony plus ``s.grace`` further steps.
    """
    if s.kind != "eavesdrop":
        raise ParameterError("scenario kind must be 'eavesdrop'")
    report = AttackReport(s.trials)
    for trial in range(s.trials):
        row = _eavesdrop_trial(s, trial)
        report.rows.append(row)
        report.attacker_sync_count += row["attacker_synced"]
        report.honest_sync_count += row["honest_status"] == "synchronized"
    report.mean_attacker_final_distance = float(np.mean([r["final_distance"] for r in report.rows]))
    return report


def _passed_auth(session: Session) -> bool:
    return session.alpha > 0 and session.auth_passed >= session.alpha


def run_mitm(s: AttackScenario) -> AttackReport:
    """Attacker sits between A and B and runs its own session with each."""
    if s.kind != "mitm":
        raise ParameterError("scenario kind must be 'mitm'")
    report = AttackReport(s.trials)
    distances = []
    for trial in range(s.trials):
        e_stream = s.attacker_stream(trial)
        # channel 1: A <-> attacker posing as B; channel 2: attacker posing as A <-> B
        t1 = run_honest_pair(s.party_cfg(trial, "A"), s.party_cfg(trial, "E1", e_stream),
                             enforce_auth_b=False)
        t2 = run_honest_pair(s.party_cfg(trial, "B"), s.party_cfg(trial, "E2", e_stream),
                             enforce_auth_b=False)
        honest = (t1.session_a, t2.session_a)
        attacker_synced = all(
            t.status_a == Status.SYNCHRONIZED
            and np.array_equal(t.session_a.tpm.weights, t.session_b.tpm.weights)
            for t in (t1, t2)
        )
        d = 0.5 * (weight_distance(t1.session_a.tpm, t1.session_b.tpm)
                   + weight_distance(t2.session_a.tpm, t2.session_b.tpm))
        distances.append(d)
        passes = sum(_passed_auth(h) for h in honest)
        rejected = any(h.status == Status.REJECTED for h in honest)
        both_sync = all(h.status == Status.SYNCHRONIZED for h in honest)
        report.attacker_sync_count += attacker_synced
        report.honest_sync_count += both_sync
        report.auth_reject_count += rejected
        report.auth_pass_count += passes
        report.attacked_sessions += 2
        report.rows.append({
            "trial": trial,
            "status_A": str(honest[0].status),
            "status_B": str(honest[1].status),
            "auth_passes": passes,
            "attacker_synced": int(attacker_synced),
            "mean_distance": round(d, 6),
        })
    report.mean_attacker_final_distance = float(np.mean(distances))
    return report


@dataclass
class SoundnessResult:
    trials: int
    alpha: int
    accepted: int = 0
    synchronized: int = 0
    rejected: int = 0

    @property
    def rate(self) -> float:
        return self.accepted / self.trials

    @property
    def bound(self) -> float:
        """``2**-alpha`` plus a three-sigma Monte Carlo margin."""
        p = 2.0 ** -self.alpha
        return p + 3.0 * np.sqrt(p / self.trials)


def impostor_trials(cfg: SessionConfig, trials: int, master_seed: int = 0) -> SoundnessResult:
    """An honest verifier against an impostor holding a wrong input seed.

    The impostor never aborts; a trial counts as accepted when the verifier
    completes all ``alpha`` authentication steps.
    """
    result = SoundnessResult(trials, cfg.auth.alpha)
    width = cfg.stream.width
    for trial in range(trials):
        honest = replace(cfg, stream=replace(cfg.stream, seed=derive_lfsr_seed(master_seed, "inputs", trial, width=width)),
                         weight_seed=derive_seed(master_seed, "verifier", trial))
        impostor = replace(cfg, stream=replace(cfg.stream, seed=derive_lfsr_seed(master_seed, "impostor", trial, width=width)),
                           weight_seed=derive_seed(master_seed, "impostor-w", trial))
        verifier = Session(honest)
        liar = Session(impostor, enforce_auth=False)
        while verifier.status == Status.AUTHENTICATING:
            exchange_round(verifier, liar)
        if verifier.status == Status.REJECTED:
            result.rejected += 1
            continue
        result.accepted += 1
        while verifier.status not in FINISHED + (Status.SYNCHRONIZED,):
            exchange_round(verifier, liar)
        result.synchronized += verifier.status == Status.SYNCHRONIZED
    return result
