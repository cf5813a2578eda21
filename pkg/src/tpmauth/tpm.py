"""Tree Parity Machine: weights, output function and gated hebbian learning."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import _kernels
from .errors import DimensionError, ParameterError

LearningRule = Literal["hebbian", "anti_hebbian"]
WEIGHT_DTYPE = np.int32
INPUT_DTYPE = np.int8


@dataclass(frozen=True)
class TpmParams:
    """Machine geometry: K hidden units, N inputs each, weights in [-L, L]."""

    K: int = 3
    N: int = 101
    L: int = 3
    rule: LearningRule = "hebbian"

    def __post_init__(self):
        for name in ("K", "N", "L"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ParameterError(f"{name} must be a positive integer, got {value!r}")
        if self.rule not in ("hebbian", "anti_hebbian"):
            raise ParameterError(f"unknown learning rule {self.rule!r}")

    @property
    def n_weights(self) -> int:
        return self.K * self.N

    @property
    def shape(self) -> tuple[int, int]:
        return (self.K, self.N)

    @property
    def rule_sign(self) -> int:
        return 1 if self.rule == "hebbian" else -1


@dataclass
class Tpm:
    params: TpmParams
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=WEIGHT_DTYPE)
        if self.weights.shape != self.params.shape:
            raise DimensionError(
                f"weights have shape {self.weights.shape}, expected {self.params.shape}"
            )
        L = self.params.L
        if self.weights.min() < -L or self.weights.max() > L:
            raise ParameterError(f"weights outside [-{L}, {L}]")

    def copy(self) -> "Tpm":
        return Tpm(self.params, self.weights.copy())

    def __eq__(self, other):
        if not isinstance(other, Tpm):
            return NotImplemented
        return self.params == other.params and np.array_equal(self.weights, other.weights)


@dataclass(frozen=True)
class TpmOutput:
    output: int
    hidden: np.ndarray


def _seed_to_int(seed: bytes) -> int:
    return int.from_bytes(hashlib.sha256(seed).digest(), "big")


def new_tpm(params: TpmParams, rng_seed: bytes) -> Tpm:
    """Draw a machine with weights i.i.d. uniform over the 2L+1 integers in [-L, L].

    The draw is a deterministic function of ``rng_seed``.
    """
    if not rng_seed:
        raise ParameterError("rng_seed must be a non-empty byte string")
    rng = np.random.default_rng(_seed_to_int(bytes(rng_seed)))
    weights = rng.integers(-params.L, params.L + 1, size=params.shape)
    return Tpm(params, weights)


def _check_input(params: TpmParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != params.shape:
        raise DimensionError(f"input has shape {x.shape}, expected {params.shape}")
    return x


def compute_output(tpm: Tpm, x: np.ndarray) -> TpmOutput:
    """Hidden signs y_k = sigma(sum_j w_kj x_kj) and their parity.

    sigma(0) is taken as -1 so that both parties break ties identically.
    """
    x = _check_input(tpm.params, x)
    fields = np.sum(tpm.weights.astype(np.int64) * x, axis=1)
    hidden = np.where(fields > 0, 1, -1).astype(INPUT_DTYPE)
    return TpmOutput(int(np.prod(hidden, dtype=np.int64)), hidden)


def apply_learning(tpm: Tpm, x: np.ndarray, own: TpmOutput, peer_output: int) -> Tpm:
    """Return the machine after one agreement-gated learning step.

    Nothing changes unless ``own.output == peer_output``; then only the rows
    whose hidden sign equals the output move by ``+-O*x`` (hebbian /
    anti-hebbian), saturating at the bounds.
    """
    x = _check_input(tpm.params, x)
    new = tpm.copy()
    if own.output != peer_output:
        return new
    o = own.output
    rows = np.asarray(own.hidden) == o
    L = tpm.params.L
    delta = tpm.params.rule_sign * o * x[rows].astype(WEIGHT_DTYPE)
    new.weights[rows] = np.clip(new.weights[rows] + delta, -L, L)
    return new


def weight_distance(a: Tpm, b: Tpm) -> float:
    """Normalised L1 distance sum|wA - wB| / (K N 2L), in [0, 1]."""
    if a.params.shape != b.params.shape or a.params.L != b.params.L:
        raise ParameterError("machines have different geometry")
    p = a.params
    diff = np.abs(a.weights.astype(np.int64) - b.weights).sum()
    return float(diff) / (p.K * p.N * 2 * p.L)


def package_outputs(tpm: Tpm, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hidden states (b, K) and outputs (b,) for a stack of inputs, weights frozen."""
    xs = np.ascontiguousarray(xs, dtype=INPUT_DTYPE)
    if xs.ndim != 3 or xs.shape[1:] != tpm.params.shape:
        raise DimensionError(f"inputs have shape {xs.shape}, expected (b, K, N)")
    hidden = np.empty(xs.shape[:2], dtype=INPUT_DTYPE)
    outputs = np.empty(xs.shape[0], dtype=INPUT_DTYPE)
    _kernels.hidden_outputs(tpm.weights, xs, hidden, outputs)
    return hidden, outputs


def learn_package(
    tpm: Tpm,
    xs: np.ndarray,
    hidden: np.ndarray,
    own: np.ndarray,
    peer: np.ndarray,
    active: np.ndarray,
    history: np.ndarray | None = None,
) -> np.ndarray:
    """Apply stored learning steps in order, in place; returns per-step weights.

    ``active`` masks the steps that take part in learning (sync steps that
    were actually processed). ``history[i]`` holds the weights after step i.
    """
    if history is None:
        history = np.empty(xs.shape, dtype=WEIGHT_DTYPE)
    _kernels.learn_steps(
        tpm.weights,
        xs,
        hidden,
        np.asarray(own, dtype=INPUT_DTYPE),
        np.asarray(peer, dtype=INPUT_DTYPE),
        np.asarray(active, dtype=np.bool_),
        tpm.params.rule_sign,
        tpm.params.L,
        history,
    )
    return history
