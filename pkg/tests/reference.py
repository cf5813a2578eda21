"""Slow, step-by-step reference implementations used as test oracles.

Nothing here calls the compiled kernels: inputs come from a list-based LFSR
and every step goes through the scalar output and learning functions.
"""
from __future__ import annotations

import numpy as np

from tpmauth.tpm import Tpm, apply_learning, compute_output, new_tpm


class ListLfsr:
    """s[k+R] = XOR_t s[k+R-t], seeded with s[i] = bit i of the seed."""

    def __init__(self, width, taps, seed, skip=0):
        self.width, self.taps = width, tuple(taps)
        self.s = [(seed >> i) & 1 for i in range(width)]
        self.pos = 0
        self.bits(skip)

    def bits(self, n):
        while len(self.s) < self.pos + n + self.width:
            k = len(self.s) - self.width
            v = 0
            for t in self.taps:
                v ^= self.s[k + self.width - t]
            self.s.append(v)
        out = self.s[self.pos:self.pos + n]
        self.pos += n
        return out

    def vector(self, K, N):
        return np.array([2 * b - 1 for b in self.bits(K * N)], dtype=np.int8).reshape(K, N)


def stream_of(cfg):
    s = cfg.stream
    return ListLfsr(s.width, s.taps, s.seed, s.offset * cfg.params.n_weights)


def parity(x):
    p = 1
    for v in np.ravel(x):
        p *= int(v)
    return p


def ends_with(x, pattern):
    bits = [int(c) * 2 - 1 for c in str(pattern)]
    return [int(v) for v in np.ravel(x)[-len(bits):]] == bits


class RefParty:
    def __init__(self, cfg, weights=None, enforce_auth=True):
        self.cfg = cfg
        self.tpm = Tpm(cfg.params, weights) if weights is not None else new_tpm(cfg.params, cfg.weight_seed)
        self.lfsr = stream_of(cfg)
        self.alpha = cfg.auth.alpha
        self.enforce_auth = enforce_auth
        self.t = 0
        self.passed = 0
        self.run = 0
        self.run_start = None
        self.sync_iteration = None
        self.sync_start = None
        self.status = "authenticating" if self.alpha else "synchronising"
        self.auth_steps = []
        self.pending = None

    def produce(self):
        frozen = self.tpm
        records, tentative = [], self.passed
        K, N = self.cfg.params.shape
        for _ in range(self.cfg.b):
            x = self.lfsr.vector(K, N)
            if tentative < self.alpha and ends_with(x, self.cfg.auth.pattern):
                records.append(("auth", x, None, parity(x)))
                tentative += 1
            else:
                out = compute_output(frozen, x)
                records.append(("sync", x, out, out.output))
        self.pending = records
        return [r[3] for r in records]

    def consume(self, peer):
        for (kind, x, out, own), theirs in zip(self.pending, peer):
            if self.t >= self.cfg.max_iterations:
                break
            self.t += 1
            if kind == "auth":
                self.auth_steps.append(self.t)
                if own == theirs:
                    self.passed += 1
                    if self.status == "authenticating" and self.passed >= self.alpha:
                        self.status = "synchronising"
                elif self.enforce_auth:
                    self.status = "rejected"
                    break
                continue
            self.tpm = apply_learning(self.tpm, x, out, theirs)
            if own == theirs:
                if self.run == 0:
                    self.run_start = self.t
                self.run += 1
            else:
                self.run = 0
            if self.status == "synchronising" and self.run >= self.cfg.t_min:
                self.status = "synchronized"
                self.sync_iteration = self.t
                self.sync_start = self.run_start
                break
        self.pending = None
        if self.status in ("authenticating", "synchronising") and self.t >= self.cfg.max_iterations:
            self.status = "exhausted"


def reference_pair(cfg_a, cfg_b):
    a, b = RefParty(cfg_a), RefParty(cfg_b)
    while True:
        pa, pb = a.produce(), b.produce()
        a.consume(pb)
        b.consume(pa)
        if "rejected" in (a.status, b.status) or "exhausted" in (a.status, b.status):
            return a, b
        if a.status == b.status == "synchronized":
            return a, b
