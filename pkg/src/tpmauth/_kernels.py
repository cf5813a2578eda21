"""Numba kernels for the per-package hot loops.

The pure numpy versions in :mod:`tpmauth.tpm` and :mod:`tpmauth.inputs` are
the reference implementations; these kernels are checked against them in the
test-suite.
"""
import numba
import numpy as np


@numba.njit(cache=True)
def lfsr_fill(reg, width, tap_idx, out):
    # Fibonacci LFSR; bit i of ``reg`` holds sequence element s[n+i].
    one = np.uint64(1)
    top = np.uint64(width - 1)
    for i in range(out.shape[0]):
        out[i] = np.uint8(reg & one)
        fb = np.uint64(0)
        for t in range(tap_idx.shape[0]):
            fb ^= (reg >> np.uint64(tap_idx[t])) & one
        reg = (reg >> one) | (fb << top)
    return reg


@numba.njit(cache=True)
def hidden_outputs(w, xs, hidden, outputs):
    b, K, N = xs.shape
    for i in range(b):
        o = 1
        for k in range(K):
            s = 0
            for j in range(N):
                s += w[k, j] * xs[i, k, j]
            # sigma(0) = -1
            y = 1 if s > 0 else -1
            hidden[i, k] = y
            o *= y
        outputs[i] = o


@numba.njit(cache=True)
def learn_steps(w, xs, hidden, own, peer, active, sign, L, history):
    b, K, N = xs.shape
    for i in range(b):
        if active[i] and own[i] == peer[i]:
            o = own[i]
            for k in range(K):
                if hidden[i, k] == o:
                    for j in range(N):
                        v = w[k, j] + sign * o * xs[i, k, j]
                        if v > L:
                            v = L
                        elif v < -L:
                            v = -L
                        w[k, j] = v
        for k in range(K):
            for j in range(N):
                history[i, k, j] = w[k, j]
