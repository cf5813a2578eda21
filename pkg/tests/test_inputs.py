from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tpmauth.errors import InvalidStateError, ParameterError
from tpmauth.inputs import (
    ALT_TAPS,
    ALT_WIDTH,
    DEFAULT_TAPS,
    DEFAULT_WIDTH,
    AuthPattern,
    InputStream,
    LfsrState,
    StreamConfig,
    input_parity,
    lfsr_bits,
    lfsr_next_bit,
    matches_auth_pattern,
    next_input,
    package_parities,
    package_pattern_matches,
)
from tpmauth.tpm import TpmParams

GOLDEN = Path(__file__).parent / "fixtures" / "lfsr_golden.txt"


def golden_cases():
    for line in GOLDEN.read_text().splitlines():
        if line.startswith("#") or not line.strip():
            continue
        width, taps, seed, n, hexbits = line.split()
        bits = bin(int(hexbits, 16))[2:].zfill(len(hexbits) * 4)[: int(n)]
        yield int(width), tuple(map(int, taps.split(","))), int(seed, 16), [int(c) for c in bits]


def list_lfsr(width, taps, seed, n):
    """Sequence-level oracle: s[k+R] = XOR_t s[k+R-t], seeded with s[i] = bit i of seed."""
    s = [(seed >> i) & 1 for i in range(width)]
    while len(s) < n:
        k = len(s) - width
        v = 0
        for t in taps:
            v ^= s[k + width - t]
        s.append(v)
    return s[:n]


# GF(2) polynomials as Python ints, bit i = coefficient of x^i

def _polymulmod(a, b, f, deg):
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if (a >> deg) & 1:
            a ^= f
    return r


def _xpow(e, f, deg):
    result, base = 1, 2
    while e:
        if e & 1:
            result = _polymulmod(result, base, f, deg)
        base = _polymulmod(base, base, f, deg)
        e >>= 1
    return result


def _characteristic(width, taps):
    f = 1 << width
    for t in taps:
        f |= 1 << (width - t)
    return f


def _is_prime(n):
    return n > 1 and all(n % d for d in range(2, int(n ** 0.5) + 1))


class TestLfsr:
    @pytest.mark.parametrize("case", list(golden_cases()), ids=lambda c: f"R{c[0]}-{c[2]:#x}")
    def test_golden(self, case):
        width, taps, seed, bits = case
        state = LfsrState(seed, width, taps)
        got = []
        for _ in bits:
            b, state = lfsr_next_bit(state)
            got.append(b)
        assert got == bits
        assert lfsr_bits(LfsrState(seed, width, taps), len(bits))[0].tolist() == bits
        assert list_lfsr(width, taps, seed, len(bits)) == bits

    def test_golden_hand_checked_prefix(self):
        # seed 0x0001: s0 = 1, s1..s15 = 0; s16 = s0^s1^s3^s12 = 1, s20 = s4^s5^s7^s16 = 1
        width, taps, seed, bits = next(golden_cases())
        assert (width, seed) == (16, 1)
        assert bits[:22] == [1] + [0] * 15 + [1, 0, 0, 0, 1, 0]

    @settings(max_examples=50)
    @given(st.integers(1, (1 << 64) - 1), st.integers(1, 500))
    def test_kernel_matches_reference(self, seed, n):
        state = LfsrState(seed)
        ref = []
        for _ in range(n):
            b, state = lfsr_next_bit(state)
            ref.append(b)
        bits, end = lfsr_bits(LfsrState(seed), n)
        assert bits.tolist() == ref
        assert end == state

    def test_zero_register(self):
        with pytest.raises(InvalidStateError):
            lfsr_next_bit(LfsrState(0, 16, (16, 15, 13, 4)))
        with pytest.raises(InvalidStateError):
            lfsr_bits(LfsrState(0), 8)

    def test_bad_taps(self):
        with pytest.raises(ParameterError):
            LfsrState(1, 16, (15, 4))

    def test_period_r8(self):
        taps = (8, 6, 5, 4)
        start = LfsrState(0x5A, 8, taps)
        state, seen = start, {}
        for i in range(256):
            if state.register in seen:
                break
            seen[state.register] = i
            _, state = lfsr_next_bit(state)
        assert state.register == start.register and len(seen) == 255
        bits = lfsr_bits(start, 510)[0]
        assert np.array_equal(bits[:255], bits[255:])
        assert 0 < bits[:255].sum() < 255

    def test_period_r16(self):
        bits = lfsr_bits(LfsrState(0xACE1, 16, (16, 15, 13, 4)), 2 * 65535)[0]
        assert np.array_equal(bits[:65535], bits[65535:])
        assert bits[:65535].sum() == 32768  # m-sequence: 2^(R-1) ones per period

    @pytest.mark.parametrize("width,taps,factors", [
        (DEFAULT_WIDTH, DEFAULT_TAPS, (3, 5, 17, 257, 641, 65537, 6700417)),
        (ALT_WIDTH, ALT_TAPS, (7, 73, 127, 337, 92737, 649657)),
        (16, (16, 15, 13, 4), (3, 5, 17, 257)),
    ])
    def test_feedback_polynomial_primitive(self, width, taps, factors):
        order = (1 << width) - 1
        remaining = order
        for p in factors:
            assert _is_prime(p)
            while remaining % p == 0:
                remaining //= p
        assert remaining == 1
        f = _characteristic(width, taps)
        assert _xpow(order, f, width) == 1
        for p in factors:
            assert _xpow(order // p, f, width) != 1


class TestStream:
    def test_row_major_fill(self):
        p = TpmParams(2, 3, 3)
        cfg = StreamConfig(0xACE1, p, width=16, taps=(16, 15, 13, 4))
        x, state = next_input(cfg, cfg.initial_state())
        bits = list_lfsr(16, (16, 15, 13, 4), 0xACE1, 6)
        assert x.tolist() == [[2 * b - 1 for b in bits[:3]], [2 * b - 1 for b in bits[3:]]]
        assert state.step_count == 6

    def test_offset_shift(self):
        base = StreamConfig(12345)
        plain = InputStream(base).take(20)
        shifted = InputStream(StreamConfig(12345, offset=5)).take(3 + 1)
        assert np.array_equal(shifted[3], plain[8])
        for delta in (1, 10):
            s = InputStream(StreamConfig(12345, offset=delta)).take(20 - delta)
            assert np.array_equal(s, plain[delta:])

    def test_shared_secret_equivalence(self):
        a, b = InputStream(StreamConfig(99)), InputStream(StreamConfig(99))
        xa = np.concatenate([a.take(1000) for _ in range(10)])
        xb = np.concatenate([b.take(7) for _ in range(1429)])[:10_000]
        assert np.array_equal(xa, xb)
        assert a.vectors_drawn == 10_000

    def test_next_equals_take(self):
        a, b = InputStream(StreamConfig(7)), InputStream(StreamConfig(7))
        assert np.array_equal(np.stack([a.next() for _ in range(5)]), b.take(5))

    def test_copy_independent(self):
        a = InputStream(StreamConfig(7))
        c = a.copy()
        a.take(3)
        assert c.vectors_drawn == 0

    def test_step_count_increases(self):
        cfg = StreamConfig(7)
        state = cfg.initial_state()
        for _ in range(3):
            _, new = next_input(cfg, state)
            assert new.step_count > state.step_count
            state = new

    def test_component_means(self):
        xs = InputStream(StreamConfig(0x1D2C3B4A59687766)).take(10_000).astype(float)
        means = xs.mean(axis=0)
        # each component: mean of 10^4 unit-variance spins, sigma = 0.01
        assert np.abs(means).max() < 5 * 0.01  # max over 303 components
        assert np.mean(np.abs(means) < 3 * 0.01) > 0.98
        assert abs(xs.var() - 1.0) < 0.01

    @pytest.mark.parametrize("kw", [dict(seed=0), dict(seed=1 << 64), dict(seed=1, offset=-1)])
    def test_invalid(self, kw):
        with pytest.raises(ParameterError):
            StreamConfig(**kw)


class TestPattern:
    def test_0101(self):
        x = np.ones((3, 101), dtype=np.int8)
        x[2, -4:] = [-1, 1, -1, 1]
        assert matches_auth_pattern(x, AuthPattern.from_string("0101"))
        x[2, -1] = -1
        assert not matches_auth_pattern(x, AuthPattern.from_string("0101"))

    def test_m1(self):
        p = AuthPattern.from_string("1")
        assert matches_auth_pattern(np.array([[-1, 1]]), p)
        assert not matches_auth_pattern(np.array([[1, -1]]), p)

    def test_width_exceeds_input(self):
        with pytest.raises(ParameterError):
            matches_auth_pattern(np.ones((1, 3)), AuthPattern(4, 5))

    @pytest.mark.parametrize("bad", ["", "01a", "2"])
    def test_bad_string(self, bad):
        with pytest.raises(ParameterError):
            AuthPattern.from_string(bad)

    def test_str_roundtrip(self):
        assert str(AuthPattern.from_string("0011")) == "0011"

    def test_match_rate(self):
        xs = InputStream(StreamConfig(424242)).take(100_000)
        hits = package_pattern_matches(xs, AuthPattern.from_string("0101"))
        sigma = np.sqrt(100_000 * (1 / 16) * (15 / 16))
        assert abs(hits.sum() - 100_000 / 16) < 3 * sigma

    @given(st.lists(st.lists(st.sampled_from([-1, 1]), min_size=6, max_size=6), min_size=1, max_size=20),
           st.integers(1, 6), st.data())
    def test_vectorised_matches_scalar(self, rows, m, data):
        xs = np.array(rows, dtype=np.int8).reshape(-1, 2, 3)
        p = AuthPattern(m, data.draw(st.integers(0, (1 << m) - 1)))
        assert package_pattern_matches(xs, p).tolist() == [matches_auth_pattern(x, p) for x in xs]
        assert package_parities(xs).tolist() == [input_parity(x) for x in xs]


class TestParity:
    def test_all_positive(self):
        assert input_parity(np.ones((3, 101))) == 1

    def test_single_negative(self):
        x = np.ones((3, 101))
        x[1, 7] = -1
        assert input_parity(x) == -1

    def test_matches_product(self):
        xs = InputStream(StreamConfig(5)).take(200)
        assert [input_parity(x) for x in xs] == [int(np.prod(x.astype(np.int64))) for x in xs]

    def test_rate(self):
        xs = InputStream(StreamConfig(777)).take(100_000)
        plus = int((package_parities(xs) == 1).sum())
        assert abs(plus - 50_000) < 3 * np.sqrt(100_000 * 0.25)

    def test_empty_package(self):
        assert package_parities(np.empty((0, 3, 101), dtype=np.int8)).shape == (0,)
