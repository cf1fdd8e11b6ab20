import hashlib
import struct

import numpy as np
import pytest

from rainbowdp import kernels
from rainbowdp.core import (
    ConfigError, CounterSet, SpaceParams, evaluate, is_dp, reduce, round_half_up, step,
)


def md5_ref(x, n_bits):
    d = hashlib.md5(struct.pack("<Q", x)).digest()
    return int.from_bytes(d[:8], "little") % (1 << n_bits)


P24 = SpaceParams.create(24, 9, 1.8, l=3, m0_tilde=1000)


def test_t_hat_rounding():
    assert P24.t_hat == 922
    assert round_half_up(0.5) == 1 and round_half_up(2.4999) == 2
    assert SpaceParams.create(10, 2, 1.125).t_hat == 5  # 4.5 rounds up


@pytest.mark.parametrize("kw", [
    dict(n_bits=12, k_bits=12, c=1.0),
    dict(n_bits=12, k_bits=0, c=1.0),
    dict(n_bits=63, k_bits=5, c=1.0),
    dict(n_bits=12, k_bits=5, c=1.0, l=0),
    dict(n_bits=12, k_bits=5, c=1.0, m0_tilde=4097),
    dict(n_bits=12, k_bits=5, c=1.0, function_id="sha1"),
])
def test_invalid_params(kw):
    with pytest.raises(ConfigError):
        SpaceParams.create(**kw)


def test_t_hat_mismatch_rejected():
    with pytest.raises(ConfigError):
        SpaceParams(12, 5, 2.0, 63, 1, 1)


def test_md5_golden_zero():
    # MD5(00*8) = 7dea362b3fac8e00...; first 8 bytes little-endian, mod 2^24
    assert md5_ref(0, 24) == 0x36EA7D
    assert evaluate(0, P24) == 0x36EA7D


@pytest.mark.parametrize("n_bits", [12, 24, 32, 40, 62])
def test_md5_matches_hashlib(n_bits):
    rng = np.random.default_rng(n_bits)
    for x in rng.integers(0, 1 << n_bits, size=200).tolist():
        assert kernels.md5_trunc(x, n_bits) == md5_ref(x, n_bits)


def test_prf_pinned_and_deterministic():
    p = SpaceParams.create(24, 9, 1.8, function_id="prf-test")
    a = [evaluate(x, p) for x in range(5)]
    assert a == [evaluate(x, p) for x in range(5)]
    # splitmix64 finalizer of x + 0x9E3779B97F4A7C15, truncated
    mask = (1 << 64) - 1

    def ref(x):
        z = (x + 0x9E3779B97F4A7C15) & mask
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        return (z ^ (z >> 31)) & ((1 << 24) - 1)

    assert a == [ref(x) for x in range(5)]


def test_evaluate_counts_once():
    c = CounterSet()
    evaluate(5, P24, c)
    assert c.f_invocations == 1
    step(0, 1, 5, P24, c)
    assert c.f_invocations == 2


def test_evaluate_range():
    with pytest.raises(ValueError):
        evaluate(P24.N, P24)


def test_reduce_examples():
    assert reduce(0, 1, 0, P24) == 1
    p = SpaceParams.create(24, 5, 3.125, l=3)  # t_hat = 100
    assert p.t_hat == 100
    assert reduce(2, 5, p.N - 1, p) == 204
    assert reduce(1, p.t_hat, 0, p) == 2 * p.t_hat % p.N
    with pytest.raises(ValueError):
        reduce(0, 0, 0, p)
    with pytest.raises(ValueError):
        reduce(0, p.t_hat + 1, 0, p)
    with pytest.raises(ValueError):
        reduce(3, 1, 0, p)


def test_reduce_bijective():
    p = SpaceParams.create(12, 5, 2.0, l=2)
    for i, s in [(0, 1), (1, 17), (1, p.t_hat)]:
        img = {reduce(i, s, y, p) for y in range(p.N)}
        assert len(img) == p.N


def test_dp_threshold_and_density():
    p = SpaceParams.create(12, 5, 2.0)
    lim = p.N // p.t
    assert is_dp(0, p) and is_dp(lim - 1, p) and not is_dp(lim, p)
    assert sum(is_dp(x, p) for x in range(p.N)) == p.N // p.t


def test_step_is_composition_exhaustive():
    p = SpaceParams.create(10, 3, 2.0, l=2, function_id="prf-test")
    f = {x: evaluate(x, p) for x in range(p.N)}
    for x in range(p.N):
        assert step(1, 3, x, p) == (f[x] + p.t_hat + 3) % p.N
