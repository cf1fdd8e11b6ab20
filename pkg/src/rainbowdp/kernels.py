"""Compiled inner loops: the one-way functions, chain iteration and the online search.

Everything here works on plain int64 values and numpy arrays so numba can
compile it in nopython mode.  Points are always < 2**62, so int64 is safe.
Kernels are compiled with ``nogil=True`` so callers can fan work out over
threads.
"""

import numpy as np
from numba import njit

FN_MD5_TRUNC = 0
FN_PRF_TEST = 1

_M32 = 0xFFFFFFFF

# prf-test: 64-bit add-key then the splitmix64 finalizer (a bijection on
# 64-bit words), truncated to the low n_bits.  Frozen; tests pin outputs.
PRF_KEY = np.uint64(0x9E3779B97F4A7C15)
_PRF_M1 = np.uint64(0xBF58476D1CE4E5B9)
_PRF_M2 = np.uint64(0x94D049BB133111EB)


@njit(inline="always")
def _rotl(v, s):
    return ((v << s) | (v >> (32 - s))) & _M32


@njit(inline="always")
def _FF(a, b, c, d, w, s, k):
    return (b + _rotl((a + ((b & c) | (~b & d)) + w + k) & _M32, s)) & _M32


@njit(inline="always")
def _GG(a, b, c, d, w, s, k):
    return (b + _rotl((a + ((b & d) | (c & ~d)) + w + k) & _M32, s)) & _M32


@njit(inline="always")
def _HH(a, b, c, d, w, s, k):
    return (b + _rotl((a + (b ^ c ^ d) + w + k) & _M32, s)) & _M32


@njit(inline="always")
def _II(a, b, c, d, w, s, k):
    return (b + _rotl((a + (c ^ (b | (~d & _M32))) + w + k) & _M32, s)) & _M32


@njit(cache=True, nogil=True)
def md5_trunc(x, n_bits):
    """MD5 of ``x`` as 8 little-endian bytes; first 8 digest bytes (LE) mod 2**n_bits.

    The message is a single padded block whose only non-zero words are the
    two input words, the 0x80 terminator and the bit length 64.
    """
    w0 = x & _M32
    w1 = (x >> 32) & _M32
    a = 0x67452301
    b = 0xEFCDAB89
    c = 0x98BADCFE
    d = 0x10325476
    a = _FF(a, b, c, d, w0, 7, 0xD76AA478)
    d = _FF(d, a, b, c, w1, 12, 0xE8C7B756)
    c = _FF(c, d, a, b, 0x80, 17, 0x242070DB)
    b = _FF(b, c, d, a, 0, 22, 0xC1BDCEEE)
    a = _FF(a, b, c, d, 0, 7, 0xF57C0FAF)
    d = _FF(d, a, b, c, 0, 12, 0x4787C62A)
    c = _FF(c, d, a, b, 0, 17, 0xA8304613)
    b = _FF(b, c, d, a, 0, 22, 0xFD469501)
    a = _FF(a, b, c, d, 0, 7, 0x698098D8)
    d = _FF(d, a, b, c, 0, 12, 0x8B44F7AF)
    c = _FF(c, d, a, b, 0, 17, 0xFFFF5BB1)
    b = _FF(b, c, d, a, 0, 22, 0x895CD7BE)
    a = _FF(a, b, c, d, 0, 7, 0x6B901122)
    d = _FF(d, a, b, c, 0, 12, 0xFD987193)
    c = _FF(c, d, a, b, 64, 17, 0xA679438E)
    b = _FF(b, c, d, a, 0, 22, 0x49B40821)
    a = _GG(a, b, c, d, w1, 5, 0xF61E2562)
    d = _GG(d, a, b, c, 0, 9, 0xC040B340)
    c = _GG(c, d, a, b, 0, 14, 0x265E5A51)
    b = _GG(b, c, d, a, w0, 20, 0xE9B6C7AA)
    a = _GG(a, b, c, d, 0, 5, 0xD62F105D)
    d = _GG(d, a, b, c, 0, 9, 0x02441453)
    c = _GG(c, d, a, b, 0, 14, 0xD8A1E681)
    b = _GG(b, c, d, a, 0, 20, 0xE7D3FBC8)
    a = _GG(a, b, c, d, 0, 5, 0x21E1CDE6)
    d = _GG(d, a, b, c, 64, 9, 0xC33707D6)
    c = _GG(c, d, a, b, 0, 14, 0xF4D50D87)
    b = _GG(b, c, d, a, 0, 20, 0x455A14ED)
    a = _GG(a, b, c, d, 0, 5, 0xA9E3E905)
    d = _GG(d, a, b, c, 0x80, 9, 0xFCEFA3F8)
    c = _GG(c, d, a, b, 0, 14, 0x676F02D9)
    b = _GG(b, c, d, a, 0, 20, 0x8D2A4C8A)
    a = _HH(a, b, c, d, 0, 4, 0xFFFA3942)
    d = _HH(d, a, b, c, 0, 11, 0x8771F681)
    c = _HH(c, d, a, b, 0, 16, 0x6D9D6122)
    b = _HH(b, c, d, a, 64, 23, 0xFDE5380C)
    a = _HH(a, b, c, d, w1, 4, 0xA4BEEA44)
    d = _HH(d, a, b, c, 0, 11, 0x4BDECFA9)
    c = _HH(c, d, a, b, 0, 16, 0xF6BB4B60)
    b = _HH(b, c, d, a, 0, 23, 0xBEBFBC70)
    a = _HH(a, b, c, d, 0, 4, 0x289B7EC6)
    d = _HH(d, a, b, c, w0, 11, 0xEAA127FA)
    c = _HH(c, d, a, b, 0, 16, 0xD4EF3085)
    b = _HH(b, c, d, a, 0, 23, 0x04881D05)
    a = _HH(a, b, c, d, 0, 4, 0xD9D4D039)
    d = _HH(d, a, b, c, 0, 11, 0xE6DB99E5)
    c = _HH(c, d, a, b, 0, 16, 0x1FA27CF8)
    b = _HH(b, c, d, a, 0x80, 23, 0xC4AC5665)
    a = _II(a, b, c, d, w0, 6, 0xF4292244)
    d = _II(d, a, b, c, 0, 10, 0x432AFF97)
    c = _II(c, d, a, b, 64, 15, 0xAB9423A7)
    b = _II(b, c, d, a, 0, 21, 0xFC93A039)
    a = _II(a, b, c, d, 0, 6, 0x655B59C3)
    d = _II(d, a, b, c, 0, 10, 0x8F0CCC92)
    c = _II(c, d, a, b, 0, 15, 0xFFEFF47D)
    b = _II(b, c, d, a, w1, 21, 0x85845DD1)
    a = _II(a, b, c, d, 0, 6, 0x6FA87E4F)
    d = _II(d, a, b, c, 0, 10, 0xFE2CE6E0)
    c = _II(c, d, a, b, 0, 15, 0xA3014314)
    b = _II(b, c, d, a, 0, 21, 0x4E0811A1)
    a = _II(a, b, c, d, 0, 6, 0xF7537E82)
    d = _II(d, a, b, c, 0, 10, 0xBD3AF235)
    c = _II(c, d, a, b, 0x80, 15, 0x2AD7D2BB)
    b = _II(b, c, d, a, 0, 21, 0xEB86D391)
    lo = (0x67452301 + a) & _M32
    hi = (0xEFCDAB89 + b) & _M32
    if n_bits <= 32:
        return lo & ((1 << n_bits) - 1)
    return lo | ((hi & ((1 << (n_bits - 32)) - 1)) << 32)


@njit(cache=True, nogil=True)
def prf_test(x, n_bits):
    z = np.uint64(x) + PRF_KEY
    z = (z ^ (z >> np.uint64(30))) * _PRF_M1
    z = (z ^ (z >> np.uint64(27))) * _PRF_M2
    z = z ^ (z >> np.uint64(31))
    return np.int64(z & np.uint64((1 << n_bits) - 1))


@njit(cache=True, nogil=True)
def f_eval(fid, x, n_bits):
    if fid == FN_MD5_TRUNC:
        return md5_trunc(x, n_bits)
    return prf_test(x, n_bits)


@njit(cache=True, nogil=True)
def build_chains(sps, fid, n_bits, dp_limit, offset, t_hat):
    """Iterate every start point to its first distinguished point.

    ``offset`` is the table's reduction offset ``i * t_hat``.  Returns
    (lens, eps, invocations); ``lens[j] == 0`` marks a discarded chain.
    """
    mask = (1 << n_bits) - 1
    m = sps.shape[0]
    lens = np.zeros(m, dtype=np.int64)
    eps = np.zeros(m, dtype=np.int64)
    cost = 0
    for j in range(m):
        x = sps[j]
        for s in range(1, t_hat + 1):
            x = (f_eval(fid, x, n_bits) + offset + s) & mask
            cost += 1
            if x < dp_limit:
                lens[j] = s
                eps[j] = x
                break
    return lens, eps, cost


@njit(cache=True, nogil=True)
def column_values(sps, fid, n_bits, dp_limit, offset, t_hat, columns):
    """Value of each chain at the requested matrix columns, before any discard.

    Column 0 is the start point; column u holds X_{u+1}.  A chain that
    ended at a DP in column e < u contributes -1 at column u.  Chains are
    iterated past ``t_hat`` (up to the largest requested column) so that the
    undiscarded matrix can be measured.  Also returns each chain's length
    to its first DP, or 0 if none was met within the iterated range.
    """
    mask = (1 << n_bits) - 1
    m = sps.shape[0]
    ncol = columns.shape[0]
    last = 0
    for k in range(ncol):
        if columns[k] > last:
            last = columns[k]
    horizon = max(last, t_hat)
    out = np.full((m, ncol), -1, dtype=np.int64)
    lens = np.zeros(m, dtype=np.int64)
    for j in range(m):
        x = sps[j]
        for k in range(ncol):
            if columns[k] == 0:
                out[j, k] = x
        for s in range(1, horizon + 1):
            x = (f_eval(fid, x, n_bits) + offset + s) & mask
            for k in range(ncol):
                if columns[k] == s:
                    out[j, k] = x
            if x < dp_limit:
                lens[j] = s
                break
    return out, lens


@njit(cache=True, nogil=True)
def _lower_bound(arr, lo, hi, v):
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True, nogil=True)
def search_one(y, fid, n_bits, dp_limit, t_hat, table_ids, eps, sps, len_index, early_break, planted):
    """Online search for one target across all tables.

    ``eps``/``sps`` are the tables' records concatenated in table order;
    ``len_index[ti, L] .. len_index[ti, L+1]`` is the slice of table ``ti``
    with chain length ``L``.  Returns a fixed-size int64 vector:
    [found, x, table_pos, iteration, sp, f_invocations, alarms, false_alarms,
    iterations_executed, alarm_cost, chain_cost, matched_len, any_preimage_seen].

    With ``planted >= 0`` a regenerated point only counts as success if it
    equals ``planted``; other pre-images of y are treated as false alarms.
    """
    mask = (1 << n_bits) - 1
    ntab = table_ids.shape[0]
    res = np.zeros(13, dtype=np.int64)
    finv = 0
    alarms = 0
    false_alarms = 0
    alarm_cost = 0
    chain_cost = 0
    for s in range(1, t_hat + 1):
        res[8] = s
        p = t_hat - s + 1
        for ti in range(ntab):
            offset = table_ids[ti] * t_hat
            q = (y + offset + p) & mask
            col = p
            while True:
                if q < dp_limit:
                    lo = len_index[ti, col]
                    hi = len_index[ti, col + 1]
                    j = _lower_bound(eps, lo, hi, q)
                    while j < hi and eps[j] == q:
                        alarms += 1
                        alarm_cost += p
                        x = sps[j]
                        for u in range(1, p):
                            x = (f_eval(fid, x, n_bits) + offset + u) & mask
                        finv += p
                        hit = f_eval(fid, x, n_bits) == y
                        if hit:
                            res[12] = 1
                        if hit and (planted < 0 or x == planted):
                            res[0] = 1
                            res[1] = x
                            res[2] = ti
                            res[3] = s
                            res[4] = sps[j]
                            res[5] = finv
                            res[6] = alarms
                            res[7] = false_alarms
                            res[9] = alarm_cost
                            res[10] = chain_cost
                            res[11] = col
                            return res
                        false_alarms += 1
                        j += 1
                    if early_break:
                        break
                if col == t_hat:
                    break
                col += 1
                q = (f_eval(fid, q, n_bits) + offset + col) & mask
                finv += 1
                chain_cost += 1
    res[5] = finv
    res[6] = alarms
    res[7] = false_alarms
    res[9] = alarm_cost
    res[10] = chain_cost
    return res


@njit(cache=True, nogil=True)
def search_many(ys, planted, fid, n_bits, dp_limit, t_hat, table_ids, eps, sps, len_index, early_break):
    out = np.zeros((ys.shape[0], 13), dtype=np.int64)
    for k in range(ys.shape[0]):
        out[k] = search_one(
            ys[k], fid, n_bits, dp_limit, t_hat, table_ids, eps, sps, len_index, early_break, planted[k]
        )
    return out


@njit(cache=True, nogil=True)
def evaluate_many(xs, fid, n_bits):
    out = np.empty_like(xs)
    for k in range(xs.shape[0]):
        out[k] = f_eval(fid, xs[k], n_bits)
    return out
