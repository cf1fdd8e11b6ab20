"""Offline phase: start points, chain construction and table building."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

import numpy as np

from . import kernels
from .core import ConfigError, CounterSet, SpaceParams, is_dp, step
from .storage import PrecompTable, sort_records

log = logging.getLogger(__name__)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


class BuildError(RuntimeError):
    pass


class ChainRecord(NamedTuple):
    sp: int
    len: int
    ep: int


def splitmix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer on a uint64 array (wrapping arithmetic)."""
    z = z.astype(np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def generate_start_points(m0_tilde: int, table_index: int, seed: int, n_bits: int,
                          scheme: str = "mixed") -> np.ndarray:
    """``m0_tilde`` distinct start points for one table.

    "mixed": candidate j is ``splitmix64(seed + golden * ((table_index << 32) + j + 1))``
    truncated to n_bits; a candidate already taken is replaced by probing
    upward (mod N) to the next free value, in order of j.
    "sequential": sp_j = j.
    """
    N = 1 << n_bits
    if m0_tilde > N:
        raise ConfigError(f"cannot draw {m0_tilde} distinct start points from N={N}")
    if scheme == "sequential":
        return np.arange(m0_tilde, dtype=np.int64)
    if scheme != "mixed":
        raise ConfigError(f"unknown start point scheme {scheme!r}")
    j = np.arange(m0_tilde, dtype=np.uint64) + np.uint64((table_index << 32) + 1)
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + _GOLDEN * j
    cand = (splitmix64(z) & np.uint64(N - 1)).astype(np.int64)
    if len(np.unique(cand)) == m0_tilde:
        return cand
    used = set()
    out = np.empty(m0_tilde, dtype=np.int64)
    for k, v in enumerate(cand.tolist()):
        while v in used:
            v = (v + 1) % N
        used.add(v)
        out[k] = v
    return out


def build_chain(i: int, sp: int, params: SpaceParams, counters: CounterSet | None = None):
    """Iterate one chain from ``sp``; None if no DP within t_hat steps."""
    x = sp
    for s in range(1, params.t_hat + 1):
        x = step(i, s, x, params, counters)
        if is_dp(x, params):
            return ChainRecord(sp, s, x)
    return None


def _chunks(arr, n):
    n = max(1, min(n, len(arr)))
    return np.array_split(arr, n)


def build_chains(params: SpaceParams, i: int, sps: np.ndarray, workers: int = 1):
    """Compiled batch version of build_chain. Returns (lens, eps, invocations); len 0 = discarded."""
    def run(part):
        return kernels.build_chains(
            np.ascontiguousarray(part), params.fid, params.n_bits, params.dp_limit,
            i * params.t_hat, params.t_hat,
        )

    parts = _chunks(sps, workers)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, parts))
    else:
        results = [run(p) for p in parts]
    lens = np.concatenate([r[0] for r in results])
    eps = np.concatenate([r[1] for r in results])
    return lens, eps, int(sum(r[2] for r in results))


def build_table(i: int, params: SpaceParams, workers: int = 1, scheme: str = "mixed") -> PrecompTable:
    """Build table ``i``: all surviving chains sorted by (len, ep, sp)."""
    if not 0 <= i < params.l:
        raise ConfigError(f"table index {i} outside [0, {params.l})")
    sps = generate_start_points(params.m0_tilde, i, params.seed, params.n_bits, scheme)
    lens, eps, cost = build_chains(params, i, sps, workers)
    keep = lens > 0
    if not keep.any():
        raise BuildError(f"table {i}: no chain reached a distinguished point within t_hat={params.t_hat}")
    lens, eps, sps = sort_records(lens[keep], eps[keep], sps[keep])
    log.info("table %d: %d of %d chains kept, %d invocations", i, len(lens), params.m0_tilde, cost)
    return PrecompTable(params, i, lens, eps, sps, cost)


def build_tables(params: SpaceParams, workers: int = 1, scheme: str = "mixed") -> list[PrecompTable]:
    return [build_table(i, params, workers, scheme) for i in range(params.l)]


def verify_record(i: int, rec: ChainRecord, params: SpaceParams) -> bool:
    """Regenerate a stored chain and check it ends at its first DP after exactly len steps."""
    if not 1 <= rec.len <= params.t_hat or not is_dp(rec.ep, params):
        return False
    x = rec.sp
    for s in range(1, rec.len + 1):
        x = step(i, s, x, params)
        if s < rec.len and is_dp(x, params):
            return False
    return x == rec.ep


def verify_table(table: PrecompTable, fraction: float = 0.01, seed: int = 0) -> int:
    """Regeneration spot-check; all records at N <= 2**16. Returns the count checked."""
    params = table.params
    m = table.m0
    if params.n_bits <= 16 or fraction >= 1:
        idx = np.arange(m)
    else:
        rng = np.random.default_rng(seed)
        idx = rng.choice(m, size=max(1, int(m * fraction)), replace=False)
    for k in idx:
        rec = ChainRecord(int(table.sps[k]), int(table.lens[k]), int(table.eps[k]))
        if not verify_record(table.table_index, rec, params):
            raise BuildError(f"record {k} of table {table.table_index} fails regeneration: {rec}")
    return len(idx)
