"""Classic Hellman, Hellman-DP and rainbow tradeoffs for comparison runs.

Reduction families:
    hellman, hellman_dp:  r_i(y) = (y + i) mod N            (one per table)
    rainbow:              r_{i,s}(y) = (y + i*t + s) mod N  (one per column)

Only desk-scale empirical engines live here; the optimal coefficients of
these methods are quoted constants (``reference_coefficients``).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from . import kernels, storage
from .core import FUNCTIONS, ConfigError, CounterSet, round_half_up
from .offline import generate_start_points
from .online import SearchOutcome, summarize

METHODS = ("hellman", "hellman_dp", "rainbow")
DEFAULT_BUDGET = 1 << 36


@dataclass(frozen=True)
class BaselineConfig:
    """``t`` is the fixed chain length, or for hellman_dp the expected one (2**k_bits)."""

    method: str
    m: int
    t: int
    l: int
    n_bits: int
    seed: int = 0
    function_id: str = "md5-trunc"
    c: float = 1.8  # hellman_dp chain-length bound ratio
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown baseline method {self.method!r}")
        if min(self.m, self.t, self.l) < 1 or not 0 < self.n_bits <= 62:
            raise ConfigError("m, t, l must be positive and 0 < n_bits <= 62")
        if self.m > self.N:
            raise ConfigError("more chains than points")
        if self.function_id not in FUNCTIONS:
            raise ConfigError(f"unknown function id {self.function_id!r}")
        if self.method == "hellman_dp":
            if self.t & (self.t - 1) or self.t >= self.N:
                raise ConfigError("hellman_dp needs t a power of two below N")
        if self.m * self.t_max * self.l > self.budget:
            raise ConfigError(f"m*t*l = {self.m * self.t_max * self.l} exceeds the budget cap {self.budget}")

    @property
    def N(self) -> int:
        return 1 << self.n_bits

    @property
    def k_bits(self) -> int:
        return self.t.bit_length() - 1 if self.method == "hellman_dp" else 0

    @property
    def dp_limit(self) -> int:
        return 1 << (self.n_bits - self.k_bits) if self.method == "hellman_dp" else 0

    @property
    def t_max(self) -> int:
        """Longest chain allowed."""
        return round_half_up(self.c * self.t) if self.method == "hellman_dp" else self.t

    @property
    def fid(self) -> int:
        return FUNCTIONS[self.function_id]


@dataclass(eq=False)
class BaselineTable:
    config: BaselineConfig
    table_index: int
    lens: np.ndarray
    eps: np.ndarray
    sps: np.ndarray
    precomp_invocations: int

    @property
    def m0(self) -> int:
        return len(self.eps)

    def __eq__(self, other):
        return (
            isinstance(other, BaselineTable)
            and self.config == other.config
            and self.table_index == other.table_index
            and self.precomp_invocations == other.precomp_invocations
            and all(np.array_equal(a, b) for a, b in
                    ((self.lens, other.lens), (self.eps, other.eps), (self.sps, other.sps)))
        )


# --- compiled chain builders -------------------------------------------------

@njit(cache=True, nogil=True)
def _hellman_chains(sps, fid, n_bits, i, t):
    mask = (1 << n_bits) - 1
    eps = np.empty_like(sps)
    for j in range(sps.shape[0]):
        x = sps[j]
        for _ in range(t):
            x = (kernels.f_eval(fid, x, n_bits) + i) & mask
        eps[j] = x
    return eps, sps.shape[0] * t


@njit(cache=True, nogil=True)
def _rainbow_chains(sps, fid, n_bits, offset, t):
    mask = (1 << n_bits) - 1
    eps = np.empty_like(sps)
    for j in range(sps.shape[0]):
        x = sps[j]
        for s in range(1, t + 1):
            x = (kernels.f_eval(fid, x, n_bits) + offset + s) & mask
        eps[j] = x
    return eps, sps.shape[0] * t


@njit(cache=True, nogil=True)
def _hellman_dp_chains(sps, fid, n_bits, i, dp_limit, t_max):
    mask = (1 << n_bits) - 1
    lens = np.zeros(sps.shape[0], dtype=np.int64)
    eps = np.zeros(sps.shape[0], dtype=np.int64)
    cost = 0
    for j in range(sps.shape[0]):
        x = sps[j]
        for s in range(1, t_max + 1):
            x = (kernels.f_eval(fid, x, n_bits) + i) & mask
            cost += 1
            if x < dp_limit:
                lens[j] = s
                eps[j] = x
                break
    return lens, eps, cost


# --- compiled searches ---------------------------------------------------------
# Result vector layout matches kernels.search_one.

@njit(cache=True, nogil=True)
def _hellman_search(y, fid, n_bits, t, table_ids, eps, sps, bounds, planted):
    mask = (1 << n_bits) - 1
    res = np.zeros(13, dtype=np.int64)
    finv = 0
    alarms = 0
    fa = 0
    for ti in range(table_ids.shape[0]):
        i = table_ids[ti]
        lo = bounds[ti]
        hi = bounds[ti + 1]
        q = (y + i) & mask
        for jstep in range(1, t + 1):
            k = kernels._lower_bound(eps, lo, hi, q)
            while k < hi and eps[k] == q:
                alarms += 1
                u = t - jstep
                x = sps[k]
                for _ in range(u):
                    x = (kernels.f_eval(fid, x, n_bits) + i) & mask
                finv += u + 1
                hit = kernels.f_eval(fid, x, n_bits) == y
                if hit:
                    res[12] = 1
                if hit and (planted < 0 or x == planted):
                    res[0] = 1
                    res[1] = x
                    res[2] = ti
                    res[3] = jstep
                    res[4] = sps[k]
                    res[5] = finv
                    res[6] = alarms
                    res[7] = fa
                    res[8] = ti + 1
                    return res
                fa += 1
                k += 1
            if jstep < t:
                q = (kernels.f_eval(fid, q, n_bits) + i) & mask
                finv += 1
    res[5] = finv
    res[6] = alarms
    res[7] = fa
    res[8] = table_ids.shape[0]
    return res


@njit(cache=True, nogil=True)
def _hellman_dp_search(y, fid, n_bits, dp_limit, t_max, table_ids, lens, eps, sps, bounds, planted):
    mask = (1 << n_bits) - 1
    res = np.zeros(13, dtype=np.int64)
    finv = 0
    alarms = 0
    fa = 0
    for ti in range(table_ids.shape[0]):
        i = table_ids[ti]
        lo = bounds[ti]
        hi = bounds[ti + 1]
        q = (y + i) & mask
        d = 0
        while True:
            if q < dp_limit:
                k = kernels._lower_bound(eps, lo, hi, q)
                while k < hi and eps[k] == q:
                    # f_i(x*) = X_{u+1} and q = X_{u+1+d} = X_len  =>  u = len - 1 - d
                    u = lens[k] - 1 - d
                    if u >= 0:
                        alarms += 1
                        x = sps[k]
                        for _ in range(u):
                            x = (kernels.f_eval(fid, x, n_bits) + i) & mask
                        finv += u + 1
                        hit = kernels.f_eval(fid, x, n_bits) == y
                        if hit:
                            res[12] = 1
                        if hit and (planted < 0 or x == planted):
                            res[0] = 1
                            res[1] = x
                            res[2] = ti
                            res[3] = d + 1
                            res[4] = sps[k]
                            res[5] = finv
                            res[6] = alarms
                            res[7] = fa
                            res[8] = ti + 1
                            return res
                        fa += 1
                    k += 1
                break
            if d + 1 >= t_max:
                break
            q = (kernels.f_eval(fid, q, n_bits) + i) & mask
            finv += 1
            d += 1
    res[5] = finv
    res[6] = alarms
    res[7] = fa
    res[8] = table_ids.shape[0]
    return res


@njit(cache=True, nogil=True)
def _rainbow_search(y, fid, n_bits, t, table_ids, eps, sps, bounds, planted):
    mask = (1 << n_bits) - 1
    res = np.zeros(13, dtype=np.int64)
    finv = 0
    alarms = 0
    fa = 0
    for s in range(1, t + 1):
        res[8] = s
        p = t - s + 1
        for ti in range(table_ids.shape[0]):
            offset = table_ids[ti] * t
            lo = bounds[ti]
            hi = bounds[ti + 1]
            q = (y + offset + p) & mask
            for col in range(p + 1, t + 1):
                q = (kernels.f_eval(fid, q, n_bits) + offset + col) & mask
                finv += 1
            k = kernels._lower_bound(eps, lo, hi, q)
            while k < hi and eps[k] == q:
                alarms += 1
                x = sps[k]
                for u in range(1, p):
                    x = (kernels.f_eval(fid, x, n_bits) + offset + u) & mask
                finv += p
                hit = kernels.f_eval(fid, x, n_bits) == y
                if hit:
                    res[12] = 1
                if hit and (planted < 0 or x == planted):
                    res[0] = 1
                    res[1] = x
                    res[2] = ti
                    res[3] = s
                    res[4] = sps[k]
                    res[5] = finv
                    res[6] = alarms
                    res[7] = fa
                    return res
                fa += 1
                k += 1
    res[5] = finv
    res[6] = alarms
    res[7] = fa
    return res


# --- public API ----------------------------------------------------------------

def build_baseline(config: BaselineConfig) -> list[BaselineTable]:
    """Build all ``config.l`` tables; records sorted by (ep, sp)."""
    tables = []
    for i in range(config.l):
        sps = generate_start_points(config.m, i, config.seed, config.n_bits)
        if config.method == "hellman":
            eps, cost = _hellman_chains(sps, config.fid, config.n_bits, i, config.t)
            lens = np.full(len(sps), config.t, dtype=np.int64)
        elif config.method == "rainbow":
            eps, cost = _rainbow_chains(sps, config.fid, config.n_bits, i * config.t, config.t)
            lens = np.full(len(sps), config.t, dtype=np.int64)
        else:
            lens, eps, cost = _hellman_dp_chains(
                sps, config.fid, config.n_bits, i, config.dp_limit, config.t_max
            )
            keep = lens > 0
            lens, eps, sps = lens[keep], eps[keep], sps[keep]
        order = np.lexsort((sps, eps))
        tables.append(BaselineTable(config, i, lens[order], eps[order], sps[order], int(cost)))
    return tables


def _outcome(y, row, table_ids) -> SearchOutcome:
    counters = CounterSet(int(row[5]), int(row[6]), int(row[7]), int(row[8]))
    found_at = (int(table_ids[row[2]]), int(row[3]), int(row[4])) if row[0] else None
    return SearchOutcome(
        y, int(row[1]) if row[0] else None, counters, found_at, any_preimage=bool(row[12]),
    )


class _Packed:
    def __init__(self, tables: list[BaselineTable]):
        tables = sorted(tables, key=lambda tb: tb.table_index)
        self.config = tables[0].config
        if any(tb.config != self.config for tb in tables):
            raise ValueError("baseline tables have different configurations")
        self.table_ids = np.array([tb.table_index for tb in tables], dtype=np.int64)
        self.lens = np.concatenate([tb.lens for tb in tables])
        self.eps = np.concatenate([tb.eps for tb in tables])
        self.sps = np.concatenate([tb.sps for tb in tables])
        self.bounds = np.cumsum([0] + [tb.m0 for tb in tables]).astype(np.int64)

    def run(self, y: int, planted: int = -1) -> np.ndarray:
        cfg = self.config
        if cfg.method == "hellman":
            return _hellman_search(y, cfg.fid, cfg.n_bits, cfg.t, self.table_ids, self.eps, self.sps,
                                   self.bounds, planted)
        if cfg.method == "rainbow":
            return _rainbow_search(y, cfg.fid, cfg.n_bits, cfg.t, self.table_ids, self.eps, self.sps,
                                   self.bounds, planted)
        return _hellman_dp_search(
            y, cfg.fid, cfg.n_bits, cfg.dp_limit, cfg.t_max, self.table_ids, self.lens, self.eps,
            self.sps, self.bounds, planted,
        )


def search_baseline(tables, y_star: int, planted: int | None = None) -> SearchOutcome:
    """Method-appropriate online search; same counter contract as the rainbow-DP engine."""
    packed = tables if isinstance(tables, _Packed) else _Packed(list(tables))
    if not 0 <= y_star < packed.config.N:
        raise ValueError("target outside the search space")
    row = packed.run(int(y_star), -1 if planted is None else int(planted))
    return _outcome(int(y_star), row, packed.table_ids)


def batch_search_baseline(targets, tables, planted=None):
    packed = _Packed(list(tables))
    if planted is None:
        planted = [-1] * len(targets)
    outcomes = [search_baseline(packed, int(y), int(x)) for y, x in zip(targets, planted)]
    return outcomes, summarize(outcomes)


def save_baseline(table: BaselineTable, path) -> None:
    cfg = table.config
    header = dict(
        n_bits=cfg.n_bits, k_bits=cfg.k_bits, c=cfg.c if cfg.method == "hellman_dp" else 1.0,
        t_hat=cfg.t_max, l=cfg.l, table_index=table.table_index, m0_tilde=cfg.m, seed=cfg.seed,
        fn_tag=f"{cfg.method}:{cfg.function_id}",
    )
    storage.save_raw(path, storage.VERSION_BASELINE, header, table.lens, table.eps, table.sps,
                     table.precomp_invocations)


def load_baseline(path: str | Path) -> BaselineTable:
    h, lens, eps, sps = storage.load_raw(path)
    if h["version"] != storage.VERSION_BASELINE:
        raise storage.TableFormatError("version", "not a baseline table file")
    method, _, fn = h["fn_tag"].partition(":")
    t = 1 << h["k_bits"] if method == "hellman_dp" else h["t_hat"]
    cfg = BaselineConfig(
        method=method, m=h["m0_tilde"], t=t, l=h["l"], n_bits=h["n_bits"], seed=h["seed"],
        function_id=fn, c=h["c"] if method == "hellman_dp" else 1.8,
    )
    return BaselineTable(cfg, h["table_index"], lens, eps, sps, h["precomp_invocations"])


# Optimal coefficients quoted from the literature: (method, p, D_pc, TM^2 / N^2).
_REFERENCE = (
    ("hellman", 0.80, 2.1733, 3.11),
    ("rainbow", 0.80, 1.9814, 2.20),
    ("hellman_dp", 0.80, 2.9532, 11.58),
    ("rainbow_dp", 0.80, 3.0, 24.93),
    ("hellman", 0.90, 3.1093, 7.17),
    ("rainbow", 0.90, 2.8068, 4.68),
    ("hellman_dp", 0.90, 4.2250, 26.59),
    ("rainbow_dp", 0.90, 4.0, 66.95),
)


@dataclass(frozen=True)
class ReferenceRow:
    method: str
    p: float
    D_pc: float
    D_tcr: float


def reference_coefficients() -> list[ReferenceRow]:
    return [ReferenceRow(*r) for r in _REFERENCE]
