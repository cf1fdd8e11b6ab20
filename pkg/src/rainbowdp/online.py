"""Online phase: search a target image across all rainbow-DP tables."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import CounterSet, SpaceParams
from .storage import PrecompTable


@dataclass
class SearchOutcome:
    target: int
    found: int | None
    counters: CounterSet
    found_at: tuple[int, int, int] | None = None  # (table_index, iteration, sp)
    # sum of the hypothesized positions p over all alarms (each costs p invocations)
    alarm_cost: int = 0
    # forward steps spent extending online chains
    chain_cost: int = 0
    # length of the stored chain that yielded the pre-image
    found_len: int | None = None
    # position of the winning table in ascending table_index order
    found_pos: int | None = None
    # some regenerated point was a pre-image of the target (planted or not)
    any_preimage: bool = False

    @property
    def success(self) -> bool:
        return self.found is not None


@dataclass
class BatchStats:
    n_targets: int = 0
    successes: int = 0
    success_rate: float = 0.0
    mean_invocations: float = 0.0
    mean_alarms: float = 0.0
    mean_false_alarms: float = 0.0
    any_preimage_rate: float = 0.0
    total: CounterSet = field(default_factory=CounterSet)


class PackedTables:
    """Tables flattened into the arrays the search kernel consumes."""

    def __init__(self, tables: list[PrecompTable]):
        if not tables:
            raise ValueError("no tables given")
        tables = sorted(tables, key=lambda tb: tb.table_index)
        p0 = tables[0].params
        ids = [tb.table_index for tb in tables]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate table indices {ids}")
        for tb in tables:
            if tb.params != p0:
                raise ValueError(f"table {tb.table_index} parameters differ from table {tables[0].table_index}")
        self.params: SpaceParams = p0
        self.tables = tables
        self.table_ids = np.array(ids, dtype=np.int64)
        self.eps = np.concatenate([tb.eps for tb in tables])
        self.sps = np.concatenate([tb.sps for tb in tables])
        offsets = np.cumsum([0] + [tb.m0 for tb in tables[:-1]])
        self.len_index = np.stack([tb.length_index + off for tb, off in zip(tables, offsets)])

    def run(self, ys: np.ndarray, early_break: bool = False, planted=None) -> np.ndarray:
        p = self.params
        ys = np.ascontiguousarray(ys, dtype=np.int64)
        planted = np.full(len(ys), -1, dtype=np.int64) if planted is None else np.ascontiguousarray(planted, dtype=np.int64)
        return kernels.search_many(
            ys, planted, p.fid, p.n_bits, p.dp_limit, p.t_hat,
            self.table_ids, self.eps, self.sps, self.len_index, early_break,
        )


def _outcome(y: int, row, table_ids) -> SearchOutcome:
    counters = CounterSet(
        f_invocations=int(row[5]), alarms=int(row[6]), false_alarms=int(row[7]),
        iterations_executed=int(row[8]),
    )
    if row[0]:
        return SearchOutcome(
            y, int(row[1]), counters, (int(table_ids[row[2]]), int(row[3]), int(row[4])),
            int(row[9]), int(row[10]), int(row[11]), int(row[2]), bool(row[12]),
        )
    return SearchOutcome(y, None, counters, None, int(row[9]), int(row[10]), any_preimage=bool(row[12]))


def _pack(tables) -> PackedTables:
    return tables if isinstance(tables, PackedTables) else PackedTables(list(tables))


def search(y_star: int, tables, early_break: bool = False, planted: int | None = None) -> SearchOutcome:
    """Search one target image across all tables.

    Iteration s hypothesizes that the pre-image sits at column p = t_hat - s + 1
    of some chain; every table is tried before moving to the next s.  Any
    returned pre-image has been re-verified with f.
    """
    packed = _pack(tables)
    if not 0 <= y_star < packed.params.N:
        raise ValueError(f"target {y_star} outside [0, {packed.params.N})")
    row = packed.run(np.array([y_star]), early_break, None if planted is None else np.array([planted]))[0]
    return _outcome(y_star, row, packed.table_ids)


def batch_search(targets, tables, workers: int = 1, early_break: bool = False, planted=None):
    """Search every target independently; returns (outcomes, stats).

    ``planted`` optionally gives, per target, the pre-image the target was
    made from; a search then only succeeds by recovering that point.
    Results do not depend on ``workers``: targets are split into contiguous
    chunks, searched on threads and re-concatenated in order.
    """
    packed = _pack(tables)
    ys = np.asarray(list(targets) if not isinstance(targets, np.ndarray) else targets, dtype=np.int64)
    if len(ys) == 0:
        return [], BatchStats()
    if ys.min() < 0 or ys.max() >= packed.params.N:
        raise ValueError("target outside the search space")
    if planted is None:
        planted = np.full(len(ys), -1, dtype=np.int64)
    planted = np.asarray(planted, dtype=np.int64)
    if len(planted) != len(ys):
        raise ValueError("planted pre-images must match the targets one to one")
    n_parts = max(1, min(workers, len(ys)))
    parts = list(zip(np.array_split(ys, n_parts), np.array_split(planted, n_parts)))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            rows = np.concatenate(list(ex.map(lambda a: packed.run(a[0], early_break, a[1]), parts)))
    else:
        rows = np.concatenate([packed.run(y, early_break, x) for y, x in parts])
    outcomes = [_outcome(int(y), row, packed.table_ids) for y, row in zip(ys, rows)]
    return outcomes, summarize(outcomes)


def summarize(outcomes: list[SearchOutcome]) -> BatchStats:
    if not outcomes:
        return BatchStats()
    total = CounterSet()
    for o in outcomes:
        total += o.counters
    n = len(outcomes)
    wins = sum(o.success for o in outcomes)
    return BatchStats(
        n_targets=n,
        successes=wins,
        success_rate=wins / n,
        mean_invocations=total.f_invocations / n,
        mean_alarms=total.alarms / n,
        mean_false_alarms=total.false_alarms / n,
        any_preimage_rate=sum(o.any_preimage for o in outcomes) / n,
        total=total,
    )


def expected_chain_cost(outcome: SearchOutcome, l: int, t_hat: int) -> int:
    """Forward steps the search must have spent, from where it stopped.

    Iteration s costs s - 1 steps per table.  A successful search stops at
    the winning table, part way along its online chain: at the column equal
    to the matched chain's length.
    """
    s_done = outcome.counters.iterations_executed
    if outcome.found_at is None:
        return l * s_done * (s_done - 1) // 2
    p = t_hat - s_done + 1
    return l * (s_done - 1) * (s_done - 2) // 2 + outcome.found_pos * (s_done - 1) + (outcome.found_len - p)


def cost_identity_holds(outcome: SearchOutcome, l: int, t_hat: int) -> bool:
    """f_invocations == forward chain steps + sum over alarms of p.

    Holds for the default search (no early break); ``l`` is the number of
    tables searched.
    """
    chain = expected_chain_cost(outcome, l, t_hat)
    return chain == outcome.chain_cost and outcome.counters.f_invocations == chain + outcome.alarm_cost
