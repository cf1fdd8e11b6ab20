"""Shared small-N fixtures and pure-Python oracles."""

import sys

import pytest

from rainbowdp.core import CounterSet, SpaceParams, evaluate, is_dp, reduce, step
from rainbowdp.offline import build_tables
from rainbowdp.storage import lookup

# N = 2^12, t = 2^5: the small oracle configuration
SMALL = SpaceParams.create(n_bits=12, k_bits=5, c=2.0, l=1, m0_tilde=96, seed=7)
SMALL_MULTI = SpaceParams.create(n_bits=12, k_bits=5, c=1.5, l=3, m0_tilde=48, seed=11)


@pytest.fixture(scope="session")
def small_tables():
    return build_tables(SMALL)


@pytest.fixture(scope="session")
def multi_tables():
    return build_tables(SMALL_MULTI)


def chain_points(table):
    """Every matrix element X_1..X_len of every stored chain."""
    p, i = table.params, table.table_index
    out = []
    for sp, ln in zip(table.sps.tolist(), table.lens.tolist()):
        x = sp
        out.append(x)
        for s in range(1, ln):
            x = step(i, s, x, p)
            out.append(x)
    return out


def matrix_images(tables):
    pts = set()
    for tb in tables:
        pts.update(chain_points(tb))
    p = tables[0].params
    return pts, {evaluate(x, p) for x in pts}


def reference_search(y, tables, early_break=False, planted=None):
    """Straightforward transcription of the online procedure, for cross-checking.

    Returns (found, counters, found_at).
    """
    tables = sorted(tables, key=lambda tb: tb.table_index)
    p = tables[0].params
    cnt = CounterSet()
    for s in range(1, p.t_hat + 1):
        cnt.iterations_executed = s
        pos = p.t_hat - s + 1
        for tb in tables:
            i = tb.table_index
            q = reduce(i, pos, y, p)
            col = pos
            while True:
                if is_dp(q, p):
                    for sp in lookup(tb, col, q):
                        cnt.alarms += 1
                        x = sp
                        for u in range(1, pos):
                            x = step(i, u, x, p, cnt)
                        if evaluate(x, p, cnt) == y and (planted is None or x == planted):
                            return x, cnt, (i, s, sp)
                        cnt.false_alarms += 1
                    if early_break:
                        break
                if col == p.t_hat:
                    break
                col += 1
                q = step(i, col, q, p, cnt)
    return None, cnt, None


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
