import numpy as np
import pytest

from rainbowdp.core import SpaceParams, evaluate
from rainbowdp.offline import build_tables
from rainbowdp.online import batch_search, cost_identity_holds, search, summarize

from conftest import SMALL, SMALL_MULTI, chain_points, matrix_images, reference_search


@pytest.mark.parametrize("which", ["small_tables", "multi_tables"])
def test_completeness_every_matrix_element(which, request):
    tables = request.getfixturevalue(which)
    p = tables[0].params
    pts, _ = matrix_images(tables)
    pts = sorted(pts)
    ys = [evaluate(x, p) for x in pts]
    outcomes, stats = batch_search(ys, tables)
    assert stats.success_rate == 1.0
    for o in outcomes:
        assert evaluate(o.found, p) == o.target
        assert cost_identity_holds(o, p.l, p.t_hat)


@pytest.mark.parametrize("which", ["small_tables", "multi_tables"])
def test_unreachable_targets_fail(which, request):
    tables = request.getfixturevalue(which)
    p = tables[0].params
    _, images = matrix_images(tables)
    ys = [y for y in range(p.N) if y not in images]
    assert ys
    outcomes, stats = batch_search(ys, tables)
    assert stats.successes == 0
    for o in outcomes:
        assert o.found is None and o.found_at is None
        assert o.counters.iterations_executed == p.t_hat
        assert o.counters.false_alarms == o.counters.alarms
        assert cost_identity_holds(o, p.l, p.t_hat)


def test_failure_cost_closed_form(small_tables):
    p = SMALL
    _, images = matrix_images(small_tables)
    y = next(y for y in range(p.N) if y not in images)
    o = search(y, small_tables)
    assert o.chain_cost == p.t_hat * (p.t_hat - 1) // 2
    assert o.counters.f_invocations == o.chain_cost + o.alarm_cost


@pytest.mark.parametrize("which", ["small_tables", "multi_tables"])
def test_matches_reference_search(which, request):
    tables = request.getfixturevalue(which)
    p = tables[0].params
    rng = np.random.default_rng(0)
    xs = rng.integers(0, p.N, size=60).tolist()
    for x in xs:
        y = evaluate(x, p)
        for planted in (None, x):
            o = search(y, tables, planted=planted)
            found, cnt, at = reference_search(y, tables, planted=planted)
            assert o.found == found and o.found_at == at
            assert o.counters == cnt


def test_early_break_same_outcome_on_matrix_targets(multi_tables):
    p = SMALL_MULTI
    pts, _ = matrix_images(multi_tables)
    ys = sorted({evaluate(x, p) for x in pts})
    full, _ = batch_search(ys, multi_tables)
    short, _ = batch_search(ys, multi_tables, early_break=True)
    for a, b in zip(full, short):
        assert a.success and b.success
        assert b.counters.f_invocations <= a.counters.f_invocations
    # and the compiled early-break path agrees with the reference
    for y in ys[:40]:
        o = search(y, multi_tables, early_break=True)
        found, cnt, at = reference_search(y, multi_tables, early_break=True)
        assert (o.found, o.found_at, o.counters) == (found, at, cnt)


def test_worker_independence():
    p = SpaceParams.create(16, 6, 1.8, l=2, m0_tilde=2000, seed=9)
    tables = build_tables(p)
    ys = np.random.default_rng(3).integers(0, p.N, size=101)
    a, sa = batch_search(ys, tables, workers=1)
    b, sb = batch_search(ys, tables, workers=4)
    assert a == b and sa == sb


def test_planted_counts_other_preimages_as_false_alarms(small_tables):
    p = SMALL
    pts, _ = matrix_images(small_tables)
    for x in sorted(pts):
        y = evaluate(x, p)
        o = search(y, small_tables, planted=x)
        assert o.found == x and o.any_preimage
        assert cost_identity_holds(o, p.l, p.t_hat)


def test_batch_stats(small_tables):
    outcomes, stats = batch_search([], small_tables)
    assert outcomes == [] and stats.n_targets == 0
    outcomes, stats = batch_search(range(200), small_tables)
    assert stats.success_rate == sum(o.success for o in outcomes) / 200
    assert summarize(outcomes) == stats


def test_mismatched_tables_rejected(small_tables, multi_tables):
    with pytest.raises(ValueError):
        search(0, [small_tables[0], multi_tables[0]])
    with pytest.raises(ValueError):
        search(0, [multi_tables[0], multi_tables[0]])
    with pytest.raises(ValueError):
        search(SMALL.N, small_tables)


def test_chain_points_cover_start_points(small_tables):
    pts = chain_points(small_tables[0])
    assert set(small_tables[0].sps.tolist()) <= set(pts)
