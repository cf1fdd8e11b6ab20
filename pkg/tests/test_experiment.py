import csv
import json

import pytest

from rainbowdp import experiment
from rainbowdp.core import ConfigError, SpaceParams

SMALL_EXP = SpaceParams.create(16, 6, 2.04, l=2, m0_tilde=900, seed=4)
COLS = experiment.COLUMN_PARAMS


@pytest.fixture(scope="module")
def report():
    return experiment.run_experiment(SMALL_EXP, 300, target_seed=5)


def test_report_shape(report):
    s = report.summary()
    assert s["schema"] == experiment.SCHEMA
    for k in experiment.FIELDS:
        assert k in s["measured"] and k in s["predicted"]
        m, p = s["measured"][k], s["predicted"][k]
        assert s["relative_deltas"][k] == pytest.approx((m - p) / p)
    assert 0 <= s["measured"]["success_rate"] <= 1
    assert s["measured"]["any_preimage_rate"] >= s["measured"]["success_rate"]


def test_deterministic(report):
    again = experiment.run_experiment(SMALL_EXP, 300, target_seed=5, workers=3)
    assert again.summary() == report.summary()


def test_rejects_bad_input():
    with pytest.raises(ConfigError):
        experiment.run_experiment(SMALL_EXP, 0)
    with pytest.raises(ConfigError):
        experiment.run_experiment(SMALL_EXP, 5, success="maybe")


def test_writers(report, tmp_path):
    experiment.write_summary(report, tmp_path / "s.json")
    assert json.loads((tmp_path / "s.json").read_text()) == json.loads(json.dumps(report.summary()))
    experiment.write_targets_csv(report.outcomes, tmp_path / "t.csv", 4)
    rows = list(csv.DictReader(open(tmp_path / "t.csv")))
    assert tuple(rows[0]) == experiment.CSV_FIELDS
    assert len(rows) == 300
    assert sum(int(r["found"]) for r in rows) / 300 == report.measured["success_rate"]
    assert all(len(r["target"]) == 4 for r in rows)


def test_prediction_reference_config():
    pred = experiment.predict(experiment.REFERENCE_PARAMS)
    assert pred["chains_stored"] == pytest.approx(218812, abs=1)
    assert pred["precomp_invocations"] / experiment.REFERENCE_PARAMS.N == pytest.approx(6.68, abs=0.005)
    assert pred["success_rate"] == pytest.approx(0.874, abs=1e-3)


def test_column_counts():
    checks = experiment.validate_lemma1(COLS, [0, 64, 128, 256])
    by_col = {c.column: c for c in checks}
    assert by_col[0].measured_before == COLS.m0_tilde
    for col in (64, 128, 256):
        assert abs(by_col[col].rel_err_before) < 0.03
        assert abs(by_col[col].rel_err_after) < 0.05


def test_column_counts_near_bound():
    col = int(COLS.c * COLS.t) - 1
    (chk,) = experiment.validate_lemma1(COLS, [col])
    # a handful of points remain; bound by the model plus 4 Poisson sigmas
    assert chk.measured_after <= chk.predicted_after + 4 * chk.predicted_after ** 0.5
    assert chk.measured_after < 1e-3 * COLS.m0_tilde


def test_column_check_size_guard():
    with pytest.raises(ConfigError):
        experiment.validate_lemma1(SpaceParams.create(24, 9, 1.8, m0_tilde=10), [1])


def test_compare_rows_per_method():
    configs = experiment.matched_configs(14, 5)
    rows, ref = experiment.compare_methods(configs, 40)
    assert [r.method for r in rows] == ["rainbow_dp", "rainbow", "hellman", "hellman_dp"]
    assert len(ref) == 8
    for r in rows:
        assert 0 <= r.success_rate <= 1 and r.memory > 0 and r.d_pc > 0
    with pytest.raises(ConfigError):
        experiment.matched_configs(14, 5, methods=("fuzzy",))
