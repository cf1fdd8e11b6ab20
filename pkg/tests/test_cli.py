import csv
import io
import json

import pytest

from rainbowdp import cli
from rainbowdp.core import evaluate
from rainbowdp.storage import load

BUILD = ["build", "--n-bits", "12", "--k-bits", "5", "--c", "2", "--tables", "2", "--m0", "64"]


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def table_dir(tmp_path, capsys):
    d = tmp_path / "tables"
    code, _, _ = run(BUILD + ["--out", str(d)], capsys)
    assert code == 0
    return d


def test_build_writes_files(table_dir):
    files = sorted(p.name for p in table_dir.iterdir())
    assert files == ["build_summary.json", "table_0000.rdpt", "table_0001.rdpt"]
    summary = json.loads((table_dir / "build_summary.json").read_text())
    assert summary["chains_stored"] == sum(load(table_dir / f).m0 for f in files[1:])


def test_build_then_search_in_matrix(table_dir, capsys):
    tb = load(table_dir / "table_0000.rdpt")
    x = int(tb.sps[0])
    y = evaluate(x, tb.params)
    code, out, _ = run(["search", "--tables", str(table_dir), "--target", format(y, "03x"), "--format", "json"],
                       capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["success"] == 1 and doc["target"] == format(y, "03x")
    assert evaluate(int(doc["found"], 16), tb.params) == y


def test_search_batch_csv(table_dir, capsys):
    code, out, _ = run(["search", "--tables", str(table_dir), "--target-count", "20", "--format", "csv",
                        "--workers", "2"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 20 and tuple(rows[0]) == cli.SEARCH_FIELDS
    assert all(len(r["target"]) == 3 and r["target"] == r["target"].lower() for r in rows)


def test_invalid_k_bits_writes_nothing(tmp_path, capsys):
    d = tmp_path / "out"
    code, _, err = run(["build", "--n-bits", "12", "--k-bits", "12", "--c", "2", "--tables", "1", "--m0", "8",
                        "--out", str(d)], capsys)
    assert code == cli.EXIT_USAGE and "k_bits" in err
    assert not d.exists()
    assert len(err.strip().splitlines()) == 1


def test_usage_errors(tmp_path, capsys):
    assert run(["bogus"], capsys)[0] == cli.EXIT_USAGE
    assert run(["build", "--n-bits", "12", "--k-bits", "5", "--t", "32", "--out", "x"], capsys)[0] == cli.EXIT_USAGE
    assert run(["search", "--tables", str(tmp_path)], capsys)[0] == cli.EXIT_USAGE
    assert run(["optimize", "--dpc", "3", "--p", "1.5"], capsys)[0] == cli.EXIT_USAGE


def test_t_flag_equivalent(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    run(BUILD + ["--out", str(a)], capsys)
    argv = [v if v != "--k-bits" else "--t" for v in BUILD]
    argv[argv.index("--t") + 1] = "32"
    assert run(argv + ["--out", str(b)], capsys)[0] == 0
    assert (a / "table_0001.rdpt").read_bytes() == (b / "table_0001.rdpt").read_bytes()


def test_data_errors(table_dir, tmp_path, capsys):
    assert run(["search", "--tables", str(tmp_path / "none"), "--target", "1"], capsys)[0] == cli.EXIT_DATA
    f = table_dir / "table_0001.rdpt"
    data = bytearray(f.read_bytes())
    data[-30] ^= 0xFF
    f.write_bytes(bytes(data))
    code, _, err = run(["search", "--tables", str(table_dir), "--target", "1"], capsys)
    assert code == cli.EXIT_DATA and "checksum" in err


def test_theory_reference_config(capsys):
    code, out, _ = run(["theory", "--n-bits", "24", "--k-bits", "9", "--c", "1.8", "--tables", "1",
                        "--m0", "262144", "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["success_p"] == pytest.approx(0.874, abs=1e-3)
    assert doc["expected_T"] == pytest.approx(394023, rel=0.01)


def test_theory_coefficient_form(capsys):
    code, out, _ = run(["theory", "--dpc", "3", "--c", "2.04", "--tables", "2", "--format", "json"], capsys)
    assert code == 0
    assert json.loads(out)["D_tcr"] == pytest.approx(24.9292, rel=1e-4)


def test_optimize_outputs(capsys):
    code, out, _ = run(["optimize", "--dpc", "3.5", "--p", "0.75", "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["l"] == 2 and doc["c"] == pytest.approx(1.33, abs=0.03)
    code, out, _ = run(["optimize", "--dpc", "3", "--p", "0.8", "--l-max", "3", "--candidates", "--format", "csv"],
                       capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["l"] for r in rows] == ["1", "2", "3"]
    assert [r["best"] for r in rows] == ["False", "True", "False"]


def test_human_has_no_extra_data(capsys):
    argv = ["theory", "--dpc", "3", "--c", "2.04", "--tables", "2"]
    _, human, _ = run(argv, capsys)
    _, js, _ = run(argv + ["--format", "json"], capsys)
    assert {line.split()[0] for line in human.splitlines()} == set(json.loads(js))


def test_experiment_small(tmp_path, capsys):
    out = tmp_path / "exp"
    code, text, _ = run(["experiment", "--n-bits", "14", "--k-bits", "5", "--c", "1.8", "--tables", "1",
                         "--m0", "400", "--targets", "30", "--out", str(out), "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(text)
    assert doc == json.loads((out / "summary.json").read_text())
    assert len((out / "targets.csv").read_text().splitlines()) == 31


def test_experiment_preset_flag_exclusive(capsys):
    assert run(["experiment", "--paper-config", "--n-bits", "20"], capsys)[0] == cli.EXIT_USAGE


def test_compare(capsys):
    code, out, _ = run(["compare", "--n-bits", "14", "--k-bits", "5", "--targets", "20",
                        "--methods", "rainbow_dp,rainbow", "--format", "json"], capsys)
    assert code == 0
    rows = json.loads(out)
    assert [r["method"] for r in rows] == ["rainbow_dp", "rainbow"]
    assert "24.93" in rows[0]["published_tm2"]
    assert run(["compare", "--methods", "fuzzy"], capsys)[0] == cli.EXIT_USAGE


def test_hex_helpers():
    assert cli.format_hex(10, 12) == "00a" and cli.format_hex(10, 13) == "000a"
    assert cli.parse_hex("0x0A", 12) == 10
    with pytest.raises(ValueError):
        cli.parse_hex("1000", 12)
    with pytest.raises(ValueError):
        cli.parse_hex("zz", 12)
