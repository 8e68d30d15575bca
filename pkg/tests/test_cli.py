import csv
import json

import pytest

from app.deps import load_config_file
from app.errors import ConfigError
from app.schemas import ExperimentConfig, parse_range
from main import attach_signed_values, main


def test_parse_range():
    assert parse_range("-2..2:0.5") == [-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]
    assert parse_range("100,400") == [100.0, 400.0]
    with pytest.raises(ValueError):
        parse_range("2..1:0.5")


def test_negative_values_attach_to_their_flag():
    argv = ["interface", "--beta", "-2..2:0.5", "--E", "1", "--point", "-0.5+1j", "-v"]
    assert attach_signed_values(argv) == ["interface", "--beta=-2..2:0.5", "--E", "1", "--point=-0.5+1j", "-v"]


def test_config_defaults_and_validation():
    config = ExperimentConfig(geometry="cpm", k_list="20,10")
    assert config.k_list == [10, 20]
    assert config.E == 0.5
    assert config.weights == [1]
    with pytest.raises(ValueError):
        ExperimentConfig(geometry="cpm", E=1.5)
    with pytest.raises(ValueError):
        ExperimentConfig(geometry="bf", k_list=[6000])
    with pytest.raises(ValueError):
        ExperimentConfig(m=2, weights=[1])


def test_config_file_and_cli_precedence(tmp_path, out_dir):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# charsum run\ngeometry = bf\nk = 10\nE = 0.5\nw = 0.3\nformat = json\n", encoding="utf-8")
    assert load_config_file(str(cfg))["k_list"] == "10"

    out = tmp_path / "chars.json"
    code = main(["charsum", "--config", str(cfg), "--k", "50", "--E", "0.35", "--out", str(out), "--no-timestamp"])
    assert code == 0
    document = json.loads(out.read_text(encoding="utf-8"))
    assert [row["k"] for row in document["rows"]] == [50]
    assert document["rows"][0]["passed"] is True
    assert "timestamp" not in document["metadata"]


def test_unknown_config_key_is_rejected(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config_file(str(cfg))
    assert main(["density", "--config", str(cfg)]) == 2


@pytest.mark.parametrize("argv", [
    ["interface", "--geometry", "cpm", "--E", "1.5"],
    ["density", "--k", "6000"],
    ["bulk", "--P", "[0.5"],
    ["zeros", "--format", "xml"],
])
def test_invalid_configs_exit_2(argv, out_dir, capsys):
    assert main(argv) == 2


def test_numeric_domain_failure_exits_3(out_dir, capsys):
    # the point sits exactly on the interface H = E
    assert main(["bulk", "--geometry", "bf", "--E", "1", "--point", "1", "--k", "100"]) == 3
    assert "DomainError" in capsys.readouterr().err


def test_interface_csv_output(tmp_path):
    out = tmp_path / "interface.csv"
    code = main(["interface", "--geometry", "bf", "--m", "1", "--E", "1", "--k", "100,400",
                 "--beta", "-1..1:1", "--out", str(out)])
    assert code == 0
    raw = out.read_bytes()
    assert b"\r\n" in raw
    rows = list(csv.DictReader(raw.decode("utf-8").splitlines()))
    assert [int(r["k"]) for r in rows] == [100, 100, 100, 400, 400, 400]
    assert {"exact_sign", "exact_log_mag", "predicted_value", "ratio", "scaled_error", "abs_error"} <= set(rows[0])
    assert {"alternate_log_mag", "inputs_k", "inputs_beta"} <= set(rows[0])
    assert int(rows[0]["inputs_k"]) == 100
    assert float(rows[1]["alternate_value"]) == pytest.approx(float(rows[1]["predicted_value"]), rel=1e-12)
    middle = rows[1]
    assert float(middle["beta"]) == 0.0
    assert float(middle["abs_error"]) <= 2 / 10
    meta = json.loads((tmp_path / "interface.csv.meta.json").read_text(encoding="utf-8"))
    assert meta["command"] == "interface"
    assert meta["config"]["k_list"] == [100, 400]


def test_outputs_are_reproducible(tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    args = ["density", "--geometry", "cpm", "--k", "40,80", "--beta", "-0.5,0,0.5", "--format", "json", "--no-timestamp"]
    assert main(args + ["--out", str(first)]) == 0
    assert main(args + ["--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()

    threaded = tmp_path / "c.json"
    assert main(args + ["--out", str(threaded), "--threads", "2"]) == 0
    rows = json.loads(first.read_text(encoding="utf-8"))["rows"]
    assert json.loads(threaded.read_text(encoding="utf-8"))["rows"] == rows


def test_bulk_defaults_to_forbidden_point(tmp_path):
    out = tmp_path / "bulk.json"
    assert main(["bulk", "--k", "200,800", "--format", "json", "--out", str(out)]) == 0
    rows = json.loads(out.read_text(encoding="utf-8"))["rows"]
    assert all(r["label"] == "bulk_forbidden" for r in rows)
    assert all(abs(r["ratio"] - 1) <= 10 / r["k"] for r in rows)


def test_zeros_run_echoes_seed(tmp_path):
    out = tmp_path / "zeros.json"
    code = main(["zeros", "--geometry", "cpm", "--k", "20", "--E", "0.5", "--samples", "40", "--seed", "11",
                 "--format", "json", "--out", str(out)])
    assert code == 0
    document = json.loads(out.read_text(encoding="utf-8"))
    assert document["metadata"]["seed"] == 11
    assert document["metadata"]["extra"]["20"]["root_counts"] == [9]
    assert len(document["rows"]) == 10


def test_zeros_rejects_bargmann_fock(out_dir, capsys):
    assert main(["zeros", "--geometry", "bf", "--k", "20"]) == 2
    assert "ConfigError" in capsys.readouterr().err
    assert main(["zeros", "--geometry", "cpm", "--m", "2", "--k", "20"]) == 2


def test_report_subset(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["report", "--only", "localization,agmon_decay", "--out", str(out)]) == 0
    document = json.loads(out.read_text(encoding="utf-8"))
    assert document["report"]["passed"] is True
    assert [c["name"] for c in document["report"]["criteria"]] == ["localization", "agmon_decay"]
    assert "PASS" in capsys.readouterr().out


def test_report_unknown_criterion(out_dir):
    assert main(["report", "--only", "nonsense"]) == 2
