"""
Test the subcommand harness, CSV reports, configuration and the command-line entry point
"""

import json
import math
import sys
from pathlib import Path

sys.path.append(str(Path(__file__).parent / "src"))

import numpy as np
import pytest

from cli_harness import RunReport, ToolkitHarness, parse_number_list
from config_manager import DEFAULT_TOLERANCES, ConfigManager
from errors import BadSpec, ConstructionFailure, DimensionTooLarge, GridTooCoarse, NotHermitian
from main import build_parser, main
from verification_suite import VerificationSuite


@pytest.fixture
def config_manager(tmp_path):
    return ConfigManager(str(tmp_path / "config"))


@pytest.fixture
def harness(config_manager):
    return ToolkitHarness(config_manager)


def values(report: RunReport):
    return {row[0]: row[1] for row in report.rows}


# Configuration

def test_config_manager_writes_defaults(tmp_path, config_manager):
    assert (tmp_path / "config" / "tolerances.json").exists()
    assert config_manager.get_tolerances() == DEFAULT_TOLERANCES
    assert config_manager.get_thresholds() == (0.01, 0.99)
    assert config_manager.get_verify_config() == {"seed": 42, "trials": 1000}
    assert config_manager.get_output_config()["float_format"] == ".6f"


def test_config_manager_overlays_partial_files(tmp_path):
    config_dir = tmp_path / "config"
    config_dir.mkdir()
    (config_dir / "tolerances.json").write_text(json.dumps({"inequality": 1e-6, "unknown": 3}))
    (config_dir / "experiment_defaults.json").write_text(json.dumps({"thresholds": {"t_low": 0.05}}))

    manager = ConfigManager(str(config_dir))
    assert manager.get_tolerances().inequality == 1e-6
    assert manager.get_tolerances().assertion == DEFAULT_TOLERANCES.assertion
    assert manager.get_thresholds() == (0.05, 0.99)
    assert manager.get_oracle_config()["max_dim"] == 9


def test_config_manager_falls_back_on_broken_json(tmp_path):
    config_dir = tmp_path / "config"
    config_dir.mkdir()
    (config_dir / "experiment_defaults.json").write_text("{broken")
    assert ConfigManager(str(config_dir)).get_thresholds() == (0.01, 0.99)


def test_tolerance_overrides():
    loose = DEFAULT_TOLERANCES.with_overrides(rank_cutoff=1e-6)
    assert loose.rank_cutoff == 1e-6
    assert loose.assertion == DEFAULT_TOLERANCES.assertion


# Reports

def test_run_report_csv():
    report = RunReport("entropy", [("state", "bell")], ["quantity", "bits"],
                       [["Hmin", -math.inf], ["S", 0.5]])
    text = report.to_csv(timestamp=False)
    assert text == "quantity,bits\nHmin,-inf\nS,0.500000\n"
    assert report.to_csv(header=False, timestamp=False) == "Hmin,-inf\nS,0.500000\n"
    assert report.to_csv().startswith("# entropy ")
    assert report.exit_code == 0


def test_run_report_summary_and_file(tmp_path):
    report = RunReport("rate-scan", [], ["n", "gamma", "trace"], [[1, 0.5, 0.0]], checks_failed=2,
                       summary_header=["lowerBracket", "upperBracket"], summary_rows=[[0.4, 0.6]])
    out = tmp_path / "out" / "scan.csv"
    text = report.write(str(out), timestamp=False, float_format=".2f")
    assert out.read_text() == text
    assert text.splitlines() == ["n,gamma,trace", "1,0.50,0.00", "lowerBracket,upperBracket", "0.40,0.60"]
    assert report.exit_code == 1


def test_parse_number_list():
    assert parse_number_list("0.01, 0.1,") == [0.01, 0.1]
    assert parse_number_list("10,100", int) == [10, 100]
    with pytest.raises(BadSpec):
        parse_number_list("1,x")


# Subcommands

def test_cmd_entropy(harness):
    qubit = values(harness.cmd_entropy("qubit:0.75"))
    assert qubit["S"] == pytest.approx(0.811278, abs=1e-6)
    assert qubit["Hmin"] == pytest.approx(0.415037, abs=1e-6)
    assert qubit["Hmax"] == pytest.approx(1.0)

    flat = values(harness.cmd_entropy("maxmix:4"))
    assert list(flat.values()) == pytest.approx([2.0, 2.0, 2.0])

    bell = values(harness.cmd_entropy("bell", "maxmix:2"))
    assert bell["Hmin"] == pytest.approx(-1.0)
    assert bell["Hmax"] == pytest.approx(-1.0)


def test_cmd_entropy_rejects_sigma_for_single_system(harness):
    with pytest.raises(BadSpec):
        harness.cmd_entropy("qubit:0.75", "maxmix:2")


def test_cmd_smooth_unconditional(harness):
    report = harness.cmd_smooth("qubit:0.75", [0.1], "min")
    assert report.header == ["epsilon", "bits", "method", "distance"]
    epsilon, bits, method, distance = report.rows[0]
    assert bits == pytest.approx(0.621488, abs=1e-6)
    assert method == "exactClassical"
    assert distance == pytest.approx(0.1)

    (row,) = harness.cmd_smooth("qubit:0.75", [0.0], "max").rows
    assert row[1] == pytest.approx(1.0)


def test_cmd_smooth_conditional_adds_oracle_column(harness):
    report = harness.cmd_smooth("bell", [0.01], "min", conditional=True, sigma_text="maxmix:2")
    assert report.header[-1] == "oracle_bits"
    row = report.rows[0]
    assert row[1] == pytest.approx(-1.0, abs=0.05)
    assert row[1] <= row[4] + 1e-3


def test_cmd_smooth_writes_witnesses(harness, tmp_path):
    target = tmp_path / "witness.json"
    harness.cmd_smooth("qubit:0.75", [0.05, 0.1], "min", json_witness=str(target))
    assert (tmp_path / "witness_eps0.05.json").exists()
    data = json.loads((tmp_path / "witness_eps0.1.json").read_text())
    assert data["dim"] == 2
    assert data["re"][0][0] == pytest.approx(0.65)


def test_cmd_smooth_validates_epsilon(harness):
    with pytest.raises(BadSpec):
        harness.cmd_smooth("qubit:0.75", [1.0], "min")
    with pytest.raises(BadSpec):
        harness.cmd_smooth("qubit:0.75", [0.1], "median")
    with pytest.raises(BadSpec):
        harness.cmd_smooth("bell", [0.1], "min", sigma_text="maxmix:2")


def test_cmd_converge(harness):
    report = harness.cmd_converge("iid:0.5,0.5", [10, 100], [0.0])
    assert report.header == ["n", "epsilon", "hmin_rate", "hmax_rate", "svn"]
    for n, epsilon, hmin_rate, hmax_rate, svn in report.rows:
        assert (hmin_rate, hmax_rate, svn) == pytest.approx((1.0, 1.0, 1.0))


def test_cmd_rate_scan(harness):
    report = harness.cmd_rate_scan("iid:0.5,0.5", "0:2:0.01", [4])
    assert report.summary_header == ["lowerBracket", "upperBracket"]
    assert report.summary_rows[0] == pytest.approx([0.99, 1.0])
    assert len(report.rows) == 201


def test_cmd_rate_scan_conditional(harness):
    report = harness.cmd_rate_scan("bell", "-2:0:0.01", [1, 2], conditional=True)
    assert report.summary_rows[0] == pytest.approx([-1.01, -1.0])
    with pytest.raises(BadSpec):
        harness.cmd_rate_scan("qubit:0.75", "0:2:0.01", [1], conditional=True)
    with pytest.raises(GridTooCoarse):
        harness.cmd_rate_scan("iid:0.75,0.25", "0:0.3:0.1", [1])


def test_cmd_verify(harness):
    report = harness.cmd_verify(seed=42, trials=3)
    assert report.header == ["check", "trials", "failures", "worstSlack"]
    assert len(report.rows) == len(VerificationSuite().checks)
    assert all(row[1] == 3 and row[2] == 0 for row in report.rows)
    assert report.exit_code == 0

    corrupted = harness.cmd_verify(seed=42, trials=3, corrupt_tolerance=True)
    assert corrupted.checks_failed > 0
    assert corrupted.exit_code == 1


def test_cmd_oracle_compare_reads_oracle_config(tmp_path):
    config_dir = tmp_path / "config"
    config_dir.mkdir()
    (config_dir / "experiment_defaults.json").write_text(json.dumps({"oracle": {"max_dim": 3}}))
    with pytest.raises(DimensionTooLarge):
        ToolkitHarness(ConfigManager(str(config_dir))).cmd_oracle_compare(seed=1, instances=1)


def test_verification_suite_needs_trials():
    with pytest.raises(BadSpec):
        VerificationSuite(trials=0)


def test_cmd_oracle_compare(harness):
    report = harness.cmd_oracle_compare(seed=1, instances=3, epsilon=0.1)
    assert [row[0] for row in report.rows] == [0, 1, 2]
    assert all(row[3] >= -1e-3 for row in report.rows)
    assert report.checks_failed == 0

    trivial = harness.cmd_oracle_compare(seed=1, instances=2, epsilon=0.1, trivial_b=True)
    assert trivial.header[-1] == "exact_bits"
    for row in trivial.rows:
        assert row[2] == pytest.approx(row[4], abs=1e-3)


# Entry point

def test_parser_hides_corrupt_flag():
    parser = build_parser()
    assert "corrupt" not in parser.format_help()
    args = parser.parse_args(["verify", "--trials", "2", "--corrupt-tolerance"])
    assert args.corrupt_tolerance and args.trials == 2


def test_main_entropy_to_stdout(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    code = main(["entropy", "--state", "qubit:0.75", "--no-timestamp", "--config-dir", "config"])
    assert code == 0
    assert capsys.readouterr().out.splitlines() == [
        "quantity,bits", "S,0.811278", "Hmin,0.415037", "Hmax,1.000000",
    ]


def test_main_verify_is_reproducible(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    runs = []
    for name in ("first.csv", "second.csv"):
        code = main(["verify", "--seed", "42", "--trials", "1000", "--no-timestamp", "--out", name])
        assert code == 0
        runs.append((tmp_path / name).read_bytes())
    assert runs[0] == runs[1]


def test_main_exit_codes(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["entropy", "--state", "qubit:1.5"]) == 2
    assert main(["entropy", "--state", "missing.json"]) == 2
    half = tmp_path / "half.json"
    half.write_text(json.dumps({"dim": 4, "re": (np.eye(4) / 4).tolist(), "dimA": 2}))
    assert main(["entropy", "--state", str(half)]) == 2
    binary = tmp_path / "binary.json"
    binary.write_bytes(b"\xff\xfe\x00garbage")
    assert main(["entropy", "--state", str(binary)]) == 2
    assert main(["smooth", "--state", "qubit:0.75", "--eps", "0.1,abc"]) == 2
    assert main(["verify", "--trials", "1", "--corrupt-tolerance", "--no-timestamp"]) == 1


def test_error_exit_codes():
    assert BadSpec.exit_code == 2
    assert NotHermitian("x").exit_code == 2
    assert ConstructionFailure.exit_code == 3
