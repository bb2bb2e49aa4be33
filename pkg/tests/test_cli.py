import json
import math

import pytest

from pharmonic_hub.cli import interface
from pharmonic_hub.cli.interface import run_cli
from pharmonic_hub.core.exponent import ConsistencyReport

PAYLOAD_KEYS = {"command", "inputs", "result", "diagnostics", "status"}


def _json_run(capsys, argv):
    code = run_cli(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_sector_half_plane(capsys):
    code, payload = _json_run(
        capsys, ["sector", "--p", "3", "--branch", "regular", "--opening-deg", "180"]
    )
    assert code == 0
    assert set(payload) == PAYLOAD_KEYS
    assert payload["status"] == "ok"
    assert payload["result"]["gamma"] == pytest.approx(1.0, abs=1e-6)
    assert payload["inputs"]["opening"] == pytest.approx(math.pi)
    assert payload["inputs"]["opening_deg"] == pytest.approx(180.0)
    assert payload["diagnostics"]["opening_mismatch"] <= 1e-6


def test_sector_by_gamma_p2(capsys):
    code, payload = _json_run(capsys, ["sector", "--p", "2", "--gamma", "2"])
    assert code == 0
    assert payload["result"]["opening"] == pytest.approx(0.5 * math.pi, abs=1e-8)


def test_exponent_hemisphere_p2(capsys):
    code, payload = _json_run(
        capsys,
        [
            "exponent", "--p", "2", "--ambient-dim", "3", "--alpha-deg", "90",
            "--branch", "singular",
        ],
    )
    assert code == 0
    assert payload["command"] == "exponent"
    assert payload["result"]["gamma"] == pytest.approx(2.0, abs=1e-6)
    assert payload["result"]["branch"] == "singular"
    assert payload["result"]["backend"] == "shooting"
    assert payload["inputs"]["sphere_dim"] == 2
    assert payload["inputs"]["alpha"] == pytest.approx(0.5 * math.pi)
    assert payload["diagnostics"]["admissible"] is True


@pytest.mark.parametrize(
    "argv",
    [
        ["lambda-sweep", "--p", "2", "--ambient-dim", "3", "--alpha", "1.0",
         "--branch", "singular"],
        ["sector", "--p", "2", "--gamma", "1", "--backend", "ergodic"],
        ["exponent", "--p", "2", "--ambient-dim", "3", "--alpha", "1.0",
         "--alpha-deg", "60"],
        ["exponent", "--p", "1", "--ambient-dim", "3", "--alpha", "1.0"],
        ["exponent", "--p", "2", "--ambient-dim", "1", "--alpha", "1.0"],
        ["exponent", "--p", "2", "--ambient-dim", "3", "--alpha-deg", "180"],
        ["sector", "--p", "2", "--opening-deg", "400"],
        ["exponent", "--p", "2", "--ambient-dim", "3", "--alpha-deg", "90",
         "--backend", "ergodic", "--grid", "10"],
        ["lambda-sweep", "--p", "2", "--ambient-dim", "3", "--alpha-deg", "90",
         "--backend", "ergodic", "--grid", "63"],
        ["unknown"],
    ],
)
def test_usage_errors_exit_two(capsys, argv):
    assert run_cli(argv) == 2
    captured = capsys.readouterr()
    assert captured.out == ""
    assert captured.err


def test_numerical_failure_reports_error_payload(capsys):
    code, payload = _json_run(
        capsys, ["sector", "--p", "1.5", "--branch", "singular", "--gamma", "0.5"]
    )
    assert code == 1
    assert payload["status"] == "error"
    assert payload["result"] is None
    assert payload["diagnostics"]["error_type"] == "NoEigenfunctionError"
    assert payload["inputs"]["p"] == 1.5


def test_profile_csv_format(capsys):
    code = run_cli(
        ["sector", "--p", "2", "--gamma", "1", "--grid", "11", "--format", "csv"]
    )
    out = capsys.readouterr().out
    assert code == 0
    assert "\r" not in out
    lines = out.splitlines()
    assert lines[0] == "theta,omega,omega_prime"
    assert len(lines) == 12
    first = [float(cell) for cell in lines[1].split(",")]
    last = [float(cell) for cell in lines[-1].split(",")]
    assert first[0] == 0.0
    assert last[0] == pytest.approx(math.pi)
    assert abs(last[1]) <= 1e-8


def test_profile_command_json(capsys):
    code, payload = _json_run(
        capsys,
        [
            "profile", "--p", "3", "--ambient-dim", "3", "--alpha-deg", "90",
            "--branch", "regular", "--grid", "51",
        ],
    )
    assert code == 0
    profile = payload["result"]["profile"]
    assert len(profile["theta"]) == 51
    assert profile["omega"][0] == pytest.approx(1.0)
    assert profile["omega"][-1] == 0.0
    assert payload["result"]["gamma"] == pytest.approx(1.0, abs=1e-6)


def test_output_directory_from_environment(
    tmp_path, monkeypatch, capsys, isolated_settings
):
    monkeypatch.setenv("PHARMONIC_OUTPUT_DIR", str(tmp_path / "results"))
    isolated_settings.reload()
    isolated_settings.set("log_to_file", False)
    code = run_cli(["sector", "--p", "2", "--gamma", "1", "--format", "csv"])
    assert code == 0
    assert capsys.readouterr().out == ""
    written = (tmp_path / "results" / "sector.csv").read_text(encoding="utf-8")
    assert written.startswith("theta,omega,omega_prime\n")


def test_explicit_output_path(tmp_path, capsys):
    target = tmp_path / "nested" / "half-plane.json"
    code = run_cli(
        [
            "sector", "--p", "3", "--branch", "regular", "--opening", str(math.pi),
            "--output", str(target),
        ]
    )
    assert code == 0
    assert capsys.readouterr().out == ""
    payload = json.loads(target.read_text(encoding="utf-8"))
    assert payload["result"]["gamma"] == pytest.approx(1.0, abs=1e-6)


def test_lambda_sweep_csv(capsys):
    code = run_cli(
        [
            "lambda-sweep", "--p", "2", "--ambient-dim", "3", "--alpha-deg", "90",
            "--gamma-min", "0.5", "--gamma-max", "2", "--gamma-count", "3",
            "--format", "csv",
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    lines = captured.out.splitlines()
    assert lines[0] == "gamma,lambda,backend"
    rows = [line.split(",") for line in lines[1:]]
    assert [float(row[0]) for row in rows] == pytest.approx([0.5, 1.0, 2.0])
    # γλ_γ = λ₁ = 2 на полусфере при p = 2
    assert [float(row[1]) for row in rows] == pytest.approx([4.0, 2.0, 1.0], rel=1e-5)
    assert {row[2] for row in rows} == {"shooting"}
    assert "lambda curve" in captured.err


def _fake_suite(passed):
    def suite(quick=False):
        report = ConsistencyReport(title="fake")
        report.add("exact", 1.0, 1.0 if passed else 2.0, 1e-6)
        return [report]

    return suite


def test_validate_success(monkeypatch, capsys):
    monkeypatch.setattr(interface, "acceptance_suite", _fake_suite(True))
    code, payload = _json_run(capsys, ["validate", "--quick"])
    assert code == 0
    assert payload["status"] == "ok"
    assert payload["result"]["passed"] is True
    assert payload["diagnostics"] == {"checks": 1, "failed": 0}


def test_validate_failure(monkeypatch, capsys):
    monkeypatch.setattr(interface, "acceptance_suite", _fake_suite(False))
    code = run_cli(["validate", "--format", "csv"])
    captured = capsys.readouterr()
    assert code == 1
    lines = captured.out.splitlines()
    assert lines[0] == "report,check,reference,value,delta,tolerance,passed"
    assert lines[1].endswith(",no")
    assert "fake" in captured.err


def test_repeated_runs_are_identical(capsys):
    argv = ["sector", "--p", "1.5", "--branch", "regular", "--gamma", "1.5"]
    first = _json_run(capsys, argv)
    second = _json_run(capsys, argv)
    assert first == second
