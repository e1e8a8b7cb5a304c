"""Test the command line interface."""
import json

import matplotlib
import pytest

from src.irvrla.ballots import serialize_election
from src.irvrla.cli import EXIT_ERROR, EXIT_FULL_RECOUNT, EXIT_OK, main
from tests._elections import FOUR_WAY_CSV, four_way, winner_only

matplotlib.use("Agg")


@pytest.fixture
def table_file(tmp_path):
    """Write the four-candidate example to a JSON file."""
    path = tmp_path / "table.json"
    path.write_bytes(serialize_election(four_way()))
    return str(path)


def test_tabulate(table_file: str, capsys: pytest.CaptureFixture) -> None:
    """Test the printed elimination order and round tallies."""
    assert main(["tabulate", table_file]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("winner: c4; order: c3,c2,c1,c4\n")
    assert "Rnd3" in out
    assert "26000" in out
    assert "26000.0" not in out


def test_tabulate_csv(tmp_path, capsys: pytest.CaptureFixture) -> None:
    """Test that CSV input is recognised by its suffix."""
    path = tmp_path / "table.csv"
    path.write_text(FOUR_WAY_CSV)
    assert main(["tabulate", str(path)]) == EXIT_OK
    assert "winner: c4" in capsys.readouterr().out


def test_plan(table_file: str, tmp_path, capsys: pytest.CaptureFixture) -> None:
    """Test plan output on screen and on file."""
    output = tmp_path / "plan.json"
    argv = ["plan", table_file, "--method", "eo", "--kind", "cp", "-o", str(output)]
    assert main(argv) == EXIT_OK
    out = capsys.readouterr().out
    assert "overall ASN: 395.4 ballots (0.7% of 60000)" in out
    plan = json.loads(output.read_text())
    assert plan["method"] == "eo"
    assert len(plan["units"]) == 3


def test_plan_full_recount(tmp_path, capsys: pytest.CaptureFixture) -> None:
    """Test the full-recount exit code."""
    path = tmp_path / "swapped.json"
    path.write_bytes(serialize_election(winner_only(swapped=True)))
    assert main(["plan", str(path), "--method", "wo"]) == EXIT_FULL_RECOUNT
    assert "full recount necessary" in capsys.readouterr().out


def test_plan_trace(table_file: str, capsys: pytest.CaptureFixture) -> None:
    """Test that the search trace goes to standard error."""
    assert main(["plan", table_file, "--trace"]) == EXIT_OK
    captured = capsys.readouterr()
    assert "expand" in captured.err
    assert json.loads(captured.out.split("\noverall ASN")[0])["method"] == "raire"


def test_simulate(table_file: str, capsys: pytest.CaptureFixture) -> None:
    """Test an error-free comparison simulation."""
    argv = ["simulate", table_file, "--method", "eo", "--kind", "cp", "--reps", "2"]
    assert main(argv) == EXIT_OK
    out = capsys.readouterr().out
    assert "mean polls: 394.0 ballots" in out
    assert "full recounts: 0 of 2" in out


def test_grid(table_file: str, tmp_path, capsys: pytest.CaptureFixture) -> None:
    """Test a small grid with report, table and plot."""
    report = tmp_path / "report.csv"
    plot = tmp_path / "sweep.png"
    argv = [
        "grid",
        table_file,
        "--methods",
        "wo,raire",
        "--kinds",
        "bp,cp",
        "--alphas",
        "0.05",
        "--reps",
        "2",
        "--workers",
        "1",
        "--output",
        str(report),
        "--table",
        "raire",
        "--plot",
        str(plot),
    ]
    assert main(argv) == EXIT_OK
    assert report.read_text().startswith("election,candidates,ballots,mov")
    assert plot.exists()
    assert "RAIRE polls %" in capsys.readouterr().out


def test_verify(table_file: str, capsys: pytest.CaptureFixture) -> None:
    """Test the soundness check of a RAIRE plan."""
    assert main(["verify", table_file]) == EXIT_OK
    assert "sound: 18 alternate orders ruled out" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["tabulate", "missing.json"],
        ["plan"],
        ["plan", "x.json", "--kind", "batch"],
        ["simulate", "x.json", "--reps", "many"],
    ],
)
def test_usage_errors(argv: list) -> None:
    """Test that bad arguments and missing files exit with an error."""
    assert main(argv) == EXIT_ERROR


def test_malformed_file(tmp_path, capsys: pytest.CaptureFixture) -> None:
    """Test that parse errors are printed."""
    path = tmp_path / "broken.json"
    path.write_text('{"candidates": ["a"], "ballots": []}')
    assert main(["tabulate", str(path)]) == EXIT_ERROR
    assert "error:" in capsys.readouterr().err


def test_help() -> None:
    """Test that help exits cleanly."""
    assert main(["--help"]) == EXIT_OK


def test_version(capsys: pytest.CaptureFixture) -> None:
    """Test the printed version."""
    assert main(["--version"]) == EXIT_OK
    assert "0.1.0-dev" in capsys.readouterr().out


def test_bad_worker_setting(
    table_file: str, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture
) -> None:
    """Test that an invalid worker count in the environment is an error."""
    monkeypatch.setenv("IRVRLA_WORKERS", "many")
    assert main(["--help"]) == EXIT_OK
    argv = ["grid", table_file, "--methods", "wo", "--kinds", "bp", "--reps", "1"]
    assert main(argv) == EXIT_ERROR
    assert "error:" in capsys.readouterr().err
