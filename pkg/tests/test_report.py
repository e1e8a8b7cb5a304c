"""Test report tables, files and plots."""
import json
import math

import matplotlib
import pytest

from src.irvrla.report import (
    best_alternative,
    method_table,
    plot_sweep,
    raire_table,
    rows_to_frame,
    write_report,
)
from src.irvrla.simulation import CONFIRMED, FULL_RECOUNT, ReportRow

matplotlib.use("Agg")

POLLS = {
    ("eo", "bp"): 5.04,
    ("se", "bp"): 3.0,
    ("wo", "bp"): 3.0,
    ("raire", "bp"): 1.26,
    ("eo", "cp"): math.inf,
    ("se", "cp"): math.inf,
    ("wo", "cp"): math.inf,
    ("raire", "cp"): 0.5,
}


def _rows(gammas: tuple = (1.1,), error_rates: tuple = (0.0,)) -> list:
    rows = []
    for (method, kind), polls in POLLS.items():
        for gamma in gammas if kind == "cp" else (None,):
            for rate in error_rates:
                full = math.isinf(polls)
                confirmed = 0 if full else 10
                rows.append(
                    ReportRow(
                        election="e1",
                        candidates=4,
                        ballots=1000,
                        mov=None,
                        method=method,
                        kind=kind,
                        alpha=0.05,
                        gamma=gamma,
                        error_rate=rate,
                        polls_pct=polls * (gamma or 1.0) * (1.0 + rate),
                        asn_pct=150.0 if method == "eo" else polls,
                        outcome_counts={
                            CONFIRMED: confirmed,
                            FULL_RECOUNT: 10 - confirmed,
                        },
                    )
                )
    return rows


def test_rows_to_frame() -> None:
    """Test that outcome counts become columns."""
    frame = rows_to_frame(_rows())
    assert len(frame) == 8
    assert "outcome_counts" not in frame.columns
    assert frame["confirmed"].sum() == 50
    assert frame["full_recount"].sum() == 30


@pytest.mark.parametrize("format", ["csv", "json"])
@pytest.mark.filterwarnings("error::FutureWarning")
def test_write_report(tmp_path, format: str) -> None:
    """Test that infinite values are written as "inf"."""
    path = tmp_path / f"report.{format}"
    write_report(_rows(), path)
    text = path.read_text()
    assert "inf" in text
    if format == "json":
        records = json.loads(text)
        assert records[4]["polls_pct"] == "inf"
        assert records[0]["confirmed"] == 10


def test_write_report_format() -> None:
    """Test that unsupported formats are rejected."""
    with pytest.raises(ValueError):
        write_report(_rows(), "report.xlsx")


def test_method_table() -> None:
    """Test the per-method layout and cell formatting."""
    table = method_table(rows_to_frame(_rows()), "eo")
    assert len(table) == 1
    assert table.index.names == ["election", "candidates", "ballots", "mov"]
    row = table.iloc[0]
    assert row[(0.05, "BP", "Polls %")] == "5.0"
    assert row[(0.05, "BP", "ASN %")] == "inf"
    assert row[(0.05, "CP", "Polls %")] == "inf"


def test_best_alternative() -> None:
    """Test ties and all-recount elections."""
    best = best_alternative(rows_to_frame(_rows()))
    by_kind = dict(zip(best["kind"], best["best"]))
    assert by_kind == {"bp": "SE,WO", "cp": "--"}


def test_raire_table() -> None:
    """Test the comparison of RAIRE with the best alternative."""
    table = raire_table(rows_to_frame(_rows(gammas=(1.1, 1.5))))
    row = table.iloc[0]
    assert row[(0.05, "BP", "Best")] == "SE,WO"
    assert row[(0.05, "BP", "Best polls %")] == "3.0"
    assert row[(0.05, "BP", "RAIRE polls %")] == "1.3"
    assert row[(0.05, "CP", "Best")] == "--"
    assert row[(0.05, "CP gamma=1.1", "RAIRE polls %")] == "0.6"
    assert row[(0.05, "CP gamma=1.5", "RAIRE ASN %")] == "0.5"


@pytest.mark.parametrize(
    "x, gammas, error_rates, lines",
    [
        ("gamma", (1.1, 1.5, 2.0), (0.0,), 4),
        ("error_rate", (1.1,), (0.0, 0.01, 0.05), 8),
    ],
)
def test_plot_sweep(x: str, gammas: tuple, error_rates: tuple, lines: int) -> None:
    """Test one line per method and audit kind."""
    frame = rows_to_frame(_rows(gammas, error_rates))
    ax = plot_sweep(frame, x=x)
    assert len(ax.get_lines()) == lines
    assert ax.get_title() == "alpha = 0.05"


def test_plot_sweep_unsupported() -> None:
    """Test that only gamma and error rate sweeps are drawn."""
    with pytest.raises(ValueError):
        plot_sweep(rows_to_frame(_rows()), x="alpha")
