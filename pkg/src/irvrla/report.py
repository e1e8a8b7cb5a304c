"""Tabulate and plot experiment results."""
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from .simulation import CONFIRMED, FULL_RECOUNT, ReportRow

ELECTION_COLUMNS = ["election", "candidates", "ballots", "mov"]
ALTERNATIVES = ("eo", "se", "wo")


def rows_to_frame(rows: Sequence[ReportRow]) -> pd.DataFrame:
    """Collect report rows in a data frame.

    The outcome counts become the columns ``confirmed`` and ``full_recount``.
    """
    records = []
    for row in rows:
        record = row.to_dict()
        counts = record.pop("outcome_counts")
        record["confirmed"] = counts.get(CONFIRMED, 0)
        record["full_recount"] = counts.get(FULL_RECOUNT, 0)
        records.append(record)
    columns = [
        name for name in ReportRow.__dataclass_fields__ if name != "outcome_counts"
    ]
    return pd.DataFrame.from_records(
        records, columns=columns + ["confirmed", "full_recount"]
    )


def write_report(
    rows: Union[Sequence[ReportRow], pd.DataFrame],
    path: Union[str, Path],
    format: Optional[str] = None,
) -> None:
    """Write results as CSV or JSON; infinite values are written as "inf".

    Args:
        rows (sequence or pd.DataFrame): Report rows or their frame.
        path (str or Path): The output file.
        format (str, optional): "csv" or "json". If None, taken from the file
            suffix. Defaults to None.

    Raises:
        ValueError: If the format is unsupported.
    """
    frame = rows if isinstance(rows, pd.DataFrame) else rows_to_frame(rows)
    format = (format or Path(path).suffix.lstrip(".") or "csv").lower()
    frame = frame.apply(lambda column: column.map(_inf_as_text))
    if format == "csv":
        frame.to_csv(path, index=False)
    elif format == "json":
        frame.to_json(path, orient="records", indent=2)
    else:
        raise ValueError(f"Unsupported report format {format!r}.")


def _inf_as_text(value: object) -> object:
    return "inf" if isinstance(value, float) and math.isinf(value) else value


def _cell(value: float) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "--"
    if math.isinf(value) or value > 100.0:
        return "inf"
    return f"{value:.1f}"


def _select(frame: pd.DataFrame, error_rate: float) -> pd.DataFrame:
    """Keep one error rate and, for comparison audits, the first gamma."""
    rows = frame[np.isclose(frame["error_rate"], error_rate)]
    gammas = rows.loc[rows["kind"] == "cp", "gamma"].dropna().unique()
    if len(gammas):
        rows = rows[(rows["kind"] == "bp") | (rows["gamma"] == gammas[0])]
    return rows


def _election_key(row: Tuple) -> Tuple:
    mov = row.mov
    if mov is None or (isinstance(mov, float) and math.isnan(mov)):
        mov = None
    else:
        mov = int(mov)
    return (row.election, int(row.candidates), int(row.ballots), mov)


def _to_table(records: dict, order: List[Tuple]) -> pd.DataFrame:
    if not records:
        return pd.DataFrame()
    keys = list(records)
    table = pd.DataFrame(
        [records[k] for k in keys],
        index=pd.MultiIndex.from_tuples(keys, names=ELECTION_COLUMNS),
    )
    table = table.reindex(columns=[c for c in order if c in table.columns])
    table.columns = pd.MultiIndex.from_tuples(
        list(table.columns), names=["alpha", "audit", "value"]
    )
    return table.fillna("--")


def method_table(
    frame: pd.DataFrame, method: str, error_rate: float = 0.0
) -> pd.DataFrame:
    """Lay out the polls and ASN percentages of one method.

    Rows are elections; columns are risk limit, audit kind and quantity.
    Percentages carry one decimal and values above 100 read "inf".

    Args:
        frame (pd.DataFrame): Output of :func:`rows_to_frame`.
        method (str): "eo", "se", "wo" or "raire".
        error_rate (float): The error rate to show. Defaults to 0.0.

    Returns:
        pd.DataFrame: The formatted table.
    """
    rows = _select(frame[frame["method"] == method], error_rate)
    records: dict = {}
    for row in rows.itertuples(index=False):
        cells = records.setdefault(_election_key(row), {})
        audit = row.kind.upper()
        cells[(row.alpha, audit, "Polls %")] = _cell(row.polls_pct)
        cells[(row.alpha, audit, "ASN %")] = _cell(row.asn_pct)
    order = [
        (alpha, audit, value)
        for alpha in sorted(rows["alpha"].unique())
        for audit in ("BP", "CP")
        for value in ("Polls %", "ASN %")
    ]
    return _to_table(records, order)


def best_alternative(frame: pd.DataFrame, error_rate: float = 0.0) -> pd.DataFrame:
    """Find the method with the fewest polls among EO, SE and WO.

    Ties are joined with commas; if every alternative needs a full recount the
    best method reads "--".

    Args:
        frame (pd.DataFrame): Output of :func:`rows_to_frame`.
        error_rate (float): The error rate to compare. Defaults to 0.0.

    Returns:
        pd.DataFrame: One row per election, kind, alpha and gamma with the
            columns ``best`` and ``polls_pct``.
    """
    rows = frame[frame["method"].isin(ALTERNATIVES)]
    rows = rows[np.isclose(rows["error_rate"], error_rate)]
    keys = ELECTION_COLUMNS + ["kind", "alpha", "gamma"]
    results = []
    for key, group in rows.groupby(keys, sort=False, dropna=False):
        polls = group["polls_pct"].to_numpy(dtype=float)
        lowest = float(np.min(polls))
        if math.isinf(lowest):
            best = "--"
        else:
            winners = group.loc[np.isclose(polls, lowest), "method"]
            best = ",".join(m.upper() for m in winners)
        results.append(dict(zip(keys, key), best=best, polls_pct=lowest))
    return pd.DataFrame(results, columns=keys + ["best", "polls_pct"])


def raire_table(frame: pd.DataFrame, error_rate: float = 0.0) -> pd.DataFrame:
    """Compare RAIRE with the best of EO, SE and WO.

    Ballot-polling columns show the best alternative and RAIRE. Comparison
    columns show the best alternative at the first gamma and RAIRE for every
    gamma in the frame.

    Args:
        frame (pd.DataFrame): Output of :func:`rows_to_frame`.
        error_rate (float): The error rate to show. Defaults to 0.0.

    Returns:
        pd.DataFrame: The formatted table.
    """
    rows = frame[np.isclose(frame["error_rate"], error_rate)]
    best = best_alternative(_select(rows, error_rate), error_rate)
    records: dict = {}
    for row in best.itertuples(index=False):
        cells = records.setdefault(_election_key(row), {})
        audit = row.kind.upper()
        cells[(row.alpha, audit, "Best")] = row.best
        cells[(row.alpha, audit, "Best polls %")] = _cell(row.polls_pct)
    audits = ["BP", "CP"]
    for row in rows[rows["method"] == "raire"].itertuples(index=False):
        cells = records.setdefault(_election_key(row), {})
        audit = "BP" if row.kind == "bp" else f"CP gamma={row.gamma:g}"
        if audit not in audits:
            audits.append(audit)
        cells[(row.alpha, audit, "RAIRE polls %")] = _cell(row.polls_pct)
        cells[(row.alpha, audit, "RAIRE ASN %")] = _cell(row.asn_pct)
    order = [
        (alpha, audit, value)
        for alpha in sorted(rows["alpha"].unique())
        for audit in audits
        for value in ("Best", "Best polls %", "RAIRE polls %", "RAIRE ASN %")
    ]
    return _to_table(records, order)


def plot_sweep(
    frame: pd.DataFrame,
    x: str = "gamma",
    alpha: Optional[float] = None,
    ax: Optional[plt.Axes] = None,
) -> plt.Axes:
    """Plot the polls percentage against gamma or the error rate.

    Each line is one election and method. A gamma sweep shows comparison
    audits at the first error rate; an error-rate sweep shows every kind, with
    comparison audits at the first gamma. Full recounts leave gaps.

    Args:
        frame (pd.DataFrame): Output of :func:`rows_to_frame`.
        x (str): "gamma" or "error_rate". Defaults to "gamma".
        alpha (float, optional): The risk limit to plot. If None, the
            smallest in the frame. Defaults to None.
        ax (plt.Axes, optional): Axes to draw on. Defaults to None.

    Returns:
        plt.Axes: The axes.

    Raises:
        ValueError: If ``x`` is not supported.
    """
    if x not in ("gamma", "error_rate"):
        raise ValueError(f"Cannot sweep over {x!r}.")
    if ax is None:
        _, ax = plt.subplots()
    if frame.empty:
        return ax
    alpha = alpha if alpha is not None else float(frame["alpha"].min())
    rows = frame[np.isclose(frame["alpha"], alpha)]
    if x == "gamma":
        rows = rows[rows["kind"] == "cp"]
        rows = rows[np.isclose(rows["error_rate"], rows["error_rate"].min())]
    else:
        gammas = rows.loc[rows["kind"] == "cp", "gamma"].dropna().unique()
        if len(gammas):
            rows = rows[(rows["kind"] == "bp") | (rows["gamma"] == gammas[0])]
    for (election, method, kind), group in rows.groupby(
        ["election", "method", "kind"], sort=False
    ):
        group = group.sort_values(x)
        polls = group["polls_pct"].astype(float).replace([np.inf], np.nan)
        ax.plot(
            group[x].astype(float),
            polls,
            marker="o",
            label=f"{election} {method.upper()} {kind.upper()}",
        )
    ax.set_xlabel("gamma" if x == "gamma" else "error rate")
    ax.set_ylabel("ballots polled (%)")
    ax.set_title(f"alpha = {alpha:g}")
    ax.legend()
    return ax
