"""Command line interface of the audit toolkit.

Run with ``irvrla <command> --help`` or ``python -m irvrla <command> --help``.
Exit codes: 0 on success, 2 when a full recount is necessary and 1 on usage,
input or soundness errors.
"""
import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import pandas as pd

from .assertions import AuditPlan, FullRecount
from .ballots import Election, parse_election, tabulate_irv
from .plans import build_plan
from .raire import verify_plan_soundness
from .report import method_table, plot_sweep, raire_table, rows_to_frame, write_report
from .simulation import (
    ErrorModel,
    ExperimentGrid,
    SimConfig,
    inject_errors,
    run_experiment,
    simulate,
)
from .version import get_version

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FULL_RECOUNT = 2


def _default_workers() -> int:
    value = os.environ.get("IRVRLA_WORKERS")
    if value:
        return max(1, int(value))
    return os.cpu_count() or 1


def _workers(args: argparse.Namespace) -> int:
    return args.workers if args.workers is not None else _default_workers()


def _read_election(path: str, format: Optional[str] = None) -> Election:
    format = format or ("csv" if Path(path).suffix.lower() == ".csv" else "json")
    with open(path, "rb") as handle:
        return parse_election(handle.read(), format)


def _percent(value: float) -> str:
    return "inf" if value == float("inf") else f"{value:.1f}%"


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _add_input(parser: argparse.ArgumentParser, many: bool = False) -> None:
    parser.add_argument("election", nargs="+" if many else None, help="election file")
    parser.add_argument(
        "--format",
        choices=["json", "csv"],
        default=None,
        help="input format; inferred from the file suffix by default",
    )


def _add_audit(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--method", choices=["eo", "se", "wo", "raire"], default="raire"
    )
    parser.add_argument("--kind", choices=["bp", "cp"], default="bp")
    parser.add_argument("--alpha", type=float, default=0.05, help="risk limit")
    parser.add_argument(
        "--gamma", type=float, default=1.1, help="error inflation factor"
    )
    parser.add_argument(
        "--se-strategy",
        choices=["maximal", "asn-greedy", "none"],
        default="asn-greedy",
        help="grouping strategy of the se method",
    )


def _plan(
    args: argparse.Namespace, election: Election
) -> Union[AuditPlan, FullRecount]:
    return build_plan(
        election,
        args.method,
        args.kind,
        args.alpha,
        args.gamma,
        strategy=args.se_strategy,
        trace=getattr(args, "trace", False),
    )


def cmd_tabulate(args: argparse.Namespace) -> int:
    """Print the elimination order and the tally of every round."""
    election = _read_election(args.election, args.format)
    sequence = tabulate_irv(election)
    print(
        f"winner: {election.candidates[sequence.winner]}; "
        f"order: {','.join(election.names(sequence.order))}"
    )
    if sequence.round_tallies:
        table = pd.DataFrame(
            {
                f"Rnd{i}": {election.candidates[c]: n for c, n in counts.items()}
                for i, counts in enumerate(sequence.round_tallies, start=1)
            },
            index=list(election.candidates),
        )
        print(table.astype("Int64").to_string(na_rep=""))
    for round_number, tied in sequence.tie_breaks:
        print(
            f"round {round_number}: tie between {', '.join(election.names(tied))}; "
            f"eliminated {election.candidates[tied[0]]}"
        )
    return EXIT_OK


def cmd_plan(args: argparse.Namespace) -> int:
    """Build and print an audit plan."""
    election = _read_election(args.election, args.format)
    plan = _plan(args, election)
    _emit(plan.to_json(), args.output)
    if args.trace:
        for event in plan.trace:
            print(event, file=sys.stderr)
    if isinstance(plan, FullRecount) or plan.full_recount:
        print("full recount necessary")
        return EXIT_FULL_RECOUNT
    print(
        f"overall ASN: {plan.overall_asn:.1f} ballots "
        f"({_percent(plan.asn_percent)} of {plan.total_ballots})"
    )
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    """Simulate audits of one election with injected errors."""
    config = SimConfig(
        alpha=args.alpha,
        gamma=args.gamma,
        kind=args.kind,
        reps=args.reps,
        max_draws=args.max_draws,
        sample_seed=args.seed,
        error_seed=args.error_seed,
    )
    election = _read_election(args.election, args.format)
    model = ErrorModel(args.error_rate, args.error_seed)
    reported, actual = inject_errors(election, model)
    plan = _plan(args, reported)
    if isinstance(plan, FullRecount):
        print("full recount necessary")
        return EXIT_FULL_RECOUNT
    result = simulate(plan, reported, actual, config)
    asn = plan.overall_asn
    document = {"plan_asn": "inf" if math.isinf(asn) else asn, **result.to_dict()}
    _emit(json.dumps(document, indent=2), args.output)
    print(
        f"mean polls: {result.mean_draws:.1f} ballots "
        f"({_percent(result.polls_pct)} of {result.total_ballots}); "
        f"full recounts: {result.outcome_counts['full-recount']} of {config.reps}"
    )
    if result.outcome_counts["confirmed"] == 0:
        return EXIT_FULL_RECOUNT
    return EXIT_OK


def cmd_grid(args: argparse.Namespace) -> int:
    """Run an experiment grid over several elections and write the report."""
    grid = ExperimentGrid(
        methods=tuple(args.methods),
        kinds=tuple(args.kinds),
        alphas=tuple(args.alphas),
        gammas=tuple(args.gammas),
        error_rates=tuple(args.error_rates),
        error_seeds=tuple(range(args.error_seeds)),
        sample_seeds=tuple(range(args.sample_seeds)),
        zero_error_reps=args.reps,
        max_draws=args.max_draws,
        strategy=args.se_strategy,
    )
    elections: List[Tuple[str, Election]] = [
        (Path(path).stem, _read_election(path, args.format)) for path in args.election
    ]
    rows = run_experiment(elections, grid, workers=_workers(args))
    frame = rows_to_frame(rows)
    if args.output:
        write_report(frame, args.output)
    else:
        print(frame.to_csv(index=False), end="")
    if args.table == "methods":
        for method in grid.methods:
            print(f"\n{method.upper()}")
            print(method_table(frame, method, grid.error_rates[0]).to_string())
    elif args.table == "raire":
        print(raire_table(frame, grid.error_rates[0]).to_string())
    if args.plot:
        ax = plot_sweep(frame, x=args.sweep)
        ax.figure.savefig(args.plot)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    """Check a plan against every elimination order electing someone else."""
    election = _read_election(args.election, args.format)
    plan = _plan(args, election)
    if isinstance(plan, FullRecount):
        print("full recount necessary")
        return EXIT_FULL_RECOUNT
    soundness = verify_plan_soundness(plan, election)
    if soundness.sound:
        print(f"sound: {soundness.checked} alternate orders ruled out")
        return EXIT_OK
    print(f"unsound: {len(soundness.uncovered)} of {soundness.checked} orders remain")
    for order in soundness.uncovered:
        print(",".join(election.names(order)))
    return EXIT_ERROR


def _floats(text: str) -> List[float]:
    return [float(x) for x in text.split(",") if x]


def _names(text: str) -> List[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser with all subcommands."""
    parser = argparse.ArgumentParser(
        prog="irvrla", description="Risk-limiting audits of IRV elections."
    )
    parser.add_argument("--version", action="version", version=get_version())
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v info, -vv debug"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    tabulate = commands.add_parser("tabulate", help="count an IRV election")
    _add_input(tabulate)
    tabulate.set_defaults(func=cmd_tabulate)

    plan = commands.add_parser("plan", help="build an audit plan")
    _add_input(plan)
    _add_audit(plan)
    plan.add_argument("--output", "-o", help="write the plan JSON to this file")
    plan.add_argument(
        "--trace", action="store_true", help="print the RAIRE search trace"
    )
    plan.set_defaults(func=cmd_plan)

    sim = commands.add_parser("simulate", help="simulate audits of one election")
    _add_input(sim)
    _add_audit(sim)
    sim.add_argument("--reps", type=int, default=10)
    sim.add_argument("--max-draws", type=int, default=None)
    sim.add_argument("--seed", type=int, default=0, help="sample seed")
    sim.add_argument("--error-rate", type=float, default=0.0)
    sim.add_argument("--error-seed", type=int, default=0)
    sim.add_argument("--output", "-o", help="write the result JSON to this file")
    sim.set_defaults(func=cmd_simulate)

    grid = commands.add_parser("grid", help="run an experiment grid")
    _add_input(grid, many=True)
    grid.add_argument("--methods", type=_names, default=["eo", "se", "wo", "raire"])
    grid.add_argument("--kinds", type=_names, default=["bp", "cp"])
    grid.add_argument("--alphas", type=_floats, default=[0.01, 0.05])
    grid.add_argument("--gammas", type=_floats, default=[1.1])
    grid.add_argument("--error-rates", type=_floats, default=[0.0])
    grid.add_argument("--error-seeds", type=int, default=10)
    grid.add_argument("--sample-seeds", type=int, default=5)
    grid.add_argument("--reps", type=int, default=10, help="zero-error repetitions")
    grid.add_argument("--max-draws", type=int, default=None)
    grid.add_argument(
        "--se-strategy",
        choices=["maximal", "asn-greedy", "none"],
        default="asn-greedy",
    )
    grid.add_argument("--workers", type=int, default=None)
    grid.add_argument("--output", "-o", help="CSV or JSON report file")
    grid.add_argument("--table", choices=["none", "methods", "raire"], default="none")
    grid.add_argument("--plot", help="save a sweep plot to this file")
    grid.add_argument("--sweep", choices=["gamma", "error_rate"], default="gamma")
    grid.set_defaults(func=cmd_grid)

    verify = commands.add_parser("verify", help="check a plan's soundness")
    _add_input(verify)
    _add_audit(verify)
    verify.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line interface.

    Args:
        argv (sequence, optional): Arguments without the program name. If
            None, ``sys.argv[1:]``. Defaults to None.

    Returns:
        int: The exit code.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit:
        return EXIT_OK if not exit.code else EXIT_ERROR
    if args.verbose:
        logging.basicConfig(
            level=logging.DEBUG if args.verbose > 1 else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
        )
    try:
        return int(args.func(args))
    except (OSError, ValueError) as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_ERROR
