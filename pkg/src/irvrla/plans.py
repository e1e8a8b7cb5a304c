"""Build audit plans for the reported outcome of an IRV election."""
import logging
import warnings
from typing import Optional, Union

from ._util import (
    _as_candidate,
    _as_kind,
    _check_audit_parameters,
    _is_method_supported,
)
from .assertions import (
    AuditPlan,
    AuditUnit,
    FullRecount,
    GroupedLoser,
    Standing,
    WinnerOnlyPair,
    make_hypothesis,
    make_unit,
)
from .ballots import (
    Election,
    EliminationSequence,
    group_eliminations,
    tabulate_irv,
)
from .raire import raire

logger = logging.getLogger(__name__)


def _reported_sequence(election: Election) -> EliminationSequence:
    sequence = tabulate_irv(election)
    if (
        election.reported_winner is not None
        and election.reported_winner != sequence.winner
    ):
        warnings.warn(
            f"Declared winner {election.candidates[election.reported_winner]} "
            f"differs from the tabulated winner "
            f"{election.candidates[sequence.winner]}; auditing the tabulation.",
            stacklevel=3,
        )
    return sequence


def _standing_unit(
    election: Election,
    sequence: EliminationSequence,
    position: int,
    kind: str,
    alpha: float,
    gamma: float,
) -> AuditUnit:
    interp = Standing(sequence.standing(position))
    counts = interp.tally(election)
    loser = sequence.order[position]
    hypotheses = [
        make_hypothesis(election, w, loser, interp, alpha, gamma, counts)
        for w in sequence.order[position + 1 :]
    ]
    return make_unit(hypotheses, kind, alpha, gamma, election.total_ballots)


def plan_eo(
    election: Election, kind: str = "bp", alpha: float = 0.05, gamma: float = 1.1
) -> AuditPlan:
    """Plan an audit of the entire elimination order.

    Every round is read as a plurality contest with one loser: each candidate
    still standing must out-tally the candidate eliminated in that round.

    Args:
        election (Election): The reported election.
        kind (str): "bp" or "cp". Defaults to "bp".
        alpha (float): The risk limit. Defaults to 0.05.
        gamma (float): The error inflation factor. Defaults to 1.1.

    Returns:
        AuditPlan: One unit per round.

    Example:
        >>> from irvrla import parse_election, plan_eo
        >>> plan = plan_eo(parse_election(open("table.json", "rb").read()))
        >>> plan.overall_asn
    """
    kind = _as_kind(kind)
    _check_audit_parameters(alpha, gamma)
    sequence = _reported_sequence(election)
    units = tuple(
        _standing_unit(election, sequence, position, kind, alpha, gamma)
        for position in range(len(sequence.order) - 1)
    )
    return AuditPlan("eo", kind, units, alpha, gamma, election, sequence.winner)


def plan_se(
    election: Election,
    kind: str = "bp",
    alpha: float = 0.05,
    gamma: float = 1.1,
    strategy: str = "asn-greedy",
) -> AuditPlan:
    """Plan an audit of the elimination order with simultaneous eliminations.

    Consecutively eliminated candidates whose pooled tally stays below every
    other standing candidate are audited as a single loser.

    Args:
        election (Election): The reported election.
        kind (str): "bp" or "cp". Defaults to "bp".
        alpha (float): The risk limit. Defaults to 0.05.
        gamma (float): The error inflation factor. Defaults to 1.1.
        strategy (str): The grouping strategy, see
            :func:`irvrla.ballots.group_eliminations`. Defaults to "asn-greedy".

    Returns:
        AuditPlan: One unit per group.
    """
    kind = _as_kind(kind)
    _check_audit_parameters(alpha, gamma)
    sequence = _reported_sequence(election)
    groups = group_eliminations(election, sequence, strategy, kind, alpha, gamma)
    units = []
    position = 0
    for group in groups:
        if len(group) == 1:
            units.append(
                _standing_unit(election, sequence, position, kind, alpha, gamma)
            )
        else:
            standing = sequence.standing(position)
            loser = frozenset(group)
            interp = GroupedLoser(standing, loser)
            counts = interp.tally(election)
            hypotheses = [
                make_hypothesis(election, w, loser, interp, alpha, gamma, counts)
                for w in sequence.order[position + len(group) :]
            ]
            units.append(
                make_unit(hypotheses, kind, alpha, gamma, election.total_ballots)
            )
            logger.debug(
                "Grouping %s with %d candidates standing.",
                ", ".join(election.names(group)),
                len(standing),
            )
        position += len(group)
    return AuditPlan("se", kind, tuple(units), alpha, gamma, election, sequence.winner)


def plan_wo(
    election: Election,
    kind: str = "bp",
    alpha: float = 0.05,
    gamma: float = 1.1,
    winner: Optional[Union[int, str]] = None,
) -> AuditPlan:
    """Plan a winner-only audit.

    The winner's first preferences must beat, for every other candidate, all
    ballots that prefer that candidate to the winner.

    Args:
        election (Election): The reported election.
        kind (str): "bp" or "cp". Defaults to "bp".
        alpha (float): The risk limit. Defaults to 0.05.
        gamma (float): The error inflation factor. Defaults to 1.1.
        winner (int or str, optional): The winner to certify. If None, the
            tabulated winner. Defaults to None.

    Returns:
        AuditPlan: One single-assertion unit per losing candidate.
    """
    kind = _as_kind(kind)
    _check_audit_parameters(alpha, gamma)
    if winner is None:
        w = _reported_sequence(election).winner
    else:
        w = _as_candidate(election, winner)
    units = []
    for loser in election.roster:
        if loser == w:
            continue
        hypothesis = make_hypothesis(
            election, w, loser, WinnerOnlyPair(w, loser), alpha, gamma
        )
        units.append(
            make_unit([hypothesis], kind, alpha, gamma, election.total_ballots)
        )
    return AuditPlan("wo", kind, tuple(units), alpha, gamma, election, w)


def build_plan(
    election: Election,
    method: str,
    kind: str = "bp",
    alpha: float = 0.05,
    gamma: float = 1.1,
    strategy: str = "asn-greedy",
    trace: bool = False,
) -> Union[AuditPlan, FullRecount]:
    """Plan an audit with the chosen method.

    Args:
        election (Election): The reported election.
        method (str): "eo", "se", "wo" or "raire".
        kind (str): "bp" or "cp". Defaults to "bp".
        alpha (float): The risk limit. Defaults to 0.05.
        gamma (float): The error inflation factor. Defaults to 1.1.
        strategy (str): Grouping strategy for "se". Defaults to "asn-greedy".
        trace (bool): Record the search trace for "raire". Defaults to False.

    Returns:
        AuditPlan or FullRecount: The plan, or the RAIRE full-recount verdict.

    Raises:
        ValueError: If the method is unsupported.
    """
    method = method.lower()
    if not _is_method_supported(method):
        raise ValueError(f"Unsupported audit method {method!r}.")
    if method == "eo":
        return plan_eo(election, kind, alpha, gamma)
    elif method == "se":
        return plan_se(election, kind, alpha, gamma, strategy)
    elif method == "wo":
        return plan_wo(election, kind, alpha, gamma)
    else:
        return raire(election, None, kind, alpha, gamma, trace=trace)
