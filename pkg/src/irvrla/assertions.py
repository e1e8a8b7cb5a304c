"""Assertions about IRV tallies and the audit plans built from them.

An assertion claims that one party out-tallies another when ballots are read
under a particular vote interpretation. A plan is a collection of audit units,
each unit a collection of assertions audited by one BRAVO or MACRO test.
"""
import json
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

from ._util import _as_kind
from .ballots import CandidateId, Election, Ranking, project
from .kernels import asn_bp, asn_cp

Party = Union[CandidateId, FrozenSet[CandidateId]]


class VoteInterp(ABC):
    """Interface for the ways a ballot can count as a vote."""

    @abstractmethod
    def __call__(self, ranking: Ranking) -> Optional[Party]:
        """Return the party the ranking counts for, or None."""
        raise NotImplementedError

    @property
    @abstractmethod
    def mode(self) -> str:
        """Return the interpretation name used in plan files."""
        raise NotImplementedError

    @abstractmethod
    def rules_out(self, winner: Party, loser: Party, order: Ranking) -> bool:
        """Check if ``winner`` beating ``loser`` contradicts an elimination order."""
        raise NotImplementedError

    def tally(self, election: Election) -> Dict[Party, int]:
        """Count the ballots of every party under this interpretation."""
        counts: Dict[Party, int] = {}
        for ballot in election.ballots:
            party = self(ballot.ranking)
            if party is not None:
                counts[party] = counts.get(party, 0) + ballot.count
        return counts

    def describe(self, election: Election) -> Dict[str, Any]:
        """Return the JSON fields that identify this interpretation."""
        return {"mode": self.mode}


def _first(ranking: Ranking) -> Optional[CandidateId]:
    return ranking[0] if ranking else None


@dataclass(frozen=True)
class Standing(VoteInterp):
    """A ballot counts for its first preference among the standing candidates."""

    standing: FrozenSet[CandidateId]

    def __call__(self, ranking: Ranking) -> Optional[Party]:
        """Return the most preferred standing candidate."""
        for candidate in ranking:
            if candidate in self.standing:
                return candidate
        return None

    @property
    def mode(self) -> str:
        """Return "standing"."""
        return "standing"

    def rules_out(self, winner: Party, loser: Party, order: Ranking) -> bool:
        """Check if ``winner`` is eliminated while exactly ``standing`` remain."""
        start = len(order) - len(self.standing)
        return (
            start >= 0
            and order[start] == winner
            and frozenset(order[start:]) == self.standing
        )

    def describe(self, election: Election) -> Dict[str, Any]:
        """Return mode and standing set."""
        return {"mode": self.mode, "standing": election.names(sorted(self.standing))}


@dataclass(frozen=True)
class WinnerOnlyPair(VoteInterp):
    """The winner keeps first preferences only, the loser gets every ballot it can.

    A ballot counts for ``winner`` iff it ranks the winner first and for
    ``loser`` iff the loser precedes the winner (or the winner is unranked).
    """

    winner: CandidateId
    loser: CandidateId

    def __call__(self, ranking: Ranking) -> Optional[Party]:
        """Return the winner, the loser or None."""
        if _first(ranking) == self.winner:
            return self.winner
        if _first(project(ranking, {self.winner, self.loser})) == self.loser:
            return self.loser
        return None

    @property
    def mode(self) -> str:
        """Return "winner-only"."""
        return "winner-only"

    def rules_out(self, winner: Party, loser: Party, order: Ranking) -> bool:
        """Check if ``winner`` is eliminated before ``loser``."""
        return order.index(winner) < order.index(loser)  # type: ignore[arg-type]


@dataclass(frozen=True)
class GroupedLoser(VoteInterp):
    """Standing tallies with the candidates of ``group`` pooled into one party."""

    standing: FrozenSet[CandidateId]
    group: FrozenSet[CandidateId]

    def __call__(self, ranking: Ranking) -> Optional[Party]:
        """Return the group, a standing candidate outside it, or None."""
        for candidate in ranking:
            if candidate in self.standing:
                return self.group if candidate in self.group else candidate
        return None

    @property
    def mode(self) -> str:
        """Return "grouped-loser"."""
        return "grouped-loser"

    def rules_out(self, winner: Party, loser: Party, order: Ranking) -> bool:
        """Check if ``winner`` goes before the group is eliminated from ``standing``.

        Holds as a contradiction when all assertions of the group's unit hold.
        """
        start = len(order) - len(self.standing)
        return (
            start >= 0
            and frozenset(order[start:]) == self.standing
            and winner in order[start : start + len(self.group)]
        )

    def describe(self, election: Election) -> Dict[str, Any]:
        """Return mode, standing set and group."""
        return {
            "mode": self.mode,
            "standing": election.names(sorted(self.standing)),
            "group": election.names(sorted(self.group)),
        }


def interpret(ranking: Ranking, interp: VoteInterp) -> Optional[Party]:
    """Classify a ballot under a vote interpretation.

    Args:
        ranking (tuple): The ballot.
        interp (VoteInterp): The interpretation.

    Returns:
        The candidate or group the ballot counts for, or None.
    """
    return interp(ranking)


@dataclass(frozen=True)
class PairwiseHypothesis:
    """The assertion that ``winner`` out-tallies ``loser`` under ``interp``.

    Attributes:
        winner: A candidate index.
        loser: A candidate index or a group of candidates.
        interp (VoteInterp): How ballots count.
        winner_tally (int): The reported winner tally.
        loser_tally (int): The reported loser tally.
        active_ballots (int): Ballots counting for any party under ``interp``.
        total_ballots (int): All ballots cast.
        asn_bp (float): BRAVO sample number estimate.
        asn_cp (float): MACRO sample number estimate.
    """

    winner: Party
    loser: Party
    interp: VoteInterp
    winner_tally: int
    loser_tally: int
    active_ballots: int
    total_ballots: int
    asn_bp: float = field(default=math.inf, compare=False)
    asn_cp: float = field(default=math.inf, compare=False)

    @property
    def margin(self) -> int:
        """The reported winner tally minus the loser tally."""
        return self.winner_tally - self.loser_tally

    def asn(self, kind: str) -> float:
        """Return the estimate for "bp" or "cp"."""
        return self.asn_bp if _as_kind(kind) == "bp" else self.asn_cp

    def rules_out(self, order: Ranking) -> bool:
        """Check if this assertion contradicts a complete elimination order."""
        return self.interp.rules_out(self.winner, self.loser, order)

    def to_dict(self, election: Election, kind: str) -> Dict[str, Any]:
        """Serialize with candidate names."""
        return {
            "winner": _party_name(election, self.winner),
            "loser": _party_name(election, self.loser),
            **self.interp.describe(election),
            "winner_tally": self.winner_tally,
            "loser_tally": self.loser_tally,
            "margin": self.margin,
            "asn": _json_number(self.asn(kind)),
        }


def _party_name(election: Election, party: Party) -> Union[str, List[str]]:
    if isinstance(party, frozenset):
        return election.names(sorted(party))
    return election.candidates[party]


def _json_number(value: float) -> Union[float, str]:
    return "inf" if math.isinf(value) else value


def hypothesis_asn(
    hypothesis: PairwiseHypothesis,
    kind: str,
    alpha: float,
    gamma: float,
    total: int,
) -> float:
    """Estimate the sample number needed to confirm an assertion.

    Args:
        hypothesis (PairwiseHypothesis): The assertion.
        kind (str): "bp" or "cp".
        alpha (float): The risk limit.
        gamma (float): The error inflation factor (comparison audits only).
        total (int): The number of ballots cast.

    Returns:
        float: The ASN, ``inf`` for a non-positive margin.
    """
    if _as_kind(kind) == "bp":
        if hypothesis.active_ballots == 0:
            return math.inf
        return asn_bp(
            hypothesis.winner_tally,
            hypothesis.loser_tally,
            hypothesis.active_ballots,
            alpha,
        )
    return asn_cp(total, hypothesis.margin, alpha, gamma)


def make_hypothesis(
    election: Election,
    winner: Party,
    loser: Party,
    interp: VoteInterp,
    alpha: float = 0.05,
    gamma: float = 1.1,
    counts: Optional[Dict[Party, int]] = None,
) -> PairwiseHypothesis:
    """Build an assertion with tallies taken from the reported ballots.

    Args:
        election (Election): The reported election.
        winner: The asserted winner.
        loser: The asserted loser.
        interp (VoteInterp): How ballots count.
        alpha (float): The risk limit. Defaults to 0.05.
        gamma (float): The error inflation factor. Defaults to 1.1.
        counts (dict, optional): ``interp.tally(election)`` if already known.
            Defaults to None.

    Returns:
        PairwiseHypothesis: The assertion with both ASN estimates.
    """
    if counts is None:
        counts = interp.tally(election)
    draft = PairwiseHypothesis(
        winner,
        loser,
        interp,
        counts.get(winner, 0),
        counts.get(loser, 0),
        sum(counts.values()),
        election.total_ballots,
    )
    total = election.total_ballots
    return replace(
        draft,
        asn_bp=hypothesis_asn(draft, "bp", alpha, gamma, total),
        asn_cp=hypothesis_asn(draft, "cp", alpha, gamma, total),
    )


def check_hypothesis(hypothesis: PairwiseHypothesis, election: Election) -> None:
    """Make sure an assertion's tallies are those of the given ballots.

    Raises:
        ValueError: If a recount under the assertion's interpretation differs.
    """
    counts = hypothesis.interp.tally(election)
    if (
        counts.get(hypothesis.winner, 0) != hypothesis.winner_tally
        or counts.get(hypothesis.loser, 0) != hypothesis.loser_tally
    ):
        raise ValueError(
            "Plan does not match the election: tallies of "
            f"{hypothesis.winner} vs {hypothesis.loser} differ."
        )


@dataclass(frozen=True)
class AuditUnit:
    """Assertions confirmed together by one sequential test.

    Attributes:
        hypotheses (tuple): The unit's assertions.
        asn (float): For ballot-polling the largest member BRAVO estimate, for
            comparison the MACRO estimate of the smallest margin.
    """

    hypotheses: Tuple[PairwiseHypothesis, ...]
    asn: float

    @property
    def v_min(self) -> int:
        """The smallest margin in the unit."""
        return min(h.margin for h in self.hypotheses)

    def rules_out(self, order: Ranking) -> bool:
        """Check if the unit's assertions contradict an elimination order."""
        return any(h.rules_out(order) for h in self.hypotheses)


def make_unit(
    hypotheses: Sequence[PairwiseHypothesis],
    kind: str,
    alpha: float,
    gamma: float,
    total: int,
) -> AuditUnit:
    """Group assertions into a unit and estimate its sample number.

    Raises:
        ValueError: If no assertion is given.
    """
    if not hypotheses:
        raise ValueError("An audit unit needs at least one assertion.")
    if _as_kind(kind) == "bp":
        asn = max(h.asn_bp for h in hypotheses)
    else:
        asn = asn_cp(total, min(h.margin for h in hypotheses), alpha, gamma)
    return AuditUnit(tuple(hypotheses), asn)


@dataclass(frozen=True)
class AuditPlan:
    """A set of audit units whose joint confirmation certifies the winner.

    Attributes:
        method (str): "eo", "se", "wo" or "raire".
        kind (str): "bp" or "cp".
        units (tuple): The audit units.
        alpha (float): The risk limit.
        gamma (float): The error inflation factor.
        election (Election): The reported election the plan was built on.
        winner (int): The certified winner.
        trace (tuple): Search events, if recorded.
    """

    method: str
    kind: str
    units: Tuple[AuditUnit, ...]
    alpha: float
    gamma: float
    election: Election = field(repr=False)
    winner: CandidateId
    trace: Tuple[str, ...] = field(default=(), compare=False, repr=False)

    @property
    def overall_asn(self) -> float:
        """The largest unit ASN."""
        return max((u.asn for u in self.units), default=0.0)

    @property
    def total_ballots(self) -> int:
        """The number of ballots cast."""
        return self.election.total_ballots

    @property
    def asn_percent(self) -> float:
        """The overall ASN as a percentage of ballots cast."""
        return 100.0 * self.overall_asn / self.total_ballots

    @property
    def hypotheses(self) -> List[PairwiseHypothesis]:
        """All assertions of the plan."""
        return [h for u in self.units for h in u.hypotheses]

    @property
    def full_recount(self) -> bool:
        """Check if no audit is expected to finish before a full recount."""
        return self.overall_asn >= self.total_ballots

    def rules_out(self, order: Ranking) -> bool:
        """Check if any unit contradicts an elimination order."""
        return any(u.rules_out(order) for u in self.units)

    def to_dict(self) -> Dict[str, Any]:
        """Serialize with candidate names; infinite ASNs become "inf"."""
        return {
            "method": self.method,
            "kind": self.kind,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "total_ballots": self.total_ballots,
            "winner": self.election.candidates[self.winner],
            "overall_asn": _json_number(self.overall_asn),
            "units": [
                {
                    "asn": _json_number(u.asn),
                    "v_min": u.v_min,
                    "hypotheses": [
                        h.to_dict(self.election, self.kind) for h in u.hypotheses
                    ],
                }
                for u in self.units
            ],
        }

    def to_json(self) -> str:
        """Serialize to an indented JSON document."""
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class FullRecount:
    """The verdict that no assertion set can certify the reported winner."""

    method: str
    kind: str
    reason: str
    trace: Tuple[str, ...] = field(default=(), compare=False, repr=False)

    @property
    def overall_asn(self) -> float:
        """Always infinite."""
        return math.inf

    def to_dict(self) -> Dict[str, Any]:
        """Serialize the verdict."""
        return {
            "method": self.method,
            "kind": self.kind,
            "verdict": "full recount necessary",
            "reason": self.reason,
            "overall_asn": "inf",
        }

    def to_json(self) -> str:
        """Serialize to an indented JSON document."""
        return json.dumps(self.to_dict(), indent=2)
