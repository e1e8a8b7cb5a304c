"""Preferential ballots, election files and instant-runoff tabulation."""
import csv
import io
import json
import logging
import warnings
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import (
    IO,
    AbstractSet,
    Dict,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

from ._util import _as_kind, _is_strategy_supported
from .kernels import asn_bp, asn_cp

logger = logging.getLogger(__name__)

CandidateId = int
Ranking = Tuple[CandidateId, ...]
Tally = Dict[CandidateId, int]


class BallotFileError(ValueError):
    """A malformed election file, pointing at the offending position."""

    def __init__(self, message: str, position: Optional[str] = None) -> None:
        """Create the error.

        Args:
            message (str): What went wrong.
            position (str, optional): "line N" or "ballot N". Defaults to None.
        """
        self.position = position
        super().__init__(f"{position}: {message}" if position else message)


@dataclass(frozen=True)
class BallotClass:
    """All ballots sharing one ranking."""

    ranking: Ranking
    count: int

    def __post_init__(self) -> None:
        """Validate the ranking and multiplicity."""
        ranking = tuple(int(c) for c in self.ranking)
        if len(set(ranking)) != len(ranking):
            raise ValueError(f"Ranking {ranking} lists a candidate twice.")
        if self.count < 0:
            raise ValueError(f"Negative ballot count {self.count}.")
        object.__setattr__(self, "ranking", ranking)


@dataclass(frozen=True)
class Election:
    """A candidate roster and a multiset of rankings.

    Ballot classes are stored in canonical form: equal rankings merged, zero
    counts dropped and classes sorted by ranking.

    Attributes:
        candidates (tuple): Display names; a ranking refers to candidates by
            their roster index.
        ballots (tuple): The canonical ballot classes.
        reported_winner (int, optional): Roster index of the declared winner.
        mov (int, optional): The margin of victory, if known.
        source (str, optional): A label for the ballot source.
        records (tuple, optional): Ballot-level rankings in record order. Used
            to pair electronic records with paper ballots by index.
    """

    candidates: Tuple[str, ...]
    ballots: Tuple[BallotClass, ...]
    reported_winner: Optional[CandidateId] = None
    mov: Optional[int] = None
    source: Optional[str] = None
    records: Optional[Tuple[Ranking, ...]] = field(
        default=None, compare=False, repr=False
    )

    def __post_init__(self) -> None:
        """Validate and canonicalize the ballot classes."""
        candidates = tuple(self.candidates)
        if not candidates:
            raise ValueError("An election needs at least one candidate.")
        if len(set(candidates)) != len(candidates):
            raise ValueError("Candidate names must be unique.")
        merged: Counter = Counter()
        for ballot in self.ballots:
            if not isinstance(ballot, BallotClass):
                ballot = BallotClass(*ballot)
            for candidate in ballot.ranking:
                if not 0 <= candidate < len(candidates):
                    raise ValueError(
                        f"Candidate index {candidate} outside the roster."
                    )
            if ballot.count:
                merged[ballot.ranking] += ballot.count
        if not merged:
            raise ValueError("no ballots")
        if self.reported_winner is not None and not (
            0 <= self.reported_winner < len(candidates)
        ):
            raise ValueError("The reported winner is not on the roster.")
        if self.records is not None:
            records = tuple(tuple(r) for r in self.records)
            if Counter(records) != merged:
                raise ValueError("Ballot records do not match the ballot classes.")
            object.__setattr__(self, "records", records)
        object.__setattr__(self, "candidates", candidates)
        object.__setattr__(
            self,
            "ballots",
            tuple(BallotClass(r, c) for r, c in sorted(merged.items())),
        )

    @classmethod
    def from_names(
        cls,
        candidates: Sequence[str],
        ballots: Iterable[Tuple[Sequence[str], int]],
        reported_winner: Optional[str] = None,
        mov: Optional[int] = None,
        source: Optional[str] = None,
    ) -> "Election":
        """Build an election from rankings written with candidate names.

        Args:
            candidates (sequence): The roster.
            ballots (iterable): ``(ranking, count)`` pairs, rankings given as
                candidate names.
            reported_winner (str, optional): Name of the declared winner.
            mov (int, optional): The margin of victory.
            source (str, optional): A label for the ballot source.

        Returns:
            Election: The canonical election.

        Example:
            >>> from irvrla.ballots import Election
            >>> election = Election.from_names(
            >>>     ["c1", "c2"], [(["c1"], 3), (["c2", "c1"], 2)]
            >>> )
        """
        lookup = {name: i for i, name in enumerate(candidates)}
        classes = []
        for names, count in ballots:
            try:
                classes.append(BallotClass(tuple(lookup[n] for n in names), count))
            except KeyError as error:
                raise ValueError(f"Unknown candidate {error.args[0]!r}.")
        winner = lookup[reported_winner] if reported_winner is not None else None
        return cls(tuple(candidates), tuple(classes), winner, mov, source)

    @classmethod
    def from_records(
        cls, template: "Election", records: Sequence[Ranking]
    ) -> "Election":
        """Build an election from ballot-level records sharing a roster."""
        records = tuple(tuple(r) for r in records)
        classes = tuple(BallotClass(r, c) for r, c in Counter(records).items())
        return cls(
            template.candidates,
            classes,
            template.reported_winner,
            template.mov,
            template.source,
            records,
        )

    @property
    def num_candidates(self) -> int:
        """The roster size."""
        return len(self.candidates)

    @cached_property
    def total_ballots(self) -> int:
        """The number of ballots cast."""
        return sum(b.count for b in self.ballots)

    @property
    def roster(self) -> Tuple[CandidateId, ...]:
        """All candidate indices."""
        return tuple(range(self.num_candidates))

    def index(self, name: str) -> CandidateId:
        """Find the roster index of a candidate name (case-sensitive)."""
        try:
            return self.candidates.index(name)
        except ValueError:
            raise ValueError(f"Unknown candidate {name!r}.")

    def names(self, ranking: Iterable[CandidateId]) -> List[str]:
        """Translate candidate indices to display names."""
        return [self.candidates[c] for c in ranking]

    def expand(self) -> Tuple[Ranking, ...]:
        """List one ranking per ballot, in record order if records exist."""
        if self.records is not None:
            return self.records
        return tuple(r for b in self.ballots for r in [b.ranking] * b.count)


def parse_election(
    source: Union[bytes, str, IO[bytes], IO[str]],
    format: str = "json",
    candidates: Optional[Sequence[str]] = None,
) -> Election:
    """Parse an election file.

    Two formats are understood. The canonical JSON form::

        {"candidates": [...], "ballots": [{"ranking": [...], "count": n}],
         "metadata": {"reported_winner": name, "mov": n, "source": label}}

    and a CSV form with header ``ranking,count`` where a ranking is a
    ``;``-separated list of candidate names.

    Args:
        source (bytes, str or file): The UTF-8 encoded file content or an
            open file.
        format (str): "json" or "csv". Defaults to "json".
        candidates (sequence, optional): The roster for CSV input. If None,
            candidates are numbered by first appearance. Defaults to None.

    Returns:
        Election: The canonical election.

    Raises:
        BallotFileError: If the content is malformed, names an unknown
            candidate, repeats a candidate within a ranking or holds
            an empty ranking.
        ValueError: If the format is unsupported.
    """
    if not isinstance(source, (bytes, str)):
        source = source.read()
    text = source.decode("utf-8") if isinstance(source, bytes) else source
    if format == "json":
        return _parse_json(text)
    elif format == "csv":
        return _parse_csv(text, candidates)
    else:
        raise ValueError(f"Unsupported election format {format!r}.")


def _ranking_from_names(
    names: Sequence[str], lookup: Mapping[str, int], position: str
) -> Ranking:
    if not names:
        raise BallotFileError("empty ranking", position)
    try:
        ranking = tuple(lookup[name] for name in names)
    except KeyError as error:
        raise BallotFileError(f"unknown candidate {error.args[0]!r}", position)
    if len(set(ranking)) != len(ranking):
        raise BallotFileError("duplicate candidate within a ranking", position)
    return ranking


def _parse_count(value: object, position: str) -> int:
    try:
        count = int(value)  # type: ignore[call-overload]
    except (TypeError, ValueError):
        raise BallotFileError(f"invalid count {value!r}", position)
    if count < 0:
        raise BallotFileError(f"negative count {count}", position)
    return count


def _parse_json(text: str) -> Election:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as error:
        raise BallotFileError(error.msg, f"line {error.lineno}")
    if not isinstance(document, dict) or "candidates" not in document:
        raise BallotFileError("missing 'candidates'")
    candidates = [str(name) for name in document["candidates"]]
    lookup = {name: i for i, name in enumerate(candidates)}
    classes = []
    for number, entry in enumerate(document.get("ballots", []), start=1):
        position = f"ballot {number}"
        if not isinstance(entry, dict) or "ranking" not in entry:
            raise BallotFileError("expected {'ranking': [...], 'count': n}", position)
        ranking = _ranking_from_names(entry["ranking"], lookup, position)
        count = _parse_count(entry.get("count", 1), position)
        classes.append(BallotClass(ranking, count))
    metadata = document.get("metadata") or {}
    if not isinstance(metadata, dict):
        raise BallotFileError("expected an object", "metadata")
    winner = metadata.get("reported_winner")
    if winner is not None and (not isinstance(winner, str) or winner not in lookup):
        raise BallotFileError(f"unknown reported winner {winner!r}", "metadata")
    mov = metadata.get("mov")
    source = metadata.get("source")
    return _build(
        candidates,
        classes,
        lookup[winner] if winner is not None else None,
        _parse_count(mov, "metadata") if mov is not None else None,
        str(source) if source is not None else None,
    )


def _parse_csv(text: str, candidates: Optional[Sequence[str]]) -> Election:
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if header is None or [h.strip() for h in header] != ["ranking", "count"]:
        raise BallotFileError("expected header 'ranking,count'", "line 1")
    roster: List[str] = list(candidates) if candidates is not None else []
    lookup = {name: i for i, name in enumerate(roster)}
    classes = []
    for line, row in enumerate(rows, start=2):
        position = f"line {line}"
        if not row:
            continue
        if len(row) != 2:
            raise BallotFileError(f"expected 2 fields, got {len(row)}", position)
        names = [name.strip() for name in row[0].split(";") if name.strip()]
        if candidates is None:
            for name in names:
                lookup.setdefault(name, len(roster))
                if lookup[name] == len(roster):
                    roster.append(name)
        ranking = _ranking_from_names(names, lookup, position)
        classes.append(BallotClass(ranking, _parse_count(row[1].strip(), position)))
    return _build(roster, classes, None, None, None)


def _build(
    candidates: Sequence[str],
    classes: Sequence[BallotClass],
    winner: Optional[int],
    mov: Optional[int],
    source: Optional[str],
) -> Election:
    if not sum(b.count for b in classes):
        raise BallotFileError("no ballots")
    return Election(tuple(candidates), tuple(classes), winner, mov, source)


def serialize_election(election: Election, format: str = "json") -> bytes:
    """Write an election in canonical form.

    Args:
        election (Election): The election to write.
        format (str): "json" or "csv". Defaults to "json".

    Returns:
        bytes: UTF-8 encoded file content.

    Raises:
        ValueError: If the format is unsupported.
    """
    if format == "json":
        metadata: Dict[str, object] = {}
        if election.reported_winner is not None:
            metadata["reported_winner"] = election.candidates[election.reported_winner]
        if election.mov is not None:
            metadata["mov"] = election.mov
        if election.source is not None:
            metadata["source"] = election.source
        document = {
            "candidates": list(election.candidates),
            "ballots": [
                {"ranking": election.names(b.ranking), "count": b.count}
                for b in election.ballots
            ],
            "metadata": metadata,
        }
        return (json.dumps(document, indent=2) + "\n").encode("utf-8")
    elif format == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["ranking", "count"])
        for b in election.ballots:
            writer.writerow([";".join(election.names(b.ranking)), b.count])
        return buffer.getvalue().encode("utf-8")
    else:
        raise ValueError(f"Unsupported election format {format!r}.")


def project(ranking: Ranking, standing: AbstractSet[CandidateId]) -> Ranking:
    """Restrict a ranking to the standing candidates, keeping their order.

    Args:
        ranking (tuple): A ranking of candidate indices.
        standing (set): The candidates still in the count.

    Returns:
        tuple: The largest subsequence of ``ranking`` within ``standing``.
    """
    return tuple(c for c in ranking if c in standing)


def tally(election: Election, standing: AbstractSet[CandidateId]) -> Tally:
    """Count each standing candidate's ballots.

    A ballot counts for its most preferred standing candidate; a ballot
    ranking no standing candidate is exhausted and counts for no one.

    Args:
        election (Election): The election to count.
        standing (set): The candidates still in the count.

    Returns:
        dict: Tally per standing candidate.

    Raises:
        ValueError: If no candidate is standing.
    """
    if not standing:
        raise ValueError("Cannot tally an empty standing set.")
    counts = {c: 0 for c in sorted(standing)}
    for ballot in election.ballots:
        for candidate in ballot.ranking:
            if candidate in standing:
                counts[candidate] += ballot.count
                break
    return counts


def first_preferences(election: Election) -> Tally:
    """Count first preferences over the whole roster."""
    return tally(election, set(election.roster))


@dataclass(frozen=True)
class EliminationSequence:
    """The result of an instant-runoff count.

    Attributes:
        order (tuple): Candidates in elimination order, winner last.
        round_tallies (tuple): The tallies at the start of every round.
        tie_breaks (tuple): ``(round, tied candidates)`` for every round whose
            lowest tally was shared.
    """

    order: Ranking
    round_tallies: Tuple[Tally, ...]
    tie_breaks: Tuple[Tuple[int, Tuple[CandidateId, ...]], ...] = ()

    @property
    def winner(self) -> CandidateId:
        """The last candidate standing."""
        return self.order[-1]

    def standing(self, position: int) -> frozenset:
        """The candidates standing before ``order[position]`` is eliminated."""
        return frozenset(self.order[position:])


def tabulate_irv(election: Election) -> EliminationSequence:
    """Run an instant-runoff count.

    The standing candidate with the smallest tally is eliminated until one
    remains. Ties for the smallest tally eliminate the lowest roster index.

    Args:
        election (Election): The election to count.

    Returns:
        EliminationSequence: Elimination order and per-round tallies.
    """
    standing = set(election.roster)
    order: List[CandidateId] = []
    rounds: List[Tally] = []
    ties = []
    while len(standing) > 1:
        counts = tally(election, standing)
        rounds.append(counts)
        lowest = min(counts.values())
        tied = tuple(c for c in sorted(standing) if counts[c] == lowest)
        if len(tied) > 1:
            logger.info(
                "Round %d: tie between %s at %d ballots, eliminating %s.",
                len(rounds),
                ", ".join(election.names(tied)),
                lowest,
                election.candidates[tied[0]],
            )
            ties.append((len(rounds), tied))
        order.append(tied[0])
        standing.remove(tied[0])
    order.extend(standing)
    return EliminationSequence(tuple(order), tuple(rounds), tuple(ties))


def is_simultaneous_elimination(
    election: Election,
    standing: AbstractSet[CandidateId],
    group: AbstractSet[CandidateId],
) -> bool:
    """Check that a group falls below every other standing candidate.

    With ``C`` the standing set, ``E`` the group must satisfy
    ``t_C(c) > sum(t_C(e) for e in E)`` for every ``c`` in ``C - E``.
    """
    counts = tally(election, standing)
    group_tally = sum(counts[c] for c in group)
    others = [c for c in standing if c not in group]
    return bool(others) and all(counts[c] > group_tally for c in others)


def grouped_unit_asn(
    election: Election,
    standing: AbstractSet[CandidateId],
    group: AbstractSet[CandidateId],
    kind: str = "bp",
    alpha: float = 0.05,
    gamma: float = 1.1,
) -> float:
    """Estimate the sample number of the unit that eliminates ``group`` at once.

    Args:
        election (Election): The election.
        standing (set): The candidates standing before the group goes.
        group (set): The candidates eliminated together.
        kind (str): "bp" or "cp". Defaults to "bp".
        alpha (float): The risk limit. Defaults to 0.05.
        gamma (float): The error inflation factor. Defaults to 1.1.

    Returns:
        float: The unit ASN; the max over pairwise BRAVO ASNs or one MACRO ASN.
    """
    counts = tally(election, standing)
    group_tally = sum(counts[c] for c in group)
    winners = [c for c in sorted(standing) if c not in group]
    if _as_kind(kind) == "bp":
        active = sum(counts.values())
        return max(asn_bp(counts[w], group_tally, active, alpha) for w in winners)
    v_min = min(counts[w] - group_tally for w in winners)
    return asn_cp(election.total_ballots, v_min, alpha, gamma)


def group_eliminations(
    election: Election,
    sequence: EliminationSequence,
    strategy: str = "asn-greedy",
    kind: str = "bp",
    alpha: float = 0.05,
    gamma: float = 1.1,
) -> List[Tuple[CandidateId, ...]]:
    """Split an elimination order into groups eliminated at once.

    Args:
        election (Election): The election.
        sequence (EliminationSequence): Its reported elimination order.
        strategy (str): "maximal" grows every group as far as the grouping
            condition permits, "asn-greedy" picks the admissible group with the
            smallest unit ASN and "none" keeps one candidate per group.
            Defaults to "asn-greedy".
        kind (str): Audit kind for "asn-greedy". Defaults to "bp".
        alpha (float): Risk limit for "asn-greedy". Defaults to 0.05.
        gamma (float): Inflation factor for "asn-greedy". Defaults to 1.1.

    Returns:
        list: Consecutive groups covering every eliminated candidate; the
            winner is never grouped.

    Raises:
        ValueError: If the strategy is unsupported.
    """
    if not _is_strategy_supported(strategy):
        raise ValueError(f"Unsupported grouping strategy {strategy!r}.")
    if tabulate_irv(election).order != sequence.order:
        warnings.warn(
            "The elimination sequence differs from the tabulated one; "
            "grouping the given order.",
            stacklevel=2,
        )
    order = sequence.order
    groups: List[Tuple[CandidateId, ...]] = []
    start = 0
    while start < len(order) - 1:
        standing = frozenset(order[start:])
        sizes = [1]
        if strategy != "none":
            sizes += [
                size
                for size in range(2, len(order) - start)
                if is_simultaneous_elimination(
                    election, standing, set(order[start : start + size])
                )
            ]
        if strategy == "asn-greedy" and len(sizes) > 1:
            costs = {
                size: grouped_unit_asn(
                    election,
                    standing,
                    set(order[start : start + size]),
                    kind,
                    alpha,
                    gamma,
                )
                for size in sizes
            }
            size = min(sizes, key=lambda s: (costs[s], -s))
        else:
            size = max(sizes)
        groups.append(tuple(order[start : start + size]))
        start += size
    return groups
