"""Search for the cheapest set of assertions that certifies an IRV winner.

The search explores alternate elimination orders from the back: a node is the
tail of an order, its last candidate an alternate winner. Every node is labelled
with the cheapest assertion that contradicts it. Expanding the most expensive
node first and committing the cheapest assertion along its path minimises the
largest sample number in the committed set.
"""
import heapq
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Set, Tuple, Union

from ._util import _as_candidate, _as_kind, _check_audit_parameters
from .assertions import (
    AuditPlan,
    FullRecount,
    PairwiseHypothesis,
    Standing,
    VoteInterp,
    WinnerOnlyPair,
    make_hypothesis,
    make_unit,
)
from .ballots import CandidateId, Election, Ranking, tabulate_irv

logger = logging.getLogger(__name__)

Suffix = Tuple[CandidateId, ...]
AssertionKey = Tuple[CandidateId, CandidateId, VoteInterp]


def assertion_family(
    suffix: Suffix, roster: Tuple[CandidateId, ...]
) -> Iterator[AssertionKey]:
    """List every assertion that rules out orders ending in ``suffix``.

    With ``c`` the first candidate of the suffix:

    * ``c`` beats each later ``c'`` of the suffix winner-only,
    * each candidate ``c''`` outside the suffix beats ``c`` winner-only,
    * ``c`` out-tallies each other ``c'`` of the suffix while exactly the suffix
      stands.

    A single-candidate suffix only yields the second kind.

    Args:
        suffix (tuple): The tail of an elimination order.
        roster (tuple): All candidates.

    Yields:
        tuple: ``(winner, loser, interpretation)`` keys.
    """
    first = suffix[0]
    standing = frozenset(suffix)
    if len(suffix) > 1:
        for later in suffix[1:]:
            yield first, later, WinnerOnlyPair(first, later)
    for outside in roster:
        if outside not in standing:
            yield outside, first, WinnerOnlyPair(outside, first)
    if len(suffix) > 1:
        for other in suffix[1:]:
            yield first, other, Standing(standing)


class AssertionCache:
    """Memoise assertions of one election and audit configuration."""

    def __init__(
        self, election: Election, kind: str, alpha: float, gamma: float
    ) -> None:
        """Create an empty cache.

        Args:
            election (Election): The reported election.
            kind (str): "bp" or "cp".
            alpha (float): The risk limit.
            gamma (float): The error inflation factor.
        """
        self.election = election
        self.kind = _as_kind(kind)
        self.alpha = alpha
        self.gamma = gamma
        self._hypotheses: Dict[AssertionKey, PairwiseHypothesis] = {}
        self._tallies: Dict[VoteInterp, Dict] = {}

    def __getitem__(self, key: AssertionKey) -> PairwiseHypothesis:
        """Build or look up an assertion."""
        if key not in self._hypotheses:
            winner, loser, interp = key
            if interp not in self._tallies:
                self._tallies[interp] = interp.tally(self.election)
            self._hypotheses[key] = make_hypothesis(
                self.election,
                winner,
                loser,
                interp,
                self.alpha,
                self.gamma,
                self._tallies[interp],
            )
        return self._hypotheses[key]

    def asn(self, hypothesis: Optional[PairwiseHypothesis]) -> float:
        """Return the estimate used by the search, ``inf`` for no assertion."""
        if hypothesis is None:
            return math.inf
        value = hypothesis.asn(self.kind)
        return value if value < self.election.total_ballots else math.inf


def find_best_audit(
    suffix: Suffix,
    election: Election,
    kind: str = "bp",
    alpha: float = 0.05,
    gamma: float = 1.1,
    cache: Optional[AssertionCache] = None,
) -> Tuple[Optional[PairwiseHypothesis], float]:
    """Find the cheapest assertion that rules out orders ending in ``suffix``.

    Args:
        suffix (tuple): The tail of an elimination order.
        election (Election): The reported election.
        kind (str): "bp" or "cp". Defaults to "bp".
        alpha (float): The risk limit. Defaults to 0.05.
        gamma (float): The error inflation factor. Defaults to 1.1.
        cache (AssertionCache, optional): Shared assertion memo. Defaults to None.

    Returns:
        tuple: The assertion and its ASN, or ``(None, inf)`` if no assertion
            needs fewer ballots than were cast.

    Raises:
        ValueError: If the suffix is empty or repeats a candidate.
    """
    if not suffix or len(set(suffix)) != len(suffix):
        raise ValueError(f"Invalid elimination order suffix {suffix}.")
    if cache is None:
        cache = AssertionCache(election, kind, alpha, gamma)
    best: Optional[PairwiseHypothesis] = None
    best_asn = math.inf
    for key in assertion_family(tuple(suffix), election.roster):
        hypothesis = cache[key]
        value = cache.asn(hypothesis)
        if value < best_asn:
            best, best_asn = hypothesis, value
    return best, best_asn


@dataclass
class FrontierNode:
    """A suffix, its cheapest assertion and its cheapest ancestor suffix."""

    seq: Suffix
    asr: Optional[PairwiseHypothesis]
    asn: float
    ba: Suffix


def _tie_key(value: float) -> float:
    return value if math.isinf(value) else round(value, 9)


class Frontier:
    """Max-priority queue of frontier nodes with removal by suffix."""

    def __init__(self) -> None:
        """Create an empty frontier."""
        self._heap: List[Tuple[float, int, Suffix]] = []
        self._live: Dict[Suffix, FrontierNode] = {}

    def __len__(self) -> int:
        """Return the number of live nodes."""
        return len(self._live)

    def push(self, node: FrontierNode) -> None:
        """Add a node keyed by its own assertion's ASN."""
        self._live[node.seq] = node
        heapq.heappush(self._heap, (-_tie_key(node.asn), len(node.seq), node.seq))

    def pop(self) -> FrontierNode:
        """Remove the node with the largest ASN, shorter and smaller suffix first."""
        while True:
            _, _, seq = heapq.heappop(self._heap)
            if seq in self._live:
                return self._live.pop(seq)

    def prune(self, tail: Suffix) -> List[Suffix]:
        """Drop every node ending in ``tail``."""
        dropped = [seq for seq in self._live if seq[-len(tail) :] == tail]
        for seq in dropped:
            del self._live[seq]
        return dropped


class _RaireSearch:
    def __init__(
        self,
        election: Election,
        winner: CandidateId,
        kind: str,
        alpha: float,
        gamma: float,
        trace: bool,
    ) -> None:
        self.election = election
        self.winner = winner
        self.kind = kind
        self.alpha = alpha
        self.gamma = gamma
        self.cache = AssertionCache(election, kind, alpha, gamma)
        self.nodes: Dict[Suffix, FrontierNode] = {}
        self.frontier = Frontier()
        self.committed: Dict[PairwiseHypothesis, None] = {}
        self.covered: Set[Suffix] = set()
        self.lower_bound = 0.0
        self.record = trace
        self.trace: List[str] = []

    def _log(self, message: str) -> None:
        logger.debug(message)
        if self.record:
            self.trace.append(message)

    def _names(self, seq: Suffix) -> str:
        return "[" + ",".join(self.election.names(seq)) + "]"

    def _node(self, seq: Suffix, parent: Optional[FrontierNode]) -> FrontierNode:
        asr, asn = find_best_audit(
            seq, self.election, self.kind, self.alpha, self.gamma, self.cache
        )
        if parent is None or asn < self.nodes[parent.ba].asn:
            ba = seq
        else:
            ba = parent.ba
        node = FrontierNode(seq, asr, asn, ba)
        self.nodes[seq] = node
        return node

    def _is_covered(self, seq: Suffix) -> bool:
        return any(seq[start:] in self.covered for start in range(len(seq)))

    def _commit(self, ancestor: FrontierNode) -> None:
        assert ancestor.asr is not None
        if ancestor.asr not in self.committed:
            self.committed[ancestor.asr] = None
            self._log(
                f"commit {self._names(ancestor.seq)} asn={ancestor.asn:.4g}"
            )
        self.covered.add(ancestor.seq)
        for seq in self.frontier.prune(ancestor.seq):
            self._log(f"prune {self._names(seq)}")

    def run(self) -> Union[AuditPlan, FullRecount]:
        roster = self.election.roster
        for candidate in roster:
            if candidate != self.winner:
                self.frontier.push(self._node((candidate,), None))
        while len(self.frontier):
            node = self.frontier.pop()
            best = self.nodes[node.ba]
            if best.asn <= self.lower_bound:
                self._commit(best)
                continue
            self._log(f"expand {self._names(node.seq)} asn={node.asn:.4g}")
            for candidate in roster:
                if candidate in node.seq:
                    continue
                seq = (candidate,) + node.seq
                if self._is_covered(seq):
                    continue
                child = self._node(seq, node)
                if len(seq) == len(roster):
                    best = self.nodes[child.ba]
                    if math.isinf(best.asn):
                        reason = (
                            f"no assertion rules out {self._names(seq)} "
                            "with fewer samples than ballots cast"
                        )
                        self._log(f"full recount: {reason}")
                        return FullRecount(
                            "raire", self.kind, reason, tuple(self.trace)
                        )
                    self._commit(best)
                    self.lower_bound = max(self.lower_bound, best.asn)
                else:
                    self.frontier.push(child)
        units = tuple(
            make_unit(
                [h], self.kind, self.alpha, self.gamma, self.election.total_ballots
            )
            for h in self.committed
        )
        return AuditPlan(
            "raire",
            self.kind,
            units,
            self.alpha,
            self.gamma,
            self.election,
            self.winner,
            tuple(self.trace),
        )


def raire(
    election: Election,
    winner: Optional[Union[int, str]] = None,
    kind: str = "bp",
    alpha: float = 0.05,
    gamma: float = 1.1,
    trace: bool = False,
) -> Union[AuditPlan, FullRecount]:
    """Generate the assertion set with the smallest largest sample number.

    Args:
        election (Election): The reported election.
        winner (int or str, optional): The reported winner. If None, the
            tabulated winner. Defaults to None.
        kind (str): "bp" or "cp". Defaults to "bp".
        alpha (float): The risk limit. Defaults to 0.05.
        gamma (float): The error inflation factor. Defaults to 1.1.
        trace (bool): Keep the expand/commit/prune events on the result.
            Defaults to False.

    Returns:
        AuditPlan or FullRecount: One single-assertion unit per committed
            assertion, or the verdict that a full recount is necessary.

    Example:
        >>> from irvrla import raire
        >>> plan = raire(election, kind="cp", alpha=0.05, gamma=1.1)
        >>> plan.asn_percent
    """
    kind = _as_kind(kind)
    _check_audit_parameters(alpha, gamma)
    if winner is None:
        c_w = tabulate_irv(election).winner
    else:
        c_w = _as_candidate(election, winner)
    return _RaireSearch(election, c_w, kind, alpha, gamma, trace).run()


@dataclass(frozen=True)
class Soundness:
    """The outcome of checking a plan against every alternate elimination order."""

    sound: bool
    checked: int
    uncovered: Tuple[Ranking, ...] = ()


def verify_plan_soundness(
    plan: AuditPlan,
    election: Election,
    winner: Optional[Union[int, str]] = None,
    max_candidates: int = 7,
) -> Soundness:
    """Check that a plan rules out every order electing someone else.

    Args:
        plan (AuditPlan): The plan to check.
        election (Election): The election it certifies.
        winner (int or str, optional): The certified winner. If None, the
            plan's winner. Defaults to None.
        max_candidates (int): Largest roster enumerated exhaustively.
            Defaults to 7.

    Returns:
        Soundness: Whether every complete elimination order ending in another
            candidate is contradicted by at least one plan assertion, with the
            uncovered orders.

    Raises:
        ValueError: If the roster is larger than ``max_candidates``.
    """
    if election.num_candidates > max_candidates:
        raise ValueError(
            f"Exhaustive check limited to {max_candidates} candidates, "
            f"got {election.num_candidates}."
        )
    c_w = plan.winner if winner is None else _as_candidate(election, winner)
    checked = 0
    uncovered = []
    for order in itertools.permutations(election.roster):
        if order[-1] == c_w:
            continue
        checked += 1
        if not plan.rules_out(order):
            uncovered.append(order)
    if uncovered:
        logger.info(
            "%d of %d alternate orders are not ruled out.", len(uncovered), checked
        )
    return Soundness(not uncovered, checked, tuple(uncovered))
