"""Sequential tests and sample-size estimates for ballot-polling and comparison audits.

Ballot-polling audits follow BRAVO: every winner/loser pair keeps a likelihood
ratio statistic ``T_wl`` that grows with ballots for the winner and shrinks with
ballots for the loser. Comparison audits follow MACRO: a unit of winner/loser
pairs keeps a Kaplan-Markov P-value ``P_KM`` driven by the maximum relative
overstatement of each drawn ballot.

Both statistics are accumulated in the log domain.
"""
import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Hashable, Optional, Sequence, Tuple

import numpy as np

OPEN = "open"
REJECTED = "rejected-null"
CONFIRMED = "confirmed"
ESCALATED = "escalated"


class BallotSignal(enum.IntEnum):
    """What a drawn ballot says about a single winner/loser pair."""

    FOR_LOSER = -1
    NEUTRAL = 0
    FOR_WINNER = 1


def asn_bp(tally_w: int, tally_l: int, total: int, alpha: float) -> float:
    """Estimate the number of ballots a BRAVO test of one pair will draw.

    Args:
        tally_w (int): The reported winner tally.
        tally_l (int): The reported loser tally.
        total (int): The number of ballots the tallies are shares of.
        alpha (float): The risk limit.

    Returns:
        float: The average sample number, ``inf`` if the winner does not
            strictly lead or the expected log-likelihood increment is not
            positive.

    Raises:
        ValueError: If ``total`` is not positive.

    Example:
        >>> from irvrla.kernels import asn_bp
        >>> round(asn_bp(26000, 9000, 60000, 0.05), 1)
        44.5
    """
    if total <= 0:
        raise ValueError("The ballot total must be positive.")
    if tally_w <= tally_l:
        return math.inf
    share = tally_w / (tally_w + tally_l)
    p_w = tally_w / total
    p_l = tally_l / total
    denominator = p_w * math.log(2 * share)
    if tally_l > 0:
        denominator += p_l * math.log(2 - 2 * share)
    if denominator <= 0:
        return math.inf
    return (math.log(1 / alpha) + 0.5 * math.log(2 * share)) / denominator


def asn_cp(total: int, v_min: int, alpha: float, gamma: float) -> float:
    """Estimate the number of ballots a MACRO comparison audit will check.

    Args:
        total (int): The number of ballots cast.
        v_min (int): The smallest winner/loser margin of the audited unit.
        alpha (float): The risk limit.
        gamma (float): The error inflation factor.

    Returns:
        float: ``-ln(alpha) * U`` with ``U = 2 * gamma * total / v_min``,
            or ``inf`` for a non-positive margin.
    """
    if v_min <= 0:
        return math.inf
    return -math.log(alpha) * diluted_error_bound(total, v_min, gamma)


def diluted_error_bound(total: int, v_min: int, gamma: float) -> float:
    """Compute MACRO's error bound ``U = 2 * gamma * total / v_min``."""
    return 2.0 * gamma * total / v_min


@dataclass(frozen=True)
class BravoState:
    """The state of a BRAVO test for a single winner/loser pair.

    Attributes:
        s_wl (float): The reported winner share of the pair's ballots.
        alpha (float): The risk limit.
        log_t (float): The natural logarithm of the test statistic ``T_wl``.
        status (str): Either "open" or "rejected-null".
    """

    s_wl: float
    alpha: float
    log_t: float = 0.0
    status: str = OPEN

    @classmethod
    def start(cls, tally_w: int, tally_l: int, alpha: float) -> "BravoState":
        """Open a test from the reported pair tallies."""
        pair_total = tally_w + tally_l
        share = tally_w / pair_total if pair_total else 0.5
        return cls(s_wl=share, alpha=alpha)

    @property
    def t_wl(self) -> float:
        """The test statistic ``T_wl``."""
        return math.exp(self.log_t)

    @property
    def closed(self) -> bool:
        """Check if the null hypothesis has been rejected."""
        return self.status != OPEN

    def _increments(self) -> Tuple[float, float]:
        with np.errstate(divide="ignore"):
            up = float(np.log(2 * self.s_wl))
            down = float(np.log(2 - 2 * self.s_wl))
        return up, down

    def advance(self, signals: np.ndarray) -> Tuple["BravoState", Optional[int]]:
        """Feed a batch of ballot signals in draw order.

        Args:
            signals (np.ndarray): Integer array of ``BallotSignal`` values.

        Returns:
            tuple: The new state and the position within ``signals`` of the
                draw that rejected the null hypothesis, or None.

        Raises:
            ValueError: If the test is already closed.
        """
        if self.closed:
            raise ValueError("Cannot update a closed BRAVO test.")
        if len(signals) == 0:
            return self, None
        up, down = self._increments()
        steps = np.zeros(len(signals))
        steps[signals == BallotSignal.FOR_WINNER] = up
        steps[signals == BallotSignal.FOR_LOSER] = down
        path = self.log_t + np.cumsum(steps)
        hits = np.flatnonzero(path >= math.log(1 / self.alpha))
        if hits.size:
            position = int(hits[0])
            return replace(self, log_t=float(path[position]), status=REJECTED), position
        return replace(self, log_t=float(path[-1])), None


def bravo_update(state: BravoState, signal: BallotSignal) -> BravoState:
    """Apply a single drawn ballot to a BRAVO test.

    Args:
        state (BravoState): An open test.
        signal (BallotSignal): The ballot's meaning for the pair.

    Returns:
        BravoState: The updated test.
    """
    new_state, _ = state.advance(np.array([int(signal)]))
    return new_state


@dataclass(frozen=True)
class MacroState:
    """The state of a MACRO comparison test of one audit unit.

    Attributes:
        total_ballots (int): The number of ballots cast.
        v_min (int): The smallest margin among the unit's pairs.
        gamma (float): The error inflation factor.
        u (float): The diluted error bound ``U``.
        log_p (float): The natural logarithm of the Kaplan-Markov P-value.
        status (str): One of "open", "confirmed" or "escalated".
    """

    total_ballots: int
    v_min: int
    gamma: float
    u: float
    log_p: float = 0.0
    status: str = OPEN

    @classmethod
    def start(cls, total_ballots: int, v_min: int, gamma: float) -> "MacroState":
        """Open a test; a unit without a positive margin is escalated at once."""
        if v_min <= 0:
            return cls(total_ballots, v_min, gamma, math.inf, status=ESCALATED)
        u = diluted_error_bound(total_ballots, v_min, gamma)
        return cls(total_ballots, v_min, gamma, u)

    @property
    def p_km(self) -> float:
        """The running Kaplan-Markov P-value."""
        return math.exp(self.log_p)

    @property
    def closed(self) -> bool:
        """Check if the unit is confirmed or escalated."""
        return self.status != OPEN

    def advance(
        self, discrepancies: np.ndarray, alpha: float
    ) -> Tuple["MacroState", Optional[int]]:
        """Feed a batch of per-ballot overstatements in draw order.

        Args:
            discrepancies (np.ndarray): The ``e_b`` value of each drawn ballot.
            alpha (float): The risk limit.

        Returns:
            tuple: The new state and the position of the draw that confirmed or
                escalated the unit, or None if it stays open.

        Raises:
            ValueError: If the test is already closed.
        """
        if self.closed:
            raise ValueError("Cannot update a closed MACRO test.")
        if len(discrepancies) == 0:
            return self, None
        denominators = 1.0 - np.asarray(discrepancies, dtype=float) * (
            self.v_min / (2.0 * self.gamma)
        )
        bad = np.flatnonzero(denominators <= 0)
        usable = denominators[: bad[0]] if bad.size else denominators
        path = self.log_p + np.cumsum(math.log1p(-1.0 / self.u) - np.log(usable))
        hits = np.flatnonzero(path <= math.log(alpha))
        if hits.size:
            position = int(hits[0])
            confirmed = replace(self, log_p=float(path[position]), status=CONFIRMED)
            return confirmed, position
        if bad.size:
            return replace(self, status=ESCALATED), int(bad[0])
        return replace(self, log_p=float(path[-1])), None


def macro_update(state: MacroState, e_b: float, alpha: float) -> MacroState:
    """Apply a single compared ballot to a MACRO test.

    Args:
        state (MacroState): An open test.
        e_b (float): The ballot's maximum relative overstatement.
        alpha (float): The risk limit.

    Returns:
        MacroState: The updated test. A non-positive Kaplan-Markov denominator
            escalates the unit to a full recount.
    """
    new_state, _ = state.advance(np.array([e_b]), alpha)
    return new_state


def macro_run_length(u: float, alpha: float) -> int:
    """Count the error-free draws MACRO needs to confirm a unit."""
    return math.ceil(math.log(alpha) / math.log1p(-1.0 / u))


Interpretation = Callable[[Tuple[int, ...]], Optional[Hashable]]


def macro_discrepancy(
    pairs: Sequence[Tuple[Hashable, Hashable, int, Interpretation]],
    reported: Tuple[int, ...],
    actual: Tuple[int, ...],
) -> float:
    """Compute the maximum relative overstatement of one ballot.

    Args:
        pairs (sequence): ``(winner, loser, margin, interpretation)`` tuples,
            where the interpretation maps a ranking to the party it counts for.
        reported (tuple): The electronic record of the ballot.
        actual (tuple): The paper ballot.

    Returns:
        float: ``max((v_w - a_w - v_l + a_l) / margin)`` over the pairs, or 0
            for an empty unit.
    """
    worst = -math.inf
    for winner, loser, margin, interpretation in pairs:
        reported_party = interpretation(reported)
        actual_party = interpretation(actual)
        overstatement = (
            (reported_party == winner)
            - (actual_party == winner)
            - (reported_party == loser)
            + (actual_party == loser)
        )
        worst = max(worst, overstatement / margin)
    return 0.0 if worst == -math.inf else worst
