"""Simulate risk-limiting audits of IRV elections.

Reported ballots are derived from the actual ballots by random manipulation,
a plan is built on the reported ballots and the audit draws actual ballots
uniformly with replacement until every audit unit closes or the sampling cap
is reached.
"""
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import (
    Any,
    Callable,
    Dict,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
from scipy import stats

from ._util import _as_kind, _check_audit_parameters, _is_method_supported
from .assertions import AuditPlan, FullRecount, PairwiseHypothesis, check_hypothesis
from .ballots import Election, Ranking
from .kernels import (
    ESCALATED,
    BallotSignal,
    BravoState,
    MacroState,
    macro_discrepancy,
)
from .plans import build_plan

logger = logging.getLogger(__name__)

CONFIRMED = "confirmed"
FULL_RECOUNT = "full-recount"
OPERATIONS = ("replace", "insert", "swap", "remove")
_CHUNK = 4096


@dataclass(frozen=True)
class Manipulation:
    """One edit of a ballot record.

    Attributes:
        operation (str): "replace", "insert", "swap" or "remove".
        position (int): The edited position, zero based.
        other (int): The new candidate for "replace" and "insert", the second
            position for "swap"; unused for "remove".
    """

    operation: str
    position: int
    other: int = -1


def apply_manipulation(ranking: Ranking, manipulation: Manipulation) -> Ranking:
    """Apply an edit to a ranking.

    Args:
        ranking (tuple): The original ranking.
        manipulation (Manipulation): The edit.

    Returns:
        tuple: The edited ranking.

    Raises:
        ValueError: If the operation is unknown.
    """
    edited = list(ranking)
    position = manipulation.position
    if manipulation.operation == "replace":
        edited[position] = manipulation.other
    elif manipulation.operation == "insert":
        edited.insert(position, manipulation.other)
    elif manipulation.operation == "swap":
        other = manipulation.other
        edited[position], edited[other] = edited[other], edited[position]
    elif manipulation.operation == "remove":
        del edited[position]
    else:
        raise ValueError(f"Unknown manipulation {manipulation.operation!r}.")
    return tuple(edited)


def feasible_operations(length: int, num_candidates: int) -> List[str]:
    """List the edits applicable to a ranking of the given length."""
    operations = []
    if 0 < length < num_candidates:
        operations.append("replace")
    if length < num_candidates:
        operations.append("insert")
    if length >= 2:
        operations.append("swap")
    if length > 0:
        operations.append("remove")
    return operations


def draw_manipulation(
    ranking: Ranking, num_candidates: int, rng: np.random.Generator
) -> Manipulation:
    """Draw a random edit; an inapplicable choice is re-drawn among applicable ones.

    Args:
        ranking (tuple): The ranking to edit.
        num_candidates (int): The roster size.
        rng (np.random.Generator): The random source.

    Returns:
        Manipulation: The edit.
    """
    length = len(ranking)
    feasible = feasible_operations(length, num_candidates)
    operation = OPERATIONS[rng.integers(len(OPERATIONS))]
    if operation not in feasible:
        operation = feasible[rng.integers(len(feasible))]
    absent = [c for c in range(num_candidates) if c not in ranking]
    if operation == "replace":
        position = int(rng.integers(length))
        return Manipulation(operation, position, absent[rng.integers(len(absent))])
    elif operation == "insert":
        candidate = absent[rng.integers(len(absent))]
        return Manipulation(operation, int(rng.integers(length + 1)), candidate)
    elif operation == "swap":
        first, second = rng.choice(length, size=2, replace=False)
        return Manipulation(operation, int(first), int(second))
    return Manipulation(operation, int(rng.integers(length)))


@dataclass(frozen=True)
class ErrorModel:
    """Independent per-ballot manipulation of electronic records.

    Attributes:
        rate (float): Probability that a record differs from its paper ballot.
        seed (int): Seed of the manipulation stream.
    """

    rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        """Validate the rate."""
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"The error rate must lie in [0, 1], got {self.rate}.")


def inject_errors(
    election: Election, model: ErrorModel
) -> Tuple[Election, Election]:
    """Derive reported ballot records from the actual ballots.

    Args:
        election (Election): The actual (paper) ballots.
        model (ErrorModel): The manipulation rate and seed.

    Returns:
        tuple: ``(reported, actual)``. The i-th reported record belongs to the
            i-th actual ballot in ``actual.expand()`` order.
    """
    if model.rate == 0.0:
        return election, election
    rng = np.random.default_rng(model.seed)
    records = election.expand()
    touched = rng.random(len(records)) < model.rate
    reported = [
        apply_manipulation(
            ranking, draw_manipulation(ranking, election.num_candidates, rng)
        )
        if hit
        else ranking
        for ranking, hit in zip(records, touched)
    ]
    logger.debug(
        "Manipulated %d of %d records (seed %d).",
        int(touched.sum()),
        len(records),
        model.seed,
    )
    return Election.from_records(election, reported), election


@dataclass(frozen=True)
class SimConfig:
    """Parameters of a simulated audit.

    Attributes:
        alpha (float): The risk limit.
        gamma (float): The error inflation factor.
        kind (str): "bp" or "cp".
        reps (int): Number of repetitions.
        max_draws (int, optional): Sampling cap ``M``; None means the number
            of ballots cast.
        sample_seed (int): Seed of the draw streams.
        error_seed (int): Seed used to manipulate the reported ballots; part of
            every repetition's stream.
    """

    alpha: float = 0.05
    gamma: float = 1.1
    kind: str = "bp"
    reps: int = 10
    max_draws: Optional[int] = None
    sample_seed: int = 0
    error_seed: int = 0

    def __post_init__(self) -> None:
        """Validate the parameters."""
        _check_audit_parameters(self.alpha, self.gamma)
        object.__setattr__(self, "kind", _as_kind(self.kind))
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.max_draws is not None and self.max_draws < 1:
            raise ValueError("max_draws must be >= 1")


@dataclass(frozen=True)
class SimResult:
    """Per-repetition draws and outcomes of a simulated audit."""

    draws: Tuple[int, ...]
    outcomes: Tuple[str, ...]
    total_ballots: int
    max_draws: int

    @property
    def mean_draws(self) -> float:
        """Average number of ballots drawn."""
        return float(np.mean(self.draws))

    @property
    def polls_pct(self) -> float:
        """Average number of ballots drawn as a percentage of ballots cast."""
        return 100.0 * self.mean_draws / self.total_ballots

    @property
    def outcome_counts(self) -> Dict[str, int]:
        """Number of repetitions per outcome."""
        return {
            CONFIRMED: self.outcomes.count(CONFIRMED),
            FULL_RECOUNT: self.outcomes.count(FULL_RECOUNT),
        }

    def confirmation_interval(self, confidence: float = 0.95) -> Tuple[float, float]:
        """Clopper-Pearson interval of the confirmation rate."""
        result = stats.binomtest(self.outcomes.count(CONFIRMED), len(self.outcomes))
        interval = result.proportion_ci(confidence_level=confidence)
        return float(interval.low), float(interval.high)

    def to_dict(self) -> Dict[str, Any]:
        """Serialize per-repetition values and aggregates."""
        low, high = self.confirmation_interval()
        return {
            "draws": list(self.draws),
            "outcomes": list(self.outcomes),
            "mean_draws": self.mean_draws,
            "polls_pct": self.polls_pct,
            "outcome_counts": self.outcome_counts,
            "confirmation_ci95": [low, high],
        }


def binomial_band(n: int, p: float, confidence: float = 0.99) -> Tuple[float, float]:
    """Two-sided binomial quantile band of a success fraction.

    Args:
        n (int): Number of trials.
        p (float): Success probability.
        confidence (float): Coverage. Defaults to 0.99.

    Returns:
        tuple: Lowest and highest plausible fraction of successes.
    """
    low, high = stats.binom.interval(confidence, n, p)
    return float(low) / n, float(high) / n


def _per_ballot(
    records: Sequence[Ranking], value: Callable[[Ranking], float], dtype: Any
) -> np.ndarray:
    cache = {ranking: value(ranking) for ranking in set(records)}
    return np.fromiter((cache[r] for r in records), dtype=dtype, count=len(records))


def _signals(hypothesis: PairwiseHypothesis, records: Sequence[Ranking]) -> np.ndarray:
    def signal(ranking: Ranking) -> int:
        party = hypothesis.interp(ranking)
        if party == hypothesis.winner:
            return BallotSignal.FOR_WINNER
        if party == hypothesis.loser:
            return BallotSignal.FOR_LOSER
        return BallotSignal.NEUTRAL

    return _per_ballot(records, signal, np.int8)


def _discrepancies(
    hypotheses: Sequence[PairwiseHypothesis],
    reported: Sequence[Ranking],
    actual: Sequence[Ranking],
) -> np.ndarray:
    pairs = [(h.winner, h.loser, h.margin, h.interp) for h in hypotheses]
    cache: Dict[Tuple[Ranking, Ranking], float] = {}
    out = np.empty(len(actual))
    for i, key in enumerate(zip(reported, actual)):
        if key not in cache:
            cache[key] = macro_discrepancy(pairs, *key)
        out[i] = cache[key]
    return out


def _run(
    states: List[Any],
    streams: List[np.ndarray],
    advance: Callable[[Any, np.ndarray], Tuple[Any, Optional[int]]],
    rng: np.random.Generator,
    total: int,
    max_draws: int,
) -> Tuple[int, str]:
    active = [i for i, state in enumerate(states) if not state.closed]
    if any(state.status == ESCALATED for state in states):
        return max_draws, FULL_RECOUNT
    last = 0
    drawn = 0
    while active and drawn < max_draws:
        indices = rng.integers(0, total, size=min(_CHUNK, max_draws - drawn))
        remaining = []
        for i in active:
            states[i], hit = advance(states[i], streams[i][indices])
            if hit is None:
                remaining.append(i)
            elif states[i].status == ESCALATED:
                return max_draws, FULL_RECOUNT
            else:
                last = max(last, drawn + hit + 1)
        active = remaining
        drawn += len(indices)
    if active:
        return max_draws, FULL_RECOUNT
    return last, CONFIRMED


def simulate(
    plan: AuditPlan, reported: Election, actual: Election, config: SimConfig
) -> SimResult:
    """Simulate repeated audits of a plan.

    Ballot-polling plans run one BRAVO test per assertion, all fed by the same
    draws. Comparison plans run one MACRO test per unit, fed by the maximum
    overstatement of the drawn record/ballot pair over the unit's assertions.

    Args:
        plan (AuditPlan): A plan built on ``reported``.
        reported (Election): Electronic records, index-matched to ``actual``.
        actual (Election): Paper ballots.
        config (SimConfig): Risk limit, cap, repetitions and seeds.

    Returns:
        SimResult: Draws and outcome of every repetition.

    Raises:
        ValueError: If the plan was built on other ballots, the kinds differ or
            the ballot counts differ.
    """
    if config.kind != plan.kind:
        raise ValueError(f"A {plan.kind} plan cannot run as a {config.kind} audit.")
    if reported.total_ballots != actual.total_ballots:
        raise ValueError("Reported and actual ballot counts differ.")
    for hypothesis in plan.hypotheses:
        check_hypothesis(hypothesis, reported)
    total = actual.total_ballots
    max_draws = config.max_draws or total
    actual_records = actual.expand()
    if plan.kind == "bp":
        initial: List[Any] = [
            BravoState.start(h.winner_tally, h.loser_tally, config.alpha)
            for h in plan.hypotheses
        ]
        streams = [_signals(h, actual_records) for h in plan.hypotheses]

        def advance(state: Any, values: np.ndarray) -> Tuple[Any, Optional[int]]:
            return state.advance(values)

    else:
        reported_records = reported.expand()
        initial = [MacroState.start(total, u.v_min, config.gamma) for u in plan.units]
        streams = [
            _discrepancies(u.hypotheses, reported_records, actual_records)
            if u.v_min > 0
            else np.zeros(total)
            for u in plan.units
        ]

        def advance(state: Any, values: np.ndarray) -> Tuple[Any, Optional[int]]:
            return state.advance(values, config.alpha)

    draws = []
    outcomes = []
    for rep in range(config.reps):
        rng = np.random.default_rng([config.error_seed, config.sample_seed, rep])
        used, outcome = _run(list(initial), streams, advance, rng, total, max_draws)
        draws.append(used)
        outcomes.append(outcome)
    return SimResult(tuple(draws), tuple(outcomes), total, max_draws)


@dataclass(frozen=True)
class ExperimentGrid:
    """The cells and seed protocol of an experiment.

    Zero-error cells run ``zero_error_reps`` repetitions on the unmodified
    ballots. Cells with errors run one simulation per pair of error seed and
    sample seed.
    """

    methods: Tuple[str, ...] = ("eo", "se", "wo", "raire")
    kinds: Tuple[str, ...] = ("bp", "cp")
    alphas: Tuple[float, ...] = (0.01, 0.05)
    gammas: Tuple[float, ...] = (1.1,)
    error_rates: Tuple[float, ...] = (0.0,)
    error_seeds: Tuple[int, ...] = tuple(range(10))
    sample_seeds: Tuple[int, ...] = tuple(range(5))
    zero_error_reps: int = 10
    max_draws: Optional[int] = None
    strategy: str = "asn-greedy"

    def __post_init__(self) -> None:
        """Validate the grid."""
        for method in self.methods:
            if not _is_method_supported(method):
                raise ValueError(f"Unsupported audit method {method!r}.")
        object.__setattr__(self, "kinds", tuple(_as_kind(k) for k in self.kinds))
        for alpha in self.alphas:
            _check_audit_parameters(alpha)
        for gamma in self.gammas:
            _check_audit_parameters(0.5, gamma)
        for rate in self.error_rates:
            ErrorModel(rate)
        if self.zero_error_reps < 1:
            raise ValueError("reps must be >= 1")

    def cells(self) -> List[Tuple[str, str, float, Optional[float], float]]:
        """List ``(method, kind, alpha, gamma, error_rate)`` cells.

        Ballot-polling cells carry no gamma.
        """
        cells = []
        for method in self.methods:
            for kind in self.kinds:
                for alpha in self.alphas:
                    gammas: Sequence[Optional[float]] = (
                        self.gammas if kind == "cp" else [None]
                    )
                    for gamma in gammas:
                        for rate in self.error_rates:
                            cells.append((method, kind, alpha, gamma, rate))
        return cells


@dataclass(frozen=True)
class ReportRow:
    """The averaged outcome of one experiment cell.

    Percentages above 100 are reported as ``inf``.
    """

    election: str
    candidates: int
    ballots: int
    mov: Optional[int]
    method: str
    kind: str
    alpha: float
    gamma: Optional[float]
    error_rate: float
    polls_pct: float
    asn_pct: float
    outcome_counts: Dict[str, int] = field(default_factory=dict)
    plan_seconds: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        """Return the row as a plain dictionary."""
        return asdict(self)


def _cap(percentage: float) -> float:
    return math.inf if percentage > 100.0 else percentage


def _run_cell(args: Tuple[str, Election, Tuple, ExperimentGrid]) -> ReportRow:
    """Simulate one experiment cell in a worker process.

    Defined at module level so the process pool can pickle it.
    """
    label, election, cell, grid = args
    method, kind, alpha, gamma, rate = cell
    plan_gamma = gamma if gamma is not None else 1.1
    if rate == 0.0:
        first_seed = grid.sample_seeds[0] if grid.sample_seeds else 0
        schedule = [(0, [first_seed], grid.zero_error_reps)]
    else:
        schedule = [(e, list(grid.sample_seeds), 1) for e in grid.error_seeds]
    runs = sum(len(seeds) * reps for _, seeds, reps in schedule)
    max_draws = grid.max_draws or election.total_ballots
    draws: List[int] = []
    outcomes: List[str] = []
    asns: List[float] = []
    seconds = 0.0
    try:
        for error_seed, sample_seeds, reps in schedule:
            reported, actual = inject_errors(election, ErrorModel(rate, error_seed))
            start = time.perf_counter()
            plan = build_plan(
                reported, method, kind, alpha, plan_gamma, strategy=grid.strategy
            )
            seconds += time.perf_counter() - start
            if isinstance(plan, FullRecount):
                asns.append(math.inf)
                draws += [max_draws] * len(sample_seeds) * reps
                outcomes += [FULL_RECOUNT] * len(sample_seeds) * reps
                continue
            asns.append(plan.asn_percent)
            for sample_seed in sample_seeds:
                config = SimConfig(
                    alpha,
                    plan_gamma,
                    kind,
                    reps,
                    grid.max_draws,
                    sample_seed,
                    error_seed,
                )
                result = simulate(plan, reported, actual, config)
                draws += result.draws
                outcomes += result.outcomes
    except Exception:
        logger.exception(
            "Cell %s/%s/%s alpha=%s gamma=%s rate=%s failed; recording a full recount.",
            label,
            method,
            kind,
            alpha,
            gamma,
            rate,
        )
        draws, outcomes, asns = [max_draws] * runs, [FULL_RECOUNT] * runs, [math.inf]
    if outcomes and all(o == FULL_RECOUNT for o in outcomes):
        polls = math.inf
    else:
        polls = 100.0 * float(np.mean(draws)) / election.total_ballots
    return ReportRow(
        election=label,
        candidates=election.num_candidates,
        ballots=election.total_ballots,
        mov=election.mov,
        method=method,
        kind=kind,
        alpha=alpha,
        gamma=gamma,
        error_rate=rate,
        polls_pct=_cap(polls),
        asn_pct=_cap(float(np.mean(asns))),
        outcome_counts={
            CONFIRMED: outcomes.count(CONFIRMED),
            FULL_RECOUNT: outcomes.count(FULL_RECOUNT),
        },
        plan_seconds=seconds,
    )


def run_experiment(
    elections: Union[Mapping[str, Election], Sequence[Tuple[str, Election]]],
    grid: Optional[ExperimentGrid] = None,
    workers: int = 1,
) -> List[ReportRow]:
    """Simulate every cell of a grid on every election.

    Args:
        elections (mapping or sequence): Labelled actual elections.
        grid (ExperimentGrid, optional): The cells and seed protocol. If None,
            the default grid. Defaults to None.
        workers (int): Worker processes; 1 runs in-process. Defaults to 1.

    Returns:
        list: One row per election and cell, in grid order. A failing cell is
            recorded as a full recount.
    """
    grid = grid or ExperimentGrid()
    if isinstance(elections, Mapping):
        items = list(elections.items())
    else:
        items = list(elections)
    tasks = [(label, e, cell, grid) for label, e in items for cell in grid.cells()]
    logger.info("Running %d cells on %d worker(s).", len(tasks), workers)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(_run_cell, tasks))
    return [_run_cell(task) for task in tasks]
