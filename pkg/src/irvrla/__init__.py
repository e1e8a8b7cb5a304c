"""Risk-limiting audits of instant-runoff elections."""
from ._synthetic import ElectionGenerator, generate_election
from .assertions import (
    AuditPlan,
    AuditUnit,
    FullRecount,
    GroupedLoser,
    PairwiseHypothesis,
    Standing,
    WinnerOnlyPair,
)
from .ballots import (
    BallotFileError,
    Election,
    EliminationSequence,
    first_preferences,
    group_eliminations,
    parse_election,
    project,
    serialize_election,
    tabulate_irv,
    tally,
)
from .kernels import BravoState, MacroState, asn_bp, asn_cp, macro_discrepancy
from .plans import build_plan, plan_eo, plan_se, plan_wo
from .raire import find_best_audit, raire, verify_plan_soundness
from .simulation import (
    ErrorModel,
    ExperimentGrid,
    SimConfig,
    SimResult,
    inject_errors,
    run_experiment,
    simulate,
)
