"""Utility methods to normalise audit arguments."""
from typing import TYPE_CHECKING, Union

if TYPE_CHECKING:
    from .ballots import Election

_KIND_ALIASES = {
    "bp": "bp",
    "ballot-polling": "bp",
    "polling": "bp",
    "cp": "cp",
    "comparison": "cp",
}


def _as_kind(kind: str) -> str:
    """Ensure the input argument names a supported audit kind.

    Args:
        kind (str): Either "bp" (ballot-polling) or "cp" (ballot-level
            comparison), or one of their long names.

    Returns:
        str: The short audit kind, "bp" or "cp".

    Raises:
        ValueError: If the kind is unknown.
    """
    try:
        return _KIND_ALIASES[kind.lower()]
    except KeyError:
        raise ValueError(f"Unsupported audit kind {kind!r}, choose bp or cp.")


def _as_candidate(election: "Election", candidate: Union[int, str]) -> int:
    """Ensure the input argument to be a roster index of the election.

    Args:
        election (Election): The election owning the roster.
        candidate (int or str): A roster index or an exact candidate name.

    Returns:
        int: The roster index of the candidate.

    Raises:
        ValueError: If the name is unknown or the index out of range.
    """
    if isinstance(candidate, str):
        return election.index(candidate)
    if not 0 <= candidate < election.num_candidates:
        raise ValueError(
            f"Candidate index {candidate} outside the roster of "
            f"{election.num_candidates} candidates."
        )
    return int(candidate)


def _check_audit_parameters(alpha: float, gamma: float = 1.0) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"The risk limit must lie in (0, 1), got {alpha}.")
    if gamma < 1.0:
        raise ValueError(f"The error inflation factor must be >= 1, got {gamma}.")


def _is_method_supported(method: str) -> bool:
    return method in ("eo", "se", "wo", "raire")


def _is_strategy_supported(strategy: str) -> bool:
    return strategy in ("maximal", "asn-greedy", "none")
