"""Test the random election generator."""
import pytest

from src.irvrla._synthetic import ElectionGenerator, generate_election
from src.irvrla.ballots import serialize_election


def test_generate_election() -> None:
    """Test roster, ballot count and reproducibility."""
    election = generate_election(4, 1000, seed=5)
    assert election.candidates == ("c1", "c2", "c3", "c4")
    assert election.total_ballots == 1000
    assert election.source == "synthetic seed 5"
    again = generate_election(4, 1000, seed=5)
    assert serialize_election(again) == serialize_election(election)


def test_complete_rankings() -> None:
    """Test that non-partial elections rank every candidate."""
    election = generate_election(5, 300, seed=1, partial=False)
    assert all(len(b.ranking) == 5 for b in election.ballots)


def test_max_classes() -> None:
    """Test the bound on distinct rankings."""
    election = generate_election(6, 5000, seed=2, max_classes=3)
    assert len(election.ballots) <= 3


@pytest.mark.parametrize("candidates, ballots", [(0, 10), (3, 0)])
def test_generate_election_errors(candidates: int, ballots: int) -> None:
    """Test that empty elections are rejected."""
    with pytest.raises(ValueError):
        generate_election(candidates, ballots)


def test_election_generator() -> None:
    """Test that the generator counts its seed up."""
    generator = ElectionGenerator(3, 200, seed=7)
    first, second = generator(), generator()
    assert first.source == "synthetic seed 7"
    assert second.source == "synthetic seed 8"
    assert generator.seed == 9
