"""Test the ballot model, election files and IRV tabulation."""
import json
import logging
from random import Random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from src.irvrla._synthetic import generate_election
from src.irvrla.ballots import (
    BallotFileError,
    Election,
    first_preferences,
    group_eliminations,
    is_simultaneous_elimination,
    parse_election,
    project,
    serialize_election,
    tabulate_irv,
    tally,
)
from tests._elections import (
    FOUR_WAY_CSV,
    four_way,
    hard_first_round,
    search_example,
    winner_only,
)


def test_parse_csv() -> None:
    """Test that the CSV form of the four-candidate example parses."""
    election = parse_election(FOUR_WAY_CSV, "csv", candidates=["c1", "c2", "c3", "c4"])
    assert election.total_ballots == 60000
    assert len(election.ballots) == 6
    assert election == four_way()


def test_parse_csv_roster_by_appearance() -> None:
    """Test that a CSV without roster numbers candidates by first appearance."""
    election = parse_election(FOUR_WAY_CSV.encode("utf-8"), "csv")
    assert election.candidates == ("c2", "c3", "c1", "c4")
    assert first_preferences(election)[election.index("c1")] == 26000


def test_parse_merges_rankings() -> None:
    """Test that equal rankings are merged and zero counts dropped."""
    election = parse_election("ranking,count\na;b,2\nb,0\na;b,3\n", "csv")
    assert [(b.ranking, b.count) for b in election.ballots] == [((0, 1), 5)]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_json_round_trip(seed: int) -> None:
    """Test that serialize(parse(x)) reproduces a canonical file."""
    election = generate_election(5, 2000, seed=seed)
    document = serialize_election(election)
    parsed = parse_election(document)
    assert parsed == election
    assert serialize_election(parsed) == document
    table = serialize_election(election, "csv")
    reparsed = parse_election(table, "csv", candidates=election.candidates)
    assert serialize_election(reparsed, "csv") == table


def test_parse_metadata() -> None:
    """Test that the reported winner, margin and source are read."""
    document = {
        "candidates": ["a", "b"],
        "ballots": [{"ranking": ["a"], "count": 3}, {"ranking": ["b", "a"]}],
        "metadata": {"reported_winner": "a", "mov": 1, "source": "demo"},
    }
    election = parse_election(json.dumps(document))
    assert election.reported_winner == 0
    assert election.mov == 1
    assert election.source == "demo"
    assert election.total_ballots == 4


@pytest.mark.parametrize(
    "source, format, message",
    [
        ('{"candidates": ["a"], "ballots": []}', "json", "no ballots"),
        ("ranking,count\n", "csv", "no ballots"),
        ('{"candidates": ["a"], "ballots": [{"ranking": ["b"]}]}', "json", "ballot 1"),
        ('{"candidates": ["a"], "ballots": [{"ranking": []}]}', "json", "empty"),
        ("ranking,count\na;a,2\n", "csv", "line 2"),
        ("ranking,count\na,2\nb,x\n", "csv", "line 3"),
        ("rank,count\na,2\n", "csv", "line 1"),
        ("[1, 2]", "json", "candidates"),
        (
            '{"candidates": ["a"], "ballots": [{"ranking": ["a"]}], "metadata": [1]}',
            "json",
            "metadata: expected an object",
        ),
        (
            '{"candidates": ["a"], "ballots": [{"ranking": ["a"]}],'
            ' "metadata": {"reported_winner": ["a"]}}',
            "json",
            "unknown reported winner",
        ),
        (
            '{"candidates": ["a"], "ballots": [{"ranking": ["a"]}],'
            ' "metadata": {"mov": "wide"}}',
            "json",
            "metadata: invalid count",
        ),
    ],
)
def test_failed_parse(source: str, format: str, message: str) -> None:
    """Test expected errors for malformed election files."""
    with pytest.raises(BallotFileError, match=message):
        parse_election(source, format)


def test_unknown_format() -> None:
    """Test that unsupported formats are rejected."""
    with pytest.raises(ValueError):
        parse_election("", "xml")


def test_csv_unknown_candidate() -> None:
    """Test that a CSV ranking outside the given roster is reported."""
    with pytest.raises(BallotFileError, match="line 2: unknown candidate"):
        parse_election("ranking,count\nc9,1\n", "csv", candidates=["c1"])


def test_election_validation() -> None:
    """Test the invariants checked when an election is built."""
    with pytest.raises(ValueError):
        Election(("a", "b"), [((0, 2), 1)])
    with pytest.raises(ValueError):
        Election(("a",), [((0,), 0)])
    with pytest.raises(ValueError):
        Election(("a", "b"), [((0,), 1)], records=[(1,)])


@pytest.mark.parametrize(
    "ranking, standing, expected",
    [
        ((0, 1, 3, 2), {1, 2}, (1, 2)),
        ((5, 3, 6, 1, 0), {1, 2, 3, 4}, (3, 1)),
        ((2, 0, 1), {0, 1, 2}, (2, 0, 1)),
        ((2, 0, 1), set(), ()),
    ],
)
def test_project(ranking: tuple, standing: set, expected: tuple) -> None:
    """Test the projection of rankings on standing candidates."""
    assert project(ranking, standing) == expected


@given(
    st.permutations(list(range(7))).flatmap(
        lambda p: st.tuples(st.just(tuple(p)), st.sets(st.integers(0, 6)))
    )
)
def test_project_is_ordered_subsequence(args: tuple) -> None:
    """Test that projection keeps exactly the standing candidates in order."""
    ranking, standing = args
    projected = project(ranking, standing)
    assert set(projected) == set(ranking) & standing
    positions = [ranking.index(c) for c in projected]
    assert positions == sorted(positions)


@pytest.mark.parametrize(
    "standing, expected",
    [
        ({0, 1, 2, 3}, {0: 26000, 1: 10000, 2: 9000, 3: 15000}),
        ({0, 1, 3}, {0: 26000, 1: 10000, 3: 24000}),
        ({0, 3}, {0: 26000, 3: 30000}),
    ],
)
def test_tally(standing: set, expected: dict) -> None:
    """Test the per-round tallies of the four-candidate example."""
    assert tally(four_way(), standing) == expected


def test_tally_empty_standing() -> None:
    """Test that an empty standing set is rejected."""
    with pytest.raises(ValueError):
        tally(four_way(), set())


@given(st.integers(0, 50), st.sets(st.integers(0, 4), min_size=1))
def test_tally_counts_unexhausted_ballots(seed: int, standing: set) -> None:
    """Test that a tally counts each ballot ranking a standing candidate once."""
    election = generate_election(5, 300, seed=seed)
    counts = tally(election, standing)
    assert set(counts) == standing
    active = sum(b.count for b in election.ballots if project(b.ranking, standing))
    assert sum(counts.values()) == active


@given(st.integers(0, 50), st.sets(st.integers(0, 4), min_size=2))
def test_tally_grows_under_elimination(seed: int, standing: set) -> None:
    """Test that eliminating a candidate never lowers another's tally."""
    election = generate_election(5, 300, seed=seed)
    before = tally(election, standing)
    eliminated = min(standing)
    after = tally(election, standing - {eliminated})
    assert all(after[c] >= before[c] for c in after)
    assert sum(after.values()) <= sum(before.values())


@given(st.integers(0, 50), st.randoms(use_true_random=False))
def test_tabulation_ignores_class_layout(seed: int, rnd: Random) -> None:
    """Test that splitting and reordering ballot classes keeps the outcome."""
    election = generate_election(5, 400, seed=seed)
    pieces = []
    for ballot in election.ballots:
        part = rnd.randint(0, ballot.count)
        pieces += [(ballot.ranking, part), (ballot.ranking, ballot.count - part)]
    rnd.shuffle(pieces)
    relaid = Election(election.candidates, pieces)
    assert relaid == election
    expected = tabulate_irv(election)
    assert tabulate_irv(relaid) == expected
    records = list(election.expand())
    rnd.shuffle(records)
    assert tabulate_irv(Election.from_records(election, records)) == expected


def test_first_preferences() -> None:
    """Test primary votes."""
    assert first_preferences(four_way()) == {0: 26000, 1: 10000, 2: 9000, 3: 15000}
    assert first_preferences(search_example()) == {0: 10000, 1: 6500, 2: 5500, 3: 5000}
    single = Election(("c1", "c2"), [((1,), 1)])
    assert first_preferences(single) == {0: 0, 1: 1}


@pytest.mark.parametrize(
    "election, order",
    [
        (four_way(), (2, 1, 0, 3)),
        (hard_first_round(), (4, 3, 2, 1, 0)),
        (search_example(), (3, 2, 1, 0)),
        (winner_only(), (2, 1, 0)),
    ],
)
def test_tabulate_irv(election: Election, order: tuple) -> None:
    """Test elimination orders of the worked examples."""
    sequence = tabulate_irv(election)
    assert sequence.order == order
    assert sequence.winner == order[-1]
    assert len(sequence.round_tallies) == len(order) - 1
    assert sequence.tie_breaks == ()


def test_tabulate_rounds() -> None:
    """Test that every round's tally is recorded."""
    sequence = tabulate_irv(four_way())
    assert sequence.round_tallies[1] == {0: 26000, 1: 10000, 3: 24000}
    assert sequence.round_tallies[2] == {0: 26000, 3: 30000}
    assert sequence.standing(1) == frozenset({0, 1, 3})


def test_tabulate_single_candidate() -> None:
    """Test that a lone candidate wins without rounds."""
    sequence = tabulate_irv(Election(("c1",), [((0,), 3)]))
    assert sequence.order == (0,)
    assert sequence.round_tallies == ()


def test_tabulate_tie(caplog: pytest.LogCaptureFixture) -> None:
    """Test that ties eliminate the lowest roster index and are logged."""
    election = Election(("a", "b"), [((0,), 5), ((1,), 5)])
    with caplog.at_level(logging.INFO):
        sequence = tabulate_irv(election)
    assert sequence.order == (0, 1)
    assert sequence.tie_breaks == ((1, (0, 1)),)
    assert "tie between a, b" in caplog.text


def test_simultaneous_elimination() -> None:
    """Test the grouping condition."""
    election = hard_first_round()
    everyone = set(election.roster)
    assert is_simultaneous_elimination(election, everyone, {3, 4})
    assert is_simultaneous_elimination(election, everyone, {2, 3, 4})
    assert not is_simultaneous_elimination(election, everyone, {1, 2, 3, 4})


@pytest.mark.parametrize(
    "strategy, kind, groups",
    [
        ("asn-greedy", "bp", [(4, 3), (2,), (1,)]),
        ("asn-greedy", "cp", [(4, 3), (2,), (1,)]),
        ("maximal", "bp", [(4, 3, 2), (1,)]),
        ("none", "bp", [(4,), (3,), (2,), (1,)]),
    ],
)
def test_group_eliminations(strategy: str, kind: str, groups: list) -> None:
    """Test the grouping strategies on the near-tie example."""
    election = hard_first_round()
    sequence = tabulate_irv(election)
    assert group_eliminations(election, sequence, strategy, kind) == groups


def test_group_eliminations_errors() -> None:
    """Test the strategy check and the warning for a foreign order."""
    election = hard_first_round()
    sequence = tabulate_irv(election)
    with pytest.raises(ValueError):
        group_eliminations(election, sequence, "greedy")
    reversed_counts = Election(
        election.candidates, [((c,), c + 1) for c in election.roster]
    )
    with pytest.warns(UserWarning):
        groups = group_eliminations(reversed_counts, sequence, "none")
    assert groups == [(4,), (3,), (2,), (1,)]
