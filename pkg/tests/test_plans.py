"""Test the elimination-order, simultaneous-elimination and winner-only plans."""
import math

import pytest

from src.irvrla.assertions import AuditPlan, GroupedLoser
from src.irvrla.ballots import Election
from src.irvrla.plans import build_plan, plan_eo, plan_se, plan_wo
from src.irvrla.raire import verify_plan_soundness
from tests._elections import four_way, hard_first_round, search_example, winner_only


def test_eo_units() -> None:
    """Test one unit per round with the eliminated candidate as loser."""
    plan = plan_eo(four_way(), "bp")
    assert plan.winner == 3
    assert len(plan.units) == 3
    assert [u.hypotheses[0].loser for u in plan.units] == [2, 1, 0]
    assert [len(u.hypotheses) for u in plan.units] == [3, 2, 1]
    round_asns = [u.asn for u in plan.units]
    assert round_asns[0] == pytest.approx(6885.5, rel=2e-3)
    assert round_asns[1] == pytest.approx(64.0, rel=2e-3)
    assert round_asns[2] == pytest.approx(1186.8, rel=2e-3)


@pytest.mark.parametrize(
    "election, kind, overall",
    [
        (four_way(), "bp", 6885.5),
        (four_way(), "cp", 395.44),
        (search_example(), "bp", 6844.0),
        (search_example(), "cp", 355.89),
    ],
)
def test_eo_overall_asn(election: Election, kind: str, overall: float) -> None:
    """Test the overall ASN of elimination-order audits."""
    plan = plan_eo(election, kind)
    assert plan.overall_asn == pytest.approx(overall, rel=5e-3)
    assert not plan.full_recount


def test_eo_comparison_units() -> None:
    """Test the MACRO estimates of each round."""
    plan = plan_eo(four_way(), "cp")
    assert [u.v_min for u in plan.units] == [1000, 14000, 4000]
    assert [u.asn for u in plan.units] == pytest.approx(
        [395.44, 28.245, 98.859], rel=1e-3
    )


@pytest.mark.parametrize("kind, overall", [("bp", 1402.0), ("cp", 145.0)])
def test_se(kind: str, overall: float) -> None:
    """Test that the near tie is audited as one grouped elimination."""
    plan = plan_se(hard_first_round(), kind)
    assert plan.method == "se"
    assert len(plan.units) == 3
    grouped = plan.units[0].hypotheses[0]
    assert isinstance(grouped.interp, GroupedLoser)
    assert grouped.loser == frozenset({3, 4})
    assert grouped.loser_tally == 999
    assert plan.overall_asn == pytest.approx(overall, rel=5e-3)


def test_se_unit_estimates() -> None:
    """Test the member estimates of every grouped-elimination unit."""
    election = hard_first_round()
    polling = plan_se(election, "bp")
    members = [[h.asn_bp for h in u.hypotheses] for u in polling.units]
    assert [len(m) for m in members] == [3, 2, 1]
    flat = [asn for unit in members for asn in unit]
    assert flat == pytest.approx([49.1, 36.2, 17.0, 1402.2, 77.6, 299.1], abs=0.06)
    assert [u.asn for u in polling.units] == pytest.approx(
        [49.1, 1402.2, 299.1], abs=0.06
    )
    comparison = plan_se(election, "cp")
    assert [u.v_min for u in comparison.units] == [4001, 1000, 3000]
    assert [u.asn for u in comparison.units] == pytest.approx(
        [36.2, 145.0, 48.3], abs=0.06
    )


def test_se_beats_eo_on_near_tie() -> None:
    """Test that grouping removes the near-tie unit."""
    election = hard_first_round()
    assert plan_eo(election, "bp").overall_asn > 1e8
    assert plan_se(election, "bp").overall_asn < 2000


def test_se_without_grouping_matches_eo() -> None:
    """Test that the "none" strategy reproduces the elimination-order units."""
    election = four_way()
    eo = plan_eo(election, "cp")
    se = plan_se(election, "cp", strategy="none")
    assert [u.asn for u in se.units] == [u.asn for u in eo.units]


def test_wo() -> None:
    """Test winner-only units against each loser."""
    plan = plan_wo(winner_only(), "bp")
    assert [u.hypotheses[0].loser for u in plan.units] == [1, 2]
    assert [u.asn for u in plan.units] == pytest.approx([98.382, 98.321], rel=1e-3)
    comparison = plan_wo(winner_only(), "cp")
    assert [u.v_min for u in comparison.units] == [4000, 4001]
    assert comparison.overall_asn == pytest.approx(36.25, rel=2e-3)


def test_wo_fails_when_loser_precedes_winner() -> None:
    """Test an infinite winner-only estimate once c3 collects c2's ballots."""
    plan = plan_wo(winner_only(swapped=True), "cp")
    assert math.isinf(plan.units[1].asn)
    assert plan.units[1].hypotheses[0].loser_tally == 11999
    assert plan.full_recount


def test_wo_explicit_winner() -> None:
    """Test that the winner may be named."""
    plan = plan_wo(winner_only(), "bp", winner="c2")
    assert plan.winner == 1
    assert plan.full_recount
    with pytest.raises(ValueError):
        plan_wo(winner_only(), "bp", winner="c9")


@pytest.mark.parametrize("method", ["eo", "se", "wo"])
@pytest.mark.parametrize("kind", ["bp", "cp"])
def test_plans_are_sound(method: str, kind: str) -> None:
    """Test that every plan rules out all orders electing a loser."""
    for election in (four_way(), hard_first_round(), winner_only(), search_example()):
        plan = build_plan(election, method, kind)
        assert isinstance(plan, AuditPlan)
        soundness = verify_plan_soundness(plan, election)
        assert soundness.sound, soundness.uncovered


def test_build_plan_errors() -> None:
    """Test argument checks."""
    election = four_way()
    with pytest.raises(ValueError, match="method"):
        build_plan(election, "irv")
    with pytest.raises(ValueError, match="kind"):
        build_plan(election, "eo", "batch")
    with pytest.raises(ValueError, match="risk limit"):
        build_plan(election, "eo", alpha=0.0)
    with pytest.raises(ValueError, match="inflation"):
        build_plan(election, "se", "cp", gamma=0.5)


def test_build_plan_aliases() -> None:
    """Test long kind names and upper-case methods."""
    plan = build_plan(four_way(), "EO", "comparison")
    assert (plan.method, plan.kind) == ("eo", "cp")


def test_reported_winner_mismatch() -> None:
    """Test the warning when the declared winner lost the tabulation."""
    election = Election.from_names(
        ["a", "b"], [(["a"], 6), (["b"], 4)], reported_winner="b"
    )
    with pytest.warns(UserWarning, match="differs"):
        plan = plan_eo(election)
    assert plan.winner == 0
