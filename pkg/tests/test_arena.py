"""Arena referee: forfeits, payoff accounting, tournaments, seed rejection."""

import time

import pytest

from codegames.arena import (
    AgentSpec,
    RejectionCandidate,
    round_robin_tournament,
    run_match,
    run_series,
    seed_rejection,
)
from codegames.core import WorldModelHandle
from codegames.games import GameBundle, make_game
from codegames.planners import SearchConfig
from tests import oracles


def _policy_agent(name, policy, **kwargs):
    return AgentSpec(kind="external-policy", name=name, policy=policy, **kwargs)


def _optimal_ttt_policy(obs, legal):
    mark = obs["current_player_mark"]
    best = oracles.ttt_best_moves(tuple(obs["board"]), mark)
    i = best[0]
    return f"{mark}({i // 3},{i % 3})"


def _draw_bundle():
    """A two-move game that always ends in a draw."""
    model = WorldModelHandle(
        name="always_draw", num_players=2,
        apply_action=lambda s, a: {"n": s["n"] + 1},
        get_current_player=lambda s: -4 if s["n"] >= 2 else s["n"] % 2,
        get_rewards=lambda s: [0.0, 0.0],
        get_legal_actions=lambda s: [] if s["n"] >= 2 else ["go"],
        get_observations=lambda s: [s, s],
    )
    return GameBundle(name="always_draw", model=model, initial_state={"n": 0})


# ---------------------------------------------------------------------------
# Agent specification


def test_agent_spec_validation():
    with pytest.raises(ValueError):
        AgentSpec(kind="psychic")
    with pytest.raises(ValueError):
        AgentSpec(kind="ismcts")  # no belief sampler
    with pytest.raises(ValueError):
        AgentSpec(kind="external-policy")  # no policy
    assert AgentSpec(kind="random").name == "random"


# ---------------------------------------------------------------------------
# Matches and series


def test_random_vs_random_never_forfeits():
    bundle = make_game("tic_tac_toe")
    report = run_series(bundle, AgentSpec(kind="random"), AgentSpec(kind="random"), n=40)
    assert report.forfeits == [0, 0]
    assert report.wins[0] + report.wins[1] + report.draws == 40
    for seat in (0, 1):
        assert sum(report.rates(seat)) == pytest.approx(1.0)
    assert "Win" in report.table() and "(0/40)" in report.table()


def test_series_is_deterministic_for_fixed_seeds():
    bundle = make_game("leduc_poker")
    args = (bundle, AgentSpec(kind="random"), AgentSpec(kind="random"))
    a = run_series(*args, n=20, base_seed=6)
    b = run_series(*args, n=20, base_seed=6)
    assert a.wins == b.wins and a.mean_payoffs == b.mean_payoffs
    assert [r.steps for r in a.results] == [r.steps for r in b.results]


def test_illegal_action_forfeits_and_opponent_wins():
    bundle = make_game("tic_tac_toe")
    stub = _policy_agent("stub", lambda obs, legal: "INVALID")
    result = run_match(bundle, stub, AgentSpec(kind="random"), seed=1)
    assert result.forfeit_by == (0, "illegal-action")
    assert result.outcome == "win1"
    assert result.payoffs == [-1.0, 1.0]
    assert result.steps == []  # forfeited on the very first move


def test_raising_agent_forfeits_with_exception_cause():
    bundle = make_game("tic_tac_toe")

    def explode(obs, legal):
        raise RuntimeError("agent bug")

    result = run_match(bundle, AgentSpec(kind="random"), _policy_agent("boom", explode), seed=2)
    assert result.forfeit_by == (1, "exception")
    assert result.outcome == "win0"


def test_slow_agent_forfeits_on_timeout():
    bundle = make_game("tic_tac_toe")
    slow = _policy_agent(
        "slow",
        lambda obs, legal: (time.sleep(0.05), legal[0])[1],
        move_budget_seconds=0.01,
    )
    result = run_match(bundle, slow, AgentSpec(kind="random"), seed=3)
    assert result.forfeit_by == (0, "timeout")
    assert result.outcome == "win1"


def test_both_lose_forfeit_convention():
    bundle = make_game("tic_tac_toe")
    stub = _policy_agent("stub", lambda obs, legal: "INVALID")
    result = run_match(
        bundle, stub, AgentSpec(kind="random"), seed=4, both_lose_on_forfeit=True
    )
    assert result.payoffs == [-1.0, -1.0]
    assert result.outcome == "draw"  # neither side is credited a win


def test_general_sum_forfeit_gives_opponent_the_standing_offer():
    bundle = make_game("bargaining")

    def claim_all(obs, legal):
        pool = obs["pool"]
        return f"player 0 offers {pool['X']},{pool['Y']},{pool['Z']}"

    def refuse(obs, legal):
        raise RuntimeError("walks away")

    result = run_match(
        bundle, _policy_agent("greedy", claim_all), _policy_agent("refuser", refuse), seed=5
    )
    assert result.forfeit_by == (1, "exception")
    assert result.payoffs[1] == 0.0
    # The opponent is credited the best outcome the forfeiter could still
    # have conceded in one move: recompute it by replaying the match.
    m = bundle.model
    state = bundle.initial_state
    for action in result.steps:
        state = m.apply_action(state, action)
    best = 0.0
    for action in m.get_legal_actions(state):
        nxt = m.apply_action(state, action)
        if m.get_current_player(nxt) == -4:
            best = max(best, m.get_rewards(nxt)[0])
    assert result.payoffs[0] == best


def test_step_cap_scores_a_draw():
    endless = WorldModelHandle(
        name="endless", num_players=2,
        apply_action=lambda s, a: {"n": s["n"] + 1},
        get_current_player=lambda s: s["n"] % 2,
        get_rewards=lambda s: [0.0, 0.0],
        get_legal_actions=lambda s: ["go"],
        get_observations=lambda s: [s, s],
    )
    bundle = GameBundle(name="endless", model=endless, initial_state={"n": 0})
    result = run_match(bundle, AgentSpec(kind="random"), AgentSpec(kind="random"), seed=0)
    assert result.outcome == "draw"
    assert result.payoffs == [0.0, 0.0]
    assert len(result.steps) == 1000


def test_zero_sum_accounting_holds_every_match():
    bundle = make_game("leduc_poker")
    report = run_series(bundle, AgentSpec(kind="random"), AgentSpec(kind="random"), n=50)
    for result in report.results:
        assert abs(result.payoffs[0] + result.payoffs[1]) < 1e-9
    assert abs(report.mean_payoffs[0] + report.mean_payoffs[1]) < 1e-9


def test_seat_swap_follows_the_agent_not_the_seat():
    """When the outcome is fully agent-determined (one side always forfeits),
    swapping seats mirrors the report exactly."""
    bundle = make_game("tic_tac_toe")
    stub = _policy_agent("stub", lambda obs, legal: "INVALID")
    solid = _policy_agent("solid", lambda obs, legal: legal[0])
    ab = run_series(bundle, stub, solid, n=10, base_seed=8)
    ba = run_series(bundle, solid, stub, n=10, base_seed=8)
    assert ab.wins == list(reversed(ba.wins))
    assert ab.forfeits == list(reversed(ba.forfeits))
    assert ab.mean_payoffs == list(reversed(ba.mean_payoffs))


def test_mcts_draws_against_the_minimax_oracle():
    bundle = make_game("tic_tac_toe")
    optimal = _policy_agent("optimal", _optimal_ttt_policy)
    mcts = AgentSpec(kind="mcts", search_config=SearchConfig(num_simulations=800))
    for seats in ((mcts, optimal), (optimal, mcts)):
        report = run_series(bundle, *seats, n=3, base_seed=9)
        assert report.draws == 3, report.table()


# ---------------------------------------------------------------------------
# Tournaments


def test_round_robin_counts_and_tie_breaking():
    bundle = _draw_bundle()
    a = _policy_agent("a", lambda obs, legal: legal[0])
    b = _policy_agent("b", lambda obs, legal: legal[0])
    ranking = round_robin_tournament([a, b], bundle, matches_per_pair=3)
    # All draws: equal scores, tie broken by registration order.
    assert ranking == [("a", 0.0), ("b", 0.0)]
    with pytest.raises(ValueError):
        round_robin_tournament([a], bundle)


def test_round_robin_ranks_the_stronger_agent_first():
    bundle = make_game("tic_tac_toe")
    optimal = _policy_agent("optimal", _optimal_ttt_policy)
    ranking = round_robin_tournament(
        [AgentSpec(kind="random", name="rand"), optimal], bundle, matches_per_pair=15
    )
    assert ranking[0][0] == "optimal"
    assert ranking[0][1] > ranking[1][1]


# ---------------------------------------------------------------------------
# Seed rejection


def _rejection_field(n_good=4, with_forfeiter=True):
    bundle = make_game("tic_tac_toe")
    candidates = [
        RejectionCandidate(
            name=f"good{i}",
            bundle=bundle,
            agent=AgentSpec(kind="random", name=f"good{i}"),
        )
        for i in range(n_good)
    ]
    if with_forfeiter:
        candidates.append(
            RejectionCandidate(
                name="forfeiter",
                bundle=bundle,
                agent=_policy_agent("forfeiter", lambda obs, legal: "INVALID"),
            )
        )
    return candidates


def test_seed_rejection_drops_the_forfeiter_and_keeps_the_best():
    outcome = seed_rejection(_rejection_field(), repeats=3, seed=1)
    assert "forfeiter" in outcome["rejected"]
    assert outcome["best"] in outcome["accepted"]
    assert outcome["means"]["forfeiter"] == -1.0  # forfeits every single match
    assert set(outcome["accepted"]) | set(outcome["rejected"]) == {
        "good0", "good1", "good2", "good3", "forfeiter"
    }


def test_seed_rejection_accepts_identical_candidates():
    """Behaviorally identical deterministic candidates score identical means
    (every match plays out the same way), so nobody falls below the cutoff."""
    bundle = make_game("tic_tac_toe")
    candidates = [
        RejectionCandidate(
            name=f"same{i}", bundle=bundle,
            agent=_policy_agent(f"same{i}", lambda obs, legal: legal[0]),
        )
        for i in range(4)
    ]
    outcome = seed_rejection(candidates, repeats=3, seed=2)
    assert outcome["rejected"] == []
    assert len(set(outcome["means"].values())) == 1


def test_seed_rejection_with_zero_utility_range_accepts_all():
    bundle = _draw_bundle()
    candidates = [
        RejectionCandidate(
            name=f"c{i}", bundle=bundle,
            agent=_policy_agent(f"c{i}", lambda obs, legal: legal[0]),
        )
        for i in range(3)
    ]
    outcome = seed_rejection(candidates, repeats=2, seed=3)
    assert outcome["utility_range"] == 0.0
    assert outcome["rejected"] == []


def test_seed_rejection_requires_two_candidates():
    with pytest.raises(ValueError):
        seed_rejection(_rejection_field(n_good=1, with_forfeiter=False), repeats=1)
