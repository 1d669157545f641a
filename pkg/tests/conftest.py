"""Shared fixtures: a 3-card toy game for belief/determinization tests and a
deterministic counting game whose candidate sources can be broken in measured
increments for refinement-search tests."""

from __future__ import annotations

import pytest

from codegames.core import WorldModelHandle
from codegames.games import GameBundle, ReferenceInference

# ---------------------------------------------------------------------------
# Three-card toy game: deck {J, Q, K}; chance deals one private card to each
# player, then player 0 picks Bet or Pass and the game ends. High card wins
# (double stakes after Bet).

TOY_DECK = ("J", "Q", "K")
_TOY_RANK = {"J": 0, "Q": 1, "K": 2}


def toy_apply_action(state, action):
    cards = list(state["cards"])
    if cards[0] is None:
        return {"cards": [action, None], "choice": None}
    if cards[1] is None:
        return {"cards": [cards[0], action], "choice": None}
    return {"cards": cards, "choice": action}


def toy_get_current_player(state):
    if state["choice"] is not None:
        return -4
    if state["cards"][0] is None or state["cards"][1] is None:
        return -1
    return 0


def toy_get_rewards(state):
    if state["choice"] is None:
        return [0.0, 0.0]
    stake = 2.0 if state["choice"] == "Bet" else 1.0
    sign = 1.0 if _TOY_RANK[state["cards"][0]] > _TOY_RANK[state["cards"][1]] else -1.0
    return [sign * stake, -sign * stake]


def toy_get_legal_actions(state):
    player = toy_get_current_player(state)
    if player == -4:
        return []
    if player == -1:
        return [c for c in TOY_DECK if c not in state["cards"]]
    return ["Bet", "Pass"]


def toy_get_observations(state):
    return [
        {"my_card": state["cards"][0], "choice": state["choice"]},
        {"my_card": state["cards"][1], "choice": state["choice"]},
    ]


def toy_resample_history(obs_action_history, player_id, rng, last_is_terminal=False):
    last_obs = obs_action_history[-1][0]
    my_card = last_obs["my_card"]
    opponent = rng.choice([c for c in TOY_DECK if c != my_card])
    cards = [None, None]
    cards[player_id] = my_card
    cards[1 - player_id] = opponent
    actions = [cards[0], cards[1]]
    if last_obs["choice"] is not None:
        actions.append(last_obs["choice"])
    return actions


@pytest.fixture
def toy_bundle():
    model = WorldModelHandle(
        name="toy_cards",
        num_players=2,
        apply_action=toy_apply_action,
        get_current_player=toy_get_current_player,
        get_rewards=toy_get_rewards,
        get_legal_actions=toy_get_legal_actions,
        get_observations=toy_get_observations,
        metadata={"observability": "imperfect", "payoff_kind": "zero_sum"},
    )
    return GameBundle(
        name="toy_cards",
        model=model,
        initial_state={"cards": [None, None], "choice": None},
        metadata={"payoff_kind": "zero_sum"},
    )


@pytest.fixture
def toy_inference():
    return ReferenceInference(game="toy_cards", resample_history=toy_resample_history)


# ---------------------------------------------------------------------------
# Counting game: players alternate incrementing a counter from 0 to 4; player
# 0 wins at 4. Fully deterministic, so its trajectory-derived tests are fixed
# and candidate sources can be made to pass an exact number of them.

COUNTING_SOURCE_CORRECT = '''\
def apply_action(state, action):
  return {'n': state['n'] + 1}

def get_current_player(state):
  if state['n'] >= 4:
    return -4
  return state['n'] % 2

def get_player_name(player_id):
  if player_id == -1:
    return 'chance'
  if player_id == -4:
    return 'terminal'
  return str(player_id)

def get_rewards(state):
  if state['n'] >= 4:
    return [1.0, -1.0]
  return [0.0, 0.0]

def get_legal_actions(state):
  if state['n'] >= 4:
    return []
  return ['inc']

def get_observations(state):
  return [state, state]
'''


def counting_candidate(break_at: int) -> str:
    """A candidate whose apply_action is wrong for counters >= break_at, so it
    passes exactly break_at of the four transition tests."""
    return COUNTING_SOURCE_CORRECT.replace(
        "  return {'n': state['n'] + 1}",
        f"  if state['n'] >= {break_at}:\n"
        "    return {'n': state['n'] + 99}\n"
        "  return {'n': state['n'] + 1}",
    )


def make_counting_bundle() -> GameBundle:
    import codegames.synthesis as synthesis

    target = synthesis.load_candidate(COUNTING_SOURCE_CORRECT, {"n": 0})
    target.model.name = "counting"
    return GameBundle(name="counting", model=target.model, initial_state={"n": 0})


@pytest.fixture
def counting_bundle():
    return make_counting_bundle()
