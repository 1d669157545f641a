"""Leduc poker: 6-card deck (J,J,Q,Q,K,K), two betting rounds, zero-sum.

Player 0 posts a small blind of 1, player 1 a big blind of 2, and player 0
acts first in both rounds. There is no Check action: a call may cost zero.
Raise size is 2 in round 1 and 4 in round 2. One raise is allowed on top of
the blind in round 1 (the blind counts as the first raise) and two raises in
round 2. Showdown: pairing the public card beats high card; ties split.

Actions: 'Fold' | 'Call' | 'Raise' for players; card names ('J','Q','K') for
the chance deals. Chance legal-action lists repeat duplicated cards so that a
uniform draw over the list matches the true deck distribution.
"""

from __future__ import annotations

from codegames.core import WorldModelHandle
from codegames.games import GameBundle, ReferenceInference

DECK = ("J", "J", "Q", "Q", "K", "K")
_RANK = {"J": 0, "Q": 1, "K": 2}


def initial_state():
    return {
        "private_cards": [None, None],
        "public_card": None,
        "round": 1,
        "contributions": [1, 2],
        "raises": 0,
        "to_act": 0,
        "actions_this_round": 0,
        "folded": None,
        "showdown": False,
        # Public betting history: [round, player, action] triples.
        "betting": [],
    }


def _remaining_deck(state):
    deck = list(DECK)
    for card in state["private_cards"] + [state["public_card"]]:
        if card is not None:
            deck.remove(card)
    return deck


def get_current_player(state):
    if state["folded"] is not None or state["showdown"]:
        return -4
    if state["private_cards"][0] is None or state["private_cards"][1] is None:
        return -1
    if state["round"] == 2 and state["public_card"] is None:
        return -1
    return state["to_act"]


def get_legal_actions(state):
    player = get_current_player(state)
    if player == -4:
        return []
    if player == -1:
        return _remaining_deck(state)
    outstanding = state["contributions"][1 - player] - state["contributions"][player]
    max_raises = 1 if state["round"] == 1 else 2
    can_raise = state["raises"] < max_raises
    if outstanding > 0:
        return ["Fold", "Call", "Raise"] if can_raise else ["Fold", "Call"]
    return ["Call", "Raise"] if can_raise else ["Call"]


def apply_action(state, action):
    player = get_current_player(state)
    new = {
        "private_cards": state["private_cards"][:],
        "public_card": state["public_card"],
        "round": state["round"],
        "contributions": state["contributions"][:],
        "raises": state["raises"],
        "to_act": state["to_act"],
        "actions_this_round": state["actions_this_round"],
        "folded": state["folded"],
        "showdown": state["showdown"],
        "betting": [entry[:] for entry in state["betting"]],
    }
    if player == -1:
        if new["private_cards"][0] is None:
            new["private_cards"][0] = action
        elif new["private_cards"][1] is None:
            new["private_cards"][1] = action
        else:
            new["public_card"] = action
        return new

    new["betting"].append([new["round"], player, action])
    if action == "Fold":
        new["folded"] = player
        return new
    if action == "Raise":
        size = 2 if new["round"] == 1 else 4
        new["contributions"][player] = new["contributions"][1 - player] + size
        new["raises"] += 1
        new["actions_this_round"] += 1
        new["to_act"] = 1 - player
        return new
    # Call: match the opponent's contribution. Ends the round unless it is
    # the round's opening action.
    closes = new["actions_this_round"] > 0
    new["contributions"][player] = new["contributions"][1 - player]
    new["actions_this_round"] += 1
    if not closes:
        new["to_act"] = 1 - player
        return new
    if new["round"] == 1:
        new["round"] = 2
        new["raises"] = 0
        new["actions_this_round"] = 0
        new["to_act"] = 0
    else:
        new["showdown"] = True
    return new


def _hand_strength(private, public):
    if private == public:
        return (1, _RANK[private])
    return (0, _RANK[private])


def get_rewards(state):
    if get_current_player(state) != -4:
        return [0.0, 0.0]
    if state["folded"] is not None:
        loser = state["folded"]
        stake = float(state["contributions"][loser])
        rewards = [0.0, 0.0]
        rewards[loser] = -stake
        rewards[1 - loser] = stake
        return rewards
    s0 = _hand_strength(state["private_cards"][0], state["public_card"])
    s1 = _hand_strength(state["private_cards"][1], state["public_card"])
    if s0 == s1:
        return [0.0, 0.0]
    loser = 1 if s0 > s1 else 0
    stake = float(state["contributions"][loser])
    rewards = [0.0, 0.0]
    rewards[loser] = -stake
    rewards[1 - loser] = stake
    return rewards


def get_observations(state):
    player = get_current_player(state)
    shared = {
        "public_card": state["public_card"],
        "contributions": state["contributions"],
        "round": state["round"],
        "betting": state["betting"],
        "current_player": player if player >= 0 else None,
    }
    return [dict(shared, my_card=state["private_cards"][i]) for i in range(2)]


def _resample_history(obs_action_history, player_id, rng, last_is_terminal=False):
    """Reconstruct the public sequence and sample the hidden cards."""
    last_obs = obs_action_history[-1][0]
    my_card = last_obs["my_card"]
    public = last_obs["public_card"]
    betting = last_obs["betting"]

    deck = list(DECK)
    deck.remove(my_card)
    if public is not None:
        deck.remove(public)
    opponent_card = rng.choice(deck)

    cards = [None, None]
    cards[player_id] = my_card
    cards[1 - player_id] = opponent_card
    actions = [cards[0], cards[1]]
    round1 = [entry[2] for entry in betting if entry[0] == 1]
    round2 = [entry[2] for entry in betting if entry[0] == 2]
    actions.extend(round1)
    if public is not None:
        actions.append(public)
    actions.extend(round2)
    return actions


def make_bundle() -> GameBundle:
    model = WorldModelHandle(
        name="leduc_poker",
        num_players=2,
        apply_action=apply_action,
        get_current_player=get_current_player,
        get_rewards=get_rewards,
        get_legal_actions=get_legal_actions,
        get_observations=get_observations,
        metadata={"observability": "imperfect", "payoff_kind": "zero_sum"},
    )
    return GameBundle(
        name="leduc_poker",
        model=model,
        initial_state=initial_state(),
        metadata={
            "num_players": 2,
            "observability": "imperfect",
            "payoff_kind": "zero_sum",
            "action_universe_size": 3,
        },
    )


def make_inference() -> ReferenceInference:
    return ReferenceInference(game="leduc_poker", resample_history=_resample_history)
