"""Bargaining: two players split a pool of three item types over at most 10
turns, with privately known per-item values (general-sum payoffs).

Chance first picks a scenario from a fixed table of generated outcomes; a
scenario sets the pool (1-5 of each item) and each player's item values
(0-6). Players alternate, player 0 first. An offer 'player {i} offers x,y,z'
proposes that the offerer keeps x X's, y Y's and z Z's; 'player {i} agrees'
accepts the opponent's previous offer (legal only after at least one offer).
On agreement the previous offerer keeps the offered quantities and the
accepter takes the remainder; each player scores their own values times their
own share. If 10 turns pass without agreement both score zero.
"""

from __future__ import annotations

import itertools
import random

from codegames.core import WorldModelHandle
from codegames.games import GameBundle, ReferenceInference

ITEMS = ["X", "Y", "Z"]
MAX_TURNS = 10
POOL_VALUES = range(1, 6)
ITEM_VALUES = range(0, 7)


def _generate_chance_outcomes(seed=0, count=20):
    rng = random.Random(seed)
    outcomes = []
    for _ in range(count):
        pool = {item: rng.choice(POOL_VALUES) for item in ITEMS}
        p0_values = {item: rng.choice(ITEM_VALUES) for item in ITEMS}
        p1_values = {item: rng.choice(ITEM_VALUES) for item in ITEMS}
        token = (
            "pool:" + ",".join(f"{i}={pool[i]}" for i in ITEMS)
            + ";p0_values:" + ",".join(f"{i}={p0_values[i]}" for i in ITEMS)
            + ";p1_values:" + ",".join(f"{i}={p1_values[i]}" for i in ITEMS)
        )
        outcomes.append(token)
    return outcomes


_CHANCE_OUTCOMES = _generate_chance_outcomes()


def _parse_chance_outcome(token):
    sections = {}
    for part in token.split(";"):
        key, _, body = part.partition(":")
        sections[key] = {
            item: int(value)
            for item, _, value in (p.partition("=") for p in body.split(","))
        }
    return sections["pool"], sections["p0_values"], sections["p1_values"]


def initial_state():
    return {
        "pool": None,
        "values": [None, None],
        "num_turns": 0,
        "current_player": 0,
        "previous_offer": None,
        "agreement": False,
    }


def get_current_player(state):
    if state["pool"] is None:
        return -1
    if state["agreement"] or state["num_turns"] >= MAX_TURNS:
        return -4
    return state["current_player"]


def get_legal_actions(state):
    player = get_current_player(state)
    if player == -4:
        return []
    if player == -1:
        return list(_CHANCE_OUTCOMES)
    pool = state["pool"]
    actions = []
    for quantities in itertools.product(
        *(range(pool[item] + 1) for item in ITEMS)
    ):
        actions.append(f"player {player} offers " + ",".join(map(str, quantities)))
    if state["num_turns"] > 0:
        actions.append(f"player {player} agrees")
    return actions


def apply_action(state, action):
    player = get_current_player(state)
    if player == -1:
        pool, p0_values, p1_values = _parse_chance_outcome(action)
        return {
            "pool": pool,
            "values": [p0_values, p1_values],
            "num_turns": 0,
            "current_player": 0,
            "previous_offer": None,
            "agreement": False,
        }
    new = {
        "pool": dict(state["pool"]),
        "values": [dict(state["values"][0]), dict(state["values"][1])],
        "num_turns": state["num_turns"],
        "current_player": 1 - player,
        "previous_offer": state["previous_offer"],
        "agreement": state["agreement"],
    }
    if action.endswith("agrees"):
        new["agreement"] = True
        return new
    quantities = [int(q) for q in action.rsplit(" ", 1)[1].split(",")]
    new["previous_offer"] = {
        "player": player,
        "num_turn": state["num_turns"],
        "quantities": quantities,
    }
    new["num_turns"] += 1
    return new


def get_rewards(state):
    if not state["agreement"]:
        return [0.0, 0.0]
    offer = state["previous_offer"]
    offerer = offer["player"]
    shares = [None, None]
    shares[offerer] = dict(zip(ITEMS, offer["quantities"]))
    shares[1 - offerer] = {
        item: state["pool"][item] - shares[offerer][item] for item in ITEMS
    }
    return [
        float(sum(state["values"][p][item] * shares[p][item] for item in ITEMS))
        for p in range(2)
    ]


def get_observations(state):
    player = get_current_player(state)
    observations = []
    for i in range(2):
        observations.append(
            {
                "my_player_id": i,
                "pool": state["pool"],
                "values": state["values"][i],
                "num_turns": state["num_turns"],
                "agreement": state["agreement"],
                "previous_offer": state["previous_offer"],
                "current_player": player if player >= 0 else None,
            }
        )
    return observations


def _resample_history(obs_action_history, player_id, rng, last_is_terminal=False):
    """Reconstruct the full history: offers are public, so only the chance
    scenario (the opponent's values) and a final hidden opponent action need
    sampling."""
    me = player_id
    last_obs = obs_action_history[-1][0]
    pool = last_obs["pool"]
    my_values = last_obs["values"]

    def matches(token):
        t_pool, p0_values, p1_values = _parse_chance_outcome(token)
        mine = p0_values if me == 0 else p1_values
        return t_pool == pool and mine == my_values

    candidates = [token for token in _CHANCE_OUTCOMES if matches(token)]
    if not candidates:
        raise ValueError("no chance outcome consistent with the evidence")
    chance = candidates[rng.randrange(len(candidates))]

    # Rebuild the offer sequence from the evidence: my offers are my recorded
    # actions; opponent offers appear as 'previous_offer' snapshots.
    offers = {}
    for index, (obs, action) in enumerate(obs_action_history):
        prev = obs["previous_offer"]
        if prev is not None:
            offers[prev["num_turn"]] = (
                f"player {prev['player']} offers "
                + ",".join(map(str, prev["quantities"]))
            )
        # In mid-game mode the final pair's action has not been played yet.
        pending = not last_is_terminal and index == len(obs_action_history) - 1
        if action is not None and not pending and "offers" in action:
            offers[obs["num_turns"]] = action

    actions = [chance] + [offers[t] for t in sorted(offers)]

    if last_is_terminal and last_obs["agreement"]:
        # The accepting move is whoever did not make the standing offer;
        # the final offer itself is already present via previous_offer.
        accepter = 1 - last_obs["previous_offer"]["player"]
        actions.append(f"player {accepter} agrees")
    return actions


def make_bundle() -> GameBundle:
    model = WorldModelHandle(
        name="bargaining",
        num_players=2,
        apply_action=apply_action,
        get_current_player=get_current_player,
        get_rewards=get_rewards,
        get_legal_actions=get_legal_actions,
        get_observations=get_observations,
        metadata={"observability": "imperfect", "payoff_kind": "general_sum"},
    )
    return GameBundle(
        name="bargaining",
        model=model,
        initial_state=initial_state(),
        metadata={
            "num_players": 2,
            "observability": "imperfect",
            "payoff_kind": "general_sum",
            "action_universe_size": 121,
        },
    )


def make_inference() -> ReferenceInference:
    return ReferenceInference(game="bargaining", resample_history=_resample_history)
