"""Hand of war: a 16-card battle game with hidden hands and draw piles.

Deck: ranks A (high), K, Q, J in four suits; tokens like 'As', 'Kh'. Chance
deals the deck one card at a time, alternating player 0 / player 1 piles.
Each player draws a starting hand of three. Battles are encoded as a
sequential hidden commitment: player 0 commits a card face down, then player
1; the reveal resolves the battle. The higher rank takes all cards at stake
into its win pile; ties trigger a showdown (each player burns the top card of
their draw pile face down into the pot, then commits again). After a
resolution both players replenish to three cards (player 0 first). The game
ends when one player holds all 16 cards, or when a required draw or burn
cannot be completed — then win piles are compared (more cards wins; equal is
a draw). Win piles are never reshuffled.
"""

from __future__ import annotations

import collections

from codegames.core import WorldModelHandle
from codegames.games import GameBundle, ReferenceInference
from codegames.values import structurally_equal

DECK = tuple(sorted(rank + suit for rank in "AKQJ" for suit in "shdc"))
_RANK = {"J": 0, "Q": 1, "K": 2, "A": 3}


def _rank(card):
    return _RANK[card[0]]


def initial_state():
    return {
        "phase": "deal",
        "undealt": list(DECK),
        "piles": [[], []],
        "hands": [[], []],
        "win_piles": [[], []],
        "pot": [],
        "committed": [None, None],
        "revealed": [],
        "result": None,
    }


def get_current_player(state):
    if state["phase"] == "deal":
        return -1
    if state["phase"] == "terminal":
        return -4
    return 0 if state["committed"][0] is None else 1


def get_legal_actions(state):
    player = get_current_player(state)
    if player == -4:
        return []
    if player == -1:
        return sorted(state["undealt"])
    return sorted(state["hands"][player])


def get_rewards(state):
    result = state["result"]
    if result is None or result == "draw":
        return [0.0, 0.0]
    rewards = [-1.0, -1.0]
    rewards[result] = 1.0
    return rewards


def _copy(state):
    return {
        "phase": state["phase"],
        "undealt": state["undealt"][:],
        "piles": [state["piles"][0][:], state["piles"][1][:]],
        "hands": [state["hands"][0][:], state["hands"][1][:]],
        "win_piles": [state["win_piles"][0][:], state["win_piles"][1][:]],
        "pot": state["pot"][:],
        "committed": state["committed"][:],
        "revealed": state["revealed"][:],
        "result": state["result"],
    }


def _finish_by_count(state):
    w0, w1 = len(state["win_piles"][0]), len(state["win_piles"][1])
    state["result"] = "draw" if w0 == w1 else (0 if w0 > w1 else 1)
    state["phase"] = "terminal"
    return state


def _resolve(state):
    c0, c1 = state["committed"]
    state["committed"] = [None, None]
    state["pot"].extend([c0, c1])
    state["revealed"].extend([c0, c1])
    if _rank(c0) == _rank(c1):
        # Showdown: burn one face-down card from each draw pile, then both
        # players pick a new battle card from their (unreplenished) hands.
        for p in (0, 1):
            if not state["piles"][p]:
                return _finish_by_count(state)
        for p in (0, 1):
            state["pot"].append(state["piles"][p].pop(0))
        if not state["hands"][0] or not state["hands"][1]:
            return _finish_by_count(state)
        return state
    winner = 0 if _rank(c0) > _rank(c1) else 1
    state["win_piles"][winner].extend(state["pot"])
    state["pot"] = []
    for p in (0, 1):
        total = len(state["piles"][p]) + len(state["hands"][p]) + len(state["win_piles"][p])
        if total == 16:
            state["result"] = p
            state["phase"] = "terminal"
            return state
    for p in (0, 1):
        while len(state["hands"][p]) < 3:
            if not state["piles"][p]:
                return _finish_by_count(state)
            state["hands"][p].append(state["piles"][p].pop(0))
    return state


def apply_action(state, action):
    player = get_current_player(state)
    new = _copy(state)
    if player == -1:
        dealt = len(DECK) - len(new["undealt"])
        new["undealt"].remove(action)
        new["piles"][dealt % 2].append(action)
        if not new["undealt"]:
            for p in (0, 1):
                new["hands"][p] = new["piles"][p][:3]
                new["piles"][p] = new["piles"][p][3:]
            new["phase"] = "play"
        return new
    new["hands"][player].remove(action)
    new["committed"][player] = action
    if new["committed"][0] is not None and new["committed"][1] is not None:
        return _resolve(new)
    return new


def get_observations(state):
    observations = []
    for i in range(2):
        j = 1 - i
        observations.append(
            {
                "my_hand": sorted(state["hands"][i]),
                "my_draw_pile_count": len(state["piles"][i]),
                "my_win_pile_count": len(state["win_piles"][i]),
                "opponent_hand_count": len(state["hands"][j]),
                "opponent_draw_pile_count": len(state["piles"][j]),
                "opponent_win_pile_count": len(state["win_piles"][j]),
                "publicly_revealed_cards": state["revealed"],
                "pot_count": len(state["pot"]),
                "my_committed": state["committed"][i],
                "opponent_has_committed": state["committed"][j] is not None,
                "phase": state["phase"],
            }
        )
    return observations


def _construct_candidate(obs_action_history, player_id, rng, last_is_terminal):
    """Build one candidate deal + action list consistent with the evidence."""
    me = player_id
    opp = 1 - player_id
    last_obs = obs_action_history[-1][0]
    revealed = list(last_obs["publicly_revealed_cards"])

    # My hand snapshots in decision order (plus the terminal snapshot).
    snapshots = [collections.Counter(obs["my_hand"]) for obs, _ in obs_action_history]
    my_plays = [act for _, act in obs_action_history if act is not None]

    # Walk the public battle structure to place my pile pops (draws/burns)
    # and the opponent's pops, assigning opponent card identities lazily.
    my_pile = []  # my pile below the starting hand, in draw order
    my_unseen_slots = []  # indices into my_pile holding yet-unknown cards
    opp_positions = {}  # card -> opponent pile position, for forced cards
    opp_pop_count = 3  # opponent pile positions 0-2 are the starting hand
    opp_hand_slots = [0, 1, 2]  # positions of cards currently in their hand
    my_decisions_done = 0

    def my_draws_for_boundary(k):
        """Cards I drew between my k-th decision and the next snapshot."""
        before = snapshots[k].copy()
        if k < len(my_plays):
            before[my_plays[k]] -= 1
        return sorted((snapshots[k + 1] - before).elements())

    battles = [(revealed[i], revealed[i + 1]) for i in range(0, len(revealed) - 1, 2)]
    for b, (c0, c1) in enumerate(battles):
        opp_card = c1 if me == 0 else c0
        # The opponent's played card occupies one of their unknown slots.
        if opp_card in opp_positions or not opp_hand_slots:
            return None
        slot = opp_hand_slots.pop(rng.randrange(len(opp_hand_slots)))
        opp_positions[opp_card] = slot
        if _rank(c0) == _rank(c1):
            # Showdown: both piles burn their top card — unless this tied
            # battle ended the game precisely because a burn could not be
            # completed. That case is detectable from the pot: burns add two
            # cards on top of the two commitments.
            burned = True
            if last_is_terminal and b == len(battles) - 1:
                pot_before = obs_action_history[-2][0]["pot_count"]
                burned = last_obs["pot_count"] == pot_before + 4
            if burned:
                my_pile.append(None)
                my_unseen_slots.append(len(my_pile) - 1)
                opp_pop_count += 1  # burned card: unknown identity
            my_decisions_done += 1
        else:
            # Resolution: replenish both hands to three.
            for card in my_draws_for_boundary(my_decisions_done):
                my_pile.append(card)
            while len(opp_hand_slots) < 3:
                opp_hand_slots.append(opp_pop_count)
                opp_pop_count += 1
            my_decisions_done += 1

    # Partition the unseen cards between my pile slots/tail and the opponent.
    my_known = set()
    for counter in snapshots:
        my_known.update(counter.keys())
    my_known.update(card for card in my_pile if card is not None)
    seen = my_known | set(revealed)
    unseen = [card for card in DECK if card not in seen]
    rng.shuffle(unseen)

    my_tail_count = last_obs["my_draw_pile_count"]
    my_need = len(my_unseen_slots) + my_tail_count
    if my_need > len(unseen):
        return None
    for index in my_unseen_slots:
        my_pile[index] = unseen.pop()
    my_tail = [unseen.pop() for _ in range(my_tail_count)]
    opp_unknown = unseen  # remainder belongs to the opponent

    # Assemble the opponent's pile from position assignments.
    opp_pile_size = 16 - (3 + len(my_pile) + my_tail_count)
    opp_pile = [None] * opp_pile_size
    for card, position in opp_positions.items():
        if position >= opp_pile_size:
            return None
        opp_pile[position] = card
    free = [i for i, card in enumerate(opp_pile) if card is None]
    if len(free) != len(opp_unknown):
        return None
    for i, card in zip(free, opp_unknown):
        opp_pile[i] = card

    initial_hand = sorted(snapshots[0].elements())
    rng.shuffle(initial_hand)
    my_full_pile = initial_hand + my_pile + my_tail

    piles = [None, None]
    piles[me] = my_full_pile
    piles[opp] = opp_pile
    if len(piles[0]) != 8 or len(piles[1]) != 8:
        return None
    deals = []
    for i in range(8):
        deals.append(piles[0][i])
        deals.append(piles[1][i])
    return deals + revealed


def _resample_history(obs_action_history, player_id, rng, last_is_terminal=False):
    """Sample a consistent full history by guided construction + replay check."""
    me = player_id
    for _ in range(500):
        actions = _construct_candidate(obs_action_history, player_id, rng, last_is_terminal)
        if actions is None:
            continue
        try:
            state = initial_state()
            evidence = iter(obs_action_history)
            pending = next(evidence)
            replayed = []
            ok = True
            for action in actions:
                if get_current_player(state) == me:
                    if pending is None or not structurally_equal(
                        pending[0], get_observations(state)[me]
                    ):
                        ok = False
                        break
                    if pending[1] is not None and pending[1] != action:
                        ok = False
                        break
                    pending = next(evidence, None)
                if action not in get_legal_actions(state):
                    ok = False
                    break
                state = apply_action(state, action)
                replayed.append(action)
            if not ok:
                continue
            # Player 1 faces a hidden pending commitment from player 0.
            if not last_is_terminal and me == 1 and get_current_player(state) == 0:
                choices = get_legal_actions(state)
                if not choices:
                    continue
                action = choices[rng.randrange(len(choices))]
                state = apply_action(state, action)
                replayed.append(action)
            if last_is_terminal:
                if get_current_player(state) != -4 or pending is None:
                    continue
                if not structurally_equal(pending[0], get_observations(state)[me]):
                    continue
                if next(evidence, None) is not None:
                    continue
            else:
                if get_current_player(state) != me or pending is None:
                    continue
                if not structurally_equal(pending[0], get_observations(state)[me]):
                    continue
                if next(evidence, None) is not None:
                    continue
            return replayed
        except Exception:
            continue
    raise ValueError("no consistent history found for hand_of_war evidence")


def make_bundle() -> GameBundle:
    model = WorldModelHandle(
        name="hand_of_war",
        num_players=2,
        apply_action=apply_action,
        get_current_player=get_current_player,
        get_rewards=get_rewards,
        get_legal_actions=get_legal_actions,
        get_observations=get_observations,
        metadata={"observability": "imperfect", "payoff_kind": "wld"},
    )
    return GameBundle(
        name="hand_of_war",
        model=model,
        initial_state=initial_state(),
        metadata={
            "num_players": 2,
            "observability": "imperfect",
            "payoff_kind": "wld",
            "action_universe_size": 16,
        },
    )


def make_inference() -> ReferenceInference:
    return ReferenceInference(game="hand_of_war", resample_history=_resample_history)
