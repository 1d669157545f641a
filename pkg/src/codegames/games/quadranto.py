"""Quadranto: a 4x4 pursuit game with quadrant-level observations.

Chance places player 0 in the top-left quadrant and player 1 in the
bottom-right quadrant (one chance action each, 4 cells). Players then
alternate moves from {Left, Right, Up, Down, Stay} that stay on the board;
landing on the opponent wins (+1/-1). After 20 total player moves without a
catch the game is a draw. Each player observes its own cell and only the
opponent's quadrant.

Placement actions: 'place(r,c)'. Quadrants are numbered 0=top-left,
1=top-right, 2=bottom-left, 3=bottom-right.
"""

from __future__ import annotations

from codegames.core import WorldModelHandle
from codegames.games import GameBundle, ReferenceInference

SIZE = 4
MAX_MOVES = 20
MOVES = {
    "Left": (0, -1),
    "Right": (0, 1),
    "Up": (-1, 0),
    "Down": (1, 0),
    "Stay": (0, 0),
}
_MOVE_ORDER = ("Left", "Right", "Up", "Down", "Stay")
_DELTA_TO_MOVE = {delta: move for move, delta in MOVES.items()}


def quadrant_of(pos):
    return (pos[0] // 2) * 2 + pos[1] // 2


def _quadrant_cells(quadrant):
    base_r = (quadrant // 2) * 2
    base_c = (quadrant % 2) * 2
    return [(base_r + dr, base_c + dc) for dr in range(2) for dc in range(2)]


def initial_state():
    return {"positions": [None, None], "num_moves": 0, "winner": None}


def get_current_player(state):
    if state["positions"][0] is None or state["positions"][1] is None:
        return -1
    if state["winner"] is not None or state["num_moves"] >= MAX_MOVES:
        return -4
    return state["num_moves"] % 2


def get_legal_actions(state):
    player = get_current_player(state)
    if player == -4:
        return []
    if player == -1:
        quadrant = 0 if state["positions"][0] is None else 3
        return [f"place({r},{c})" for r, c in sorted(_quadrant_cells(quadrant))]
    r, c = state["positions"][player]
    legal = []
    for move in _MOVE_ORDER:
        dr, dc = MOVES[move]
        if 0 <= r + dr < SIZE and 0 <= c + dc < SIZE:
            legal.append(move)
    return legal


def apply_action(state, action):
    player = get_current_player(state)
    positions = [None if p is None else p[:] for p in state["positions"]]
    if player == -1:
        row, col = action[6:-1].split(",")
        target = 0 if positions[0] is None else 1
        positions[target] = [int(row), int(col)]
        return {"positions": positions, "num_moves": 0, "winner": None}
    dr, dc = MOVES[action]
    r, c = positions[player]
    positions[player] = [r + dr, c + dc]
    winner = state["winner"]
    if positions[player] == positions[1 - player]:
        winner = player
    return {
        "positions": positions,
        "num_moves": state["num_moves"] + 1,
        "winner": winner,
    }


def get_rewards(state):
    winner = state["winner"]
    if winner is None:
        return [0.0, 0.0]
    rewards = [-1.0, -1.0]
    rewards[winner] = 1.0
    return rewards


def get_observations(state):
    observations = []
    for i in range(2):
        mine = state["positions"][i]
        other = state["positions"][1 - i]
        observations.append(
            {
                "my_position": None if mine is None else mine,
                "opponent_quadrant": None if other is None else quadrant_of(other),
                "num_moves": state["num_moves"],
                "caught": state["winner"] is not None,
            }
        )
    return observations


def _targets(cell):
    r, c = cell
    out = []
    for move in _MOVE_ORDER:
        dr, dc = MOVES[move]
        if 0 <= r + dr < SIZE and 0 <= c + dc < SIZE:
            out.append((r + dr, c + dc))
    return out


def _weighted_pick(pairs, rng):
    total = sum(w for _, w in pairs)
    pick = rng.randrange(total)
    for item, weight in pairs:
        if pick < weight:
            return item
        pick -= weight
    raise AssertionError("empty weighted choice")


def _resample_history(obs_action_history, player_id, rng, last_is_terminal=False):
    """Sample a full action history consistent with one player's evidence.

    Runs a forward pass over the opponent's possible cells after each of
    their moves — filtered by observed quadrants and catch/no-catch
    constraints — then samples an opponent path backward in proportion to
    consistent-prefix counts, which is uniform over consistent histories.
    """
    me = player_id
    opp = 1 - player_id

    if last_is_terminal:
        terminal_obs = obs_action_history[-1][0]
        decision_pairs = list(obs_action_history[:-1])
        total_moves = terminal_obs["num_moves"]
        caught = terminal_obs["caught"]
    else:
        terminal_obs = None
        decision_pairs = list(obs_action_history)
        total_moves = decision_pairs[-1][0]["num_moves"]
        caught = False

    my_steps = [s for s in range(total_moves) if s % 2 == me]
    opp_steps = [s for s in range(total_moves) if s % 2 == opp]
    # My k-th recorded action drives my k-th move; in mid-game mode the final
    # pair's action (if any) has not been played yet and is excluded.
    my_actions = [decision_pairs[k][1] for k in range(len(my_steps))]

    caught_by_me = caught and total_moves % 2 != me  # my move was the last one
    caught_by_opp = caught and total_moves % 2 != opp

    # My standing cell at every step, and my destination for each of my moves.
    my_cell = tuple(decision_pairs[0][0]["my_position"])
    my_cell_at = {}
    my_dest = {}
    action_iter = iter(my_actions)
    for step in range(total_moves):
        my_cell_at[step] = my_cell
        if step % 2 == me:
            dr, dc = MOVES[next(action_iter)]
            my_cell = (my_cell[0] + dr, my_cell[1] + dc)
            my_dest[step] = my_cell

    # Opponent-quadrant constraints keyed by completed opponent move count.
    quadrant_req = {}
    for k, (obs, _) in enumerate(decision_pairs):
        if k < len(my_steps):
            step = my_steps[k]
        else:  # final mid-game decision point: after all recorded moves
            step = total_moves
        quadrant_req[sum(1 for s in opp_steps if s < step)] = obs["opponent_quadrant"]
    if last_is_terminal:
        quadrant_req[len(opp_steps)] = terminal_obs["opponent_quadrant"]

    def layer_allowed(j, cell):
        req = quadrant_req.get(j)
        if req is not None and quadrant_of(cell) != req:
            return False
        # While the opponent has j completed moves, none of my moves in that
        # window may land on them (a landing would have ended the game) —
        # except the final catching move, which must.
        for step, dest in my_dest.items():
            if sum(1 for s in opp_steps if s < step) != j:
                continue
            is_catch = caught_by_me and step == total_moves - 1
            if is_catch:
                if cell != dest:
                    return False
            elif cell == dest:
                return False
        return True

    def transition_allowed(j, target):
        # Opponent's j-th move may land on my cell only as the final catch.
        step = opp_steps[j]
        is_catch = caught_by_opp and step == total_moves - 1
        if is_catch:
            return target == my_cell_at[step]
        return target != my_cell_at[step]

    layers = []
    layer = {
        cell: 1
        for cell in _quadrant_cells(3 if opp == 1 else 0)
        if layer_allowed(0, cell)
    }
    layers.append(layer)
    for j in range(len(opp_steps)):
        new_layer = {}
        for cell, count in layers[j].items():
            for target in _targets(cell):
                if transition_allowed(j, target) and layer_allowed(j + 1, target):
                    new_layer[target] = new_layer.get(target, 0) + count
        layers.append(new_layer)

    if not layers[-1]:
        raise ValueError("no opponent trajectory consistent with the evidence")
    path = [_weighted_pick(list(layers[-1].items()), rng)]
    for j in range(len(opp_steps) - 1, -1, -1):
        preds = [
            (cell, count)
            for cell, count in layers[j].items()
            if path[0] in _targets(cell)
        ]
        path.insert(0, _weighted_pick(preds, rng))

    opp_actions = [
        _DELTA_TO_MOVE[(path[j + 1][0] - path[j][0], path[j + 1][1] - path[j][1])]
        for j in range(len(opp_steps))
    ]

    placements = [None, None]
    my_start = tuple(decision_pairs[0][0]["my_position"])
    placements[me] = f"place({my_start[0]},{my_start[1]})"
    placements[opp] = f"place({path[0][0]},{path[0][1]})"
    actions = [placements[0], placements[1]]
    my_iter = iter(my_actions)
    opp_iter = iter(opp_actions)
    for step in range(total_moves):
        actions.append(next(my_iter) if step % 2 == me else next(opp_iter))
    return actions


def make_bundle() -> GameBundle:
    model = WorldModelHandle(
        name="quadranto",
        num_players=2,
        apply_action=apply_action,
        get_current_player=get_current_player,
        get_rewards=get_rewards,
        get_legal_actions=get_legal_actions,
        get_observations=get_observations,
        metadata={"observability": "imperfect", "payoff_kind": "wld"},
    )
    return GameBundle(
        name="quadranto",
        model=model,
        initial_state=initial_state(),
        metadata={
            "num_players": 2,
            "observability": "imperfect",
            "payoff_kind": "wld",
            "action_universe_size": 5,
        },
    )


def make_inference() -> ReferenceInference:
    return ReferenceInference(game="quadranto", resample_history=_resample_history)
