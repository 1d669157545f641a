"""Connect four: 6 rows x 7 columns, first to four in a row wins.

State: {'board': flat list of 42 cells ('x'/'o'/None), row 0 on top,
'current_player_mark': 'x'|'o'|None}. Action notation: '[mark][col]',
e.g. 'x3'. Player 0 is 'x' and moves first.
"""

from __future__ import annotations

from codegames.core import WorldModelHandle
from codegames.games import GameBundle

ROWS = 6
COLS = 7
_MARK_TO_PLAYER = {"x": 0, "o": 1}

# Winning lines through each cell, precomputed once.
_LINES_AT = [[] for _ in range(ROWS * COLS)]
for _r in range(ROWS):
    for _c in range(COLS):
        for _dr, _dc in ((0, 1), (1, 0), (1, 1), (1, -1)):
            _rr, _cc = _r + _dr * 3, _c + _dc * 3
            if 0 <= _rr < ROWS and 0 <= _cc < COLS:
                _line = tuple((_r + _i * _dr) * COLS + (_c + _i * _dc) for _i in range(4))
                for _idx in _line:
                    _LINES_AT[_idx].append(_line)


def initial_state():
    return {"board": [None] * (ROWS * COLS), "current_player_mark": "x"}


def apply_action(state, action):
    mark = action[0]
    col = int(action[1:])
    board = state["board"][:]
    # The mark falls to the lowest unoccupied square in the column.
    index = -1
    for row in range(ROWS - 1, -1, -1):
        i = row * COLS + col
        if board[i] is None:
            index = i
            break
    board[index] = mark
    won = any(all(board[i] == mark for i in line) for line in _LINES_AT[index])
    if won or all(cell is not None for cell in board):
        next_mark = None
    else:
        next_mark = "o" if mark == "x" else "x"
    return {"board": board, "current_player_mark": next_mark}


def get_current_player(state):
    mark = state["current_player_mark"]
    if mark is None:
        return -4
    return _MARK_TO_PLAYER[mark]


def _winner_mark(board):
    for index, cell in enumerate(board):
        if cell is not None:
            for line in _LINES_AT[index]:
                if all(board[i] == cell for i in line):
                    return cell
    return None


def get_rewards(state):
    if state["current_player_mark"] is not None:
        return [0.0, 0.0]
    winner = _winner_mark(state["board"])
    if winner == "x":
        return [1.0, -1.0]
    if winner == "o":
        return [-1.0, 1.0]
    return [0.0, 0.0]


def get_legal_actions(state):
    mark = state["current_player_mark"]
    if mark is None:
        return []
    board = state["board"]
    # A column is playable iff its top cell is empty.
    return [f"{mark}{col}" for col in range(COLS) if board[col] is None]


def get_observations(state):
    return [state, state]


def make_bundle() -> GameBundle:
    model = WorldModelHandle(
        name="connect_four",
        num_players=2,
        apply_action=apply_action,
        get_current_player=get_current_player,
        get_rewards=get_rewards,
        get_legal_actions=get_legal_actions,
        get_observations=get_observations,
        metadata={"observability": "perfect", "payoff_kind": "wld"},
    )
    return GameBundle(
        name="connect_four",
        model=model,
        initial_state=initial_state(),
        metadata={
            "num_players": 2,
            "observability": "perfect",
            "payoff_kind": "wld",
            "action_universe_size": COLS,
        },
    )
