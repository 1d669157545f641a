"""m-in-a-row placement games on a rectangular board: tic-tac-toe and the
6x6/win-4 generalization.

State: {'board': flat list of 'x'/'o'/None, 'current_player_mark': 'x'|'o'|None}
(None mark means terminal). Action notation: 'x(row,col)' / 'o(row,col)'.
Player 0 plays 'x' and moves first; perfect information, W/L/D payoffs.
"""

from __future__ import annotations

from codegames.core import WorldModelHandle
from codegames.games import GameBundle

_MARK_TO_PLAYER = {"x": 0, "o": 1}


def _winning_lines(rows: int, cols: int, length: int):
    lines = []
    for r in range(rows):
        for c in range(cols):
            for dr, dc in ((0, 1), (1, 0), (1, 1), (1, -1)):
                rr, cc = r + dr * (length - 1), c + dc * (length - 1)
                if 0 <= rr < rows and 0 <= cc < cols:
                    lines.append(tuple((r + i * dr) * cols + (c + i * dc) for i in range(length)))
    return lines


class _GridEngine:
    def __init__(self, rows: int, cols: int, win_length: int):
        self.rows = rows
        self.cols = cols
        self.win_length = win_length
        self.size = rows * cols
        # Index lines by cell so win detection only scans lines through the
        # last move.
        self.lines_at = [[] for _ in range(self.size)]
        for line in _winning_lines(rows, cols, win_length):
            for idx in line:
                self.lines_at[idx].append(line)

    def initial_state(self):
        return {"board": [None] * self.size, "current_player_mark": "x"}

    def apply_action(self, state, action):
        mark = action[0]
        row, col = action[2:-1].split(",")
        index = int(row) * self.cols + int(col)
        board = state["board"][:]
        board[index] = mark
        won = any(
            all(board[i] == mark for i in line) for line in self.lines_at[index]
        )
        if won or all(cell is not None for cell in board):
            next_mark = None
        else:
            next_mark = "o" if mark == "x" else "x"
        return {"board": board, "current_player_mark": next_mark}

    def get_current_player(self, state):
        mark = state["current_player_mark"]
        if mark is None:
            return -4
        return _MARK_TO_PLAYER[mark]

    def _winner_mark(self, board):
        for index, cell in enumerate(board):
            if cell is not None:
                for line in self.lines_at[index]:
                    if all(board[i] == cell for i in line):
                        return cell
        return None

    def get_rewards(self, state):
        if state["current_player_mark"] is not None:
            return [0.0, 0.0]
        winner = self._winner_mark(state["board"])
        if winner == "x":
            return [1.0, -1.0]
        if winner == "o":
            return [-1.0, 1.0]
        return [0.0, 0.0]

    def get_legal_actions(self, state):
        mark = state["current_player_mark"]
        if mark is None:
            return []
        cols = self.cols
        return [
            f"{mark}({i // cols},{i % cols})"
            for i, cell in enumerate(state["board"])
            if cell is None
        ]

    def get_observations(self, state):
        return [state, state]


def _make_bundle(name: str, rows: int, cols: int, win_length: int) -> GameBundle:
    engine = _GridEngine(rows, cols, win_length)
    model = WorldModelHandle(
        name=name,
        num_players=2,
        apply_action=engine.apply_action,
        get_current_player=engine.get_current_player,
        get_rewards=engine.get_rewards,
        get_legal_actions=engine.get_legal_actions,
        get_observations=engine.get_observations,
        metadata={"observability": "perfect", "payoff_kind": "wld"},
    )
    return GameBundle(
        name=name,
        model=model,
        initial_state=engine.initial_state(),
        metadata={
            "num_players": 2,
            "observability": "perfect",
            "payoff_kind": "wld",
            "action_universe_size": rows * cols,
        },
    )


def make_tic_tac_toe() -> GameBundle:
    return _make_bundle("tic_tac_toe", 3, 3, 3)


def make_gen_tic_tac_toe() -> GameBundle:
    return _make_bundle("gen_tic_tac_toe", 6, 6, 4)
