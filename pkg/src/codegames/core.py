"""Extensive-form game contract: player conventions and the world-model handle.

A world model exposes six deterministic functions over structured states:
apply_action, get_current_player, get_rewards, get_legal_actions and
get_observations, plus the module-level get_player_name. All stochasticity
enters through the chance player's actions; the optional resample_* samplers
are the only stochastic capabilities and take an explicit random stream.
"""

from __future__ import annotations

import traceback
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

from codegames.errors import InvalidPlayerError, ModelFault

GameState = Any
Observation = Any
ActionToken = str

CHANCE_PLAYER = -1
TERMINAL_PLAYER = -4


def get_player_name(player_id: int) -> str:
    """Name a player id: -1 -> 'chance', -4 -> 'terminal', k -> 'k'."""
    if player_id == CHANCE_PLAYER:
        return "chance"
    if player_id == TERMINAL_PLAYER:
        return "terminal"
    if player_id < 0:
        raise InvalidPlayerError(f"invalid player id {player_id}")
    return str(player_id)


# A sampler of full action histories consistent with one player's evidence:
# (obs_action_history, player_id, rng) -> list of actions from the initial state.
HistorySampler = Callable[[Sequence, int, Any], Sequence[ActionToken]]
# A sampler of states consistent with the latest observation.
StateSampler = Callable[[Sequence, int, Any], GameState]
# Per-player scalar evaluation of a state.
ValueFunction = Callable[[GameState, int], float]


@dataclass
class WorldModelHandle:
    """Uniform interface over a game engine or a hosted synthesized model."""

    name: str
    num_players: int
    apply_action: Callable[[GameState, ActionToken], GameState]
    get_current_player: Callable[[GameState], int]
    get_rewards: Callable[[GameState], Sequence[float]]
    get_legal_actions: Callable[[GameState], Sequence[ActionToken]]
    get_observations: Callable[[GameState], Sequence[Observation]]
    resample_history: Optional[HistorySampler] = None
    resample_state: Optional[StateSampler] = None
    value_function: Optional[ValueFunction] = None
    metadata: dict = field(default_factory=dict)

    @property
    def has_history_inference(self) -> bool:
        return self.resample_history is not None

    @property
    def has_state_inference(self) -> bool:
        return self.resample_state is not None

    @property
    def has_value_function(self) -> bool:
        return self.value_function is not None


def call_guarded(fn: Callable, *args) -> Any:
    """Invoke model code, converting any exception into a ModelFault with trace."""
    try:
        return fn(*args)
    except ModelFault:
        raise
    except Exception as exc:  # noqa: BLE001 - model code may raise anything
        raise ModelFault(f"{type(exc).__name__}: {exc}", traceback.format_exc()) from exc
