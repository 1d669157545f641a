"""Ground-truth engines and reference inference for the built-in games."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from codegames.core import GameState, WorldModelHandle
from codegames.errors import NotApplicableError, UnknownGameError

GAME_NAMES = (
    "tic_tac_toe",
    "connect_four",
    "gen_tic_tac_toe",
    "leduc_poker",
    "bargaining",
    "quadranto",
    "hand_of_war",
)


@dataclass
class GameBundle:
    name: str
    model: WorldModelHandle
    initial_state: GameState
    metadata: dict = field(default_factory=dict)


@dataclass
class ReferenceInference:
    """Exact hidden-history sampler for an imperfect-information game.

    resample_history(obs_action_history, player_id, rng) returns a full action
    list whose replay from the initial state reproduces every recorded
    observation and action of player_id.
    """

    game: str
    resample_history: Callable


def make_game(name: str) -> GameBundle:
    builder = _BUILDERS.get(name)
    if builder is None:
        raise UnknownGameError(f"unknown game {name!r} (choose from {', '.join(GAME_NAMES)})")
    return builder()


def reference_inference(name: str) -> ReferenceInference:
    if name not in _BUILDERS:
        raise UnknownGameError(f"unknown game {name!r}")
    builder = _INFERENCE_BUILDERS.get(name)
    if builder is None:
        raise NotApplicableError(f"{name} is a perfect-information game; no inference sampler")
    return builder()


def describe_game(name: str) -> str:
    """Plain-text rules summary used in synthesis prompts."""
    module = _MODULES.get(name)
    if module is None:
        raise UnknownGameError(f"unknown game {name!r}")
    return (module.__doc__ or name).strip()


def _build_registry():
    from codegames.games import (
        bargaining,
        connect_four,
        grid_games,
        hand_of_war,
        leduc_poker,
        quadranto,
    )

    builders = {
        "tic_tac_toe": grid_games.make_tic_tac_toe,
        "gen_tic_tac_toe": grid_games.make_gen_tic_tac_toe,
        "connect_four": connect_four.make_bundle,
        "leduc_poker": leduc_poker.make_bundle,
        "bargaining": bargaining.make_bundle,
        "quadranto": quadranto.make_bundle,
        "hand_of_war": hand_of_war.make_bundle,
    }
    inference = {
        "leduc_poker": leduc_poker.make_inference,
        "bargaining": bargaining.make_inference,
        "quadranto": quadranto.make_inference,
        "hand_of_war": hand_of_war.make_inference,
    }
    modules = {
        "tic_tac_toe": grid_games,
        "gen_tic_tac_toe": grid_games,
        "connect_four": connect_four,
        "leduc_poker": leduc_poker,
        "bargaining": bargaining,
        "quadranto": quadranto,
        "hand_of_war": hand_of_war,
    }
    return builders, inference, modules


_BUILDERS: dict
_INFERENCE_BUILDERS: dict
_MODULES: dict
_BUILDERS, _INFERENCE_BUILDERS, _MODULES = _build_registry()
