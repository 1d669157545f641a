"""Extensive-form game framework: engines, planners, evidence, synthesis, arena."""

from codegames.core import (
    CHANCE_PLAYER,
    TERMINAL_PLAYER,
    WorldModelHandle,
    get_player_name,
)
from codegames.values import canonical_serialize, parse_canonical, structurally_equal

__all__ = [
    "CHANCE_PLAYER",
    "TERMINAL_PLAYER",
    "WorldModelHandle",
    "get_player_name",
    "canonical_serialize",
    "parse_canonical",
    "structurally_equal",
]
