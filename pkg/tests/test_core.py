"""Player conventions and the guarded model-call wrapper."""

import pytest

from codegames.core import (
    CHANCE_PLAYER,
    TERMINAL_PLAYER,
    call_guarded,
    get_player_name,
)
from codegames.errors import InvalidPlayerError, ModelFault


def test_player_id_constants():
    assert CHANCE_PLAYER == -1
    assert TERMINAL_PLAYER == -4


def test_player_names():
    assert get_player_name(-1) == "chance"
    assert get_player_name(-4) == "terminal"
    assert get_player_name(0) == "0"
    assert get_player_name(1) == "1"


@pytest.mark.parametrize("bad", [-2, -3, -5])
def test_invalid_player_ids_rejected(bad):
    with pytest.raises(InvalidPlayerError):
        get_player_name(bad)


def test_call_guarded_passes_through_results():
    assert call_guarded(lambda a, b: a + b, 2, 3) == 5


def test_call_guarded_wraps_exceptions_with_trace():
    def boom(_):
        raise KeyError("missing")

    with pytest.raises(ModelFault) as info:
        call_guarded(boom, None)
    assert "KeyError" in str(info.value)
    assert "boom" in info.value.trace  # full traceback retained


def test_call_guarded_does_not_double_wrap():
    original = ModelFault("already wrapped", trace="t")

    def reraise():
        raise original

    with pytest.raises(ModelFault) as info:
        call_guarded(reraise)
    assert info.value is original
