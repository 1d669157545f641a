"""Structured error types shared across the framework."""


class GameError(Exception):
    """Base class for all framework errors."""


class UnsupportedValueError(GameError):
    """A value outside the supported tree model (maps/sequences/scalars)."""


class UnknownGameError(GameError):
    """Requested game name is not in the suite."""


class NotApplicableError(GameError):
    """Requested capability does not apply (e.g. inference for perfect info)."""


class IllegalActionError(GameError):
    """An action outside the legal set was applied."""


class InvalidPlayerError(GameError):
    """A player id outside {-4, -1} ∪ [0, n)."""


class ModelFault(GameError):
    """The backing world-model code raised; carries the fault trace."""

    def __init__(self, message: str, trace: str = ""):
        super().__init__(message)
        self.trace = trace or message


class BeliefExhaustedError(GameError):
    """All resampling retries failed to produce a consistent state."""


class NoLegalActionsError(GameError):
    """Search was asked to act in a state with no legal actions."""


class NoCodeBlockError(GameError):
    """An LLM response contained no extractable code block."""


class NoEligibleNodeError(GameError):
    """Thompson selection was called with no eligible nodes."""


class ScriptExhaustedError(GameError):
    """A scripted mock client ran out of responses."""


class CacheMissError(GameError):
    """Replay-mode completion requested a prompt absent from the cache."""


class LlmUnavailableError(GameError):
    """The completion endpoint could not be reached after retries."""


class TemplateMissingError(GameError):
    """No prompt template registered for the requested target."""
