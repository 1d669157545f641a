"""World-model synthesis: prompt assembly, candidate extraction, conversation
refinement, tree-search refinement with Thompson sampling, value-function
synthesis, and the history-likelihood lower bound.

Tree search keeps every candidate in a refinement tree. A node's heuristic h
is its unit-test pass rate. The next node to refine is drawn by Thompson
sampling from Beta(alpha, beta) with alpha = 1 + C*h and
beta = 1 + (1-C)*h, clamped to a floor of 0.01 (the raw formula goes
negative for h > 1/(C-1)); each prior expansion of a node adds 1 to its
beta, so barely-explored nodes are favored. Roots are expandable when
h >= min_heuristic_value_on_init; children only when they improve on their
parent by at least min_heuristic_value_gain.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

from codegames.core import WorldModelHandle
from codegames.errors import (
    IllegalActionError,
    NoCodeBlockError,
    NoEligibleNodeError,
    ScriptExhaustedError,
)
from codegames.evidence import EvaluationTarget, UnitTest, evaluate_accuracy
from codegames.gateway import CompletionRequest, LlmClient

# ---------------------------------------------------------------------------
# Prompt templates


BASE_TEMPLATE = """You are an expert python programmer who is building the game of {game_name}.
Here is a description of the game:
{game_desc}


The goal is to implement a python function with the following signature.
# START FUNCTION SIGNATURE
{function_signature}
# END FUNCTION SIGNATURE

{refinement_block}
Your code should satisfy the following unit tests.
Your code should fix the TODO errors in the comments of the unit tests, if any.
# START UNIT TESTS
{test_code}
# END UNIT TESTS


Do not repeat the unit tests, only return the functions.
Do not leave placeholders.

Do not repeat the function signature.
Do not copy the unit tests.

Only produce code that is compact.
Do write comments explaining what the code does.
Do use helper functions to reduce code duplication.

Start by reasoning about the game and the unit tests.
Also reason about the errors and possible fixes.

Finally, try to write {num_targets} versions of the code.
Make sure each code is in a different code blocks starting with ```python.
"""

REFINEMENT_BLOCK = """
The original implementation is as follow. Please try to refine the original code.
# START CODE BLOCK
{orig_code}
# END CODE BLOCK

"""

SIX_FUNCTION_SIGNATURE = '''Action: str
State: dict[str, Any]
PlayerObservation: dict[str, Any]

def apply_action(state: State, action: Action) -> State:
  """Returns the new state after an action has been taken."""

def get_current_player(state: State) -> int:
  """Returns current player, with -1 for chance and -4 for terminal."""

def get_player_name(player_id: int) -> str:
  """Returns the name of the player, with 'chance' for -1, and 'terminal' for -4."""

def get_rewards(state: State) -> list[float]:
  """Returns the rewards per player from their last action."""

def get_legal_actions(state: State) -> list[Action]:
  """Returns legal actions that can be taken in current state."""

def get_observations(state: State) -> list[PlayerObservation]:
  """Returns the observation for player."""'''

HISTORY_INFERENCE_SIGNATURE = '''
def resample_history(obs_action_history: list[tuple[PlayerObservation, Action | None]], player_id: int) -> list[Action]:
  """Stochastically sample one of many potential history of actions for all players(including 'chance' and 'terminal')

  This is given only a single player's observations and actions, and needs to recreate the player_id's observations"""'''

STATE_INFERENCE_SIGNATURE = '''
def resample_state(obs_action_history: list[tuple[PlayerObservation, Action | None]], player_id: int) -> list[int]:
  """Stochastically sample one of the reachable states for player given the observation and action history that recreates the player's observation."""'''

CLOSED_DECK_SIGNATURE = '''
def resample_history(obs_action_history: list[tuple[PlayerObservation, Action | None]], player_id: int, last_is_terminal: bool) -> list[Action]:
  """Stochastically sample one of many potential histories of actions for all players(including 'chance' and 'terminal')
  given only a single player's observations and actions.

  It needs to recreate the player_id's observations.
  last_is_terminal indicates if the last player observation is from end of game when player_id is -4."""'''

VALUE_FUNCTION_SIGNATURE = '''
def value_function(state: State, player_id: int) -> float:
  """Returns the estimated value of the state for the player."""'''

VALUE_TEMPLATE = """You are an expert python programmer.  You are playing the game {game_name}, and need
to synthesize a value function for monte carlo tree search.

{game_desc}

For reference, the game is implemented as follow

{code}

The function you need to write is:
{value_function}

It should return the reward at terminal states, and otherwise an estimate of the
value for each non-terminal states.
"""

_SIGNATURES = {
    "cwm": SIX_FUNCTION_SIGNATURE,
    "cwm+history-inference": SIX_FUNCTION_SIGNATURE + "\n" + HISTORY_INFERENCE_SIGNATURE,
    "cwm+state-inference": SIX_FUNCTION_SIGNATURE + "\n" + STATE_INFERENCE_SIGNATURE,
    "closed-deck-autoencoder": SIX_FUNCTION_SIGNATURE + "\n" + CLOSED_DECK_SIGNATURE,
    "value-function": VALUE_FUNCTION_SIGNATURE,
}


@dataclass
class SynthesisTask:
    game_name: str
    game_description: str
    target: str  # one of _SIGNATURES keys
    tests: Sequence[UnitTest]
    initial_state: Any
    num_players: int = 2

    def __post_init__(self):
        if self.target not in _SIGNATURES:
            raise ValueError(f"unknown synthesis target {self.target!r}")

    @property
    def function_signature(self) -> str:
        return _SIGNATURES[self.target]


@dataclass
class SearchBudget:
    num_retries: int = 500
    num_tests_on_init: int = 5
    num_tests_on_error: int = 1
    min_heuristic_value_on_init: float = 0.01
    min_heuristic_value_gain: float = 0.01
    heuristic_weight: float = 5.0
    num_targets_per_call: int = 3


@dataclass
class RefinementNode:
    id: int
    source_text: str
    parent_id: Optional[int]
    h: float
    expansion_count: int = 0
    failures: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Rendering unit tests as prompt text


def _py(value) -> str:
    """Python-literal rendering of a canonical value."""
    if value is None or isinstance(value, (bool, int, float, str)):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_py(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{k!r}: {_py(v)}" for k, v in value.items()) + "}"
    return repr(value)


def render_unit_test(
    test: UnitTest,
    index: int,
    trace: Optional[str] = None,
    closed_deck: bool = False,
) -> str:
    lines = []
    if trace is not None:
        lines.append("# TODO: fix this error:")
        lines.extend("# " + line for line in trace.strip().splitlines()[-12:])
    p = test.payload
    if test.kind == "transition":
        lines += [
            f"class TestTransition{index}(unittest.TestCase):",
            f"  def test_transition_{index}(self):",
            f"    state = {_py(p['state'])}",
            "",
            f"    self.assertEqual({_py(p['current_player'])}, get_current_player(state))",
        ]
        if p["current_player"] >= 0:
            lines.append(
                f"    self.assertEqual({_py(str(p['current_player']))}, "
                f"get_player_name({_py(p['current_player'])}))"
            )
        lines += [
            f"    self.assertEqual({_py(p['rewards'])}, get_rewards(state))",
            f"    self.assertEqual({_py(p['observations'])}, get_observations(state))",
            f"    self.assertSetEqual(set({_py(sorted(set(p['legal_actions'])))}), set(get_legal_actions(state)))",
            f"    self.assertEqual({_py(p['next_state'])}, apply_action(state, {_py(p['action'])}))",
        ]
    elif test.kind == "inference-history":
        closed = closed_deck
        call = (
            f"resample_history(obs_action_history, player_id, last_is_terminal)"
            if closed
            else "resample_history(obs_action_history, player_id)"
        )
        lines += [
            "state = INITIAL_STATE",
            f"obs_action_history = {_py(p['obs_action_history'])}",
            f"player_id = {_py(p['player_id'])}",
        ]
        if closed:
            lines.append(f"last_is_terminal = {_py(p['last_is_terminal'])}")
        lines += [
            "obs_and_action_iter = iter(obs_action_history)",
            "current_player_obs, current_player_action = next(obs_and_action_iter)",
            f"for action in {call}:",
            "  if get_current_player(state) == player_id:",
            "    self.assertEqual(current_player_obs, get_observations(state)[player_id])",
            "    self.assertEqual(current_player_action, action)",
            "    current_player_obs, current_player_action = next(obs_and_action_iter)",
            "  state = apply_action(state, action)",
            "try:",
            "  next(obs_and_action_iter)",
            "  raise ValueError('Failed to iterate through all observations.')",
            "except StopIteration:",
            "  pass",
        ]
        if not p.get("last_is_terminal"):
            lines.append("self.assertEqual(player_id, get_current_player(state))")
    elif test.kind == "inference-state":
        lines += [
            f"obs_action_history = {_py(p['obs_action_history'])}",
            f"player_id = {_py(p['player_id'])}",
            "resampled_state = resample_state(obs_action_history, player_id)",
            "self.assertEqual(obs_action_history[-1][0], get_observations(resampled_state)[player_id])",
        ]
    elif test.kind == "random-play":
        lines += [
            "state = INITIAL_STATE",
            f"rg = np.random.RandomState({_py(p['seed'])})",
            "for it in range(1000):  # upper bound on game length",
            "  current_player = get_current_player(state)",
            "  rewards = get_rewards(state)",
            "  assert len(rewards) == 2",
            "  if current_player == -4:  # Game over",
            "    break",
            "  if current_player in [0,1]:  # Real players",
            "    get_observations(state)[current_player]",
            "  else:",
            "    assert current_player == -1",
            "  legal_actions = get_legal_actions(state)",
            "  chosen_action = rg.choice(legal_actions)",
            "  state = apply_action(state, chosen_action)",
            "else:",
            "  raise ValueError(f'Game did not end after 1000 steps.')",
        ]
    else:
        raise ValueError(f"cannot render test kind {test.kind!r}")
    return "\n".join(lines)


def _select_tests(tests, per_kind):
    """First per_kind tests of each kind, preserving order (deterministic)."""
    taken = {}
    out = []
    for test in tests:
        count = taken.get(test.kind, 0)
        if count < per_kind:
            taken[test.kind] = count + 1
            out.append(test)
    return out


def assemble_prompt(
    task: SynthesisTask,
    node: Optional[RefinementNode] = None,
    failed_tests: Sequence = (),
    num_targets: int = 3,
    num_tests: int = 5,
) -> str:
    """Build the full synthesis/refinement prompt.

    failed_tests entries are (UnitTest, trace) pairs; on the initial call
    (node is None) the prompt instead shows a plain sample of tests.
    """
    closed_deck = task.target == "closed-deck-autoencoder"
    if node is None:
        shown = [
            render_unit_test(test, i + 1, closed_deck=closed_deck)
            for i, test in enumerate(_select_tests(task.tests, num_tests))
        ]
        refinement_block = "\n"
    else:
        shown = [
            render_unit_test(test, i + 1, trace=trace, closed_deck=closed_deck)
            for i, (test, trace) in enumerate(failed_tests)
        ]
        refinement_block = REFINEMENT_BLOCK.format(orig_code=node.source_text)
    return BASE_TEMPLATE.format(
        game_name=task.game_name,
        game_desc=task.game_description,
        function_signature=task.function_signature,
        refinement_block=refinement_block,
        test_code="\n\n".join(shown),
        num_targets=num_targets,
    )


def extract_candidates(response_text: str, expected: int = 1) -> list:
    """All outermost fenced code blocks in order; zero blocks is an error."""
    blocks = []
    current = None
    for line in response_text.splitlines():
        stripped = line.strip()
        if current is None:
            if stripped.startswith("```") and stripped != "```":
                current = []
            elif stripped == "```":
                current = []
        else:
            if stripped.startswith("```"):
                blocks.append("\n".join(current))
                current = None
            else:
                current.append(line)
    blocks = [b for b in (block.strip() for block in blocks) if b]
    if not blocks:
        raise NoCodeBlockError("response contained no fenced code block")
    return blocks


# ---------------------------------------------------------------------------
# Candidate loading and evaluation


def load_candidate(source_text: str, initial_state, num_players: int = 2) -> EvaluationTarget:
    """Executes candidate source in a fresh namespace and wraps the six-function
    API (plus optional samplers) as an evaluation target."""
    import numpy as np

    namespace = {"np": np, "numpy": np, "__name__": "candidate"}
    exec(compile(source_text, "<candidate>", "exec"), namespace)

    def need(name):
        fn = namespace.get(name)
        if fn is None:
            raise NameError(f"candidate does not define {name}")
        return fn

    model = WorldModelHandle(
        name="candidate",
        num_players=num_players,
        apply_action=need("apply_action"),
        get_current_player=need("get_current_player"),
        get_rewards=need("get_rewards"),
        get_legal_actions=need("get_legal_actions"),
        get_observations=need("get_observations"),
    )
    start = namespace.get("INITIAL_STATE", initial_state)

    def adapt_history(fn):
        if fn is None:
            return None
        import inspect

        takes_terminal = len(inspect.signature(fn).parameters) >= 3

        def wrapper(history, player_id, rng, last_is_terminal=False):
            # Candidate signature has no rng; seed the global stream for
            # reproducibility instead.
            random.seed(rng.randrange(2**32))
            if takes_terminal:
                return fn(history, player_id, last_is_terminal)
            return fn(history, player_id)

        return wrapper

    def adapt_state(fn):
        if fn is None:
            return None

        def wrapper(history, player_id, rng):
            random.seed(rng.randrange(2**32))
            return fn(history, player_id)

        return wrapper

    return EvaluationTarget(
        model=model,
        initial_state=start,
        resample_history=adapt_history(namespace.get("resample_history")),
        resample_state=adapt_state(namespace.get("resample_state")),
    )


def evaluate_candidate(source_text: str, task: SynthesisTask) -> tuple:
    """Returns (h, failures): unit-test pass rate and failure records. A
    candidate that fails to load scores 0 with a single synthetic failure."""
    import traceback as _tb

    try:
        target = load_candidate(source_text, task.initial_state, task.num_players)
    except Exception:
        return 0.0, [{"id": "<load>", "kind": "load", "trace": _tb.format_exc()}]
    report = evaluate_accuracy(list(task.tests), target)
    return report["overall_accuracy"], report["failures"]


# ---------------------------------------------------------------------------
# Thompson sampling and refinement search


def beta_parameters(h: float, expansion_count: int, C: float, floor: float = 0.01):
    alpha = max(1.0 + C * h, floor)
    beta = max(1.0 + (1.0 - C) * h, floor) + expansion_count
    return alpha, beta


def thompson_select(nodes: Sequence[RefinementNode], C: float, rng: random.Random) -> RefinementNode:
    if not nodes:
        raise NoEligibleNodeError("no eligible refinement nodes")
    best_node, best_sample = None, -math.inf
    for node in nodes:
        alpha, beta = beta_parameters(node.h, node.expansion_count, C)
        sample = rng.betavariate(alpha, beta)
        if sample > best_sample:
            best_node, best_sample = node, sample
    return best_node


def _failures_for_prompt(node: RefinementNode, tests, per_kind: int):
    """Pick up to per_kind failing tests of each kind, with their traces."""
    by_id = {test.id: test for test in tests}
    taken = {}
    out = []
    for failure in node.failures:
        kind = failure["kind"]
        count = taken.get(kind, 0)
        if count < per_kind:
            test = by_id.get(failure["id"])
            if test is not None:
                taken[kind] = count + 1
                out.append((test, failure["trace"]))
    return out


def refine_tree_search(
    task: SynthesisTask,
    llm_client: LlmClient,
    budget: SearchBudget = SearchBudget(),
    seed: int = 0,
    temperature: float = 1.0,
) -> dict:
    rng = random.Random(seed)
    nodes: list = []
    by_id: dict = {}
    accuracy_trace: list = []
    llm_calls = 0
    next_id = 0

    def insert(source, parent_id):
        nonlocal next_id
        h, failures = evaluate_candidate(source, task)
        node = RefinementNode(
            id=next_id, source_text=source, parent_id=parent_id, h=h, failures=failures
        )
        next_id += 1
        nodes.append(node)
        by_id[node.id] = node
        return node

    def best_node():
        return max(nodes, key=lambda n: (n.h, -n.id)) if nodes else None

    def eligible():
        out = []
        for node in nodes:
            if node.h >= 1.0:
                continue
            if node.parent_id is None:
                if node.h >= budget.min_heuristic_value_on_init:
                    out.append(node)
            else:
                parent = by_id[node.parent_id]
                if node.h - parent.h >= budget.min_heuristic_value_gain:
                    out.append(node)
        return out

    def call(prompt):
        nonlocal llm_calls
        llm_calls += 1
        request = CompletionRequest(
            prompt=prompt, temperature=temperature, request_id=llm_calls
        )
        return llm_client.complete(request)

    done = False
    while llm_calls < budget.num_retries and not done:
        candidates = eligible()
        try:
            if not candidates:
                prompt = assemble_prompt(
                    task,
                    num_targets=budget.num_targets_per_call,
                    num_tests=budget.num_tests_on_init,
                )
                sources = extract_candidates(call(prompt), budget.num_targets_per_call)
                for source in sources:
                    if insert(source, parent_id=None).h >= 1.0:
                        done = True
                        break
            else:
                node = thompson_select(candidates, budget.heuristic_weight, rng)
                failed = _failures_for_prompt(node, task.tests, budget.num_tests_on_error)
                prompt = assemble_prompt(
                    task, node=node, failed_tests=failed,
                    num_targets=budget.num_targets_per_call,
                )
                node.expansion_count += 1
                sources = extract_candidates(call(prompt), budget.num_targets_per_call)
                for source in sources:
                    if insert(source, parent_id=node.id).h >= 1.0:
                        done = True
                        break
        except NoCodeBlockError:
            pass  # wasted call: count it and continue
        except ScriptExhaustedError:
            break
        current_best = best_node()
        accuracy_trace.append(current_best.h if current_best else 0.0)

    winner = best_node()
    return {
        "best_model": winner.source_text if winner else None,
        "best_node": winner,
        "tree": nodes,
        "accuracy_trace": accuracy_trace,
        "llm_calls": llm_calls,
    }


def refine_conversation(
    task: SynthesisTask,
    llm_client: LlmClient,
    budget: SearchBudget = SearchBudget(),
    max_context_exchanges: int = 20,
    temperature: float = 1.0,
) -> dict:
    """Serial chat-mode refinement: each turn appends one failing test's stack
    trace and asks for a fix; context is capped at the most recent exchanges,
    older ones summarized by their test ids."""
    llm_calls = 0
    exchanges: list = []  # (test-id-or-None, appended text)
    best_source, best_h = None, -1.0
    accuracy_trace: list = []
    flagged = budget.num_retries <= 0

    base_prompt = assemble_prompt(task, num_targets=1, num_tests=budget.num_tests_on_init)

    while llm_calls < budget.num_retries:
        recent = exchanges[-max_context_exchanges:]
        summarized = exchanges[: -max_context_exchanges] if len(exchanges) > max_context_exchanges else []
        summary = (
            "\n# Earlier fixes addressed tests: "
            + ", ".join(str(t) for t, _ in summarized)
            + "\n"
            if summarized
            else ""
        )
        prompt = base_prompt + summary + "".join(text for _, text in recent)
        llm_calls += 1
        try:
            response = llm_client.complete(
                CompletionRequest(prompt=prompt, temperature=temperature, request_id=llm_calls)
            )
            source = extract_candidates(response, 1)[0]
        except NoCodeBlockError:
            continue
        except ScriptExhaustedError:
            break
        h, failures = evaluate_candidate(source, task)
        accuracy_trace.append(max(best_h, h))
        if h >= best_h:  # ties go to the most recent candidate
            best_source, best_h = source, h
        if h >= 1.0:
            break
        failure = failures[0] if failures else None
        exchanges.append(
            (
                failure["id"] if failure else None,
                "\n\n# The previous attempt was:\n```python\n"
                + source
                + "\n```\n# It failed this test with the following error:\n"
                + ((failure["trace"] or "") if failure else "")
                + "\n# Please fix the error and return the full corrected code.\n",
            )
        )
    return {
        "best_model": best_source,
        "best_accuracy": max(best_h, 0.0),
        "accuracy_trace": accuracy_trace,
        "llm_calls": llm_calls,
        "flagged": flagged or (best_h < 1.0 and llm_calls >= budget.num_retries),
    }


# ---------------------------------------------------------------------------
# Value functions


def make_value_prompt(task: SynthesisTask, model_source: str) -> str:
    return VALUE_TEMPLATE.format(
        game_name=task.game_name,
        game_desc=task.game_description,
        code=model_source,
        value_function=VALUE_FUNCTION_SIGNATURE,
    )


def load_value_function(source_text: str, namespace_extra=None) -> Callable:
    import numpy as np

    namespace = {"np": np, "numpy": np, "__name__": "candidate_value"}
    if namespace_extra:
        namespace.update(namespace_extra)
    exec(compile(source_text, "<value_candidate>", "exec"), namespace)
    fn = namespace.get("value_function")
    if fn is None:
        raise NameError("candidate does not define value_function")
    return fn


def validate_value_function(fn, model: WorldModelHandle, terminal_states) -> bool:
    """Terminal states must score exactly their rewards for every player."""
    try:
        for state in terminal_states:
            rewards = model.get_rewards(state)
            for player in range(model.num_players):
                if float(fn(state, player)) != float(rewards[player]):
                    return False
        return True
    except Exception:
        return False


def synthesize_value_function(
    task: SynthesisTask,
    llm_client: LlmClient,
    model: WorldModelHandle,
    initial_state,
    count: int = 3,
    terminal_states=(),
    matches_per_pair: int = 50,
    seed: int = 0,
    search_config=None,
) -> Optional[str]:
    """One-shot generation of `count` candidates (no refinement), validation
    against terminal-reward equality, then a round-robin tournament among
    value-backed search agents plus a rollout baseline. Returns the winning
    source text, or None when every candidate is invalid."""
    from codegames.arena import AgentSpec, round_robin_tournament
    from codegames.games import GameBundle
    from codegames.planners import SearchConfig

    prompt = make_value_prompt(task, model_source="(source unavailable)")
    valid = []
    for i in range(count):
        try:
            response = llm_client.complete(
                CompletionRequest(prompt=prompt, temperature=1.0, request_id=i)
            )
            source = extract_candidates(response, 1)[0]
            fn = load_value_function(source)
        except Exception:
            continue
        if validate_value_function(fn, model, terminal_states):
            valid.append((source, fn))
    if not valid:
        return None
    config = search_config or SearchConfig(num_simulations=50, num_rollouts=2)
    bundle = GameBundle(name=task.game_name, model=model, initial_state=initial_state)
    agents = [
        AgentSpec(kind="mcts", name="baseline", search_config=config, value_function=None)
    ]
    for i, (source, fn) in enumerate(valid):
        vector_fn = _vectorize_value(fn, model.num_players)
        agents.append(
            AgentSpec(
                kind="mcts",
                name=f"candidate_{i}",
                search_config=config,
                value_function=vector_fn,
            )
        )
    ranking = round_robin_tournament(agents, bundle, matches_per_pair=matches_per_pair, seed=seed)
    for name, _score in ranking:
        if name.startswith("candidate_"):
            return valid[int(name.split("_")[1])][0]
    return None


def _vectorize_value(fn, num_players):
    def vector(state):
        return [float(fn(state, player)) for player in range(num_players)]

    return vector


# ---------------------------------------------------------------------------
# Likelihood lower bound


def likelihood_lower_bound(
    model: WorldModelHandle,
    sampled_history: Sequence[str],
    player_id: int,
    initial_state,
) -> float:
    """log p_M(sampled history) under uniform priors over chance and opponent
    decisions; the player's own (conditioned) actions contribute zero. Always
    <= 0 and decreases with every added multi-outcome chance node."""
    state = initial_state
    total = 0.0
    for action in sampled_history:
        current = model.get_current_player(state)
        legal = model.get_legal_actions(state)
        if action not in legal:
            raise IllegalActionError(f"history action {action!r} not legal")
        if current != player_id:
            if current == -1:
                # Duplicates in a chance list encode its outcome distribution.
                weight = legal.count(action) / len(legal)
            else:
                weight = 1.0 / len(legal)
            total += math.log(weight)
        state = model.apply_action(state, action)
    return total
