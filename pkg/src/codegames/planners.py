"""Monte-Carlo tree search planners.

`mcts_select_action` plays perfect-information games from an exact state;
`ismcts_select_action` plays imperfect-information games by determinizing a
root state from a belief sampler before every simulation and aggregating
statistics at the level of information sets. Both run the same underlying
search engine, so with an exact-state belief the two produce identical visit
tables under identical seeds.

Node statistics are keyed by the acting player's information: their id plus
the canonical serialization of their (observation, action) history since the
search root. Backups carry full reward vectors and every node maximizes its
own actor's component, which reduces to the usual sign-flip convention in
two-player zero-sum games. Chance nodes are sampled in-tree, not expanded.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

from codegames.core import WorldModelHandle
from codegames.errors import BeliefExhaustedError, NoLegalActionsError
from codegames.values import canonical_serialize, structurally_equal

UNVISITED_PRIORITY = float("inf")


@dataclass
class SearchConfig:
    num_simulations: int = 1000
    num_rollouts: int = 10
    exploration_constant: float = math.sqrt(2)
    max_rollout_depth: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.num_simulations < 1:
            raise ValueError("num_simulations must be >= 1")
        if self.num_rollouts < 1:
            raise ValueError("num_rollouts must be >= 1")


@dataclass
class BeliefSampler:
    """Draws a concrete game state consistent with one player's evidence."""

    resample: Callable[[list, int, random.Random], Any]
    source: str = "reference"


def exact_state_belief(state) -> BeliefSampler:
    """Belief for perfect information: the true state, with certainty."""
    return BeliefSampler(resample=lambda history, player_id, rng: state, source="exact")


def history_belief(
    model: WorldModelHandle,
    sample_history: Callable[..., Sequence[str]],
    initial_state,
    source: str = "reference",
) -> BeliefSampler:
    """Belief built from a hidden-history sampler: replays the sampled action
    sequence through the model and validates that the recreated observation
    matches the recorded one."""

    def resample(obs_action_history, player_id, rng):
        actions = sample_history(obs_action_history, player_id, rng)
        state = initial_state
        for action in actions:
            state = model.apply_action(state, action)
        recreated = model.get_observations(state)[player_id]
        if not structurally_equal(recreated, obs_action_history[-1][0]):
            raise BeliefExhaustedError("recreated observation does not match evidence")
        return state

    return BeliefSampler(resample=resample, source=source)


def resample_with_retry(
    belief: BeliefSampler,
    model: WorldModelHandle,
    obs_action_history,
    player_id: int,
    max_retries: int = 10,
    rng: Optional[random.Random] = None,
):
    """Draw a determinized state, retrying failed or inconsistent samples."""
    rng = rng if rng is not None else random.Random()
    last_error = None
    for _ in range(max_retries):
        try:
            return belief.resample(obs_action_history, player_id, rng)
        except Exception as exc:  # failed attempt: inconsistent or faulty sample
            last_error = exc
    raise BeliefExhaustedError(
        f"belief sampler failed {max_retries} times: {last_error}"
    )


def ucb_priority(q_mean: float, n_action: int, n_parent: int, c: float) -> float:
    if n_action == 0:
        return UNVISITED_PRIORITY
    return q_mean + c * math.sqrt(math.log(n_parent) / n_action)


def rollout_value(model, state, player_count, num_rollouts, max_depth, random_stream):
    """Mean terminal reward vector over uniform-random playouts. Playouts
    truncated at max_depth contribute a zero vector."""
    totals = [0.0] * player_count
    for _ in range(num_rollouts):
        s = state
        for _ in range(max_depth):
            if model.get_current_player(s) == -4:
                rewards = model.get_rewards(s)
                for i in range(player_count):
                    totals[i] += rewards[i]
                break
            actions = model.get_legal_actions(s)
            s = model.apply_action(s, actions[random_stream.randrange(len(actions))])
    return [t / num_rollouts for t in totals]


@dataclass
class SearchDiagnostics:
    simulations: int = 0
    rollouts_executed: int = 0
    determinization_failures: int = 0


@dataclass
class SearchResult:
    action: str
    root_key: tuple
    visit_table: dict = field(repr=False)
    diagnostics: SearchDiagnostics = field(default_factory=SearchDiagnostics)

    def root_visits(self) -> dict:
        return {a: stats[0] for a, stats in self.visit_table[self.root_key].items()}

    def diagnostic_table(self) -> str:
        lines = []
        for (player, key), actions in self.visit_table.items():
            for action, (n, w) in sorted(actions.items()):
                q = w[player] / n if n else 0.0
                lines.append(f"p{player} {key} {action} n={n} q={q:.4f}")
        return "\n".join(lines)


def _info_key(player_id, history, observation):
    return (player_id, canonical_serialize(history + [observation]))


def run_search(
    model: WorldModelHandle,
    belief: BeliefSampler,
    obs_action_history,
    player_id: int,
    config: SearchConfig,
    value_fn: Optional[Callable[[Any], Sequence[float]]] = None,
    max_belief_retries: int = 10,
) -> SearchResult:
    """Run a full ISMCTS search and return the max-visit root action."""
    rng = random.Random(config.seed)
    players = model.num_players
    tree: dict = {}  # info key -> {"n": int, "stats": {action: [n, reward vec]}}
    diagnostics = SearchDiagnostics()
    root_key = None

    for _ in range(config.num_simulations):
        try:
            state = resample_with_retry(
                belief, model, obs_action_history, player_id,
                max_retries=max_belief_retries, rng=rng,
            )
        except BeliefExhaustedError:
            diagnostics.determinization_failures += 1
            raise
        diagnostics.simulations += 1
        histories = [[] for _ in range(players)]
        path = []  # (node, action, player)
        leaf_value = None
        while True:
            current = model.get_current_player(state)
            if current == -4:
                leaf_value = model.get_rewards(state)
                break
            actions = model.get_legal_actions(state)
            if not actions:
                raise NoLegalActionsError(f"no legal actions in state {state!r}")
            if current == -1:
                state = model.apply_action(state, actions[rng.randrange(len(actions))])
                continue
            observation = model.get_observations(state)[current]
            key = _info_key(current, histories[current], observation)
            node = tree.get(key)
            if node is None:
                tree[key] = {"n": 0, "stats": {a: [0, [0.0] * players] for a in actions}}
                if root_key is None and current == player_id:
                    root_key = key
                if value_fn is not None:
                    leaf_value = list(value_fn(state))
                else:
                    diagnostics.rollouts_executed += config.num_rollouts
                    leaf_value = rollout_value(
                        model, state, players, config.num_rollouts,
                        config.max_rollout_depth, rng,
                    )
                break
            if root_key is None and current == player_id:
                root_key = key
            best_action, best_priority = None, None
            n_parent = node["n"]
            for action in actions:
                if action not in node["stats"]:
                    # Determinizations may disagree on the exact legal set.
                    node["stats"][action] = [0, [0.0] * players]
                n_action, w = node["stats"][action]
                q = w[current] / n_action if n_action else 0.0
                priority = ucb_priority(q, n_action, n_parent, config.exploration_constant)
                if best_priority is None or priority > best_priority:
                    best_action, best_priority = action, priority
            path.append((node, best_action, current))
            histories[current].append([observation, best_action])
            state = model.apply_action(state, best_action)

        for node, action, _ in path:
            node["n"] += 1
            entry = node["stats"][action]
            entry[0] += 1
            for i in range(players):
                entry[1][i] += leaf_value[i]

    if root_key is None:
        raise NoLegalActionsError("search never reached a decision for the player")
    root_stats = tree[root_key]["stats"]
    # Ties break by legal-action order (stats preserve insertion order).
    best_action, best_visits = None, -1
    for action, (visits, _) in root_stats.items():
        if visits > best_visits:
            best_action, best_visits = action, visits
    visit_table = {
        key: {a: (n, list(w)) for a, (n, w) in node["stats"].items()}
        for key, node in tree.items()
    }
    return SearchResult(
        action=best_action,
        root_key=root_key,
        visit_table=visit_table,
        diagnostics=diagnostics,
    )


def mcts_select_action(
    model: WorldModelHandle,
    state,
    config: SearchConfig,
    value_fn=None,
) -> str:
    player = model.get_current_player(state)
    if player < 0:
        raise ValueError("mcts requires a player decision state")
    observation = model.get_observations(state)[player]
    result = run_search(
        model,
        exact_state_belief(state),
        [(observation, None)],
        player,
        config,
        value_fn=value_fn,
    )
    return result.action


def ismcts_select_action(
    model: WorldModelHandle,
    belief: BeliefSampler,
    obs_action_history,
    player_id: int,
    config: SearchConfig,
    value_fn=None,
) -> str:
    result = run_search(
        model, belief, obs_action_history, player_id, config, value_fn=value_fn
    )
    return result.action
