"""Trajectory generation and trajectory-derived unit tests.

Trajectories record full games played under a uniform-random policy. From
them we derive:

- transition tests (open deck): per-step assertions over current player,
  player name, rewards, observations, legal-action set, and the apply_action
  successor;
- inference tests: replay a sampled hidden history against one player's
  recorded observations and actions (history mode), or check that a resampled
  state reproduces the latest observation (state mode);
- closed-deck tests: inference tests built from a single player's evidence
  only, plus random-play tests asserting fault-free termination.

`evaluate_accuracy` scores a candidate model against any set of these tests
and is the heuristic source for refinement search.
"""

from __future__ import annotations

import random
import traceback
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

from codegames.core import WorldModelHandle, get_player_name
from codegames.games import GameBundle
from codegames.planners import SearchConfig, mcts_select_action
from codegames.values import canonical_serialize, parse_canonical, structurally_equal

MAX_GAME_STEPS = 1000
RANDOM_PLAY_FAILURE = "Game did not end after 1000 steps."


@dataclass
class TransitionRecord:
    step_index: int
    state: Any
    current_player: int
    rewards: Sequence[float]
    observations: Sequence[Any]
    legal_actions: Sequence[str]
    action_taken: str


@dataclass
class Trajectory:
    game: str
    seed: int
    records: list
    terminal_state: Any
    terminal_rewards: Sequence[float]


@dataclass
class ClosedDeckEvidence:
    player_id: int
    obs_action_history: list  # (observation, action-or-None) pairs
    last_is_terminal: bool


@dataclass
class UnitTest:
    id: str
    kind: str  # transition | inference-history | inference-state | random-play
    payload: dict
    status: str = "not-run"


@dataclass
class EvaluationTarget:
    """A candidate system under test: model functions plus optional samplers."""

    model: WorldModelHandle
    initial_state: Any
    resample_history: Optional[Callable] = None
    resample_state: Optional[Callable] = None
    seed: int = 0


def _play_policy(bundle, policies, rng, max_steps=MAX_GAME_STEPS):
    """Play one full game; policies[i] maps (model, state) -> action."""
    model = bundle.model
    state = bundle.initial_state
    records = []
    for step in range(max_steps):
        player = model.get_current_player(state)
        if player == -4:
            return records, state
        actions = model.get_legal_actions(state)
        if player == -1 or policies is None or policies[player] is None:
            action = actions[rng.randrange(len(actions))]
        else:
            action = policies[player](model, state)
        records.append(
            TransitionRecord(
                step_index=step,
                state=state,
                current_player=player,
                rewards=model.get_rewards(state),
                observations=model.get_observations(state),
                legal_actions=actions,
                action_taken=action,
            )
        )
        state = model.apply_action(state, action)
    raise RuntimeError(f"{bundle.name}: game exceeded {max_steps} steps")


def generate_trajectories(bundle: GameBundle, count: int, seed: int) -> list:
    if count < 1:
        raise ValueError("count must be >= 1")
    trajectories = []
    for i in range(count):
        rng = random.Random((seed, i).__hash__() & 0xFFFFFFFFFFFF)
        records, terminal = _play_policy(bundle, None, rng)
        trajectories.append(
            Trajectory(
                game=bundle.name,
                seed=seed,
                records=records,
                terminal_state=terminal,
                terminal_rewards=bundle.model.get_rewards(terminal),
            )
        )
    return trajectories


# ---------------------------------------------------------------------------
# Test derivation


def derive_transition_tests(traj: Trajectory) -> list:
    tests = []
    records = traj.records
    for i, record in enumerate(records):
        successor = records[i + 1].state if i + 1 < len(records) else traj.terminal_state
        tests.append(
            UnitTest(
                id=f"{traj.game}.t{traj.seed}.transition_{record.step_index}",
                kind="transition",
                payload={
                    "state": record.state,
                    "current_player": record.current_player,
                    "rewards": record.rewards,
                    "observations": record.observations,
                    "legal_actions": record.legal_actions,
                    "action": record.action_taken,
                    "next_state": successor,
                },
            )
        )
    return tests


def player_evidence(traj: Trajectory, player_id: int) -> list:
    """All (observation, action) pairs at the player's decision points."""
    return [
        (r.observations[player_id], r.action_taken)
        for r in traj.records
        if r.current_player == player_id
    ]


def derive_inference_tests(traj: Trajectory, player_id: int, mode: str = "history") -> list:
    if mode not in ("history", "state"):
        raise ValueError(f"unknown inference mode {mode!r}")
    pairs = player_evidence(traj, player_id)
    tests = []
    for k in range(1, len(pairs) + 1):
        tests.append(
            UnitTest(
                id=f"{traj.game}.t{traj.seed}.p{player_id}.{mode}_{k}",
                kind="inference-history" if mode == "history" else "inference-state",
                payload={
                    "player_id": player_id,
                    "obs_action_history": pairs[:k],
                    "last_is_terminal": False,
                },
            )
        )
    return tests


def project_closed_deck(traj: Trajectory, player_id: int, model: WorldModelHandle) -> list:
    """Closed-deck evidence bundles: one per decision point, plus a full
    history ending at the terminal observation (recomputed from the recorded
    terminal state with the trajectory's own engine)."""
    pairs = player_evidence(traj, player_id)
    out = [
        ClosedDeckEvidence(player_id, pairs[:k], False)
        for k in range(1, len(pairs) + 1)
    ]
    terminal_obs = model.get_observations(traj.terminal_state)[player_id]
    out.append(ClosedDeckEvidence(player_id, pairs + [(terminal_obs, None)], True))
    return out


def derive_closed_deck_tests(
    evidence: ClosedDeckEvidence, random_play_seeds: Sequence[int] = ()
) -> list:
    tests = [
        UnitTest(
            id=f"closed.p{evidence.player_id}.h{len(evidence.obs_action_history)}"
            + (".terminal" if evidence.last_is_terminal else ""),
            kind="inference-history",
            payload={
                "player_id": evidence.player_id,
                "obs_action_history": evidence.obs_action_history,
                "last_is_terminal": evidence.last_is_terminal,
            },
        )
    ]
    for seed in random_play_seeds:
        tests.append(
            UnitTest(
                id=f"closed.random_play_{seed}",
                kind="random-play",
                payload={"seed": seed},
            )
        )
    return tests


# ---------------------------------------------------------------------------
# Test execution


def _check(condition, message):
    if not condition:
        raise AssertionError(message)


def _equal(expected, actual, label):
    if not structurally_equal(expected, actual):
        raise AssertionError(
            f"{label}: expected {canonical_serialize(expected)}, "
            f"got {canonical_serialize(actual)}"
        )


def _run_transition(test: UnitTest, target: EvaluationTarget):
    p = test.payload
    model = target.model
    state = p["state"]
    _equal(p["current_player"], model.get_current_player(state), "current_player")
    if p["current_player"] >= 0:
        _equal(str(p["current_player"]), get_player_name(p["current_player"]), "player_name")
    _equal(p["rewards"], model.get_rewards(state), "rewards")
    _equal(p["observations"], model.get_observations(state), "observations")
    expected_legal = set(canonical_serialize(a) for a in p["legal_actions"])
    actual_legal = set(canonical_serialize(a) for a in model.get_legal_actions(state))
    _check(
        expected_legal == actual_legal,
        f"legal_actions: expected {sorted(expected_legal)}, got {sorted(actual_legal)}",
    )
    _equal(p["next_state"], model.apply_action(state, p["action"]), "apply_action")


def _test_rng(test: UnitTest, target: EvaluationTarget) -> random.Random:
    return random.Random((test.id, target.seed).__hash__() & 0xFFFFFFFFFFFF)


def _run_inference_history(test: UnitTest, target: EvaluationTarget):
    _check(target.resample_history is not None, "no resample_history sampler supplied")
    p = test.payload
    player_id = p["player_id"]
    history = p["obs_action_history"]
    last_is_terminal = p["last_is_terminal"]
    rng = _test_rng(test, target)
    actions = target.resample_history(
        history, player_id, rng, last_is_terminal=last_is_terminal
    )
    model = target.model
    state = target.initial_state
    iterator = iter(history)
    current_obs, current_action = next(iterator)
    for action in actions:
        if model.get_current_player(state) == player_id:
            _equal(current_obs, model.get_observations(state)[player_id], "recreated observation")
            if current_action is not None:
                _equal(current_action, action, "recreated action")
            current_obs, current_action = next(iterator)
        state = model.apply_action(state, action)
    try:
        next(iterator)
        raise AssertionError("Failed to iterate through all observations.")
    except StopIteration:
        pass
    if not last_is_terminal:
        _equal(player_id, model.get_current_player(state), "final current_player")


def _run_inference_state(test: UnitTest, target: EvaluationTarget):
    _check(target.resample_state is not None, "no resample_state sampler supplied")
    p = test.payload
    rng = _test_rng(test, target)
    state = target.resample_state(p["obs_action_history"], p["player_id"], rng)
    _equal(
        p["obs_action_history"][-1][0],
        target.model.get_observations(state)[p["player_id"]],
        "resampled observation",
    )


def _run_random_play(test: UnitTest, target: EvaluationTarget):
    model = target.model
    state = target.initial_state
    rng = _test_rng(test, target)
    for _ in range(MAX_GAME_STEPS):
        current_player = model.get_current_player(state)
        rewards = model.get_rewards(state)
        _check(len(rewards) == 2, f"expected 2 rewards, got {len(rewards)}")
        if current_player == -4:
            break
        if current_player in (0, 1):
            model.get_observations(state)[current_player]
        else:
            _check(current_player == -1, f"invalid current player {current_player}")
        legal_actions = model.get_legal_actions(state)
        _check(bool(legal_actions), "no legal actions in non-terminal state")
        state = model.apply_action(state, legal_actions[rng.randrange(len(legal_actions))])
    else:
        raise ValueError(RANDOM_PLAY_FAILURE)


_RUNNERS = {
    "transition": _run_transition,
    "inference-history": _run_inference_history,
    "inference-state": _run_inference_state,
    "random-play": _run_random_play,
}


def run_unit_test(test: UnitTest, target: EvaluationTarget):
    """Returns (passed, trace-or-None) and updates test.status."""
    try:
        _RUNNERS[test.kind](test, target)
    except Exception:
        trace = traceback.format_exc()
        test.status = "fail"
        return False, trace
    test.status = "pass"
    return True, None


def evaluate_accuracy(tests: Sequence[UnitTest], target: EvaluationTarget) -> dict:
    counts = {"transition": [0, 0], "inference": [0, 0], "other": [0, 0]}
    failures = []
    for test in tests:
        bucket = (
            "transition"
            if test.kind == "transition"
            else "inference"
            if test.kind.startswith("inference")
            else "other"
        )
        passed, trace = run_unit_test(test, target)
        counts[bucket][1] += 1
        if passed:
            counts[bucket][0] += 1
        else:
            failures.append({"id": test.id, "kind": test.kind, "trace": trace})

    def rate(bucket):
        passed, total = counts[bucket]
        return passed / total if total else 1.0

    total_passed = sum(c[0] for c in counts.values())
    total = sum(c[1] for c in counts.values())
    return {
        "transition_accuracy": rate("transition"),
        "inference_accuracy": rate("inference"),
        "overall_accuracy": total_passed / total if total else 1.0,
        "failures": failures,
        "empty_test_set": total == 0,
    }


def build_test_set(
    bundle: GameBundle,
    num_games: int = 100,
    num_transitions: int = 10000,
    policy_mix: str = "mixed",
    seed: int = 0,
    search_config: Optional[SearchConfig] = None,
) -> list:
    """Transition tests pooled from games where each seat independently plays
    either a random policy or ground-truth MCTS (fair coin)."""
    rng = random.Random(seed)
    config = search_config or SearchConfig()
    pool = []
    for g in range(num_games):
        policies = [None, None]
        if policy_mix == "mixed":
            for i in range(2):
                if rng.random() < 0.5:
                    move_seed = rng.randrange(2**32)

                    def mcts_policy(model, state, _seed=move_seed):
                        cfg = SearchConfig(
                            num_simulations=config.num_simulations,
                            num_rollouts=config.num_rollouts,
                            exploration_constant=config.exploration_constant,
                            max_rollout_depth=config.max_rollout_depth,
                            seed=_seed,
                        )
                        return mcts_select_action(model, state, cfg)

                    policies[i] = mcts_policy
        records, terminal = _play_policy(bundle, policies, rng)
        traj = Trajectory(bundle.name, seed, records, terminal, bundle.model.get_rewards(terminal))
        pool.extend(derive_transition_tests(traj))
    if not pool:
        return []
    if len(pool) >= num_transitions:
        sampled = rng.sample(pool, num_transitions)
    else:
        sampled = [pool[rng.randrange(len(pool))] for _ in range(num_transitions)]
    return sampled


# ---------------------------------------------------------------------------
# Trajectory files: canonical text, one record per line after a header.


def _record_to_value(record: TransitionRecord) -> dict:
    return {
        "step_index": record.step_index,
        "state": record.state,
        "current_player": record.current_player,
        "rewards": record.rewards,
        "observations": record.observations,
        "legal_actions": record.legal_actions,
        "action_taken": record.action_taken,
    }


def write_trajectory(traj: Trajectory, path, deck_mode: str = "open"):
    header = {
        "game": traj.game,
        "seed": traj.seed,
        "deck_mode": deck_mode,
        "num_players": 2,
    }
    with open(path, "w") as fh:
        fh.write(canonical_serialize(header) + "\n")
        for record in traj.records:
            fh.write(canonical_serialize(_record_to_value(record)) + "\n")
        fh.write(
            canonical_serialize(
                {
                    "terminal_state": traj.terminal_state,
                    "terminal_rewards": traj.terminal_rewards,
                }
            )
            + "\n"
        )


def read_trajectory(path) -> Trajectory:
    with open(path) as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    header = parse_canonical(lines[0])
    tail = parse_canonical(lines[-1])
    records = []
    for line in lines[1:-1]:
        value = parse_canonical(line)
        records.append(
            TransitionRecord(
                step_index=value["step_index"],
                state=value["state"],
                current_player=value["current_player"],
                rewards=value["rewards"],
                observations=value["observations"],
                legal_actions=value["legal_actions"],
                action_taken=value["action_taken"],
            )
        )
    return Trajectory(
        game=header["game"],
        seed=header["seed"],
        records=records,
        terminal_state=tail["terminal_state"],
        terminal_rewards=tail["terminal_rewards"],
    )
