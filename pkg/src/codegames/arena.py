"""Match and tournament runner with forfeit rules and seed rejection.

A referee plays games on a host bundle, drawing chance moves uniformly and
feeding each agent only its own observation-action history (perfect-
information agents additionally receive the exact state). An agent forfeits
when it raises, exceeds its per-move time budget, or returns an action
outside the legal set; the forfeit is charged as a loss. Seed rejection runs
the candidate-vs-candidate schedule (both hosts, all seat pairs, repeated)
and drops candidates scoring more than a fixed fraction of the observed
utility range below the best.
"""

from __future__ import annotations

import random
import time
import traceback
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

from codegames.games import GameBundle
from codegames.planners import (
    BeliefSampler,
    SearchConfig,
    ismcts_select_action,
    mcts_select_action,
)

DEFAULT_MOVE_BUDGET_SECONDS = 30.0
STEP_CAP = 1000


@dataclass
class AgentSpec:
    kind: str  # random | mcts | ismcts | external-policy
    name: str = ""
    world_model: Optional[Any] = None  # WorldModelHandle; None -> host model
    initial_state: Any = None  # planning-model initial state; None -> host's
    belief: Optional[BeliefSampler] = None
    value_function: Optional[Callable] = None
    search_config: SearchConfig = field(default_factory=SearchConfig)
    move_budget_seconds: float = DEFAULT_MOVE_BUDGET_SECONDS
    policy: Optional[Callable] = None  # external-policy: (obs, legal) -> action

    def __post_init__(self):
        if self.kind not in ("random", "mcts", "ismcts", "external-policy"):
            raise ValueError(f"unknown agent kind {self.kind!r}")
        if self.kind == "ismcts" and self.belief is None:
            raise ValueError("ismcts agents require a belief sampler")
        if self.kind == "external-policy" and self.policy is None:
            raise ValueError("external-policy agents require a policy callable")
        if not self.name:
            self.name = self.kind


@dataclass
class MatchResult:
    game: str
    seats: tuple
    payoffs: list
    outcome: str  # win0 | win1 | draw
    forfeit_by: Optional[tuple]  # (player, cause) or None
    steps: list
    seed: int


@dataclass
class SeriesReport:
    game: str
    seats: tuple
    n: int
    wins: list
    losses: list
    draws: int
    mean_payoffs: list
    forfeits: list
    results: list = field(repr=False, default_factory=list)

    def rates(self, seat: int):
        return (self.wins[seat] / self.n, self.losses[seat] / self.n, self.draws / self.n)

    def table(self) -> str:
        lines = [f"game={self.game} n={self.n}"]
        for seat in (0, 1):
            win, loss, draw = self.rates(seat)
            lines.append(
                f"P{seat} {self.seats[seat]}: "
                f"Win {win:.2f} ({self.forfeits[seat]}/{self.n}) "
                f"Loss {loss:.2f} Draw {draw:.2f} "
                f"mean payoff {self.mean_payoffs[seat]:+.3f}"
            )
        return "\n".join(lines)


class _Forfeit(Exception):
    def __init__(self, player, cause, detail=""):
        super().__init__(f"player {player} forfeits: {cause} {detail}")
        self.player = player
        self.cause = cause


def _agent_action(agent: AgentSpec, host: GameBundle, state, history, player_id, rng, move_seed):
    model = agent.world_model or host.model
    if agent.kind == "random":
        actions = host.model.get_legal_actions(state)
        return actions[rng.randrange(len(actions))]
    if agent.kind == "external-policy":
        observation = host.model.get_observations(state)[player_id]
        return agent.policy(observation, host.model.get_legal_actions(state))
    config = SearchConfig(
        num_simulations=agent.search_config.num_simulations,
        num_rollouts=agent.search_config.num_rollouts,
        exploration_constant=agent.search_config.exploration_constant,
        max_rollout_depth=agent.search_config.max_rollout_depth,
        seed=move_seed,
    )
    if agent.kind == "mcts":
        # Perfect information: plan from the exact host state.
        return mcts_select_action(model, state, config, value_fn=agent.value_function)
    observation = host.model.get_observations(state)[player_id]
    return ismcts_select_action(
        model,
        agent.belief,
        history + [(observation, None)],
        player_id,
        config,
        value_fn=agent.value_function,
    )


def _forfeit_payoffs(host: GameBundle, state, forfeiter: int, both_lose: bool):
    kind = host.metadata.get("payoff_kind", "wld")
    if both_lose:
        return [0.0, 0.0] if kind == "general_sum" else [-1.0, -1.0]
    opponent = 1 - forfeiter
    if kind == "general_sum":
        # Forfeiter scores zero; the opponent gets the best outcome the
        # forfeiter could still have conceded in one move (e.g. accepting a
        # standing offer), else zero.
        best = 0.0
        try:
            for action in host.model.get_legal_actions(state):
                nxt = host.model.apply_action(state, action)
                if host.model.get_current_player(nxt) == -4:
                    best = max(best, host.model.get_rewards(nxt)[opponent])
        except Exception:
            best = 0.0
        payoffs = [0.0, 0.0]
        payoffs[opponent] = best
        return payoffs
    payoffs = [0.0, 0.0]
    payoffs[forfeiter] = -1.0
    payoffs[opponent] = 1.0
    return payoffs


def run_match(
    bundle: GameBundle,
    agent0: AgentSpec,
    agent1: AgentSpec,
    seed: int = 0,
    both_lose_on_forfeit: bool = False,
) -> MatchResult:
    agents = (agent0, agent1)
    model = bundle.model
    state = bundle.initial_state
    referee_rng = random.Random((seed, "referee").__hash__() & 0xFFFFFFFFFFFF)
    agent_rngs = [
        random.Random((seed, "agent", i).__hash__() & 0xFFFFFFFFFFFF) for i in range(2)
    ]
    histories = [[], []]
    steps = []
    forfeit = None
    final_state = state
    for move_index in range(STEP_CAP):
        player = model.get_current_player(state)
        if player == -4:
            break
        actions = model.get_legal_actions(state)
        if player == -1:
            action = actions[referee_rng.randrange(len(actions))]
        else:
            agent = agents[player]
            move_seed = (seed, move_index).__hash__() & 0xFFFFFFFFFFFF
            started = time.monotonic()
            try:
                action = _agent_action(
                    agent, bundle, state, histories[player], player,
                    agent_rngs[player], move_seed,
                )
            except Exception:
                forfeit = (player, "exception", traceback.format_exc())
                break
            if time.monotonic() - started > agent.move_budget_seconds:
                forfeit = (player, "timeout", "")
                break
            if action not in actions:
                forfeit = (player, "illegal-action", repr(action))
                break
            histories[player].append((model.get_observations(state)[player], action))
        steps.append(action)
        state = model.apply_action(state, action)
        final_state = state
    if forfeit is not None:
        payoffs = _forfeit_payoffs(bundle, state, forfeit[0], both_lose_on_forfeit)
        outcome = "draw" if both_lose_on_forfeit else f"win{1 - forfeit[0]}"
        return MatchResult(
            game=bundle.name,
            seats=(agent0.name, agent1.name),
            payoffs=payoffs,
            outcome=outcome,
            forfeit_by=(forfeit[0], forfeit[1]),
            steps=steps,
            seed=seed,
        )
    if model.get_current_player(state) != -4:
        # Step cap reached without termination: score a draw.
        payoffs = [0.0, 0.0]
    else:
        payoffs = list(model.get_rewards(final_state))
    if payoffs[0] > payoffs[1]:
        outcome = "win0"
    elif payoffs[1] > payoffs[0]:
        outcome = "win1"
    else:
        outcome = "draw"
    return MatchResult(
        game=bundle.name,
        seats=(agent0.name, agent1.name),
        payoffs=payoffs,
        outcome=outcome,
        forfeit_by=None,
        steps=steps,
        seed=seed,
    )


def run_series(
    bundle: GameBundle,
    agent0: AgentSpec,
    agent1: AgentSpec,
    n: int = 100,
    base_seed: int = 0,
    both_lose_on_forfeit: bool = False,
) -> SeriesReport:
    if n < 1:
        raise ValueError("n must be >= 1")
    results = [
        run_match(bundle, agent0, agent1, seed=base_seed + i,
                  both_lose_on_forfeit=both_lose_on_forfeit)
        for i in range(n)
    ]
    wins = [0, 0]
    forfeits = [0, 0]
    draws = 0
    totals = [0.0, 0.0]
    for result in results:
        if result.outcome == "win0":
            wins[0] += 1
        elif result.outcome == "win1":
            wins[1] += 1
        else:
            draws += 1
        if result.forfeit_by is not None:
            forfeits[result.forfeit_by[0]] += 1
        totals[0] += result.payoffs[0]
        totals[1] += result.payoffs[1]
    return SeriesReport(
        game=bundle.name,
        seats=(agent0.name, agent1.name),
        n=n,
        wins=wins,
        losses=[wins[1], wins[0]],
        draws=draws,
        mean_payoffs=[totals[0] / n, totals[1] / n],
        forfeits=forfeits,
        results=results,
    )


def round_robin_tournament(
    agents: Sequence[AgentSpec],
    bundle: GameBundle,
    matches_per_pair: int = 50,
    seed: int = 0,
) -> list:
    """Every ordered pair plays matches_per_pair matches; ranking is by mean
    payoff, ties by fewer forfeits then registration order."""
    if len(agents) < 2:
        raise ValueError("need at least 2 agents")
    totals = {agent.name: [0.0, 0] for agent in agents}  # payoff sum, matches
    forfeit_counts = {agent.name: 0 for agent in agents}
    pair_index = 0
    for i, a in enumerate(agents):
        for j, b in enumerate(agents):
            if i == j:
                continue
            for m in range(matches_per_pair):
                result = run_match(bundle, a, b, seed=seed + pair_index * 100003 + m)
                totals[a.name][0] += result.payoffs[0]
                totals[a.name][1] += 1
                totals[b.name][0] += result.payoffs[1]
                totals[b.name][1] += 1
                if result.forfeit_by is not None:
                    forfeit_counts[
                        (a.name, b.name)[result.forfeit_by[0]]
                    ] += 1
            pair_index += 1
    order = {agent.name: k for k, agent in enumerate(agents)}
    ranking = sorted(
        totals,
        key=lambda name: (
            -(totals[name][0] / totals[name][1]),
            forfeit_counts[name],
            order[name],
        ),
    )
    return [(name, totals[name][0] / totals[name][1]) for name in ranking]


@dataclass
class RejectionCandidate:
    """One independently synthesized candidate: a hostable bundle plus the
    agent that plays with (and on) it."""

    name: str
    bundle: GameBundle
    agent: AgentSpec


def seed_rejection(
    candidates: Sequence[RejectionCandidate],
    repeats: int = 50,
    threshold: float = 0.10,
    seed: int = 0,
) -> dict:
    """Hosts: P0's model and P1's model; seats: all candidate pairs; each
    configuration repeated. Faults and illegal actions score both players a
    loss. Candidates more than threshold x (observed payoff range) below the
    best mean payoff are rejected; the best is always retained."""
    if len(candidates) < 2:
        raise ValueError("need at least 2 candidates")
    sums = {c.name: [0.0, 0] for c in candidates}
    observed = []
    config_index = 0
    for p0 in candidates:
        for p1 in candidates:
            for host in (p0, p1):
                for repeat in range(repeats):
                    result = run_match(
                        host.bundle,
                        p0.agent,
                        p1.agent,
                        seed=seed + config_index * 1009 + repeat,
                        both_lose_on_forfeit=True,
                    )
                    sums[p0.name][0] += result.payoffs[0]
                    sums[p0.name][1] += 1
                    sums[p1.name][0] += result.payoffs[1]
                    sums[p1.name][1] += 1
                    observed.extend(result.payoffs)
                config_index += 1
    means = {name: total / count for name, (total, count) in sums.items()}
    best_name = max(means, key=lambda name: (means[name], -[c.name for c in candidates].index(name)))
    utility_range = (max(observed) - min(observed)) if observed else 0.0
    cutoff = means[best_name] - threshold * utility_range
    accepted = [
        c.name
        for c in candidates
        if c.name == best_name or means[c.name] >= cutoff
    ]
    return {
        "accepted": accepted,
        "rejected": [c.name for c in candidates if c.name not in accepted],
        "means": means,
        "best": best_name,
        "utility_range": utility_range,
    }
