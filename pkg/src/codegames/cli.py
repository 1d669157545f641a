"""Command-line entry points: data generation, synthesis, accuracy
evaluation, arena runs, and an interactive play mode.

Run directories use a fixed layout so stages compose by path convention:
trajectories/, prompts/, candidates/, reports/.
"""

from __future__ import annotations

import pathlib
import random
import sys

import click

from codegames.arena import AgentSpec, run_series
from codegames.evidence import (
    EvaluationTarget,
    derive_closed_deck_tests,
    derive_inference_tests,
    derive_transition_tests,
    evaluate_accuracy,
    generate_trajectories,
    project_closed_deck,
    read_trajectory,
    write_trajectory,
)
from codegames.games import GAME_NAMES, describe_game, make_game, reference_inference
from codegames.gateway import HttpClient, ReplayCache, ReplayClient
from codegames.planners import SearchConfig, history_belief
from codegames.synthesis import (
    SearchBudget,
    SynthesisTask,
    load_candidate,
    refine_conversation,
    refine_tree_search,
)


def _run_dirs(out):
    root = pathlib.Path(out)
    dirs = {name: root / name for name in ("trajectories", "prompts", "candidates", "reports")}
    for path in dirs.values():
        path.mkdir(parents=True, exist_ok=True)
    return root, dirs


@click.group()
def main():
    """Game world-model synthesis and planning toolkit."""


@main.command("gen-data")
@click.option("--game", required=True, type=click.Choice(GAME_NAMES))
@click.option("--n", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default="run", show_default=True)
@click.option("--deck-mode", default="open", type=click.Choice(["open", "closed"]), show_default=True)
def cmd_gen_data(game, n, seed, out, deck_mode):
    """Record full games under a uniform-random policy."""
    bundle = make_game(game)
    _, dirs = _run_dirs(out)
    trajectories = generate_trajectories(bundle, n, seed)
    for i, traj in enumerate(trajectories):
        path = dirs["trajectories"] / f"{game}_{seed}_{i}.traj"
        write_trajectory(traj, path, deck_mode=deck_mode)
        click.echo(f"wrote {path}")


def _build_tests(bundle, trajectories, inference, deck_mode):
    tests = []
    if deck_mode == "closed":
        for traj in trajectories:
            for player in (0, 1):
                for k, evidence in enumerate(project_closed_deck(traj, player, bundle.model)):
                    seeds = [traj.seed * 100 + k] if evidence.last_is_terminal else []
                    tests.extend(derive_closed_deck_tests(evidence, random_play_seeds=seeds))
        return tests
    for traj in trajectories:
        tests.extend(derive_transition_tests(traj))
        if inference in ("history", "state"):
            for player in (0, 1):
                tests.extend(derive_inference_tests(traj, player, inference))
    return tests


def _load_trajectories(bundle, traj_dir, n, seed):
    if traj_dir:
        paths = sorted(pathlib.Path(traj_dir).glob("*.traj"))
        loaded = [read_trajectory(p) for p in paths if read_trajectory(p).game == bundle.name]
        if loaded:
            return loaded
    return generate_trajectories(bundle, n, seed)


@main.command("synthesize")
@click.option("--game", required=True, type=click.Choice(GAME_NAMES))
@click.option("--mode", default="tree", type=click.Choice(["tree", "conversation"]), show_default=True)
@click.option("--inference", default="none", type=click.Choice(["none", "history", "state"]), show_default=True)
@click.option("--deck-mode", default="open", type=click.Choice(["open", "closed"]), show_default=True)
@click.option("--traj-dir", default=None)
@click.option("--n", default=5, show_default=True)
@click.option("--budget", default=500, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--replay", default=None, help="Serve LLM responses from this cache dir only.")
@click.option("--out", default="run", show_default=True)
def cmd_synthesize(game, mode, inference, deck_mode, traj_dir, n, budget, seed, replay, out):
    """Search for a world model that passes the trajectory-derived tests."""
    bundle = make_game(game)
    root, dirs = _run_dirs(out)
    trajectories = _load_trajectories(bundle, traj_dir, n, seed)
    tests = _build_tests(bundle, trajectories, inference, deck_mode)
    if deck_mode == "closed":
        target = "closed-deck-autoencoder"
    elif inference == "history":
        target = "cwm+history-inference"
    elif inference == "state":
        target = "cwm+state-inference"
    else:
        target = "cwm"
    task = SynthesisTask(
        game_name=game,
        game_description=describe_game(game),
        target=target,
        tests=tests,
        initial_state=bundle.initial_state,
    )
    if replay:
        client = ReplayClient(ReplayCache(replay))
    else:
        client = HttpClient(cache=ReplayCache(root / "cache"))
    search_budget = SearchBudget(num_retries=budget)
    runner = refine_tree_search if mode == "tree" else refine_conversation
    result = runner(task, client, search_budget)
    best = result.get("best_model")
    if best is not None:
        (dirs["candidates"] / "best.py").write_text(best)
    trace = result.get("accuracy_trace", [])
    (dirs["reports"] / "accuracy_trace.txt").write_text(
        "\n".join(f"{i + 1}\t{h:.4f}" for i, h in enumerate(trace)) + "\n"
    )
    click.echo(
        f"llm_calls={result.get('llm_calls')} "
        f"best_accuracy={max(trace) if trace else 0.0:.4f} "
        f"candidate={'candidates/best.py' if best else 'none'}"
    )
    if budget <= 0:
        click.echo("warning: zero budget; no synthesis performed", err=True)


@main.command("eval")
@click.option("--game", required=True, type=click.Choice(GAME_NAMES))
@click.option("--candidate", default=None, help="Candidate source file; ground truth if omitted.")
@click.option("--inference", default="none", type=click.Choice(["none", "history", "state"]), show_default=True)
@click.option("--deck-mode", default="open", type=click.Choice(["open", "closed"]), show_default=True)
@click.option("--traj-dir", default=None)
@click.option("--n", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
def cmd_eval(game, candidate, inference, deck_mode, traj_dir, n, seed):
    """Score a candidate (or the ground truth) on trajectory-derived tests."""
    bundle = make_game(game)
    trajectories = _load_trajectories(bundle, traj_dir, n, seed)
    tests = _build_tests(bundle, trajectories, inference, deck_mode)
    if candidate:
        path = pathlib.Path(candidate)
        if not path.exists():
            raise click.ClickException(f"candidate file not found: {candidate}")
        target = load_candidate(path.read_text(), bundle.initial_state)
    else:
        target = EvaluationTarget(model=bundle.model, initial_state=bundle.initial_state)
        if inference == "history" or deck_mode == "closed":
            target.resample_history = reference_inference(game).resample_history
    report = evaluate_accuracy(tests, target)
    click.echo(f"transition_accuracy={report['transition_accuracy']:.4f}")
    click.echo(f"inference_accuracy={report['inference_accuracy']:.4f}")
    click.echo(f"overall_accuracy={report['overall_accuracy']:.4f}")
    for failure in report["failures"][:5]:
        click.echo(f"FAILED {failure['id']}: {failure['trace'].splitlines()[-1]}")
    if report["failures"]:
        sys.exit(1)


def _make_agent(token, bundle, sims, candidate_path=None):
    if token == "random":
        return AgentSpec(kind="random", name="random")
    config = SearchConfig(num_simulations=sims)
    if token == "gt-mcts":
        return AgentSpec(kind="mcts", name="gt-mcts", search_config=config)
    if token == "gt-ismcts":
        inference = reference_inference(bundle.name)
        belief = history_belief(bundle.model, inference.resample_history, bundle.initial_state)
        return AgentSpec(kind="ismcts", name="gt-ismcts", belief=belief, search_config=config)
    if token in ("cwm-mcts", "cwm-ismcts"):
        if not candidate_path:
            raise click.ClickException(f"{token} requires --candidate")
        source = pathlib.Path(candidate_path).read_text()
        target = load_candidate(source, bundle.initial_state)
        if token == "cwm-mcts":
            return AgentSpec(
                kind="mcts", name="cwm-mcts", world_model=target.model,
                initial_state=target.initial_state, search_config=config,
            )
        if target.resample_history is None:
            raise click.ClickException("candidate defines no resample_history")
        belief = history_belief(target.model, target.resample_history, target.initial_state)
        return AgentSpec(
            kind="ismcts", name="cwm-ismcts", world_model=target.model,
            initial_state=target.initial_state, belief=belief, search_config=config,
        )
    raise click.ClickException(f"unknown agent {token!r}")


@main.command("arena")
@click.option("--game", required=True, type=click.Choice(GAME_NAMES))
@click.option("--p0", default="random", show_default=True)
@click.option("--p1", default="random", show_default=True)
@click.option("--n", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--sims", default=1000, show_default=True)
@click.option("--candidate", default=None, help="Candidate source for cwm-* agents.")
def cmd_arena(game, p0, p1, n, seed, sims, candidate):
    """Play a series of matches and print the W/L/D payoff report."""
    bundle = make_game(game)
    agent0 = _make_agent(p0, bundle, sims, candidate)
    agent1 = _make_agent(p1, bundle, sims, candidate)
    report = run_series(bundle, agent0, agent1, n=n, base_seed=seed)
    click.echo(report.table())


@main.command("play")
@click.option("--game", required=True, type=click.Choice(GAME_NAMES))
@click.option("--agent", default="gt-mcts", show_default=True)
@click.option("--seat", default=0, show_default=True, help="Your seat (0 or 1).")
@click.option("--sims", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
def cmd_play(game, agent, seat, sims, seed):
    """Play a game against an agent in the terminal."""
    bundle = make_game(game)
    model = bundle.model
    opponent = _make_agent(agent, bundle, sims)
    from codegames.arena import _agent_action  # referee internals

    rng = random.Random(seed)
    state = bundle.initial_state
    histories = [[], []]
    move_index = 0
    while model.get_current_player(state) != -4:
        player = model.get_current_player(state)
        actions = model.get_legal_actions(state)
        if player == -1:
            state = model.apply_action(state, actions[rng.randrange(len(actions))])
            continue
        if player == seat:
            click.echo(f"your observation: {model.get_observations(state)[seat]}")
            action = None
            while action is None:
                entered = click.prompt("your move").strip()
                if entered in actions:
                    action = entered
                else:
                    click.echo(f"illegal; legal moves: {actions}")
        else:
            action = _agent_action(
                opponent, bundle, state, histories[player], player, rng,
                (seed, move_index).__hash__() & 0xFFFFFFFFFFFF,
            )
            click.echo(f"agent plays {action}")
        histories[player].append((model.get_observations(state)[player], action))
        state = model.apply_action(state, action)
        move_index += 1
    click.echo(f"game over; rewards: {model.get_rewards(state)}")


if __name__ == "__main__":
    main()
