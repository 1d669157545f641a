"""Reference hidden-history samplers: replay validation against recorded
evidence for every imperfect-information game, in open and closed deck modes."""

import pytest

from codegames.evidence import (
    EvaluationTarget,
    derive_closed_deck_tests,
    derive_inference_tests,
    evaluate_accuracy,
    generate_trajectories,
    project_closed_deck,
)
from codegames.games import make_game, reference_inference

IMPERFECT = ("leduc_poker", "quadranto", "bargaining", "hand_of_war")


def _target(bundle, game_name):
    return EvaluationTarget(
        model=bundle.model,
        initial_state=bundle.initial_state,
        resample_history=reference_inference(game_name).resample_history,
    )


@pytest.mark.parametrize("name", IMPERFECT)
def test_open_deck_inference_all_prefixes(name):
    bundle = make_game(name)
    tests = []
    for traj in generate_trajectories(bundle, 10, seed=21):
        for player in (0, 1):
            tests.extend(derive_inference_tests(traj, player, "history"))
    assert tests
    report = evaluate_accuracy(tests, _target(bundle, name))
    assert report["inference_accuracy"] == 1.0, report["failures"][:2]


@pytest.mark.parametrize("name", IMPERFECT)
def test_closed_deck_inference_including_terminal(name):
    bundle = make_game(name)
    tests = []
    for traj in generate_trajectories(bundle, 10, seed=22):
        for player in (0, 1):
            for evidence in project_closed_deck(traj, player, bundle.model):
                tests.extend(derive_closed_deck_tests(evidence))
    terminal = [t for t in tests if t.payload["last_is_terminal"]]
    assert terminal, "closed-deck projection must include terminal evidence"
    report = evaluate_accuracy(tests, _target(bundle, name))
    assert report["inference_accuracy"] == 1.0, report["failures"][:2]


def test_quadranto_sampler_is_exact_over_many_trajectories():
    """The dynamic-programming sampler never needs retries: every draw is
    consistent, even over a large batch of random games."""
    bundle = make_game(name := "quadranto")
    tests = []
    for traj in generate_trajectories(bundle, 100, seed=23):
        for player in (0, 1):
            tests.extend(derive_inference_tests(traj, player, "history"))
            for evidence in project_closed_deck(traj, player, bundle.model):
                if evidence.last_is_terminal:
                    tests.extend(derive_closed_deck_tests(evidence))
    report = evaluate_accuracy(tests, _target(bundle, name))
    assert report["inference_accuracy"] == 1.0, report["failures"][:2]


def test_sampler_draws_vary_with_the_random_stream():
    """Hidden-card inference is stochastic: different streams must produce
    different opponent cards somewhere over repeated draws."""
    import random

    bundle = make_game("leduc_poker")
    m = bundle.model
    state = m.apply_action(bundle.initial_state, "K")
    state = m.apply_action(state, "J")
    evidence = [(m.get_observations(state)[0], None)]
    sampler = reference_inference("leduc_poker").resample_history
    seen = set()
    for seed in range(50):
        actions = sampler(evidence, 0, random.Random(seed))
        assert actions[0] == "K"
        seen.add(actions[1])
    assert seen == {"J", "Q", "K"}  # opponent card drawn from the full remainder
