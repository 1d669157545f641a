"""Command-line interface: every command exercised through the click runner."""

from click.testing import CliRunner

from codegames.cli import main
from tests.ttt_source import TTT_SOURCE, TTT_SOURCE_BAD_TURNS


def _run(args, **kwargs):
    return CliRunner().invoke(main, args, **kwargs)


def test_gen_data_writes_trajectory_files(tmp_path):
    out = tmp_path / "run"
    result = _run(["gen-data", "--game", "tic_tac_toe", "--n", "3", "--seed", "7",
                   "--out", str(out)])
    assert result.exit_code == 0, result.output
    files = sorted((out / "trajectories").glob("*.traj"))
    assert len(files) == 3
    # Re-running with the same flags reproduces the files byte for byte.
    contents = [f.read_bytes() for f in files]
    _run(["gen-data", "--game", "tic_tac_toe", "--n", "3", "--seed", "7",
          "--out", str(out)])
    assert [f.read_bytes() for f in files] == contents


def test_gen_data_rejects_unknown_game(tmp_path):
    result = _run(["gen-data", "--game", "chess", "--out", str(tmp_path)])
    assert result.exit_code != 0


def test_eval_ground_truth_is_perfect():
    result = _run(["eval", "--game", "leduc_poker", "--inference", "history", "--n", "2"])
    assert result.exit_code == 0, result.output
    assert "transition_accuracy=1.0000" in result.output
    assert "inference_accuracy=1.0000" in result.output
    assert "overall_accuracy=1.0000" in result.output


def test_eval_candidate_source_file(tmp_path):
    good = tmp_path / "good.py"
    good.write_text(TTT_SOURCE)
    result = _run(["eval", "--game", "tic_tac_toe", "--candidate", str(good), "--n", "2"])
    assert result.exit_code == 0, result.output
    assert "overall_accuracy=1.0000" in result.output

    bad = tmp_path / "bad.py"
    bad.write_text(TTT_SOURCE_BAD_TURNS)
    result = _run(["eval", "--game", "tic_tac_toe", "--candidate", str(bad), "--n", "2"])
    assert result.exit_code == 1
    assert "FAILED" in result.output


def test_eval_missing_candidate_file():
    result = _run(["eval", "--game", "tic_tac_toe", "--candidate", "/nonexistent.py"])
    assert result.exit_code != 0
    assert "not found" in result.output


def test_eval_reads_trajectories_from_directory(tmp_path):
    out = tmp_path / "run"
    assert _run(["gen-data", "--game", "quadranto", "--n", "2", "--seed", "3",
                 "--out", str(out)]).exit_code == 0
    result = _run(["eval", "--game", "quadranto", "--inference", "history",
                   "--traj-dir", str(out / "trajectories")])
    assert result.exit_code == 0, result.output
    assert "overall_accuracy=1.0000" in result.output


def test_synthesize_zero_budget_is_flagged(tmp_path):
    cache = tmp_path / "cache"
    cache.mkdir()
    out = tmp_path / "run"
    result = _run([
        "synthesize", "--game", "tic_tac_toe", "--n", "1", "--budget", "0",
        "--replay", str(cache), "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    assert "llm_calls=0" in result.output
    assert "warning: zero budget" in result.output
    assert (out / "reports" / "accuracy_trace.txt").exists()


def test_arena_prints_series_table():
    result = _run(["arena", "--game", "tic_tac_toe", "--p0", "random",
                   "--p1", "random", "--n", "20"])
    assert result.exit_code == 0, result.output
    assert "game=tic_tac_toe n=20" in result.output
    assert "P0 random:" in result.output and "P1 random:" in result.output
    assert "(0/20)" in result.output  # no forfeits


def test_arena_cwm_agent_requires_candidate():
    result = _run(["arena", "--game", "tic_tac_toe", "--p0", "cwm-mcts", "--n", "1"])
    assert result.exit_code != 0
    assert "--candidate" in result.output


def test_arena_plays_a_candidate_model(tmp_path):
    candidate = tmp_path / "ttt.py"
    candidate.write_text(TTT_SOURCE)
    result = _run([
        "arena", "--game", "tic_tac_toe", "--p0", "cwm-mcts", "--p1", "random",
        "--n", "3", "--sims", "100", "--candidate", str(candidate),
    ])
    assert result.exit_code == 0, result.output
    assert "P0 cwm-mcts:" in result.output


def test_arena_rejects_unknown_agent_token():
    result = _run(["arena", "--game", "tic_tac_toe", "--p0", "wizard", "--n", "1"])
    assert result.exit_code != 0


def test_play_reprompts_on_illegal_input_and_finishes():
    moves = [f"x({r},{c})" for r in range(3) for c in range(3)]
    feed = "\n".join(["bogus"] + moves * 6) + "\n"
    result = _run(
        ["play", "--game", "tic_tac_toe", "--agent", "random", "--seat", "0"],
        input=feed,
    )
    assert result.exit_code == 0, result.output
    assert "illegal; legal moves:" in result.output
    assert "game over; rewards:" in result.output
