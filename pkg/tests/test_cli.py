import json

import pytest

from syncround import (
    dump_commuting_strategy,
    load_commuting_strategy,
    load_game,
    load_tracial_strategy,
    save_game,
    tracial_correlation,
    game_value,
    graph_coloring_game,
    cyclic_coloring_strategy,
    perturb_b_side,
)
from syncround.cli import main

from conftest import diagonal_game_doc


@pytest.fixture
def k2_game_file(tmp_path):
    game = graph_coloring_game([("v0", "v1")], 3, "1/2")
    path = tmp_path / "k2.json"
    path.write_text(save_game(game), encoding="utf-8")
    return str(path)


@pytest.fixture
def k2_strategy_file(tmp_path):
    s = cyclic_coloring_strategy(("v0", "v1"), 3)
    path = tmp_path / "strategy.json"
    path.write_text(dump_commuting_strategy(s), encoding="utf-8")
    return str(path)


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    report = json.loads(captured.out) if captured.out.strip() else None
    return code, report, captured.err


class TestInspect:
    def test_k2_alpha(self, capsys, k2_game_file):
        code, report, err = run_cli(capsys, ["inspect", "--game", k2_game_file])
        assert code == 0
        assert report["alpha"] == 0.5
        assert report["n_questions"] == 2 and report["n_answers"] == 3
        assert "alpha" in err

    def test_diagonal_game_alpha_one(self, capsys, tmp_path):
        path = tmp_path / "diag.json"
        path.write_text(diagonal_game_doc(["q0", "q1"], ["a", "b"]), encoding="utf-8")
        code, report, _ = run_cli(capsys, ["inspect", "--game", str(path)])
        assert code == 0
        assert report["alpha"] == 1.0

    def test_malformed_file_exit_two(self, capsys, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{", encoding="utf-8")
        code, report, err = run_cli(capsys, ["inspect", "--game", str(path)])
        assert code == 2
        assert "error" in err

    def test_missing_file_exit_two(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, ["inspect", "--game", str(tmp_path / "missing.json")]
        )
        assert code == 2


class TestRound:
    def test_exact_strategy_preserves_value(
        self, capsys, tmp_path, k2_game_file, k2_strategy_file
    ):
        out = tmp_path / "tracial.json"
        code, report, _ = run_cli(
            capsys,
            [
                "round",
                "--game",
                k2_game_file,
                "--strategy",
                k2_strategy_file,
                "--out",
                str(out),
            ],
        )
        assert code == 0
        cert = report["certificate"]
        assert cert["delta"] <= 1e-10
        assert abs(cert["value_in"] - cert["value_out"]) <= 1e-8
        game = load_game(open(k2_game_file).read())
        tracial = load_tracial_strategy(out.read_text())
        value = game_value(game, tracial_correlation(tracial, game.questions))
        assert abs(value - cert["value_out"]) <= 1e-9

    def test_perturbed_strategy_exit_zero(
        self, capsys, tmp_path, k2_game_file, k2_strategy_file
    ):
        s = perturb_b_side(
            load_commuting_strategy(open(k2_strategy_file).read()), 0.05, 3
        )
        spath = tmp_path / "perturbed.json"
        spath.write_text(dump_commuting_strategy(s), encoding="utf-8")
        out = tmp_path / "tracial.json"
        code, report, _ = run_cli(
            capsys,
            ["round", "--game", k2_game_file, "--strategy", str(spath), "--out", str(out)],
        )
        assert code == 0
        assert report["certificate"]["delta"] > 0
        assert report["summary"]["pass"] is True

    def test_alpha_zero_game_rejected(self, capsys, tmp_path, k2_strategy_file):
        doc = {
            "questions": ["v0", "v1"],
            "answers": ["0", "1", "2"],
            "nu": [{"x": "v0", "y": "v1", "w": "1/2"}],
            "predicate": {"default": 1, "entries": []},
        }
        gpath = tmp_path / "offdiag.json"
        gpath.write_text(json.dumps(doc), encoding="utf-8")
        code, _, err = run_cli(
            capsys,
            [
                "round",
                "--game",
                str(gpath),
                "--strategy",
                k2_strategy_file,
                "--out",
                str(tmp_path / "out.json"),
            ],
        )
        assert code == 2
        assert "alpha" in err


class TestVerify:
    @pytest.mark.parametrize(
        "suite", ["connes", "measure", "commutator", "duality", "rounding"]
    )
    def test_suites_pass(self, capsys, suite):
        code, report, _ = run_cli(
            capsys,
            ["verify", "--suite", suite, "--n", "6", "--dims", "5", "--seed", "11"],
        )
        assert code == 0
        assert report["summary"]["pass"] is True
        assert len(report["instances"]) == 6

    def test_zero_instances_usage_error(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["verify", "--suite", "connes", "--n", "0", "--seed", "1"])
        assert excinfo.value.code == 2

    def test_seed_required(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["verify", "--suite", "connes", "--n", "3"])
        assert excinfo.value.code == 2

    def test_reports_byte_identical_modulo_timings(self, capsys):
        argv = ["verify", "--suite", "connes", "--n", "5", "--dims", "4", "--seed", "7"]
        _, first, _ = run_cli(capsys, argv)
        _, second, _ = run_cli(capsys, argv)
        first.pop("timings")
        second.pop("timings")
        assert json.dumps(first) == json.dumps(second)

    def test_thread_cap_respected(self, capsys, monkeypatch):
        argv = ["verify", "--suite", "measure", "--n", "4", "--dims", "4", "--seed", "3"]
        _, serial, _ = run_cli(capsys, argv)
        monkeypatch.setenv("SYNCROUND_THREADS", "2")
        _, pooled, _ = run_cli(capsys, argv)
        serial.pop("timings")
        pooled.pop("timings")
        assert json.dumps(serial) == json.dumps(pooled)

    def test_invalid_thread_cap_exit_two(self, capsys, monkeypatch):
        monkeypatch.setenv("SYNCROUND_THREADS", "lots")
        code, _, err = run_cli(
            capsys, ["verify", "--suite", "connes", "--n", "2", "--seed", "1"]
        )
        assert code == 2
        assert "SYNCROUND_THREADS" in err


class TestOptimize:
    def test_diagonal_game_reaches_value_one(self, capsys, tmp_path):
        gpath = tmp_path / "diag.json"
        gpath.write_text(diagonal_game_doc(["q0", "q1"], ["a", "b"]), encoding="utf-8")
        out = tmp_path / "strategy.json"
        code, report, _ = run_cli(
            capsys,
            [
                "optimize",
                "--game",
                str(gpath),
                "--dims",
                "2",
                "--iters",
                "3",
                "--seed",
                "0",
                "--out",
                str(out),
            ],
        )
        assert code == 0
        assert report["final_value"] >= 1.0 - 1e-9
        load_commuting_strategy(out.read_text())

    def test_k2_coloring_high_value(self, capsys, tmp_path, k2_game_file):
        out = tmp_path / "strategy.json"
        code, report, _ = run_cli(
            capsys,
            [
                "optimize",
                "--game",
                k2_game_file,
                "--dims",
                "3",
                "--iters",
                "30",
                "--seed",
                "1",
                "--out",
                str(out),
            ],
        )
        assert code == 0
        assert report["final_value"] >= 0.99
        traj = report["trajectory"]
        assert all(b >= a - 1e-10 for a, b in zip(traj, traj[1:]))

    def test_zero_iterations_writes_valid_strategy(self, capsys, tmp_path, k2_game_file):
        out = tmp_path / "strategy.json"
        code, report, _ = run_cli(
            capsys,
            [
                "optimize",
                "--game",
                k2_game_file,
                "--dims",
                "3",
                "--iters",
                "0",
                "--seed",
                "9",
                "--out",
                str(out),
            ],
        )
        assert code == 0
        load_commuting_strategy(out.read_text())
