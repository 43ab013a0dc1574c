import json

import numpy as np
import pytest

from syncround import (
    CommutingStrategy,
    cyclic_coloring_strategy,
    graph_coloring_game,
    load_game,
)


@pytest.fixture
def k2_game():
    """Single-edge 3-coloring game with half the mass on the diagonal."""
    return graph_coloring_game([("v0", "v1")], 3, "1/2")


@pytest.fixture
def k2_strategy(k2_game):
    """Exactly synchronous value-1 strategy for the single-edge game."""
    return cyclic_coloring_strategy(k2_game.questions, 3)


def diagonal_game_doc(questions, answers):
    """Document of a game with uniform diagonal question distribution."""
    nq = len(questions)
    return json.dumps(
        {
            "questions": list(questions),
            "answers": list(answers),
            "nu": [{"x": q, "y": q, "w": f"1/{nq}"} for q in questions],
            "predicate": {"default": 1, "entries": []},
        }
    )


@pytest.fixture
def diagonal_game():
    return load_game(diagonal_game_doc(["q0", "q1"], ["a0", "a1"]))


def random_commuting_strategy(rng, questions, n_answers, dim_a, dim_b):
    from syncround.sampling import random_pvm, random_state

    return CommutingStrategy(
        dim_a,
        dim_b,
        random_state(rng, dim_a, dim_b),
        {q: random_pvm(rng, dim_a, n_answers) for q in questions},
        {q: random_pvm(rng, dim_b, n_answers) for q in questions},
    )


def assert_close(actual, expected, tol, label=""):
    actual = np.asarray(actual)
    expected = np.asarray(expected)
    worst = float(np.abs(actual - expected).max())
    assert worst <= tol, f"{label}: deviation {worst:.3e} exceeds {tol:.1e}"
