"""Synchronous games: data model, validation, serialization, generators.

A synchronous game is a tuple (X, nu, A, D) of finite question and
answer sets, a symmetric probability distribution nu on X x X and a
symmetric binary predicate D with D(x, x, a, b) = 1 exactly when a = b.
The game is alpha-synchronous for the largest alpha such that
nu(x, x) >= alpha * mu(x) for every question x with positive marginal
mu(x) = sum_y nu(x, y).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = [
    "GameFormatError",
    "SynchronousGame",
    "CorrelationTable",
    "load_game",
    "save_game",
    "alpha_of",
    "game_value",
    "table_l1_distance",
    "graph_coloring_game",
]

NU_SUM_TOL = 1e-12          # validated total mass after normalization
NU_RENORM_TOL = 1e-9        # acceptable deviation before renormalization
TABLE_NEG_TOL = 1e-10       # probability tables may carry this much negative roundoff
TABLE_SUM_TOL = 1e-8
VALUE_SLACK = 1e-8


class GameFormatError(ValueError):
    """Raised when a game document violates the file format or invariants."""


@dataclass(eq=False)
class SynchronousGame:
    """Validated synchronous game over labelled question and answer sets.

    ``nu`` is the symmetric question distribution as floats; when the
    source provided exact rational weights they are kept in ``nu_exact``
    (a tuple-of-tuples of Fractions) and symmetry / alpha are evaluated
    exactly on that representation.
    """

    questions: tuple[str, ...]
    answers: tuple[str, ...]
    nu: np.ndarray
    predicate: np.ndarray
    nu_exact: tuple[tuple[Fraction, ...], ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        nq, na = len(self.questions), len(self.answers)
        if nq == 0 or na == 0:
            raise GameFormatError("question and answer sets must be non-empty")
        if len(set(self.questions)) != nq or len(set(self.answers)) != na:
            raise GameFormatError("question and answer labels must be unique")
        self.nu = np.asarray(self.nu, dtype=float)
        if self.nu.shape != (nq, nq):
            raise GameFormatError(f"nu must have shape {(nq, nq)}, got {self.nu.shape}")
        if self.nu_exact is not None:
            for i in range(nq):
                for j in range(nq):
                    if self.nu_exact[i][j] != self.nu_exact[j][i]:
                        raise GameFormatError(
                            "nu is not symmetric at "
                            f"({self.questions[i]!r}, {self.questions[j]!r})"
                        )
        if not np.array_equal(self.nu, self.nu.T):
            i, j = np.argwhere(self.nu != self.nu.T)[0]
            raise GameFormatError(
                f"nu is not symmetric at ({self.questions[i]!r}, {self.questions[j]!r})"
            )
        if float(self.nu.min()) < 0:
            i, j = np.argwhere(self.nu < 0)[0]
            raise GameFormatError(
                f"nu({self.questions[i]!r}, {self.questions[j]!r}) is negative"
            )
        total = float(self.nu.sum())
        if abs(total - 1.0) > NU_SUM_TOL:
            raise GameFormatError(f"nu must sum to 1, got {total!r}")
        self.predicate = np.asarray(self.predicate, dtype=bool)
        if self.predicate.shape != (nq, nq, na, na):
            raise GameFormatError(
                f"predicate must have shape {(nq, nq, na, na)}, got {self.predicate.shape}"
            )
        if not np.array_equal(self.predicate, self.predicate.transpose(1, 0, 3, 2)):
            x, y, a, b = np.argwhere(
                self.predicate != self.predicate.transpose(1, 0, 3, 2)
            )[0]
            raise GameFormatError(
                "predicate is not symmetric at "
                f"({self.questions[x]!r}, {self.questions[y]!r}, "
                f"{self.answers[a]!r}, {self.answers[b]!r})"
            )
        want = np.eye(na, dtype=bool)
        for x in range(nq):
            if not np.array_equal(self.predicate[x, x], want):
                a, b = np.argwhere(self.predicate[x, x] != want)[0]
                raise GameFormatError(
                    "diagonal rule violated at "
                    f"({self.questions[x]!r}, {self.answers[a]!r}, {self.answers[b]!r})"
                )

    @property
    def n_questions(self) -> int:
        return len(self.questions)

    @property
    def n_answers(self) -> int:
        return len(self.answers)

    @property
    def mu(self) -> np.ndarray:
        """Marginal mu(x) = sum_y nu(x, y)."""
        return self.nu.sum(axis=1)

    @property
    def alpha(self) -> float:
        return alpha_of(self)


@dataclass(eq=False)
class CorrelationTable:
    """Per question pair (x, y), a probability table P_{x,y}(a, b).

    Answers are positional (index into the owning game's answer list).
    Entries may carry roundoff down to -1e-10; each block sums to 1
    within 1e-8.
    """

    questions: tuple[str, ...]
    n_answers: int
    data: np.ndarray

    def __post_init__(self):
        nq, na = len(self.questions), self.n_answers
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != (nq, nq, na, na):
            raise ValueError(
                f"table must have shape {(nq, nq, na, na)}, got {self.data.shape}"
            )
        low = float(self.data.min())
        if low < -TABLE_NEG_TOL:
            raise ValueError(f"table entry {low:.3e} below -{TABLE_NEG_TOL:.0e}")
        sums = self.data.sum(axis=(2, 3))
        worst = float(np.abs(sums - 1.0).max())
        if worst > TABLE_SUM_TOL:
            raise ValueError(
                f"some P_xy does not sum to 1: worst deviation {worst:.3e}"
            )

    def block(self, x: int, y: int) -> np.ndarray:
        return self.data[x, y]


def alpha_of(game: SynchronousGame) -> float:
    """Largest alpha for which the game is alpha-synchronous.

    The minimum of nu(x, x) / mu(x) over questions with mu(x) > 0;
    evaluated in exact rational arithmetic when the weights allow.
    """
    if game.nu_exact is not None:
        ratios = []
        for x in range(game.n_questions):
            mu_x = sum(game.nu_exact[x], Fraction(0))
            if mu_x > 0:
                ratios.append(game.nu_exact[x][x] / mu_x)
        return float(min(ratios))
    mu = game.mu
    ratios = [game.nu[x, x] / mu[x] for x in range(game.n_questions) if mu[x] > 0]
    return float(min(ratios))


def _check_table_matches(game: SynchronousGame, table: CorrelationTable):
    if table.questions != game.questions:
        raise ValueError(
            f"table questions {table.questions!r} do not match game questions"
            f" {game.questions!r}"
        )
    if table.n_answers != game.n_answers:
        raise ValueError(
            f"table has {table.n_answers} answers, game has {game.n_answers}"
        )


def game_value(game: SynchronousGame, table: CorrelationTable) -> float:
    """nu-weighted winning probability of a correlation against D."""
    _check_table_matches(game, table)
    value = float(np.sum(game.nu[:, :, None, None] * game.predicate * table.data))
    if value < -VALUE_SLACK or value > 1.0 + VALUE_SLACK:
        raise ValueError(f"game value {value!r} falls outside [0, 1] beyond slack")
    return value


def table_l1_distance(
    game: SynchronousGame, first: CorrelationTable, second: CorrelationTable
) -> float:
    """L1 distance between two tables, integrated against the game's nu."""
    _check_table_matches(game, first)
    _check_table_matches(game, second)
    return float(
        np.sum(game.nu[:, :, None, None] * np.abs(first.data - second.data))
    )


# ---------------------------------------------------------------------------
# file format


def _parse_weight(raw, where: str):
    """Weight as Fraction when exact (int or 'p/q' string), else float."""
    if isinstance(raw, bool):
        raise GameFormatError(f"invalid weight {raw!r} in {where}")
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, str):
        try:
            return Fraction(raw)
        except (ValueError, ZeroDivisionError) as exc:
            raise GameFormatError(f"invalid weight {raw!r} in {where}: {exc}") from exc
    if isinstance(raw, float):
        return float(raw)
    raise GameFormatError(f"invalid weight {raw!r} in {where}")


def load_game(text: str) -> SynchronousGame:
    """Parse and validate a game document (JSON text).

    The loader mirrors each listed unordered nu pair, renormalizes when
    the total mass deviates from 1 by at most 1e-9, enforces the
    diagonal predicate rule and reports every violation with the
    offending tuple.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise GameFormatError("top level must be a JSON object")
    try:
        questions = [str(q) for q in doc["questions"]]
        answers = [str(a) for a in doc["answers"]]
        nu_entries = doc["nu"]
        pred_doc = doc["predicate"]
    except KeyError as exc:
        raise GameFormatError(f"missing required field {exc}") from exc
    nq, na = len(questions), len(answers)
    if len(set(questions)) != nq or len(set(answers)) != na:
        raise GameFormatError("question and answer labels must be unique")
    q_index = {q: i for i, q in enumerate(questions)}
    a_index = {a: i for i, a in enumerate(answers)}

    weights: dict[tuple[int, int], object] = {}
    for entry in nu_entries:
        try:
            x, y, w = entry["x"], entry["y"], entry["w"]
        except (TypeError, KeyError) as exc:
            raise GameFormatError(f"malformed nu entry {entry!r}") from exc
        if x not in q_index or y not in q_index:
            raise GameFormatError(f"nu entry references unknown question ({x!r}, {y!r})")
        i, j = q_index[x], q_index[y]
        w = _parse_weight(w, f"nu entry ({x!r}, {y!r})")
        if w < 0:
            raise GameFormatError(f"nu({x!r}, {y!r}) is negative")
        for key in ((i, j), (j, i)):
            if key in weights and weights[key] != w:
                raise GameFormatError(
                    f"nu is not symmetric at ({x!r}, {y!r}):"
                    f" conflicting weights {weights[key]!r} and {w!r}"
                )
            weights[key] = w
    exact = all(isinstance(w, Fraction) for w in weights.values())
    total = sum(weights.values(), Fraction(0) if exact else 0.0)
    if total <= 0:
        raise GameFormatError("nu has no mass")
    if total != 1:
        if abs(float(total) - 1.0) > NU_RENORM_TOL:
            raise GameFormatError(
                f"nu sums to {float(total)!r}; deviations above {NU_RENORM_TOL:.0e}"
                " are rejected"
            )
        weights = {k: w / total for k, w in weights.items()}
    nu = np.zeros((nq, nq))
    nu_exact = None
    if exact:
        rows = [[Fraction(0)] * nq for _ in range(nq)]
        for (i, j), w in weights.items():
            rows[i][j] = w
            nu[i, j] = float(w)
        nu_exact = tuple(tuple(r) for r in rows)
    else:
        for (i, j), w in weights.items():
            nu[i, j] = float(w)

    if not isinstance(pred_doc, dict) or "default" not in pred_doc:
        raise GameFormatError("predicate must be an object with a 'default' field")
    default = pred_doc["default"]
    if default not in (0, 1):
        raise GameFormatError(f"predicate default must be 0 or 1, got {default!r}")
    predicate = np.full((nq, nq, na, na), bool(default))
    explicit = np.zeros((nq, nq, na, na), dtype=bool)
    for entry in pred_doc.get("entries", []):
        try:
            x, y, a, b, v = entry["x"], entry["y"], entry["a"], entry["b"], entry["v"]
        except (TypeError, KeyError) as exc:
            raise GameFormatError(f"malformed predicate entry {entry!r}") from exc
        if x not in q_index or y not in q_index:
            raise GameFormatError(
                f"predicate entry references unknown question ({x!r}, {y!r})"
            )
        if a not in a_index or b not in a_index:
            raise GameFormatError(
                f"predicate entry references unknown answer ({a!r}, {b!r})"
            )
        if v not in (0, 1):
            raise GameFormatError(f"predicate value must be 0 or 1 in entry {entry!r}")
        i, j, k, l = q_index[x], q_index[y], a_index[a], a_index[b]
        for pos in ((i, j, k, l), (j, i, l, k)):
            if explicit[pos] and predicate[pos] != bool(v):
                raise GameFormatError(
                    f"conflicting predicate entries at ({x!r}, {y!r}, {a!r}, {b!r})"
                )
            predicate[pos] = bool(v)
            explicit[pos] = True
    for i in range(nq):
        for k in range(na):
            for l in range(na):
                want = k == l
                if explicit[i, i, k, l] and predicate[i, i, k, l] != want:
                    raise GameFormatError(
                        "conflicting diagonal predicate entry at "
                        f"({questions[i]!r}, {answers[k]!r}, {answers[l]!r})"
                    )
                predicate[i, i, k, l] = want
    return SynchronousGame(tuple(questions), tuple(answers), nu, predicate, nu_exact)


def save_game(game: SynchronousGame) -> str:
    """Serialize to the game file format; load_game(save_game(g)) == g."""
    entries = []
    for i in range(game.n_questions):
        for j in range(i, game.n_questions):
            if game.nu_exact is not None:
                w = game.nu_exact[i][j]
                if w == 0:
                    continue
                w_out = str(w)
            else:
                w = float(game.nu[i, j])
                if w == 0.0:
                    continue
                w_out = w
            entries.append({"x": game.questions[i], "y": game.questions[j], "w": w_out})
    off_diag = [
        bool(game.predicate[i, j, k, l])
        for i in range(game.n_questions)
        for j in range(game.n_questions)
        if i != j
        for k in range(game.n_answers)
        for l in range(game.n_answers)
    ]
    default = 1 if sum(off_diag) * 2 >= len(off_diag) else 0
    pred_entries = []
    for i in range(game.n_questions):
        for j in range(i + 1, game.n_questions):
            for k in range(game.n_answers):
                for l in range(game.n_answers):
                    if bool(game.predicate[i, j, k, l]) != bool(default):
                        pred_entries.append(
                            {
                                "x": game.questions[i],
                                "y": game.questions[j],
                                "a": game.answers[k],
                                "b": game.answers[l],
                                "v": int(game.predicate[i, j, k, l]),
                            }
                        )
    doc = {
        "questions": list(game.questions),
        "answers": list(game.answers),
        "nu": entries,
        "predicate": {"default": default, "entries": pred_entries},
    }
    return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# generators


def graph_coloring_game(edges, n_colors: int, diagonal_mass) -> SynchronousGame:
    """Synchronous k-coloring game of a simple undirected graph.

    Questions are the vertices (first-appearance order in the edge
    list), answers the colors "0".."k-1".  The question distribution is
    ``diagonal_mass`` uniform on the diagonal plus the remainder uniform
    on ordered edge pairs, built in exact rational arithmetic.  The
    predicate rejects equal colors on adjacent vertices.
    """
    lam = Fraction(diagonal_mass)
    if not 0 < lam < 1:
        raise GameFormatError(f"diagonal mass must be in (0, 1), got {diagonal_mass!r}")
    if n_colors < 1:
        raise GameFormatError(f"need at least one color, got {n_colors}")
    edge_list: list[tuple[str, str]] = []
    vertices: list[str] = []
    seen = set()
    for u, v in edges:
        u, v = str(u), str(v)
        if u == v:
            raise GameFormatError(f"self-loop at vertex {u!r}")
        key = frozenset((u, v))
        if key in seen:
            raise GameFormatError(f"duplicate edge ({u!r}, {v!r})")
        seen.add(key)
        edge_list.append((u, v))
        for w in (u, v):
            if w not in vertices:
                vertices.append(w)
    if not edge_list:
        raise GameFormatError("empty edge list: the diagonal cannot carry full mass")
    nq = len(vertices)
    q_index = {q: i for i, q in enumerate(vertices)}
    rows = [[Fraction(0)] * nq for _ in range(nq)]
    for i in range(nq):
        rows[i][i] = lam / nq
    per_pair = (1 - lam) / (2 * len(edge_list))
    for u, v in edge_list:
        i, j = q_index[u], q_index[v]
        rows[i][j] += per_pair
        rows[j][i] += per_pair
    nu = np.array([[float(w) for w in row] for row in rows])
    answers = tuple(str(c) for c in range(n_colors))
    predicate = np.ones((nq, nq, n_colors, n_colors), dtype=bool)
    for i in range(nq):
        predicate[i, i] = np.eye(n_colors, dtype=bool)
    for u, v in edge_list:
        i, j = q_index[u], q_index[v]
        for c in range(n_colors):
            predicate[i, j, c, c] = False
            predicate[j, i, c, c] = False
    return SynchronousGame(
        tuple(vertices), answers, nu, predicate, tuple(tuple(r) for r in rows)
    )
