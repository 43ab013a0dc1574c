"""Commuting and tracial strategies on finite-dimensional spaces.

A commuting strategy lives on a tensor product C^dA x C^dB: the two
players' PVMs act as p x 1 and 1 x q, so commutation is structural, and
the shared unit state is stored as its dA x dB coefficient matrix M.
The resulting correlation is

    P_{x,y}(a, b) = <(p^x_a x q^y_b) xi, xi> = Tr(p^x_a M (q^y_b)^T M+).

A tracial strategy is a weighted direct sum of matrix blocks carrying
one PVM family per question; its correlation tau(r^x_a r^y_b) uses the
weighted normalized traces and is synchronous by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .games import CorrelationTable, SynchronousGame
from .sampling import random_pvm, random_state
from .spectral import (
    PSD_CLAMP,
    SpectralDecomposition,
    eigh,
    functional_calculus,
    require_povm,
    require_pvm,
)

__all__ = [
    "STATE_TOL",
    "CommutingStrategy",
    "TracialBlock",
    "TracialStrategy",
    "DensityOperator",
    "SeesawResult",
    "correlation_of_commuting",
    "reduced_density",
    "standard_form_dual",
    "synchronicity_deficit",
    "tracial_correlation",
    "seesaw_optimize",
    "perturb_b_side",
    "maximally_entangled_state",
    "conjugate_synchronous_strategy",
    "cyclic_coloring_strategy",
    "dump_commuting_strategy",
    "load_commuting_strategy",
    "dump_tracial_strategy",
    "load_tracial_strategy",
]

STATE_TOL = 1e-10
IMAG_TOL = 1e-8
WEIGHT_TOL = 1e-10
SYNC_TOL = 1e-8
DUAL_IDENTITY_TOL = 1e-6


def _pvm_dict(pvms, dim: int, side: str) -> dict[str, list[np.ndarray]]:
    if not pvms:
        raise ValueError(f"{side} has no question PVMs")
    out = {}
    n_answers = None
    for question, family in pvms.items():
        ops = require_pvm(family, dim, f"{side} PVM for question {question!r}")
        if n_answers is None:
            n_answers = len(ops)
        elif len(ops) != n_answers:
            raise ValueError(
                f"{side} PVM for question {question!r} has {len(ops)} outcomes,"
                f" expected {n_answers}"
            )
        out[str(question)] = ops
    return out


@dataclass(eq=False)
class CommutingStrategy:
    """Tensor-split commuting strategy with a shared pure state."""

    dim_a: int
    dim_b: int
    state: np.ndarray
    pvms_a: dict[str, list[np.ndarray]]
    pvms_b: dict[str, list[np.ndarray]]

    def __post_init__(self):
        if self.dim_a < 1 or self.dim_b < 1:
            raise ValueError("dimensions must be positive")
        self.state = np.asarray(self.state, dtype=np.complex128)
        if self.state.shape != (self.dim_a, self.dim_b):
            raise ValueError(
                f"state must have shape {(self.dim_a, self.dim_b)},"
                f" got {self.state.shape}"
            )
        norm = float(np.linalg.norm(self.state))
        if abs(norm - 1.0) > STATE_TOL:
            raise ValueError(f"state is not a unit vector: norm {norm!r}")
        self.pvms_a = _pvm_dict(self.pvms_a, self.dim_a, "A side")
        self.pvms_b = _pvm_dict(self.pvms_b, self.dim_b, "B side")
        if set(self.pvms_a) != set(self.pvms_b):
            raise ValueError("A and B sides must share the same question set")
        na = len(next(iter(self.pvms_a.values())))
        nb = len(next(iter(self.pvms_b.values())))
        if na != nb:
            raise ValueError("A and B sides must share the answer count")

    @property
    def questions(self) -> tuple[str, ...]:
        return tuple(self.pvms_a)

    @property
    def n_answers(self) -> int:
        return len(next(iter(self.pvms_a.values())))


@dataclass(eq=False)
class TracialBlock:
    weight: float
    dim: int
    pvms: dict[str, list[np.ndarray]]

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError(f"block weight must be positive, got {self.weight!r}")
        if self.dim < 1:
            raise ValueError("block dimension must be positive")
        self.pvms = _pvm_dict(self.pvms, self.dim, f"block(dim={self.dim})")


@dataclass(eq=False)
class TracialStrategy:
    """Weighted direct sum of matrix blocks with per-question PVMs."""

    blocks: list[TracialBlock]

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("tracial strategy needs at least one block")
        total = sum(b.weight for b in self.blocks)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"block weights must sum to 1, got {total!r}")
        questions = self.blocks[0].pvms.keys()
        n_answers = len(next(iter(self.blocks[0].pvms.values())))
        for b in self.blocks[1:]:
            if b.pvms.keys() != questions:
                raise ValueError("all blocks must share the same question set")
            if len(next(iter(b.pvms.values()))) != n_answers:
                raise ValueError("all blocks must share the answer count")
        worst = 0.0
        for question in questions:
            for a in range(n_answers):
                for b_ans in range(n_answers):
                    if a == b_ans:
                        continue
                    cross = sum(
                        blk.weight
                        * float(
                            np.real(
                                np.trace(blk.pvms[question][a] @ blk.pvms[question][b_ans])
                            )
                        )
                        / blk.dim
                        for blk in self.blocks
                    )
                    worst = max(worst, abs(cross))
        if worst > SYNC_TOL:
            raise ValueError(
                f"strategy is not synchronous: cross term {worst:.3e} exceeds"
                f" {SYNC_TOL:.0e}"
            )

    @property
    def questions(self) -> tuple[str, ...]:
        return tuple(self.blocks[0].pvms)

    @property
    def n_answers(self) -> int:
        return len(next(iter(self.blocks[0].pvms.values())))


@dataclass(eq=False)
class DensityOperator:
    """Unit-trace PSD matrix together with its spectral decomposition."""

    matrix: np.ndarray
    decomposition: SpectralDecomposition

    def __post_init__(self):
        tr = float(np.trace(self.matrix).real)
        if abs(tr - 1.0) > STATE_TOL:
            raise ValueError(f"density operator must have unit trace, got {tr!r}")
        low = float(self.decomposition.eigenvalues.min())
        if low < -PSD_CLAMP:
            raise ValueError(
                f"density operator is not PSD: min eigenvalue {low:.3e}"
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def support_projection(self) -> np.ndarray:
        dec = self.decomposition
        sel = dec.eigenvalues >= PSD_CLAMP
        v = dec.eigenvectors[:, sel]
        p = v @ v.conj().T
        return (p + p.conj().T) / 2


def _question_order(strategy, questions) -> tuple[str, ...]:
    if questions is None:
        return strategy.questions
    questions = tuple(questions)
    missing = [q for q in questions if q not in strategy.questions]
    if missing:
        raise ValueError(f"strategy has no PVMs for questions {missing!r}")
    return questions


def _b_conditional_operators(s: CommutingStrategy) -> dict[str, list[np.ndarray]]:
    """A-side operators h(y, b) with Tr(z h(y, b)) = <(z x q^y_b) xi, xi>."""
    m = s.state
    out = {}
    for question, family in s.pvms_b.items():
        out[question] = [m @ q.conj() @ m.conj().T for q in family]
    return out


def correlation_of_commuting(
    s: CommutingStrategy, questions=None
) -> CorrelationTable:
    """Correlation table P_{x,y}(a, b) = <(p^x_a x q^y_b) xi, xi>.

    Raises when the imaginary residue of any entry exceeds 1e-8; the
    residue is discarded after the check.
    """
    order = _question_order(s, questions)
    na = s.n_answers
    cond = _b_conditional_operators(s)
    data = np.empty((len(order), len(order), na, na), dtype=complex)
    for xi_, x in enumerate(order):
        for yi, y in enumerate(order):
            for a in range(na):
                for b in range(na):
                    data[xi_, yi, a, b] = np.trace(s.pvms_a[x][a] @ cond[y][b])
    residue = float(np.abs(data.imag).max())
    if residue > IMAG_TOL:
        raise ValueError(
            f"correlation entries have imaginary residue {residue:.3e}"
        )
    return CorrelationTable(order, na, data.real)


def reduced_density(s: CommutingStrategy) -> DensityOperator:
    """Partial trace of |xi><xi| over the B side."""
    rho = s.state @ s.state.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityOperator(rho, eigh(rho, "reduced density"))


def standard_form_dual(s: CommutingStrategy) -> dict[str, list[np.ndarray]]:
    """Transport the B-side PVMs to A-side POVMs through the state.

    Returns per question y a POVM (p'ated on the A side) satisfying

        Tr(p^x_a rho^(1/2) p'^y_b rho^(1/2)) = P_{x,y}(a, b)

    where rho is the reduced density of the state.  The rank deficit of
    rho is completed on the first answer.  Raises a conditioning error
    when the defining identity residual exceeds 1e-6.
    """
    rho = reduced_density(s)
    sqrt_rho = functional_calculus(rho.decomposition, "sqrt")
    pinv_sqrt = functional_calculus(rho.decomposition, "pinv_sqrt")
    support = rho.support_projection()
    complement = np.eye(s.dim_a) - support
    cond = _b_conditional_operators(s)
    dual = {}
    for question, hs in cond.items():
        family = []
        for b, h in enumerate(hs):
            p = pinv_sqrt @ h @ pinv_sqrt
            p = (p + p.conj().T) / 2
            if b == 0:
                p = p + complement
            family.append(p)
        dual[question] = require_povm(
            family, s.dim_a, f"dual POVM for question {question!r}"
        )
    table = correlation_of_commuting(s)
    order = {q: i for i, q in enumerate(s.questions)}
    worst = 0.0
    for y, family in dual.items():
        for b, p in enumerate(family):
            inner = sqrt_rho @ p @ sqrt_rho
            for x in s.questions:
                for a in range(s.n_answers):
                    got = float(np.trace(s.pvms_a[x][a] @ inner).real)
                    worst = max(
                        worst, abs(got - table.data[order[x], order[y], a, b])
                    )
    if worst > DUAL_IDENTITY_TOL:
        min_pos = float(
            rho.decomposition.eigenvalues[
                rho.decomposition.eigenvalues >= PSD_CLAMP
            ].min()
        )
        raise ValueError(
            f"dual construction is ill-conditioned: defining identity residual"
            f" {worst:.3e} (min positive eigenvalue of rho {min_pos:.3e})"
        )
    return dual


def synchronicity_deficit(game: SynchronousGame, s: CommutingStrategy) -> float:
    """One minus the mu-averaged probability of equal answers, in [0, 1]."""
    table = correlation_of_commuting(s, game.questions)
    mu = game.mu
    agreement = sum(
        mu[x] * float(np.trace(table.data[x, x]))
        for x in range(game.n_questions)
    )
    return float(min(1.0, max(0.0, 1.0 - agreement)))


def tracial_correlation(t: TracialStrategy, questions=None) -> CorrelationTable:
    """Correlation sum_k w_k tr_k(r^x_a r^y_b) of a tracial strategy."""
    order = _question_order(t, questions)
    na = t.n_answers
    data = np.zeros((len(order), len(order), na, na))
    for blk in t.blocks:
        scale = blk.weight / blk.dim
        for xi_, x in enumerate(order):
            for yi, y in enumerate(order):
                for a in range(na):
                    for b in range(na):
                        data[xi_, yi, a, b] += scale * float(
                            np.trace(blk.pvms[x][a] @ blk.pvms[y][b]).real
                        )
    return CorrelationTable(order, na, data)


# ---------------------------------------------------------------------------
# constructions


def maximally_entangled_state(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / np.sqrt(dim)


def conjugate_synchronous_strategy(pvms_a) -> CommutingStrategy:
    """Maximally entangled state with B-side the entrywise conjugates.

    The resulting correlation is Tr(p^x_a p^y_b) / d, hence exactly
    synchronous.
    """
    first = next(iter(pvms_a.values()))
    dim = np.asarray(first[0]).shape[0]
    pvms_b = {q: [np.asarray(p).conj() for p in fam] for q, fam in pvms_a.items()}
    return CommutingStrategy(
        dim, dim, maximally_entangled_state(dim), dict(pvms_a), pvms_b
    )


def cyclic_coloring_strategy(questions, n_colors: int) -> CommutingStrategy:
    """Deterministic proper-coloring strategy on C^k for cyclically
    adjacent questions: question i answers color (a + i) mod k with the
    basis projection e_{(a+i) mod k}."""
    basis = [np.zeros((n_colors, n_colors), dtype=complex) for _ in range(n_colors)]
    for i in range(n_colors):
        basis[i][i, i] = 1.0
    pvms = {
        q: [basis[(a + i) % n_colors] for a in range(n_colors)]
        for i, q in enumerate(questions)
    }
    return conjugate_synchronous_strategy(pvms)


def perturb_b_side(s: CommutingStrategy, eta: float, seed: int) -> CommutingStrategy:
    """Conjugate every B-side PVM by exp(i eta K), K Hermitian of unit
    spectral norm drawn from the seed.  Produces synchronicity deficits
    of order eta^2 on exactly synchronous inputs."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((s.dim_b, s.dim_b)) + 1j * rng.standard_normal(
        (s.dim_b, s.dim_b)
    )
    k = (g + g.conj().T) / 2
    k = k / float(np.abs(np.linalg.eigvalsh(k)).max())
    w, v = np.linalg.eigh(k)
    u = (v * np.exp(1j * eta * w)) @ v.conj().T
    pvms_b = {
        q: [u @ p @ u.conj().T for p in fam] for q, fam in s.pvms_b.items()
    }
    return CommutingStrategy(s.dim_a, s.dim_b, s.state.copy(), s.pvms_a, pvms_b)


# ---------------------------------------------------------------------------
# see-saw optimizer


@dataclass(eq=False)
class SeesawResult:
    strategy: CommutingStrategy
    values: list[float]


def _assign_basis(basis: np.ndarray, effective: list[np.ndarray]) -> list[np.ndarray]:
    """PVM from assigning each basis column to its best-paying answer."""
    dim = basis.shape[0]
    pvms = [np.zeros((dim, dim), dtype=complex) for _ in effective]
    for i in range(basis.shape[1]):
        v = basis[:, i]
        scores = [float(np.real(v.conj() @ f @ v)) for f in effective]
        pvms[int(np.argmax(scores))] += np.outer(v, v.conj())
    return [(p + p.conj().T) / 2 for p in pvms]


def _best_pvm(candidates, effective) -> list[np.ndarray]:
    scores = [
        sum(float(np.trace(p[a] @ effective[a]).real) for a in range(len(effective)))
        for p in candidates
    ]
    return candidates[int(np.argmax(scores))]


def seesaw_optimize(
    game: SynchronousGame,
    dim_a: int,
    dim_b: int,
    iterations: int,
    seed: int,
) -> SeesawResult:
    """Alternating maximization of the game value over tensor strategies.

    Each iteration updates the A-side PVMs (assigning eigenvectors of
    the effective payoff operators to their best answers, with the
    Schmidt basis of the state as an alternative candidate), then the
    B side symmetrically, then moves the state to the top eigenvector of
    the global payoff operator.  Two constructive candidates are also
    evaluated each iteration and adopted only on improvement: the
    answer-matching strategy (B = conjugated A-side PVMs on the
    maximally entangled state, equal dimensions only) and the best
    constant-answer strategy; together they solve diagonal-supported
    games exactly.  Every update is guarded, so the value trajectory is
    non-decreasing.
    """
    if dim_a < 1 or dim_b < 1:
        raise ValueError("dimensions must be positive")
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    rng = np.random.default_rng(seed)
    nq, na = game.n_questions, game.n_answers
    nu, pred = game.nu, game.predicate
    pvms_a = [random_pvm(rng, dim_a, na) for _ in range(nq)]
    pvms_b = [random_pvm(rng, dim_b, na) for _ in range(nq)]
    state = random_state(rng, dim_a, dim_b)

    def value_of(pa, pb, m):
        total = 0.0
        for x in range(nq):
            for y in range(nq):
                if nu[x, y] == 0.0:
                    continue
                for a in range(na):
                    for b in range(na):
                        if pred[x, y, a, b]:
                            total += nu[x, y] * float(
                                np.trace(pa[x][a] @ m @ pb[y][b].T @ m.conj().T).real
                            )
        return total

    values = [value_of(pvms_a, pvms_b, state)]
    for _ in range(iterations):
        u, _, vh = np.linalg.svd(state)
        # A sweep: per question, the payoff decouples as sum_a Tr(p_a F_a)
        for x in range(nq):
            effective = []
            for a in range(na):
                r = sum(
                    nu[x, y] * pvms_b[y][b]
                    for y in range(nq)
                    for b in range(na)
                    if nu[x, y] != 0.0 and pred[x, y, a, b]
                )
                if isinstance(r, int):
                    r = np.zeros((dim_b, dim_b), dtype=complex)
                f = state @ r.T @ state.conj().T
                effective.append((f + f.conj().T) / 2)
            w = sum((a + 1) * effective[a] for a in range(na))
            candidates = [
                _assign_basis(np.linalg.eigh(w)[1], effective),
                _assign_basis(u, effective),
                pvms_a[x],
            ]
            pvms_a[x] = _best_pvm(candidates, effective)
        # B sweep
        for y in range(nq):
            effective = []
            for b in range(na):
                r = sum(
                    nu[x, y] * pvms_a[x][a]
                    for x in range(nq)
                    for a in range(na)
                    if nu[x, y] != 0.0 and pred[x, y, a, b]
                )
                if isinstance(r, int):
                    r = np.zeros((dim_a, dim_a), dtype=complex)
                f = (state.conj().T @ r @ state).T
                effective.append((f + f.conj().T) / 2)
            w = sum((b + 1) * effective[b] for b in range(na))
            candidates = [
                _assign_basis(np.linalg.eigh(w)[1], effective),
                _assign_basis(vh.T, effective),
                pvms_b[y],
            ]
            if dim_a == dim_b:
                candidates.append([p.conj() for p in pvms_a[y]])
            pvms_b[y] = _best_pvm(candidates, effective)
        # state update: top eigenvector of the global payoff operator
        payoff = np.zeros((dim_a * dim_b, dim_a * dim_b), dtype=complex)
        for x in range(nq):
            for y in range(nq):
                if nu[x, y] == 0.0:
                    continue
                for a in range(na):
                    for b in range(na):
                        if pred[x, y, a, b]:
                            payoff += nu[x, y] * np.kron(pvms_a[x][a], pvms_b[y][b])
        payoff = (payoff + payoff.conj().T) / 2
        top = np.linalg.eigh(payoff)[1][:, -1]
        candidate_state = top.reshape(dim_a, dim_b)
        current = value_of(pvms_a, pvms_b, candidate_state)
        if current >= values[-1]:
            state = candidate_state
        else:
            current = value_of(pvms_a, pvms_b, state)
        # answer-matching candidate: conjugate PVMs on the maximally
        # entangled state, exactly synchronous by construction
        if dim_a == dim_b:
            snapped_b = [[p.conj() for p in fam] for fam in pvms_a]
            snapped_state = maximally_entangled_state(dim_a)
            snapped = value_of(pvms_a, snapped_b, snapped_state)
            if snapped > current:
                pvms_b, state, current = snapped_b, snapped_state, snapped
        # constant-answer candidates: both sides always answer a, any
        # state; their value is the predicate mass on the (a, a) fiber
        best_const = max(
            range(na),
            key=lambda a: float(np.sum(nu[pred[:, :, a, a]])),
        )
        const_value = float(np.sum(nu[pred[:, :, best_const, best_const]]))
        if const_value > current:
            const_a = [np.zeros((dim_a, dim_a), dtype=complex) for _ in range(na)]
            const_b = [np.zeros((dim_b, dim_b), dtype=complex) for _ in range(na)]
            const_a[best_const] = np.eye(dim_a, dtype=complex)
            const_b[best_const] = np.eye(dim_b, dtype=complex)
            pvms_a = [list(const_a) for _ in range(nq)]
            pvms_b = [list(const_b) for _ in range(nq)]
            current = const_value
        values.append(current)
    strategy = CommutingStrategy(
        dim_a,
        dim_b,
        state,
        {q: pvms_a[i] for i, q in enumerate(game.questions)},
        {q: pvms_b[i] for i, q in enumerate(game.questions)},
    )
    return SeesawResult(strategy, values)


# ---------------------------------------------------------------------------
# file formats


def _matrix_to_pairs(m: np.ndarray):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _pairs_to_matrix(rows, what: str) -> np.ndarray:
    try:
        return np.array(
            [[complex(re, im) for re, im in row] for row in rows], dtype=complex
        )
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed complex matrix in {what}: {exc}") from exc


def dump_commuting_strategy(s: CommutingStrategy) -> str:
    doc = {
        "dimA": s.dim_a,
        "dimB": s.dim_b,
        "xi": _matrix_to_pairs(s.state),
        "pvmsA": {q: [_matrix_to_pairs(p) for p in fam] for q, fam in s.pvms_a.items()},
        "pvmsB": {q: [_matrix_to_pairs(p) for p in fam] for q, fam in s.pvms_b.items()},
    }
    return json.dumps(doc)


def load_commuting_strategy(text: str) -> CommutingStrategy:
    try:
        doc = json.loads(text)
        dim_a, dim_b = int(doc["dimA"]), int(doc["dimB"])
        state = _pairs_to_matrix(doc["xi"], "xi")
        pvms_a = {
            str(q): [_pairs_to_matrix(p, f"pvmsA[{q!r}]") for p in fam]
            for q, fam in doc["pvmsA"].items()
        }
        pvms_b = {
            str(q): [_pairs_to_matrix(p, f"pvmsB[{q!r}]") for p in fam]
            for q, fam in doc["pvmsB"].items()
        }
    except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
        raise ValueError(f"malformed strategy document: {exc}") from exc
    return CommutingStrategy(dim_a, dim_b, state, pvms_a, pvms_b)


def dump_tracial_strategy(t: TracialStrategy) -> str:
    doc = {
        "blocks": [
            {
                "w": blk.weight,
                "dim": blk.dim,
                "pvms": {
                    q: [_matrix_to_pairs(p) for p in fam]
                    for q, fam in blk.pvms.items()
                },
            }
            for blk in t.blocks
        ]
    }
    return json.dumps(doc)


def load_tracial_strategy(text: str) -> TracialStrategy:
    try:
        doc = json.loads(text)
        blocks = [
            TracialBlock(
                float(raw["w"]),
                int(raw["dim"]),
                {
                    str(q): [_pairs_to_matrix(p, f"block pvms[{q!r}]") for p in fam]
                    for q, fam in raw["pvms"].items()
                },
            )
            for raw in doc["blocks"]
        ]
    except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
        raise ValueError(f"malformed tracial strategy document: {exc}") from exc
    return TracialStrategy(blocks)
