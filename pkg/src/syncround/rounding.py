"""Rounding an almost-synchronous commuting strategy to a tracial one.

The pipeline: measure the synchronicity deficit delta, symmetrize the
correlation through the reduced density rho, decompose rho into nested
spectral corners with scalar weights, compress the A-side PVMs into
each corner, orthogonalize the compressed POVMs back into PVMs, and
assemble the weighted blocks into a tracial strategy.  Every stage has
an L1 distance (integrated against the game's question distribution)
recorded in a certificate, together with the delta^(1/4)-type bounds it
is checked against.

The certified constants are implementation commitments:

- 9  * delta^(1/4)  bounds the distance from the input correlation to
  the corner correlation (a symmetrization step below 3 delta^(1/4)
  plus a corner step below 4 sqrt(2) delta^(1/4));
- 57 * delta^(1/4)  bounds the distance to the final tracial
  correlation (3 + 38 sqrt(2), rounded up), where the 38 comes from the
  orthogonalization budget applied at deficit 4 delta;
- the output value satisfies value_out >= 1 - 58 (eps / alpha)^(1/4)
  whenever the input value is 1 - eps, since the deficit of a strategy
  with value 1 - eps on an alpha-synchronous game is at most
  eps / alpha and eps <= (eps / alpha)^(1/4).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .games import (
    CorrelationTable,
    SynchronousGame,
    alpha_of,
    game_value,
    table_l1_distance,
)
from .spectral import POVM_TOL, PSD_CLAMP, eigh, functional_calculus, require_povm
from .strategies import (
    CommutingStrategy,
    DensityOperator,
    TracialBlock,
    TracialStrategy,
    correlation_of_commuting,
    reduced_density,
    standard_form_dual,
    synchronicity_deficit,
    tracial_correlation,
)

__all__ = [
    "FIRST_HALF_CONSTANT",
    "TOTAL_CONSTANT",
    "GAME_CONSTANT",
    "ORTHOGONALIZATION_CONSTANT",
    "CornerDecomposition",
    "OrthogonalizationReport",
    "RoundingCertificate",
    "RoundingResult",
    "DualDistanceReport",
    "corner_decomposition",
    "symmetrized_correlation",
    "corner_correlation",
    "orthogonalize_povm",
    "round_strategy",
    "verify_dual_distance",
    "certificate_to_json",
]

FIRST_HALF_CONSTANT = 9.0
TOTAL_CONSTANT = 57.0
GAME_CONSTANT = 58.0
ORTHOGONALIZATION_CONSTANT = 9.0

WEIGHT_SUM_TOL = 1e-9
PROJECTION_TOL = 1e-9
SYM_SUM_TOL = 1e-9
BOUND_SLACK = 1e-6
TRIANGLE_SLACK = 1e-8
DUAL_SLACK = 1e-8


@dataclass(eq=False)
class CornerDecomposition:
    """Nested threshold projections of a density operator.

    ``values`` holds the distinct positive eigenvalues l_1 > ... > l_m
    after clustering; P_k projects onto eigenvectors with eigenvalue
    >= l_k, and w_k = (l_k - l_{k+1}) rank(P_k) with l_{m+1} = 0.  The
    weights sum to the trace, i.e. to 1.
    """

    values: np.ndarray
    ranks: tuple[int, ...]
    weights: np.ndarray
    bases: list[np.ndarray] = field(repr=False)
    dim: int = 0

    def projection(self, k: int) -> np.ndarray:
        b = self.bases[k]
        p = b @ b.conj().T
        return (p + p.conj().T) / 2

    @property
    def n_corners(self) -> int:
        return len(self.ranks)


def corner_decomposition(rho: DensityOperator) -> CornerDecomposition:
    """Corner decomposition of a unit-trace density operator.

    Zero eigenvalues are excluded; the corners are nested and the
    weights sum to 1 within 1e-9.
    """
    dec = rho.decomposition
    values = dec.cluster_values()
    zero_tol = max(dec.merge_tol, PSD_CLAMP)
    keep = [k for k, v in enumerate(values) if v > zero_tol]
    if not keep:
        raise ValueError("density operator has no positive spectrum")
    kept_values = np.array([values[k] for k in keep])
    # eigenvectors grouped by descending eigenvalue, accumulated
    bases, ranks = [], []
    columns: list[int] = []
    for k in keep:
        columns.extend(dec.clusters[k])
        bases.append(dec.eigenvectors[:, list(columns)].copy())
        ranks.append(len(columns))
    next_values = np.append(kept_values[1:], 0.0)
    weights = (kept_values - next_values) * np.array(ranks, dtype=float)
    total = float(weights.sum())
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"corner weights sum to {total!r}, expected 1")
    decomp = CornerDecomposition(
        kept_values, tuple(ranks), weights, bases, dec.dim
    )
    for k in range(decomp.n_corners):
        p = decomp.projection(k)
        if float(np.linalg.norm(p @ p - p)) > PROJECTION_TOL:
            raise ValueError(f"corner {k} is not a projection")
    return decomp


def symmetrized_correlation(
    pvms_a: dict[str, list[np.ndarray]], rho: DensityOperator, questions=None
) -> CorrelationTable:
    """Symmetric table T_{x,y}(a, b) = Tr(p^x_a rho^(1/2) p^y_b rho^(1/2))."""
    order = tuple(questions) if questions is not None else tuple(pvms_a)
    na = len(pvms_a[order[0]])
    sqrt_rho = functional_calculus(rho.decomposition, "sqrt")
    inner = {
        q: [sqrt_rho @ p @ sqrt_rho for p in fam] for q, fam in pvms_a.items()
    }
    data = np.empty((len(order), len(order), na, na))
    for xi, x in enumerate(order):
        for yi, y in enumerate(order):
            for a in range(na):
                for b in range(na):
                    data[xi, yi, a, b] = float(
                        np.trace(pvms_a[x][a] @ inner[y][b]).real
                    )
    sums = data.sum(axis=(2, 3))
    worst = float(np.abs(sums - 1.0).max())
    if worst > SYM_SUM_TOL:
        raise ValueError(f"symmetrized blocks do not sum to 1: deviation {worst:.3e}")
    return CorrelationTable(order, na, data)


def corner_compressions(
    pvms_a: dict[str, list[np.ndarray]], decomp: CornerDecomposition
) -> list[dict[str, list[np.ndarray]]]:
    """Per corner k, the POVMs (B_k+ p^x_a B_k) on the range of P_k."""
    out = []
    for k in range(decomp.n_corners):
        basis = decomp.bases[k]
        compressed = {}
        for q, fam in pvms_a.items():
            ops = []
            for p in fam:
                m = basis.conj().T @ p @ basis
                ops.append((m + m.conj().T) / 2)
            compressed[q] = ops
        out.append(compressed)
    return out


def corner_correlation(
    pvms_a: dict[str, list[np.ndarray]],
    decomp: CornerDecomposition,
    questions=None,
) -> CorrelationTable:
    """Weighted corner table sum_k (l_k - l_{k+1}) Tr(P_k p^x_a P_k p^y_b P_k).

    Equivalently sum_k w_k tr_k of the compressed POVM products, an
    exact finite sum realizing the weight integral over the nested
    threshold projections of rho.
    """
    order = tuple(questions) if questions is not None else tuple(pvms_a)
    na = len(pvms_a[order[0]])
    gaps = decomp.values - np.append(decomp.values[1:], 0.0)
    compressions = corner_compressions(pvms_a, decomp)
    data = np.zeros((len(order), len(order), na, na))
    for k in range(decomp.n_corners):
        comp = compressions[k]
        for xi, x in enumerate(order):
            for yi, y in enumerate(order):
                for a in range(na):
                    for b in range(na):
                        data[xi, yi, a, b] += gaps[k] * float(
                            np.trace(comp[x][a] @ comp[y][b]).real
                        )
    return CorrelationTable(order, na, data)


@dataclass(eq=False)
class OrthogonalizationReport:
    """Distance report for one POVM-to-PVM rounding.

    ``distance_sq`` is sum_a tr|m_a - r_a|^2 and ``budget`` is
    9 (1 - sum_a tr(m_a^2)), both under the normalized trace; ``holds``
    records whether the distance met the budget (the budget is
    empirical, violations are reported rather than asserted).
    """

    dim: int
    n_outcomes: int
    distance_sq: float
    budget: float
    holds: bool


def orthogonalize_povm(povm) -> tuple[list[np.ndarray], OrthogonalizationReport]:
    """Greedy spectral rounding of a POVM into a PVM.

    Outcomes are visited by decreasing trace; each receives the spectral
    projection above 1/2 of its compression to the unassigned subspace,
    and any residual subspace goes to the outcome with the largest
    residual expectation.  The result sums to the identity exactly by
    construction.
    """
    dim = np.asarray(povm[0]).shape[0]
    ms = require_povm(povm, dim)
    order = sorted(
        range(len(ms)), key=lambda a: (-float(np.trace(ms[a]).real), a)
    )
    comp = np.eye(dim, dtype=complex)
    rs: list[np.ndarray | None] = [None] * len(ms)
    for a in order:
        b = comp @ ms[a] @ comp
        dec = eigh((b + b.conj().T) / 2)
        sel = dec.eigenvalues > 0.5
        v = dec.eigenvectors[:, sel]
        r = v @ v.conj().T
        r = (r + r.conj().T) / 2
        rs[a] = r
        comp = comp - r
    residual = (comp + comp.conj().T) / 2
    if float(np.trace(residual).real) > 1e-12:
        scores = [float(np.trace(residual @ m).real) for m in ms]
        best = int(np.argmax(scores))
        rs[best] = rs[best] + residual
    pvm = [np.asarray(r) for r in rs]
    distance_sq = sum(
        float(np.linalg.norm(m - r) ** 2) for m, r in zip(ms, pvm)
    ) / dim
    purity = sum(float(np.trace(m @ m).real) for m in ms) / dim
    budget = ORTHOGONALIZATION_CONSTANT * (1.0 - purity)
    report = OrthogonalizationReport(
        dim, len(ms), distance_sq, budget, distance_sq <= budget + 1e-12
    )
    return pvm, report


@dataclass(eq=False)
class RoundingCertificate:
    """All distances, values and delta^(1/4) bounds of one rounding run.

    ``d1_sym``, ``d1_corner`` and ``d1_pvm`` are the staged L1 distances
    (input vs symmetrized, symmetrized vs corner, corner vs tracial);
    ``d1_first`` and ``d1_total`` are the direct distances from the
    input table to the corner table and to the final tracial table,
    which the two certified fourth-root bounds are checked against.
    """

    delta: float
    alpha: float
    d1_sym: float
    d1_corner: float
    d1_pvm: float
    d1_first: float
    d1_total: float
    value_in: float
    value_out: float
    bound_first: float
    bound_total: float
    bound_game: float
    holds_first: bool
    holds_total: bool
    holds_game: bool
    orthogonalization: list[dict] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.holds_first and self.holds_total and self.holds_game


@dataclass(eq=False)
class RoundingResult:
    tracial: TracialStrategy
    certificate: RoundingCertificate


def certificate_to_json(cert: RoundingCertificate) -> str:
    return json.dumps(asdict(cert), indent=2)


def round_strategy(game: SynchronousGame, s: CommutingStrategy) -> RoundingResult:
    """Round a commuting strategy into a tracial strategy with certificate.

    Requires alpha_of(game) > 0 (otherwise the value bound is vacuous
    and the run is rejected).  The corner stage uses only the A-side
    PVMs and the reduced density, so conditioning problems in the dual
    transport cannot occur here.
    """
    alpha = alpha_of(game)
    if alpha <= 0.0:
        raise ValueError(
            "game has alpha = 0 (some question carries no diagonal mass);"
            " the rounding bound is vacuous and unsupported"
        )
    delta = synchronicity_deficit(game, s)
    rho = reduced_density(s)
    original = correlation_of_commuting(s, game.questions)
    symmetrized = symmetrized_correlation(s.pvms_a, rho, game.questions)
    decomp = corner_decomposition(rho)
    corner = corner_correlation(s.pvms_a, decomp, game.questions)
    compressions = corner_compressions(s.pvms_a, decomp)

    blocks = []
    reports = []
    # spectrum in the numerical-zero band is excluded from the corners,
    # so the kept weights can fall short of 1 by up to the merge
    # tolerance; renormalize for the strategy's exact weight contract
    normalized_weights = decomp.weights / float(decomp.weights.sum())
    for k in range(decomp.n_corners):
        pvms = {}
        for q in game.questions:
            pvm, report = orthogonalize_povm(compressions[k][q])
            pvms[q] = pvm
            reports.append(
                {
                    "corner": k,
                    "question": q,
                    "dim": report.dim,
                    "distance_sq": report.distance_sq,
                    "budget": report.budget,
                    "holds": report.holds,
                }
            )
        blocks.append(
            TracialBlock(float(normalized_weights[k]), decomp.ranks[k], pvms)
        )
    tracial = TracialStrategy(blocks)
    tracial_table = tracial_correlation(tracial, game.questions)

    d1_sym = table_l1_distance(game, original, symmetrized)
    d1_corner = table_l1_distance(game, symmetrized, corner)
    d1_pvm = table_l1_distance(game, corner, tracial_table)
    d1_first = table_l1_distance(game, original, corner)
    d1_total = table_l1_distance(game, original, tracial_table)
    value_in = game_value(game, original)
    value_out = game_value(game, tracial_table)

    staged = d1_sym + d1_corner + d1_pvm
    if abs(value_in - value_out) > staged + TRIANGLE_SLACK:
        raise ValueError(
            f"value drift {abs(value_in - value_out):.3e} exceeds the staged"
            f" L1 budget {staged:.3e}"
        )

    root = delta**0.25
    eps = max(0.0, 1.0 - value_in)
    bound_first = FIRST_HALF_CONSTANT * root
    bound_total = TOTAL_CONSTANT * root
    bound_game = GAME_CONSTANT * (eps / alpha) ** 0.25
    cert = RoundingCertificate(
        delta=delta,
        alpha=alpha,
        d1_sym=d1_sym,
        d1_corner=d1_corner,
        d1_pvm=d1_pvm,
        d1_first=d1_first,
        d1_total=d1_total,
        value_in=value_in,
        value_out=value_out,
        bound_first=bound_first,
        bound_total=bound_total,
        bound_game=bound_game,
        holds_first=d1_first <= bound_first + BOUND_SLACK,
        holds_total=d1_total <= bound_total + BOUND_SLACK,
        holds_game=value_out >= 1.0 - bound_game - BOUND_SLACK,
        orthogonalization=reports,
    )
    return RoundingResult(tracial, cert)


@dataclass(eq=False)
class DualDistanceReport:
    """The two intermediate commutation quantities of a rounding run.

    ``comm_sq`` is the mu-averaged sum of squared commutator norms
    ||[p^x_a, rho^(1/2)]||^2 (budget 4 delta) and ``dual_sq`` the
    mu-averaged sum of ||rho^(1/2)(p^x_a - sqrt(p'^x_a))||^2 against the
    transported POVMs (budget 6 sqrt(delta)).
    """

    delta: float
    comm_sq: float
    comm_budget: float
    holds_comm: bool
    dual_sq: float
    dual_budget: float
    holds_dual: bool

    @property
    def holds(self) -> bool:
        return self.holds_comm and self.holds_dual


def _povm_sqrt(element: np.ndarray) -> np.ndarray:
    """Square root of a POVM element, clipping roundoff within POVM_TOL."""
    dec = eigh(element)
    low = float(dec.eigenvalues.min())
    if low < -POVM_TOL:
        raise ValueError(f"POVM element is not PSD: min eigenvalue {low:.3e}")
    vals = np.sqrt(np.clip(dec.eigenvalues, 0.0, None))
    out = (dec.eigenvectors * vals) @ dec.eigenvectors.conj().T
    return (out + out.conj().T) / 2


def verify_dual_distance(
    game: SynchronousGame, s: CommutingStrategy
) -> DualDistanceReport:
    """Evaluate both intermediate inequalities on a concrete strategy."""
    delta = synchronicity_deficit(game, s)
    rho = reduced_density(s)
    sqrt_rho = functional_calculus(rho.decomposition, "sqrt")
    dual = standard_form_dual(s)
    mu = game.mu
    comm_sq = 0.0
    dual_sq = 0.0
    for x_idx, x in enumerate(game.questions):
        for a in range(game.n_answers):
            p = s.pvms_a[x][a]
            comm_sq += mu[x_idx] * float(
                np.linalg.norm(p @ sqrt_rho - sqrt_rho @ p) ** 2
            )
            sqrt_dual = _povm_sqrt(dual[x][a])
            dual_sq += mu[x_idx] * float(
                np.linalg.norm(sqrt_rho @ (p - sqrt_dual)) ** 2
            )
    comm_budget = 4.0 * delta
    dual_budget = float(6.0 * np.sqrt(delta))
    return DualDistanceReport(
        delta=delta,
        comm_sq=comm_sq,
        comm_budget=comm_budget,
        holds_comm=bool(comm_sq <= comm_budget + DUAL_SLACK),
        dual_sq=dual_sq,
        dual_budget=dual_budget,
        holds_dual=bool(dual_sq <= dual_budget + DUAL_SLACK),
    )
