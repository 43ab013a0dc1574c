"""Scaling-fiber model of non-commutative L_p spaces over (M_d, Tr).

A positive matrix x standing for an element of L_p is realized as the
operator-valued function u -> e^(u/p) x over the weight e^(-u) du.  Its
threshold projections chi_(1,inf)(x-hat) have fibers chi_(t,inf)(x)
under the substitution t = e^(-u/p), which turns every weight integral
into

    integral_0^inf p t^(p-1) Tr( . ) dt,

a finite sum over spectral breakpoints.  All integrals here are
evaluated exactly this way; quadrature appears only as a test oracle.

The module provides the joint spectral measure of a positive pair, its
moment functionals, the squared L_2 distance of threshold projections,
the two-sided comparison between that distance and the L_2 distance of
the operators themselves, the commutator comparison for partitions of
unity, and the trace duality check between conjugate exponents.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import PSD_CLAMP, SpectralDecomposition, eigh, require_pvm

__all__ = [
    "JointSpectralMeasure",
    "MeasureMoments",
    "ConnesCertificate",
    "CommutatorCertificate",
    "joint_spectral_measure",
    "measure_moments",
    "threshold_chi_distance",
    "connes_certificate",
    "commutator_certificate",
    "lp_duality_check",
    "threshold_integral",
]

MASS_DROP_TOL = 1e-12    # eigenvalue pairs with smaller overlap are dropped
MASS_CHECK_TOL = 1e-9    # total mass must match Tr((x+y)^2) this closely
LAMBDA_MERGE_TOL = 1e-12
CHAIN_SLACK = 1e-9       # slack for the certified inequality chains
NORMED_TOL = 1e-8


def _psd_clusters(matrix, what: str):
    """Clustered spectrum of a PSD matrix: (values desc, projections)."""
    dec = matrix if isinstance(matrix, SpectralDecomposition) else eigh(matrix, what)
    low = float(dec.eigenvalues.min())
    if low < -PSD_CLAMP:
        raise ValueError(f"{what} is not PSD: min eigenvalue {low:.3e}")
    values = np.clip(dec.cluster_values(), 0.0, None)
    projections = [dec.cluster_projection(k) for k in range(len(dec.clusters))]
    return values, projections, dec


def _positive_breakpoints(values: np.ndarray, tol: float) -> list[float]:
    return sorted(float(v) for v in values if v > tol)


@dataclass(eq=False)
class JointSpectralMeasure:
    """Finite atomic measure on [0, 1] attached to a positive pair.

    For PSD x, y it is the unique finite measure mu with

        tau(f(x-hat) g(y-hat)) =
            int_0^1 int_0^inf f(l / sqrt(r)) g((1 - l) / sqrt(r)) dr dmu(l)

    for Borel f, g >= 0 with f(0) g(0) = 0, where x-hat, y-hat are the
    scaling-fiber realizations.  Atoms sit at l = a / (a + b) over
    eigenvalue pairs (a, b) with mass Tr(P Q) (a + b)^2.
    """

    lambdas: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        self.lambdas = np.asarray(self.lambdas, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)
        if self.lambdas.shape != self.masses.shape or self.lambdas.ndim != 1:
            raise ValueError("atoms must be parallel 1-d arrays")
        if self.lambdas.size and (
            float(self.lambdas.min()) < 0 or float(self.lambdas.max()) > 1
        ):
            raise ValueError("atom positions must lie in [0, 1]")
        if self.masses.size and float(self.masses.min()) <= 0:
            raise ValueError("atom masses must be positive")

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def integrate(self, fn) -> float:
        """Exact integral of a scalar function against the measure."""
        return float(sum(m * fn(l) for l, m in zip(self.lambdas, self.masses)))


def joint_spectral_measure(x, y) -> JointSpectralMeasure:
    """Joint spectral measure of a PSD pair in the fiber model.

    Atoms lie at a / (a + b) with mass Tr(P Q) (a + b)^2 over eigenvalue
    pairs; the (0, 0) pair has no counterpart in the measure and is
    excluded, as are overlaps below 1e-12.  The total mass is validated
    against Tr((x + y)^2).
    """
    xv, xp, xdec = _psd_clusters(x, "x")
    yv, yp, ydec = _psd_clusters(y, "y")
    if xdec.dim != ydec.dim:
        raise ValueError(f"dimension mismatch: {xdec.dim} vs {ydec.dim}")
    raw = []
    for a, p in zip(xv, xp):
        for b, q in zip(yv, yp):
            s = a + b
            if s <= 0:
                continue
            overlap = float(np.trace(p @ q).real)
            if overlap <= MASS_DROP_TOL:
                continue
            raw.append((a / s, overlap * s * s))
    raw.sort()
    merged: list[list[float]] = []
    for lam, mass in raw:
        if merged and lam - merged[-1][0] <= LAMBDA_MERGE_TOL:
            merged[-1][1] += mass
        else:
            merged.append([lam, mass])
    measure = JointSpectralMeasure(
        np.array([m[0] for m in merged]), np.array([m[1] for m in merged])
    )
    xm = np.asarray(x, dtype=complex)
    ym = np.asarray(y, dtype=complex)
    expected = float(np.trace((xm + ym) @ (xm + ym)).real)
    if abs(measure.total_mass - expected) > MASS_CHECK_TOL * (1.0 + expected):
        raise ValueError(
            f"total mass {measure.total_mass!r} does not match Tr((x+y)^2)"
            f" = {expected!r}"
        )
    return measure


@dataclass(eq=False)
class MeasureMoments:
    """The four moment functionals of a joint spectral measure."""

    norm_x_sq: float
    norm_y_sq: float
    chi_distance: float
    inner_product: float


def measure_moments(measure: JointSpectralMeasure) -> MeasureMoments:
    """Exact atom sums of l^2, (1-l)^2, |2l - 1| and l(1-l)."""
    l, m = measure.lambdas, measure.masses
    return MeasureMoments(
        norm_x_sq=float(np.sum(m * l**2)),
        norm_y_sq=float(np.sum(m * (1 - l) ** 2)),
        chi_distance=float(np.sum(m * np.abs(2 * l - 1))),
        inner_product=float(np.sum(m * l * (1 - l))),
    )


def threshold_chi_distance(x, y) -> float:
    """Squared L_2(tau) distance of the threshold projections.

    In the fiber model this is

        int_0^inf 2 t Tr( (chi_(t,inf)(x) - chi_(t,inf)(y))^2 ) dt,

    evaluated exactly: between consecutive eigenvalues both projections
    are constant and int 2 t dt telescopes to the squared breakpoints.
    """
    xv, xp, xdec = _psd_clusters(x, "x")
    yv, yp, ydec = _psd_clusters(y, "y")
    if xdec.dim != ydec.dim:
        raise ValueError(f"dimension mismatch: {xdec.dim} vs {ydec.dim}")
    zero_tol = max(xdec.merge_tol, ydec.merge_tol)
    points = sorted(
        set(_positive_breakpoints(xv, zero_tol) + _positive_breakpoints(yv, zero_tol))
    )
    total, prev = 0.0, 0.0
    for t in points:
        mid = (prev + t) / 2
        px = sum((p for v, p in zip(xv, xp) if v > mid), np.zeros_like(xp[0]))
        py = sum((p for v, p in zip(yv, yp) if v > mid), np.zeros_like(yp[0]))
        diff = px - py
        total += (t * t - prev * prev) * float(np.trace(diff @ diff).real)
        prev = t
    return total


@dataclass(eq=False)
class ConnesCertificate:
    """Two-sided comparison for a PSD pair:

    ||x - y||^2 <= ||chi(x-hat) - chi(y-hat)||^2_L2(tau)
                <= ||x - y|| ||x + y||.
    """

    lhs: float
    mid: float
    rhs: float
    holds: bool


def connes_certificate(x, y) -> ConnesCertificate:
    xm = np.asarray(x, dtype=complex)
    ym = np.asarray(y, dtype=complex)
    lhs = float(np.linalg.norm(xm - ym) ** 2)
    mid = threshold_chi_distance(x, y)
    rhs = float(np.linalg.norm(xm - ym) * np.linalg.norm(xm + ym))
    holds = lhs <= mid + CHAIN_SLACK and mid <= rhs + CHAIN_SLACK
    return ConnesCertificate(lhs, mid, rhs, holds)


@dataclass(eq=False)
class CommutatorCertificate:
    """Commutator chain for a unit vector x of L_2 and a PVM (p_k):

    sum_k ||[p_k, x]||^2 <= sum_k ||[p_k, chi(x-hat)]||^2_L2(tau)
                         <= 2 (sum_k ||[p_k, x]||^2)^(1/2).
    """

    sum_comm_x: float
    sum_comm_q: float
    upper: float
    holds: bool


def commutator_certificate(x, pvm) -> CommutatorCertificate:
    xv, xp, xdec = _psd_clusters(x, "x")
    xm = np.asarray(x, dtype=complex)
    norm_sq = float(np.trace(xm @ xm).real)
    if abs(norm_sq - 1.0) > NORMED_TOL:
        raise ValueError(f"x must satisfy Tr(x^2) = 1, got {norm_sq!r}")
    ops = require_pvm(pvm, xdec.dim)
    sum_comm_x = sum(
        float(np.linalg.norm(p @ xm - xm @ p) ** 2) for p in ops
    )
    points = _positive_breakpoints(xv, xdec.merge_tol)
    sum_comm_q, prev = 0.0, 0.0
    for t in points:
        mid = (prev + t) / 2
        proj = sum((q for v, q in zip(xv, xp) if v > mid), np.zeros_like(xp[0]))
        comm = sum(float(np.linalg.norm(p @ proj - proj @ p) ** 2) for p in ops)
        sum_comm_q += (t * t - prev * prev) * comm
        prev = t
    upper = float(2.0 * np.sqrt(sum_comm_x))
    holds = bool(
        sum_comm_x <= sum_comm_q + CHAIN_SLACK
        and sum_comm_q <= upper + CHAIN_SLACK
    )
    return CommutatorCertificate(sum_comm_x, sum_comm_q, upper, holds)


def lp_duality_check(x, y, p: float) -> float:
    """Residual of the trace duality between conjugate exponents.

    For PSD x (as an L_p element) and y (as an L_p' element),

        Tr(x y) = int_0^inf p t^(p-1) Tr( x^(1-p) chi_(t,inf)(x) y ) dt,

    with the right side evaluated exactly over the spectral breakpoints
    of x.  Returns |lhs - rhs|.
    """
    if not p > 1:
        raise ValueError(f"exponent must satisfy p > 1, got {p!r}")
    xv, xp, xdec = _psd_clusters(x, "x")
    ym = np.asarray(y, dtype=complex)
    low = float(np.linalg.eigvalsh(ym).min())
    if low < -PSD_CLAMP:
        raise ValueError(f"y is not PSD: min eigenvalue {low:.3e}")
    if ym.shape[0] != xdec.dim:
        raise ValueError(f"dimension mismatch: {xdec.dim} vs {ym.shape[0]}")
    xm = np.asarray(x, dtype=complex)
    lhs = float(np.trace(xm @ ym).real)
    overlaps = [float(np.trace(proj @ ym).real) for proj in xp]
    points = _positive_breakpoints(xv, xdec.merge_tol)
    rhs, prev = 0.0, 0.0
    for t in points:
        mid = (prev + t) / 2
        weighted = sum(
            a ** (1.0 - p) * ov for a, ov in zip(xv, overlaps) if a > mid
        )
        rhs += (t**p - prev**p) * weighted
        prev = t
    return abs(lhs - rhs)


def threshold_integral(x, p: float) -> float:
    """Exact weight integral int_0^inf p t^(p-1) Tr(chi_(t,inf)(x)) dt.

    Equals Tr(x^p) for PSD x; with p = 1 and a unit-trace density this
    is the normalization of the fiber weight.
    """
    if not p >= 1:
        raise ValueError(f"exponent must satisfy p >= 1, got {p!r}")
    xv, xp, xdec = _psd_clusters(x, "x")
    ranks = [float(np.trace(proj).real) for proj in xp]
    points = _positive_breakpoints(xv, xdec.merge_tol)
    total, prev = 0.0, 0.0
    for t in points:
        mid = (prev + t) / 2
        rank = sum(r for v, r in zip(xv, ranks) if v > mid)
        total += (t**p - prev**p) * rank
        prev = t
    return total
