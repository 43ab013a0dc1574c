"""Dense Hermitian spectral calculus.

Eigendecomposition with a deterministic phase convention, spectral
projections above a threshold, and functional calculus for positive
semidefinite matrices, plus the matrix validation helpers (Hermitian /
PSD / PVM / POVM) shared by the rest of the package.  Everything works
on plain complex numpy arrays at desk scale (dense, dimension up to a
few hundred).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "HERMITIAN_TOL",
    "DECOMP_TOL",
    "MERGE_TOL_SCALE",
    "PSD_CLAMP",
    "PVM_TOL",
    "POVM_TOL",
    "SpectralDecomposition",
    "require_hermitian",
    "require_psd",
    "require_pvm",
    "require_povm",
    "eigh",
    "spectral_projection_above",
    "functional_calculus",
]

HERMITIAN_TOL = 1e-12     # relative entrywise Hermitianity tolerance
DECOMP_TOL = 1e-10        # reconstruction / orthonormality tolerance
MERGE_TOL_SCALE = 1e-9    # eigenvalue clustering: tol = scale * (1 + spectral radius)
PSD_CLAMP = 1e-10         # eigenvalues in [-PSD_CLAMP, 0) are clamped to 0
PVM_TOL = 1e-8            # projection / partition-of-unity tolerance (Frobenius)
POVM_TOL = 1e-8


def require_hermitian(matrix, what: str = "matrix") -> np.ndarray:
    """Validate Hermitianity entrywise and return the complex ndarray.

    The deviation max |H - H*| must not exceed
    ``HERMITIAN_TOL * (1 + max |H|)``.
    """
    h = np.asarray(matrix, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"{what} must be a square matrix, got shape {h.shape}")
    if h.size == 0:
        raise ValueError(f"{what} must be non-empty")
    scale = float(np.abs(h).max())
    deviation = float(np.abs(h - h.conj().T).max())
    allowed = HERMITIAN_TOL * (1.0 + scale)
    if deviation > allowed:
        raise ValueError(
            f"{what} is not Hermitian: max entry of |H - H*| is {deviation:.3e}"
            f" which exceeds the allowed {allowed:.3e}"
        )
    return h


def require_psd(matrix, what: str = "matrix") -> np.ndarray:
    """Validate that ``matrix`` is Hermitian PSD up to the clamp tolerance."""
    h = require_hermitian(matrix, what)
    low = float(np.linalg.eigvalsh(h).min()) if h.size else 0.0
    if low < -PSD_CLAMP:
        raise ValueError(
            f"{what} is not positive semidefinite: min eigenvalue {low:.3e}"
            f" is below the clamp -{PSD_CLAMP:.0e}"
        )
    return h


def require_pvm(family, dim: int, what: str = "PVM") -> list[np.ndarray]:
    """Validate a projection-valued family summing to the identity.

    Each element must be Hermitian with ``||p^2 - p||_F <= PVM_TOL`` and
    the family must sum to the identity within ``PVM_TOL`` in Frobenius
    norm.  Zero elements are allowed.
    """
    if len(family) == 0:
        raise ValueError(f"{what} must have at least one outcome")
    ops = []
    for k, p in enumerate(family):
        p = require_hermitian(p, f"{what} element {k}")
        if p.shape != (dim, dim):
            raise ValueError(
                f"{what} element {k} has shape {p.shape}, expected {(dim, dim)}"
            )
        idem = float(np.linalg.norm(p @ p - p))
        if idem > PVM_TOL:
            raise ValueError(
                f"{what} element {k} is not a projection: ||p^2 - p||_F = {idem:.3e}"
            )
        ops.append(p)
    total = sum(ops)
    dev = float(np.linalg.norm(total - np.eye(dim)))
    if dev > PVM_TOL:
        raise ValueError(
            f"{what} does not sum to the identity: ||sum - 1||_F = {dev:.3e}"
        )
    return ops


def require_povm(family, dim: int, what: str = "POVM") -> list[np.ndarray]:
    """Validate a positive family summing to the identity within POVM_TOL."""
    if len(family) == 0:
        raise ValueError(f"{what} must have at least one outcome")
    ops = []
    for k, m in enumerate(family):
        m = require_hermitian(m, f"{what} element {k}")
        if m.shape != (dim, dim):
            raise ValueError(
                f"{what} element {k} has shape {m.shape}, expected {(dim, dim)}"
            )
        low = float(np.linalg.eigvalsh(m).min())
        if low < -POVM_TOL:
            raise ValueError(
                f"{what} element {k} is not PSD: min eigenvalue {low:.3e}"
            )
        ops.append(m)
    dev = float(np.linalg.norm(sum(ops) - np.eye(dim)))
    if dev > POVM_TOL:
        raise ValueError(
            f"{what} does not sum to the identity: ||sum - 1||_F = {dev:.3e}"
        )
    return ops


@dataclass(eq=False)
class SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    ``eigenvalues`` are ascending, ``eigenvectors`` holds the matching
    orthonormal columns, and ``clusters`` partitions the indices into
    groups of eigenvalues equal within ``merge_tol``, ordered so that the
    cluster representatives are strictly decreasing.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    clusters: tuple[tuple[int, ...], ...]
    merge_tol: float

    @property
    def dim(self) -> int:
        return self.eigenvectors.shape[0]

    def cluster_values(self) -> np.ndarray:
        """Representative (mean) eigenvalue per cluster, strictly decreasing."""
        return np.array(
            [float(np.mean(self.eigenvalues[list(c)])) for c in self.clusters]
        )

    def cluster_projection(self, k: int) -> np.ndarray:
        """Orthogonal projection onto the span of cluster ``k``."""
        v = self.eigenvectors[:, list(self.clusters[k])]
        p = v @ v.conj().T
        return (p + p.conj().T) / 2

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.conj().T


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of each column real positive."""
    v = vectors.copy()
    for j in range(v.shape[1]):
        i = int(np.argmax(np.abs(v[:, j])))
        a = v[i, j]
        if np.abs(a) > 0:
            v[:, j] *= np.conj(a) / np.abs(a)
    return v


def _cluster_indices(values: np.ndarray, tol: float) -> tuple[tuple[int, ...], ...]:
    groups: list[list[int]] = []
    for i, w in enumerate(values):
        if groups and w - values[groups[-1][-1]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    # values ascending, clusters reported by decreasing representative
    return tuple(tuple(g) for g in reversed(groups))


def eigh(matrix, what: str = "matrix") -> SpectralDecomposition:
    """Eigendecompose a Hermitian matrix with deterministic phases.

    Returns eigenvalues ascending together with the unitary of
    eigenvectors and the degenerate clusters.  Raises ``ValueError`` on
    non-Hermitian input, reporting the violating entry norm.
    """
    h = require_hermitian(matrix, what)
    w, v = np.linalg.eigh(h)
    v = _fix_phases(v)
    radius = float(np.abs(w).max()) if w.size else 0.0
    tol = MERGE_TOL_SCALE * (1.0 + radius)
    dec = SpectralDecomposition(w, v, _cluster_indices(w, tol), tol)
    recon = float(np.linalg.norm(dec.reconstruct() - h))
    if recon > DECOMP_TOL * (1.0 + float(np.linalg.norm(h))):
        raise ValueError(
            f"eigendecomposition of {what} failed to reconstruct: residual {recon:.3e}"
        )
    ortho = float(np.linalg.norm(v.conj().T @ v - np.eye(h.shape[0])))
    if ortho > DECOMP_TOL:
        raise ValueError(
            f"eigenvectors of {what} are not orthonormal: residual {ortho:.3e}"
        )
    return dec


def spectral_projection_above(matrix, threshold: float) -> np.ndarray:
    """Orthogonal projection onto eigenvectors with eigenvalue > threshold.

    The threshold must not collide with an eigenvalue within the merge
    tolerance; callers integrate piecewise between eigenvalues and should
    evaluate at interval midpoints.
    """
    dec = matrix if isinstance(matrix, SpectralDecomposition) else eigh(matrix)
    gap = float(np.abs(dec.eigenvalues - threshold).min())
    if gap <= dec.merge_tol:
        raise ValueError(
            f"threshold {threshold!r} collides with an eigenvalue within the merge"
            f" tolerance {dec.merge_tol:.3e}; evaluate at interval midpoints instead"
        )
    sel = dec.eigenvalues > threshold
    v = dec.eigenvectors[:, sel]
    p = v @ v.conj().T
    return (p + p.conj().T) / 2


def _psd_eigenvalues(dec: SpectralDecomposition, what: str) -> np.ndarray:
    w = dec.eigenvalues
    if w.size and float(w.min()) < -PSD_CLAMP:
        raise ValueError(
            f"{what} is not positive semidefinite: min eigenvalue {float(w.min()):.3e}"
            f" is below the clamp -{PSD_CLAMP:.0e}"
        )
    return np.clip(w, 0.0, None)


def functional_calculus(
    matrix,
    kind: str,
    *,
    exponent: float | None = None,
    threshold: float | None = None,
) -> np.ndarray:
    """Apply a named scalar function to a Hermitian matrix spectrally.

    Supported kinds:

    - ``"sqrt"``: eigenvalue square root; input must be PSD up to clamp.
    - ``"pinv_sqrt"``: Moore-Penrose inverse square root; eigenvalues
      below the zero clamp map to 0.
    - ``"power"``: eigenvalue power ``exponent`` (non-zero); negative
      exponents follow the Moore-Penrose convention on the kernel.
    - ``"indicator_above"``: the spectral projection above ``threshold``
      (same code path as :func:`spectral_projection_above`).
    """
    if kind == "indicator_above":
        if threshold is None:
            raise ValueError("indicator_above requires a threshold")
        return spectral_projection_above(matrix, threshold)
    dec = matrix if isinstance(matrix, SpectralDecomposition) else eigh(matrix)
    w = _psd_eigenvalues(dec, "functional calculus input")
    if kind == "sqrt":
        vals = np.sqrt(w)
    elif kind == "pinv_sqrt":
        vals = np.zeros_like(w)
        mask = w >= PSD_CLAMP
        vals[mask] = w[mask] ** -0.5
    elif kind == "power":
        if exponent is None or exponent == 0:
            raise ValueError("power requires a non-zero exponent")
        vals = np.zeros_like(w)
        mask = w >= PSD_CLAMP
        vals[mask] = w[mask] ** exponent
        if exponent > 0:
            small = (~mask) & (w > 0)
            vals[small] = w[small] ** exponent
    else:
        raise ValueError(f"unknown functional calculus kind {kind!r}")
    out = (dec.eigenvectors * vals) @ dec.eigenvectors.conj().T
    return (out + out.conj().T) / 2
