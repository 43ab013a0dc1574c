"""Seeded random instance generators for sweeps and tests."""

from __future__ import annotations

import numpy as np

__all__ = [
    "rng_for",
    "random_unitary",
    "random_hermitian",
    "random_psd",
    "random_state",
    "random_pvm",
    "random_povm",
]


def rng_for(seed: int, *index: int) -> np.random.Generator:
    """Generator derived from a base seed and an instance index path."""
    return np.random.default_rng([int(seed), *map(int, index)])


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-distributed unitary via phase-fixed QR of a Ginibre matrix."""
    q, r = np.linalg.qr(_ginibre(rng, dim, dim))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = _ginibre(rng, dim, dim)
    return (g + g.conj().T) / 2


def random_psd(rng: np.random.Generator, dim: int, norm: str | None = None) -> np.ndarray:
    """Wishart-type PSD matrix; ``norm`` in {None, "fro", "trace"}."""
    g = _ginibre(rng, dim, dim)
    x = g @ g.conj().T
    x = (x + x.conj().T) / 2
    if norm == "fro":
        x = x / np.linalg.norm(x)
    elif norm == "trace":
        x = x / np.trace(x).real
    elif norm is not None:
        raise ValueError(f"unknown norm {norm!r}")
    return x


def random_state(rng: np.random.Generator, dim_a: int, dim_b: int) -> np.ndarray:
    """Unit coefficient matrix of a random bipartite pure state."""
    m = _ginibre(rng, dim_a, dim_b)
    return m / np.linalg.norm(m)


def random_pvm(rng: np.random.Generator, dim: int, n_outcomes: int) -> list[np.ndarray]:
    """Random PVM from a Haar basis split into near-equal column groups.

    When ``n_outcomes > dim`` the surplus outcomes are zero projections.
    """
    u = random_unitary(rng, dim)
    sizes = [dim // n_outcomes + (1 if i < dim % n_outcomes else 0) for i in range(n_outcomes)]
    out, c = [], 0
    for s in sizes:
        v = u[:, c : c + s]
        p = v @ v.conj().T
        out.append((p + p.conj().T) / 2)
        c += s
    return out


def random_povm(rng: np.random.Generator, dim: int, n_outcomes: int) -> list[np.ndarray]:
    """Random POVM by normalizing a family of Wishart matrices."""
    gs = [random_psd(rng, dim) for _ in range(n_outcomes)]
    total = sum(gs)
    w, v = np.linalg.eigh(total)
    inv_sqrt = (v * (w**-0.5)) @ v.conj().T
    out = []
    for g in gs:
        m = inv_sqrt @ g @ inv_sqrt
        out.append((m + m.conj().T) / 2)
    return out
