"""Dense-matrix utilities: Kronecker products, row-wise vectorization,
zero-padding embedding, SVD, symmetric eigendecomposition, spectral norms.

Everything works on float64 numpy arrays and is a pure function. Row-major
(C-order) storage throughout, so vec_row(A @ W @ B) == kron(A, B.T) @ vec_row(W)
holds without permutation matrices.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolationError, DimensionError, NumericalError

# Kronecker products larger than this (in entries) signal an experiment too
# large for desk scale; error out instead of thrashing.
KRON_ENTRY_CAP = 10_000_000

# Relative asymmetry tolerated by sym_eig; callers symmetrize first.
SYM_EIG_ASYMMETRY_TOL = 1e-8


def as_matrix(a) -> np.ndarray:
    """Coerce to a finite float64 2-D array, copying only if needed."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D array, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ContractViolationError("matrix contains NaN or Inf entries")
    return m


def kron(a, b, entry_cap: int = KRON_ENTRY_CAP) -> np.ndarray:
    """Kronecker product a ⊗ b with a configurable size cap."""
    a = as_matrix(a)
    b = as_matrix(b)
    entries = a.shape[0] * b.shape[0] * a.shape[1] * b.shape[1]
    if entries > entry_cap:
        raise DimensionError(
            f"Kronecker product would have {entries} entries (cap {entry_cap})"
        )
    return np.kron(a, b)


def vec_row(a) -> np.ndarray:
    """Row-wise vectorization: concatenate the rows into one vector."""
    return as_matrix(a).reshape(-1).copy()


def unvec_row(v, rows: int, cols: int) -> np.ndarray:
    """Inverse of vec_row. Exact (bitwise) round trip."""
    v = np.asarray(v, dtype=np.float64)
    if v.size != rows * cols:
        raise DimensionError(f"vector of length {v.size} is not {rows}x{cols}")
    return v.reshape(rows, cols).copy()


def pad_embed(b, rows: int, cols: int) -> np.ndarray:
    """Embed b into the top-left block of a rows x cols zero matrix."""
    b = as_matrix(b)
    if rows < b.shape[0] or cols < b.shape[1]:
        raise DimensionError(
            f"cannot pad {b.shape} into smaller target ({rows}, {cols})"
        )
    out = np.zeros((rows, cols))
    out[: b.shape[0], : b.shape[1]] = b
    return out


def svd(a):
    """Thin SVD a = U diag(s) V^T with s sorted descending.

    Returns (u, s, v) where u, v have orthonormal columns and v is NOT
    transposed (a ≈ u @ diag(s) @ v.T).
    """
    a = as_matrix(a)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    return u, s, vt.T


def sym_eig(s):
    """Eigendecomposition of a symmetric matrix, values sorted descending.

    The input must be symmetric up to rounding (relative max-entry asymmetry
    below 1e-8); it is symmetrized before the decomposition.
    """
    s = as_matrix(s)
    if s.shape[0] != s.shape[1]:
        raise DimensionError(f"sym_eig needs a square matrix, got {s.shape}")
    scale = np.max(np.abs(s))
    asym = np.max(np.abs(s - s.T)) if s.size else 0.0
    if scale > 0 and asym > SYM_EIG_ASYMMETRY_TOL * scale:
        raise ContractViolationError(
            f"input asymmetry {asym:.3e} exceeds {SYM_EIG_ASYMMETRY_TOL:.0e} x "
            f"max-entry {scale:.3e}"
        )
    try:
        values, vectors = np.linalg.eigh(0.5 * (s + s.T))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(values)[::-1]
    return values[order], vectors[:, order]


def sym_eigvalues(s) -> np.ndarray:
    """Eigenvalues only, sorted descending. Same contract as sym_eig."""
    s = as_matrix(s)
    values = np.linalg.eigvalsh(0.5 * (s + s.T))
    return values[::-1].copy()


def spectral_norm(a) -> float:
    """Largest singular value of a."""
    a = as_matrix(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def sym_spectral_norm(a) -> float:
    """Spectral norm of a (near-)symmetric matrix via eigvalsh; faster than
    a full SVD for the large assembled Hessians."""
    a = as_matrix(a)
    if a.size == 0:
        return 0.0
    values = np.linalg.eigvalsh(0.5 * (a + a.T))
    return float(max(abs(values[0]), abs(values[-1])))
