"""Dense matrix kernels shared by the rest of the package.

Matrices are plain 2-D ``float64`` numpy arrays. The helpers here add the
validation and error reporting the higher layers rely on (shape names in
dimension errors, pivot index on Cholesky failure) on top of numpy/LAPACK.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack

SYMMETRY_RTOL = 1e-9


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible."""


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised by :func:`cholesky` when a pivot is not positive.

    Attributes:
        pivot: zero-based index of the leading minor that failed.
    """

    def __init__(self, pivot: int, message: str | None = None):
        self.pivot = pivot
        super().__init__(message or f"matrix is not positive definite (pivot {pivot})")


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D float64 array, raising on anything else."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"{name} must have positive dimensions, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator: PCG64 from numpy, stable across platforms for a given seed."""
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Check near-symmetry (relative Frobenius) and return ``(a + a.T) / 2``."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got {a.shape[0]}x{a.shape[1]}")
    scale = np.linalg.norm(a)
    if scale > 0 and np.linalg.norm(a - a.T) > SYMMETRY_RTOL * scale:
        raise ValueError("matrix is not symmetric within 1e-9 relative tolerance")
    return 0.5 * (a + a.T)


def cholesky(a, upper: bool = True) -> np.ndarray:
    """Cholesky factor of a symmetric positive definite matrix.

    Args:
        a: square SPD matrix. It is symmetrized before factorization.
        upper: return ``U`` with ``U.T @ U == a`` if true, otherwise ``L``
            with ``L @ L.T == a``.

    Raises:
        NotPositiveDefiniteError: with the zero-based index of the failing pivot.
    """
    a = symmetrize(a)
    factor, info = lapack.dpotrf(a, lower=not upper, clean=True, overwrite_a=False)
    if info > 0:
        raise NotPositiveDefiniteError(info - 1)
    if info < 0:  # pragma: no cover - argument error inside LAPACK
        raise ValueError(f"dpotrf rejected argument {-info}")
    return np.array(factor, dtype=np.float64, order="C")


def spd_inverse(a) -> np.ndarray:
    """Inverse of an SPD matrix through its Cholesky factor."""
    upper = cholesky(a, upper=True)
    inv, info = lapack.dpotri(upper, lower=False)
    if info != 0:  # pragma: no cover - dpotrf already succeeded
        raise NotPositiveDefiniteError(max(info - 1, 0))
    inv = np.triu(inv)
    return inv + np.triu(inv, 1).T


def truncated_svd(a, rank: int):
    """Best rank-``rank`` factors of ``a`` (Eckart-Young).

    Returns:
        ``(u, sigma, v)`` with ``u`` of shape (rows, rank), ``sigma``
        descending and ``v`` of shape (cols, rank), so that
        ``u @ np.diag(sigma) @ v.T`` is the optimal Frobenius approximation.
    """
    a = as_matrix(a)
    if not 1 <= rank <= min(a.shape):
        raise ValueError(f"rank {rank} out of range [1, {min(a.shape)}] for shape {a.shape}")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return u[:, :rank], s[:rank], vt[:rank].T


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR of a Gaussian with sign fix)."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))
