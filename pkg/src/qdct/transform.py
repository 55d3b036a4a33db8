"""Orthonormal DCT-II linear algebra.

The transform matrix built here is both the signal-processing backend of
the compression pipeline and the coefficient source for the search
oracles: component u of the transform is the inner product of basis row
u with the input, which is exactly the quantity the marking predicate
thresholds.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "build_dct_matrix",
    "dct1d",
    "idct1d",
    "dct2d",
    "idct2d",
    "energy",
]


def build_dct_matrix(n: int) -> np.ndarray:
    """Return the n-by-n orthonormal DCT-II matrix.

    Row u has entries ``a_u * cos((2k+1) u pi / (2n))`` with
    ``a_0 = 1/sqrt(n)`` and ``a_u = sqrt(2/n)`` for u >= 1.  Rows are the
    cosine basis vectors; the matrix times its transpose is the identity
    to machine precision.
    """
    if n < 1:
        raise ValueError(f"transform size must be a positive integer, got {n}")
    k = np.arange(n, dtype=np.float64)
    u = k[:, np.newaxis]
    d = np.cos((2.0 * k + 1.0) * u * (np.pi / (2.0 * n)))
    d[0, :] *= np.sqrt(1.0 / n)
    d[1:, :] *= np.sqrt(2.0 / n)
    return d


def _check_matrix(d: np.ndarray) -> int:
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"transform matrix must be square, got shape {d.shape}")
    return d.shape[0]


def dct1d(f: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Forward 1-D transform: component u is basis row u dotted with f."""
    n = _check_matrix(d)
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (n,):
        raise ValueError(f"signal length {f.shape} does not match transform size {n}")
    return d @ f


def idct1d(c: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Inverse 1-D transform (transpose of the forward matrix)."""
    n = _check_matrix(d)
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (n,):
        raise ValueError(f"coefficient length {c.shape} does not match transform size {n}")
    return d.T @ c


def dct2d(m: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Forward 2-D transform via separability: columns first, then rows.

    Computed as two matrix products, ``d @ m @ d.T``.
    """
    n = _check_matrix(d)
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (n, n):
        raise ValueError(f"input shape {m.shape} does not match transform size {n}")
    return d @ m @ d.T


def idct2d(c: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Inverse 2-D transform, ``d.T @ c @ d``."""
    n = _check_matrix(d)
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (n, n):
        raise ValueError(f"input shape {c.shape} does not match transform size {n}")
    return d.T @ c @ d


def energy(x: np.ndarray) -> float:
    """Sum of squared entries of a vector or matrix."""
    x = np.asarray(x, dtype=np.float64)
    flat = x.ravel()
    return float(flat @ flat)
