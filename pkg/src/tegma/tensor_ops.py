"""Order-K tensor algebra and symmetric-matrix helpers.

Tensors are plain numpy arrays.  Storage is colexicographic ("first index
fastest"), so ``vectorize`` matches column-stacking vectorization and

    vectorize(t x {A_1, ..., A_K}) == kron(A_K, ..., A_1) @ vectorize(t).

Modes are 0-based throughout the library; file formats and user-facing
documentation use 1-based mode numbers.
"""

from __future__ import annotations

import numpy as np


class NotPositiveDefiniteError(ValueError):
    """Raised when a positive-definite factorization fails."""


def check_tensor(t) -> np.ndarray:
    """Validate and return ``t`` as a float array."""
    arr = np.asarray(t, dtype=float)
    if arr.ndim < 1:
        raise ValueError("tensor must have at least one mode")
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor contains non-finite entries")
    return arr


def check_symmetric(a, tol: float = 1e-10) -> np.ndarray:
    """Validate that ``a`` is square, finite and symmetric within tolerance."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix contains non-finite entries")
    scale = 1.0 + np.abs(arr).max(initial=0.0)
    if np.abs(arr - arr.T).max(initial=0.0) > tol * scale:
        raise ValueError("matrix is not symmetric")
    return arr


def vectorize(t) -> np.ndarray:
    """Column-stacking vectorization (first index varies fastest)."""
    return check_tensor(t).reshape(-1, order="F")


def unvectorize(v, dims) -> np.ndarray:
    """Inverse of :func:`vectorize` for the given dimension vector."""
    v = np.asarray(v, dtype=float)
    dims = tuple(int(d) for d in dims)
    if v.size != int(np.prod(dims)):
        raise ValueError("vector length does not match dims")
    return v.reshape(dims, order="F")


def unfold(t, mode: int) -> np.ndarray:
    """Mode-``mode`` matricization, shape (p_mode, p*/p_mode).

    Columns enumerate the remaining indices colexicographically
    (Kolda-Bader convention).
    """
    t = check_tensor(t)
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for order-{t.ndim} tensor")
    return np.moveaxis(t, mode, 0).reshape((t.shape[mode], -1), order="F")


def fold(m, mode: int, dims) -> np.ndarray:
    """Inverse of :func:`unfold`: rebuild the tensor from its mode unfolding."""
    m = np.asarray(m, dtype=float)
    dims = tuple(int(d) for d in dims)
    if not 0 <= mode < len(dims):
        raise ValueError(f"mode {mode} out of range for dims {dims}")
    other = dims[:mode] + dims[mode + 1:]
    if m.shape != (dims[mode], int(np.prod(other, dtype=np.int64))):
        raise ValueError(f"matrix shape {m.shape} does not match dims {dims} at mode {mode}")
    t = m.reshape((dims[mode],) + other, order="F")
    return np.moveaxis(t, 0, mode)


def mode_product(t, a, mode: int) -> np.ndarray:
    """Mode-``mode`` product: unfold(result, mode) == a @ unfold(t, mode)."""
    t = check_tensor(t)
    a = np.asarray(a, dtype=float)
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for order-{t.ndim} tensor")
    if a.ndim != 2 or a.shape[1] != t.shape[mode]:
        raise ValueError(f"matrix shape {a.shape} does not conform to mode size {t.shape[mode]}")
    return np.moveaxis(np.tensordot(a, t, axes=(1, mode)), 0, mode)


def multi_mode_product(t, mats) -> np.ndarray:
    """Apply several mode products, ``mats`` a list of (matrix, mode) pairs.

    Modes must be distinct; the result does not depend on the order of the
    pairs.
    """
    t = check_tensor(t)
    seen = set()
    for a, mode in mats:
        if mode in seen:
            raise ValueError(f"duplicate mode {mode}")
        seen.add(mode)
    for a, mode in mats:
        t = mode_product(t, a, mode)
    return t


def kron(mats) -> np.ndarray:
    """Kronecker product of an ordered list of square matrices."""
    mats = [np.asarray(a, dtype=float) for a in mats]
    if not mats:
        raise ValueError("kron of an empty list")
    out = mats[0]
    for a in mats[1:]:
        out = np.kron(out, a)
    return out


def sym_eigen(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending."""
    a = check_symmetric(a)
    vals, vecs = np.linalg.eigh(a)
    return vals[::-1], vecs[:, ::-1]


def default_ridge(a) -> float:
    """Default eigenvalue clamp: 1e-10 * mean diagonal (0 if nonpositive)."""
    a = np.asarray(a, dtype=float)
    return 1e-10 * max(np.trace(a) / a.shape[0], 0.0)


def sym_sqrt(a, ridge: float | None = None) -> np.ndarray:
    """Symmetric PSD square root, eigenvalues clamped below at ``ridge``."""
    a = check_symmetric(a)
    if ridge is None:
        ridge = default_ridge(a)
    vals, vecs = np.linalg.eigh(a)
    vals = np.maximum(vals, ridge)
    r = (vecs * np.sqrt(vals)) @ vecs.T
    return 0.5 * (r + r.T)


def sym_inv(a, ridge: float | None = None) -> np.ndarray:
    """Inverse through the eigendecomposition, eigenvalues clamped at ``ridge``."""
    a = check_symmetric(a)
    if ridge is None:
        ridge = default_ridge(a)
    vals, vecs = np.linalg.eigh(a)
    vals = np.maximum(vals, ridge)
    if np.any(vals <= 0.0):
        raise NotPositiveDefiniteError("matrix not invertible after clamping (ridge=0)")
    r = (vecs / vals) @ vecs.T
    return 0.5 * (r + r.T)


def logdet_pd(a) -> float:
    """Log-determinant of a positive-definite matrix via Cholesky."""
    a = np.asarray(a, dtype=float)
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("matrix is not positive definite") from exc
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def frob_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float)))


def trace(a) -> float:
    return float(np.trace(np.asarray(a, dtype=float)))
