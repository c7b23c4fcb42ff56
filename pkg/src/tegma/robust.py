"""Spatial-sign transform, spatial median and sign-based scatter matrices.

The scatter builders accept samples either as a list of equally shaped
arrays or as one stacked array whose leading axis indexes samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor_ops import check_tensor, sym_inv

SIGN_EPS_REL = 1e-12


def stack_samples(samples) -> np.ndarray:
    """Stack a sample collection into one (n, p_1, ..., p_K) array."""
    if isinstance(samples, np.ndarray) and samples.ndim >= 2:
        arr = np.asarray(samples, dtype=float)
    else:
        samples = list(samples)
        if not samples:
            raise ValueError("empty sample list")
        arr = np.stack([check_tensor(s) for s in samples])
    if arr.shape[0] < 1:
        raise ValueError("empty sample list")
    return arr


@dataclass
class CenterEstimate:
    """Result of the spatial-median iteration."""

    center: np.ndarray
    iterations: int
    converged: bool
    final_step: float

    @property
    def dims(self):
        return self.center.shape


@dataclass
class SignScatter:
    """A (scaled) scatter matrix built from sign-transformed samples."""

    matrix: np.ndarray
    scale_dim: int
    n: int


def spatial_sign(t, center, eps: float = 0.0) -> np.ndarray:
    """Direction of ``t - center``; zero when the difference norm is <= eps."""
    t = check_tensor(t)
    center = check_tensor(center)
    if t.shape != center.shape:
        raise ValueError(f"dimension mismatch: {t.shape} vs {center.shape}")
    diff = t - center
    norm = np.linalg.norm(diff)
    if norm <= max(eps, 0.0) or norm == 0.0:
        return np.zeros_like(diff)
    return diff / norm


def _objective(flat: np.ndarray, y: np.ndarray) -> float:
    return float(np.linalg.norm(flat - y, axis=1).sum())


def spatial_median(samples, tol: float = 1e-8, max_iter: int = 200) -> CenterEstimate:
    """Minimize sum_i ||T_i - mu|| by the modified Weiszfeld iteration.

    Starts from the coordinate-wise mean; when an iterate lands on a data
    point the Vardi-Zhang correction step is taken.
    """
    arr = stack_samples(samples)
    n = arr.shape[0]
    dims = arr.shape[1:]
    flat = arr.reshape(n, -1)
    if n == 1:
        return CenterEstimate(arr[0].copy(), 0, True, 0.0)

    mean = flat.mean(axis=0)
    spread = float(np.linalg.norm(flat - mean, axis=1).max())
    if spread == 0.0:
        return CenterEstimate(mean.reshape(dims), 0, True, 0.0)
    eta = tol * spread

    y = mean.copy()
    obj = _objective(flat, y)
    step = np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        d = np.linalg.norm(flat - y, axis=1)
        on_point = d <= eta
        if not on_point.any():
            w = 1.0 / d
            y_new = (w[:, None] * flat).sum(axis=0) / w.sum()
        else:
            j = int(np.argmax(on_point))
            mask = ~on_point
            if not mask.any():
                break
            w = 1.0 / d[mask]
            r_vec = ((flat[mask] - y) / d[mask, None]).sum(axis=0)
            r = float(np.linalg.norm(r_vec))
            # multiplicity of the coincident point acts as the singular weight
            m = float(on_point.sum())
            if r <= m:
                break
            t_tilde = (w[:, None] * flat[mask]).sum(axis=0) / w.sum()
            lam = m / r
            y_new = (1.0 - lam) * t_tilde + lam * y
        obj_new = _objective(flat, y_new)
        if obj_new > obj + 1e-12 * (1.0 + obj):
            # safeguarded: never accept an ascent step
            break
        step = float(np.linalg.norm(y_new - y))
        y = y_new
        obj = obj_new
        if step <= eta:
            converged = True
            break
    if step <= eta:
        converged = True
    return CenterEstimate(y.reshape(dims), it, converged, float(step if np.isfinite(step) else 0.0))


def sign_samples(samples, center, eps_rel: float = SIGN_EPS_REL) -> np.ndarray:
    """Spatial-sign transform of every sample, stacked."""
    arr = stack_samples(samples)
    center = check_tensor(center)
    if arr.shape[1:] != center.shape:
        raise ValueError(f"dimension mismatch: {arr.shape[1:]} vs {center.shape}")
    flat = (arr - center).reshape(arr.shape[0], -1)
    norms = np.linalg.norm(flat, axis=1)
    eps = eps_rel * norms.max(initial=0.0)
    safe = np.where(norms > eps, norms, 1.0)
    flat = np.where((norms > eps)[:, None], flat / safe[:, None], 0.0)
    return flat.reshape(arr.shape)


def sign_covariance_full(samples, center) -> SignScatter:
    """Full spatial-sign covariance: (p*/n) sum_i vec(U_i) vec(U_i)^T."""
    signs = sign_samples(samples, center)
    n = signs.shape[0]
    p_star = int(np.prod(signs.shape[1:]))
    flat = np.moveaxis(signs, 0, -1).reshape((-1, n), order="F").T
    mat = (p_star / n) * (flat.T @ flat)
    return SignScatter(0.5 * (mat + mat.T), p_star, n)


def _batched_mode_products(arr: np.ndarray, factors, skip: int) -> np.ndarray:
    """Apply per-mode matrices to every sample; identity at mode ``skip``."""
    ndim = arr.ndim - 1
    for mode in range(ndim):
        if mode == skip:
            continue
        a = np.asarray(factors[mode], dtype=float)
        if a.shape != (arr.shape[mode + 1], arr.shape[mode + 1]):
            raise ValueError(f"factor for mode {mode} has shape {a.shape}, "
                             f"expected {(arr.shape[mode + 1],) * 2}")
        arr = np.moveaxis(np.tensordot(arr, a, axes=(mode + 1, 1)), -1, mode + 1)
    return arr


def _batch_unfold(arr: np.ndarray, mode: int) -> np.ndarray:
    """Mode unfolding of every sample: (n, p_mode, p*/p_mode)."""
    n = arr.shape[0]
    p_k = arr.shape[mode + 1]
    # sample axis last so the Fortran reshape flattens only the other modes,
    # keeping the colexicographic column order
    moved = np.moveaxis(arr, (0, mode + 1), (-1, 0))
    return np.moveaxis(moved.reshape((p_k, -1, n), order="F"), -1, 0)


def _scatter_from_transformed(arr: np.ndarray, mode: int, scale: float) -> np.ndarray:
    v = _batch_unfold(arr, mode)
    mat = scale * np.einsum("nij,nkj->ik", v, v, optimize=True)
    return 0.5 * (mat + mat.T)


def mode_sign_matrix(samples, center, mode: int, sqrt_factors) -> SignScatter:
    """Mode scatter of sign-transformed samples with fixed square-root factors.

    ``sqrt_factors`` is a list with one matrix per mode; the entry at
    ``mode`` is ignored (identity is used there).  Returns
    (p_mode/n) sum_i V_i V_i^T, symmetrized.
    """
    signs = sign_samples(samples, center)
    n = signs.shape[0]
    ndim = signs.ndim - 1
    if not 0 <= mode < ndim:
        raise ValueError(f"mode {mode} out of range")
    if len(sqrt_factors) != ndim:
        raise ValueError(f"expected {ndim} factors, got {len(sqrt_factors)}")
    transformed = _batched_mode_products(signs, sqrt_factors, skip=mode)
    p_k = signs.shape[mode + 1]
    mat = _scatter_from_transformed(transformed, mode, p_k / n)
    return SignScatter(mat, p_k, n)


def mode_mean_matrix(samples, center, mode: int, sqrt_factors) -> SignScatter:
    """Mean-based analogue of :func:`mode_sign_matrix`.

    Uses plain centering instead of the sign transform and the sample
    covariance scaling p_mode/(p* n).
    """
    arr = stack_samples(samples)
    center = check_tensor(center)
    if arr.shape[1:] != center.shape:
        raise ValueError(f"dimension mismatch: {arr.shape[1:]} vs {center.shape}")
    centered = arr - center
    n = arr.shape[0]
    ndim = arr.ndim - 1
    if not 0 <= mode < ndim:
        raise ValueError(f"mode {mode} out of range")
    if len(sqrt_factors) != ndim:
        raise ValueError(f"expected {ndim} factors, got {len(sqrt_factors)}")
    transformed = _batched_mode_products(centered, sqrt_factors, skip=mode)
    p_k = arr.shape[mode + 1]
    p_star = int(np.prod(arr.shape[1:]))
    mat = _scatter_from_transformed(transformed, mode, p_k / (p_star * n))
    return SignScatter(mat, p_k, n)


def init_precision(samples, center, mode: int, use_sign: bool = True,
                   ridge: float | None = None) -> np.ndarray:
    """Initial per-mode precision: inverse mode scatter when the sample
    budget allows (n p* > p^2(p-1)/2), identity otherwise.

    Output is Frobenius-normalized to 1.
    """
    arr = stack_samples(samples)
    n = arr.shape[0]
    ndim = arr.ndim - 1
    if not 0 <= mode < ndim:
        raise ValueError(f"mode {mode} out of range")
    p = arr.shape[mode + 1]
    p_star = int(np.prod(arr.shape[1:]))
    if n * p_star > p * p * (p - 1) / 2:
        if use_sign:
            base = sign_samples(arr, center)
            scale = p / n
        else:
            base = arr - check_tensor(center)
            scale = p / (p_star * n)
        mat = _scatter_from_transformed(base, mode, scale)
        omega = sym_inv(mat, ridge)
    else:
        omega = np.eye(p)
    return omega / np.linalg.norm(omega)
