"""Ground-truth generators and elliptical samplers for the study designs.

Covariance structures:

* TR -- triangle covariance, exp(-|h_i - h_j|/2) with random uniform gaps;
  AR(1)-like, its precision is tridiagonal (sparse).
* AR -- dense precision 0.8^|i-j|.
* CS -- dense compound-symmetry precision (0.6 off-diagonal).

Sampling uses the stochastic representation of the elliptical family:
a standard normal tensor is shaped by the per-mode covariance square
roots and multiplied by a radial factor that selects the family.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor_ops import sym_inv, sym_sqrt

SUPPORT_TOL = 1e-8

MODEL_DIMS = {
    1: (30, 36, 30),
    2: (100, 100, 100),
    3: (10, 10, 50),
    4: (30, 36, 30),
    5: (30, 36, 30),
    6: (10, 10, 50),
}


@dataclass
class GroundTruth:
    """Per-mode covariance factors with their normalized precisions."""

    sigmas: list[np.ndarray]
    omegas: list[np.ndarray]          # unit Frobenius norm
    supports: list[np.ndarray]        # boolean off-diagonal masks
    fully_dense: list[bool]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.shape[0] for s in self.sigmas)


@dataclass
class DistSpec:
    kind: str = "normal"     # "normal", "t", "mixed"
    nu: float = 3.0
    gamma: float = 0.2
    sigma: float = 10.0

    def __post_init__(self):
        if self.kind not in ("normal", "t", "mixed"):
            raise ValueError(f"unknown distribution {self.kind!r}")
        if self.kind == "t" and self.nu <= 2:
            raise ValueError("t distribution needs nu > 2")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def label(self) -> str:
        if self.kind == "t":
            return f"t{self.nu:g}"
        if self.kind == "mixed":
            return f"mixed({self.gamma:g},{self.sigma:g})"
        return "normal"


def _support_from_omega(omega: np.ndarray, tol: float = SUPPORT_TOL) -> np.ndarray:
    mask = np.abs(omega) > tol
    np.fill_diagonal(mask, False)
    return mask


def _truth_entry(sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    omega = sym_inv(sigma, ridge=0.0)
    omega = omega / np.linalg.norm(omega)
    support = _support_from_omega(omega)
    p = sigma.shape[0]
    dense = bool(support.sum() == p * (p - 1))
    return sigma, omega, support, dense


def gen_tr(p: int, rng: np.random.Generator) -> np.ndarray:
    """Triangle covariance: exp(-|h_i - h_j|/2), gaps iid Unif(0.5, 1)."""
    if p < 2:
        raise ValueError("p must be >= 2")
    gaps = rng.uniform(0.5, 1.0, size=p - 1)
    h = np.concatenate(([0.0], np.cumsum(gaps)))
    return np.exp(-np.abs(h[:, None] - h[None, :]) / 2.0)


def gen_ar_precision(p: int, rho: float = 0.8) -> tuple[np.ndarray, np.ndarray]:
    """Dense AR precision 0.8^|i-j|; returns (normalized omega, its inverse)."""
    if p < 2:
        raise ValueError("p must be >= 2")
    idx = np.arange(p)
    omega = rho ** np.abs(idx[:, None] - idx[None, :])
    sigma = sym_inv(omega, ridge=0.0)
    return omega / np.linalg.norm(omega), sigma


def gen_cs_precision(p: int, rho: float = 0.6) -> tuple[np.ndarray, np.ndarray]:
    """Compound-symmetry precision: 1 on the diagonal, ``rho`` elsewhere."""
    if p < 2:
        raise ValueError("p must be >= 2")
    omega = np.full((p, p), rho)
    np.fill_diagonal(omega, 1.0)
    sigma = sym_inv(omega, ridge=0.0)
    return omega / np.linalg.norm(omega), sigma


def make_model(model_id: int, rng: np.random.Generator) -> GroundTruth:
    """One of the six preset truths; TR factors are redrawn from ``rng``."""
    if model_id not in MODEL_DIMS:
        raise ValueError(f"invalid model id {model_id}")
    dims = MODEL_DIMS[model_id]
    kinds = ["TR", "TR", "TR"]
    if model_id == 4:
        kinds[0] = "AR"
    elif model_id in (5, 6):
        kinds[0] = kinds[1] = "CS"

    sigmas, omegas, supports, dense = [], [], [], []
    for p, kind in zip(dims, kinds):
        if kind == "TR":
            s, o, m, d = _truth_entry(gen_tr(p, rng))
        elif kind == "AR":
            o, s = gen_ar_precision(p)
            m = _support_from_omega(o)
            d = True
        else:
            o, s = gen_cs_precision(p)
            m = _support_from_omega(o)
            d = True
        sigmas.append(s)
        omegas.append(o)
        supports.append(m)
        dense.append(d)
    return GroundTruth(sigmas, omegas, supports, dense)


def radial_factors(n: int, dist: DistSpec, rng: np.random.Generator) -> np.ndarray:
    """Per-sample multipliers on top of the shaped normal draw."""
    if dist.kind == "normal":
        return np.ones(n)
    if dist.kind == "t":
        chi2 = rng.chisquare(dist.nu, size=n)
        return np.sqrt(dist.nu / chi2)
    inflate = rng.random(n) < dist.gamma
    return np.where(inflate, dist.sigma, 1.0)


def sample(n: int, truth: GroundTruth, dist: DistSpec,
           rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` centered tensor samples, returned stacked (n, p_1, ..., p_K)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    dims = truth.dims
    z = rng.standard_normal((n,) + dims)
    for mode, sigma in enumerate(truth.sigmas):
        root = sym_sqrt(sigma, ridge=0.0)
        z = np.moveaxis(np.tensordot(z, root, axes=(mode + 1, 1)), -1, mode + 1)
    v = radial_factors(n, dist, rng)
    return z * v.reshape((n,) + (1,) * len(dims))


def mix64(x: int) -> int:
    """SplitMix64 finalizer; the documented integer-mixing function."""
    x &= 0xFFFFFFFFFFFFFFFF
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & 0xFFFFFFFFFFFFFFFF
    x = (x ^ (x >> 27)) * 0x94D049BB133111EB & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


def sub_seed(base_seed: int, index: int) -> int:
    """Independent per-replicate stream seed from (base_seed, index)."""
    return mix64((base_seed & 0xFFFFFFFFFFFFFFFF)
                 ^ (index * 0x9E3779B97F4A7C15 & 0xFFFFFFFFFFFFFFFF))


def replicate_rng(base_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(sub_seed(base_seed, index))
