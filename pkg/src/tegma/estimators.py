"""End-to-end per-mode precision estimators.

Three pipelines share one structure:

* ``sss`` -- sign-transformed samples, spatial-median centering, one solve
  per mode with fixed initial factors (fully separable across modes).
* ``sep`` -- mean-based scatter and centering, otherwise identical.
* ``cyc`` -- mean-based, but the factors are refreshed from the latest
  estimates, sweeping the modes repeatedly until they stop moving.

Each mode solve is a graphical-lasso problem on the mode scatter with the
effective penalty p_k * lambda_k; outputs are Frobenius-normalized.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import glasso, robust
from .glasso import SolverOptions, SolverResult
from .robust import CenterEstimate
from .tensor_ops import check_symmetric, sym_sqrt

METHODS = ("SSS", "Sep", "Cyc")


@dataclass
class EstimatorSpec:
    method: str = "SSS"
    lambdas: tuple[float, ...] = ()
    center_mode: str = "default"  # "default", "spatial_median", "sample_mean", "known"
    known_center: np.ndarray | None = None
    solver: SolverOptions = field(default_factory=SolverOptions)
    cyc_max_cycles: int = 10
    cyc_tol: float = 1e-4
    ridge: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.cyc_max_cycles < 1:
            raise ValueError("cyc_max_cycles must be >= 1")
        self.lambdas = tuple(float(l) for l in self.lambdas)
        if any(l < 0 for l in self.lambdas):
            raise ValueError("lambdas must be nonnegative")


@dataclass
class PrecisionSet:
    omegas: list[np.ndarray]
    center: CenterEstimate
    solver_results: list[SolverResult]
    lambdas: tuple[float, ...]
    method: str
    cycles: int = 0
    cyc_converged: bool = True


class ModeSolveError(RuntimeError):
    def __init__(self, mode: int, cause: Exception):
        super().__init__(f"solver failed at mode {mode}: {cause}")
        self.mode = mode
        self.cause = cause


def normalize_frob(a) -> np.ndarray:
    """Scale a matrix to unit Frobenius norm."""
    a = np.asarray(a, dtype=float)
    norm = np.linalg.norm(a)
    if norm == 0.0:
        raise ValueError("cannot normalize the zero matrix")
    return a / norm


def threshold_precision(omega, tau: float) -> np.ndarray:
    """Zero the off-diagonal entries with magnitude below ``tau``."""
    omega = check_symmetric(omega)
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    out = omega.copy()
    off = ~np.eye(omega.shape[0], dtype=bool)
    out[off & (np.abs(out) < tau)] = 0.0
    return 0.5 * (out + out.T)


def sign_pattern(a, tol: float = 1e-8) -> np.ndarray:
    """Entrywise sign with magnitudes below ``tol`` treated as zero."""
    a = np.asarray(a, dtype=float)
    s = np.sign(a)
    s[np.abs(a) <= tol] = 0.0
    return s


def _resolve_center(arr: np.ndarray, spec: EstimatorSpec, use_sign: bool) -> CenterEstimate:
    mode = spec.center_mode
    if mode == "default":
        mode = "spatial_median" if use_sign else "sample_mean"
    if mode == "known":
        if spec.known_center is None:
            raise ValueError("center_mode 'known' requires known_center")
        return CenterEstimate(np.asarray(spec.known_center, dtype=float), 0, True, 0.0)
    if mode == "spatial_median":
        return robust.spatial_median(arr)
    if mode == "sample_mean":
        return CenterEstimate(arr.mean(axis=0), 0, True, 0.0)
    raise ValueError(f"unknown center_mode {spec.center_mode!r}")


def _check_spec(arr: np.ndarray, spec: EstimatorSpec) -> tuple[float, ...]:
    ndim = arr.ndim - 1
    lambdas = spec.lambdas
    if len(lambdas) == 1 and ndim > 1:
        lambdas = lambdas * ndim
    if len(lambdas) != ndim:
        raise ValueError(f"need {ndim} lambdas, got {len(lambdas)}")
    if arr.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    return lambdas


def _solve_mode(scatter: np.ndarray, p_k: int, lam: float, spec: EstimatorSpec,
                mode: int, warm: SolverResult | None = None) -> SolverResult:
    opts = replace(spec.solver, lam=p_k * lam,
                   warm_start=(warm.omega, warm.sigma_hat) if warm is not None else None)
    try:
        return glasso.graphical_lasso(scatter, opts)
    except Exception as exc:
        raise ModeSolveError(mode, exc) from exc


def _separate_fit(arr: np.ndarray, spec: EstimatorSpec, use_sign: bool) -> PrecisionSet:
    lambdas = _check_spec(arr, spec)
    ndim = arr.ndim - 1
    center = _resolve_center(arr, spec, use_sign)
    inits = [robust.init_precision(arr, center.center, l, use_sign=use_sign, ridge=spec.ridge)
             for l in range(ndim)]
    factors = [sym_sqrt(o, spec.ridge) for o in inits]
    omegas = []
    results = []
    for k in range(ndim):
        if use_sign:
            scatter = robust.mode_sign_matrix(arr, center.center, k, factors)
        else:
            scatter = robust.mode_mean_matrix(arr, center.center, k, factors)
        res = _solve_mode(scatter.matrix, scatter.scale_dim, lambdas[k], spec, k)
        omegas.append(normalize_frob(res.omega))
        results.append(res)
    return PrecisionSet(omegas, center, results, lambdas, spec.method)


def estimate_sss(samples, spec: EstimatorSpec) -> PrecisionSet:
    """Sign-based separate estimator: one independent solve per mode."""
    if spec.method != "SSS":
        raise ValueError("spec.method must be 'SSS'")
    return _separate_fit(robust.stack_samples(samples), spec, use_sign=True)


def estimate_sep(samples, spec: EstimatorSpec) -> PrecisionSet:
    """Mean-based separate estimator (same pipeline without the sign transform)."""
    if spec.method != "Sep":
        raise ValueError("spec.method must be 'Sep'")
    return _separate_fit(robust.stack_samples(samples), spec, use_sign=False)


def estimate_cyc(samples, spec: EstimatorSpec) -> PrecisionSet:
    """Cyclic mean-based estimator: refresh factors from the latest estimates."""
    if spec.method != "Cyc":
        raise ValueError("spec.method must be 'Cyc'")
    arr = robust.stack_samples(samples)
    lambdas = _check_spec(arr, spec)
    ndim = arr.ndim - 1
    center = _resolve_center(arr, spec, use_sign=False)
    omegas = [robust.init_precision(arr, center.center, l, use_sign=False, ridge=spec.ridge)
              for l in range(ndim)]
    results: list[SolverResult | None] = [None] * ndim
    converged = False
    cycle = 0
    for cycle in range(1, spec.cyc_max_cycles + 1):
        prev = [o.copy() for o in omegas]
        for k in range(ndim):
            factors = [sym_sqrt(o, spec.ridge) for o in omegas]
            scatter = robust.mode_mean_matrix(arr, center.center, k, factors)
            res = _solve_mode(scatter.matrix, scatter.scale_dim, lambdas[k], spec, k,
                              warm=results[k])
            omegas[k] = normalize_frob(res.omega)
            results[k] = res
        change = max(np.linalg.norm(omegas[k] - prev[k]) for k in range(ndim))
        if change <= spec.cyc_tol:
            converged = True
            break
    return PrecisionSet(omegas, center, results, lambdas, spec.method,
                        cycles=cycle, cyc_converged=converged)


def estimate(samples, spec: EstimatorSpec) -> PrecisionSet:
    """Dispatch on ``spec.method``."""
    if spec.method == "SSS":
        return estimate_sss(samples, spec)
    if spec.method == "Sep":
        return estimate_sep(samples, spec)
    return estimate_cyc(samples, spec)
