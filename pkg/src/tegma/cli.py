"""Command-line front end.

Subcommands: simulate, estimate, experiment, tune, eval.  Shared flags
(--seed, --jobs, --config, --output, --convention, --slow-ok) are
accepted by every subcommand; TEGMA_JOBS sets the default parallelism.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import evaluation, experiment, simulation, tenio
from .estimators import EstimatorSpec, estimate, threshold_precision
from .simulation import GroundTruth
from .tensor_ops import sym_inv


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("TEGMA_JOBS", "1")))
    except ValueError:
        return 1


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--jobs", type=int, default=None)
    sub.add_argument("--config", type=Path, default=None)
    sub.add_argument("--output", type=Path, default=None)
    sub.add_argument("--convention", choices=evaluation.CONVENTIONS,
                     default="covariance-trace")
    sub.add_argument("--slow-ok", action="store_true")


def _read_samples(paths: list[Path]) -> np.ndarray:
    samples = []
    dims = None
    for p in paths:
        t = tenio.read_tensor(p)
        if dims is None:
            dims = t.shape
        elif t.shape != dims:
            raise SystemExit(f"error: dimension mismatch in {p}: "
                             f"{t.shape} vs {dims}")
        samples.append(t)
    if len(samples) < 2:
        raise SystemExit("error: need at least 2 input samples")
    return np.stack(samples)


def _read_sample_dir(d: Path) -> np.ndarray:
    paths = sorted(list(d.glob("*.ten")) + list(d.glob("*.tenb")))
    if not paths:
        raise SystemExit(f"error: no tensor files in {d}")
    return _read_samples(paths)


def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


# ---------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    out = args.output or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    dist = experiment.parse_distribution(args.dist)
    rng = np.random.default_rng(args.seed)
    truth = simulation.make_model(args.model, rng)
    samples = simulation.sample(args.n, truth, dist, rng)
    ext = ".tenb" if args.binary else ".ten"
    files = []
    for i in range(args.n):
        name = f"sample_{i:04d}{ext}"
        tenio.write_tensor(out / name, samples[i])
        files.append(name)
    truth_files = {}
    for k, (sig, om) in enumerate(zip(truth.sigmas, truth.omegas)):
        sname, oname = f"sigma_mode{k + 1}.csv", f"omega_mode{k + 1}.csv"
        tenio.write_matrix_csv(out / sname, sig)
        tenio.write_matrix_csv(out / oname, om)
        truth_files[f"mode{k + 1}"] = {"sigma": sname, "omega": oname}
    manifest = {"model": args.model, "distribution": dist.label, "n": args.n,
                "seed": args.seed, "dims": list(truth.dims), "files": files,
                "truth": truth_files}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {args.n} samples and truth matrices to {out}")
    return 0


# ---------------------------------------------------------------- estimate

def cmd_estimate(args) -> int:
    arr = _read_samples(args.inputs)
    if args.standardize == "entrywise":
        mean = arr.mean(axis=0)
        std = arr.std(axis=0, ddof=1)
        arr = (arr - mean) / np.where(std > 0, std, 1.0)
    spread = max(float(np.linalg.norm(x - arr.mean(axis=0))) for x in arr)
    if spread == 0.0:
        raise SystemExit("error: degenerate sample (zero spread)")
    if args.lambdas is not None:
        lambdas = tuple(_parse_floats(args.lambdas))
    else:
        # no lambdas given: tune on an even/odd split of the inputs
        grid = _parse_floats(args.grid) if args.grid else None
        tuned = evaluation.tune(arr[0::2], arr[1::2], args.method, grid)
        lambdas = tuple(tuned.lambdas)
    est = estimate(arr, EstimatorSpec(method=args.method, lambdas=lambdas))
    out = args.output or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    for k, om in enumerate(est.omegas):
        if args.threshold is not None:
            om = threshold_precision(om, args.threshold)
        tenio.write_matrix_csv(out / f"omega_mode{k + 1}.csv", om)
    diag = {"method": args.method, "lambdas": list(est.lambdas),
            "standardize": args.standardize, "threshold": args.threshold,
            "center_iterations": est.center.iterations,
            "center_converged": est.center.converged,
            "solver": [{"iterations": r.iterations,
                        "kkt_residual": r.kkt_residual,
                        "converged": r.converged} for r in est.solver_results]}
    (out / "diagnostics.json").write_text(json.dumps(diag, indent=2) + "\n")
    print(f"wrote {len(est.omegas)} precision matrices to {out}")
    return 0


# -------------------------------------------------------------- experiment

def cmd_experiment(args) -> int:
    if args.config is None:
        raise SystemExit("error: experiment requires --config")
    try:
        cfg = tenio.load_config(args.config)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise SystemExit(f"error: {exc}")
    if args.jobs is not None:
        cfg["jobs"] = args.jobs
    if args.output is not None:
        cfg["output_path"] = str(args.output)
    if args.slow_ok:
        cfg["slow_ok"] = True
    try:
        experiment.run_experiment(cfg)
    except ValueError as exc:
        raise SystemExit(f"error: {exc}")
    print(f"wrote {cfg['output_path']}")
    return 0


# -------------------------------------------------------------------- tune

def cmd_tune(args) -> int:
    train = _read_sample_dir(args.train)
    grid = _parse_floats(args.grid) if args.grid else None
    if args.folds and args.folds > 1:
        arr = train
        if args.val is not None:
            arr = np.concatenate([arr, _read_sample_dir(args.val)])
        chosen, curves = _tune_cv(arr, args.method, grid, args.folds)
    else:
        if args.val is None:
            raise SystemExit("error: tune requires --val (or --folds F)")
        res = evaluation.tune(train, _read_sample_dir(args.val),
                              args.method, grid)
        chosen, curves = res.lambdas, res.curves
    for k, lam in enumerate(chosen):
        print(f"mode {k + 1}: lambda = {tenio.format_float(lam)}")
    if args.output is not None:
        lines = ["mode,lambda,loss"]
        for k, curve in enumerate(curves):
            for lam, loss in curve:
                lines.append(f"{k + 1},{tenio.format_float(lam)},"
                             f"{tenio.format_float(loss)}")
        args.output.write_text("\n".join(lines) + "\n")
    return 0


def _tune_cv(arr: np.ndarray, method: str, grid, folds: int):
    """F-fold cross-validation: per-mode validation loss averaged over folds."""
    n = arr.shape[0]
    if folds > n:
        raise SystemExit(f"error: {folds} folds but only {n} samples")
    assign = np.arange(n) % folds
    splits = [(arr[assign != f], arr[assign == f]) for f in range(folds)]
    first = evaluation.tune(splits[0][0], splits[0][1], method, grid)
    ndim = len(first.lambdas)
    chosen, curves = [], []
    for k in range(ndim):
        grid_k = np.array([lam for lam, _ in first.curves[k]])
        total = np.array([loss for _, loss in first.curves[k]])
        for tr, va in splits[1:]:
            res = evaluation.tune(tr, va, method, grid_k)
            total += np.array([loss for _, loss in res.curves[k]])
        total /= folds
        best_loss = total.min()
        best = max(i for i in range(grid_k.size) if total[i] <= best_loss)
        chosen.append(float(grid_k[best]))
        curves.append([(float(grid_k[i]), float(total[i]))
                       for i in range(grid_k.size)])
    return chosen, curves


# -------------------------------------------------------------------- eval

def _read_truth_dir(d: Path) -> GroundTruth:
    sigmas, omegas, supports, dense = [], [], [], []
    k = 1
    while (d / f"omega_mode{k}.csv").exists():
        om = tenio.read_matrix_csv(d / f"omega_mode{k}.csv")
        sig_path = d / f"sigma_mode{k}.csv"
        sig = tenio.read_matrix_csv(sig_path) if sig_path.exists() \
            else sym_inv(om, ridge=0.0)
        mask = np.abs(om) > simulation.SUPPORT_TOL
        np.fill_diagonal(mask, False)
        p = om.shape[0]
        sigmas.append(sig)
        omegas.append(om / np.linalg.norm(om))
        supports.append(mask)
        dense.append(bool(mask.sum() == p * (p - 1)))
        k += 1
    if not omegas:
        raise SystemExit(f"error: no omega_mode*.csv files in {d}")
    return GroundTruth(sigmas, omegas, supports, dense)


def cmd_eval(args) -> int:
    omegas = [tenio.read_matrix_csv(p) for p in args.inputs]
    truth = _read_truth_dir(args.truth)
    if len(omegas) != len(truth.omegas):
        raise SystemExit(f"error: {len(omegas)} estimates but "
                         f"{len(truth.omegas)} truth modes")
    losses = evaluation.mode_losses(omegas, truth, args.convention)
    support = evaluation.support_metrics(omegas, truth)
    lines = ["mode,frob_loss,max_loss,tpr,tnr,convention"]

    def cell(v):
        return "NA" if v is None else tenio.format_float(v)

    for k in range(len(omegas)):
        lines.append(f"{k + 1},{cell(losses.frob[k])},{cell(losses.max[k])},"
                     f"{cell(support.tpr[k])},{cell(support.tnr[k])},"
                     f"{args.convention}")
    tprs = [v for v in support.tpr if v is not None]
    tnrs = [v for v in support.tnr if v is not None]
    lines.append(f"avg,{cell(losses.avg_frob)},{cell(losses.avg_max)},"
                 f"{cell(float(np.mean(tprs)) if tprs else None)},"
                 f"{cell(float(np.mean(tnrs)) if tnrs else None)},"
                 f"{args.convention}")
    text = "\n".join(lines) + "\n"
    if args.output is not None:
        args.output.write_text(text)
    print(text, end="")
    return 0


# -------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tegma",
        description="Sparse per-mode precision estimation for tensor data")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("simulate", help="draw samples from a preset model")
    _add_common(p)
    p.add_argument("--model", type=int, required=True, choices=range(1, 7))
    p.add_argument("--dist", default="normal")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--binary", action="store_true",
                   help="write .tenb instead of .ten")
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("estimate", help="fit precision matrices to data files")
    _add_common(p)
    p.add_argument("inputs", nargs="+", type=Path)
    p.add_argument("--method", default="SSS", choices=("SSS", "Sep", "Cyc"))
    p.add_argument("--lambdas", default=None,
                   help="comma-separated per-mode penalties")
    p.add_argument("--grid", default=None,
                   help="comma-separated grid for tuning when no --lambdas")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--standardize", choices=("none", "entrywise"),
                   default="entrywise")
    p.set_defaults(func=cmd_estimate)

    p = subs.add_parser("experiment", help="run a seeded replicate study")
    _add_common(p)
    p.set_defaults(func=cmd_experiment)

    p = subs.add_parser("tune", help="select penalties by validation loss")
    _add_common(p)
    p.add_argument("--train", type=Path, required=True)
    p.add_argument("--val", type=Path, default=None)
    p.add_argument("--method", default="SSS", choices=("SSS", "Sep", "Cyc"))
    p.add_argument("--grid", default=None)
    p.add_argument("--folds", type=int, default=None)
    p.set_defaults(func=cmd_tune)

    p = subs.add_parser("eval", help="score estimates against truth matrices")
    _add_common(p)
    p.add_argument("inputs", nargs="+", type=Path)
    p.add_argument("--truth", type=Path, required=True)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs is None:
        args.jobs = _default_jobs()
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
