"""Seeded replicate execution and CSV emission for simulation studies.

Each replicate derives its own RNG stream from (base_seed, replicate), so
results are independent of scheduling; rows are collected and sorted
before writing and the emitted CSV is byte-identical for any job count.
Wall-clock timings are therefore kept out of the CSV (they go to a
``.timing.json`` sidecar next to the output).
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import evaluation, simulation, tenio
from .estimators import EstimatorSpec, estimate

COLUMNS = ["model", "distribution", "method", "replicate", "stat", "mode",
           "frob_loss", "max_loss", "tpr", "tnr", "lambda", "sub_seed",
           "convention", "runtime_ms", "error"]

NUMERIC_COLUMNS = ["frob_loss", "max_loss", "tpr", "tnr", "lambda"]


def parse_distribution(label: str) -> simulation.DistSpec:
    """Parse a distribution label: normal, t, t<nu>, mixed[(gamma,sigma)]."""
    label = label.strip().lower()
    if label == "normal":
        return simulation.DistSpec("normal")
    if label.startswith("t"):
        nu = float(label[1:]) if len(label) > 1 else 3.0
        return simulation.DistSpec("t", nu=nu)
    if label.startswith("mixed"):
        if "(" in label:
            inner = label[label.index("(") + 1:label.rindex(")")]
            gamma, sigma = (float(v) for v in inner.split(","))
            return simulation.DistSpec("mixed", gamma=gamma, sigma=sigma)
        return simulation.DistSpec("mixed")
    raise ValueError(f"unknown distribution {label!r}")


def _fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return tenio.format_float(float(v))


def run_replicate(cfg: dict, rep: int) -> tuple[list[dict], dict]:
    """Run one replicate; returns (rows, timing info)."""
    model_id = cfg["model_id"]
    if model_id == "external":
        raise ValueError("external data runs go through the 'estimate' subcommand")
    dist = parse_distribution(cfg["distribution"])
    seed = simulation.sub_seed(cfg["base_seed"], rep)
    rng = np.random.default_rng(seed)
    truth = simulation.make_model(model_id, rng)
    train = simulation.sample(cfg["n"], truth, dist, rng)
    val = simulation.sample(cfg["n_validation"], truth, dist, rng)
    convention = cfg["loss_convention"]

    rows = []
    timings = {}
    for method in cfg["methods"]:
        base = {"model": model_id, "distribution": cfg["distribution"],
                "method": method, "replicate": rep, "stat": "",
                "sub_seed": seed, "convention": convention,
                "runtime_ms": "", "error": ""}
        t0 = time.perf_counter()
        try:
            tuned = evaluation.tune(train, val, method, cfg["lambda_grid"])
            est = estimate(train, EstimatorSpec(method=method, lambdas=tuple(tuned.lambdas)))
            losses = evaluation.mode_losses(est, truth, convention)
            support = evaluation.support_metrics(est, truth)
        except Exception as exc:
            rows.append(dict(base, mode="avg", frob_loss=None, max_loss=None,
                             tpr=None, tnr=None, **{"lambda": None},
                             error=f"{type(exc).__name__}: {exc}"))
            continue
        finally:
            timings[method] = 1000.0 * (time.perf_counter() - t0)
        k_count = len(truth.dims)
        for k in range(k_count):
            rows.append(dict(base, mode=k + 1, frob_loss=losses.frob[k],
                             max_loss=losses.max[k], tpr=support.tpr[k],
                             tnr=support.tnr[k], **{"lambda": tuned.lambdas[k]}))
        tprs = [v for v in support.tpr if v is not None]
        tnrs = [v for v in support.tnr if v is not None]
        rows.append(dict(base, mode="avg", frob_loss=losses.avg_frob,
                         max_loss=losses.avg_max,
                         tpr=float(np.mean(tprs)) if tprs else None,
                         tnr=float(np.mean(tnrs)) if tnrs else None,
                         **{"lambda": None}))
    return rows, timings


def _summary_rows(rows: list[dict]) -> list[dict]:
    out = []
    keys = []
    for r in rows:
        key = (r["model"], r["distribution"], r["method"], r["mode"], r["convention"])
        if key not in keys:
            keys.append(key)
    for key in keys:
        group = [r for r in rows if (r["model"], r["distribution"], r["method"],
                                     r["mode"], r["convention"]) == key and not r["error"]]
        if not group:
            continue
        for stat in ("mean", "se"):
            row = {"model": key[0], "distribution": key[1], "method": key[2],
                   "replicate": "summary", "stat": stat, "mode": key[3],
                   "sub_seed": "", "convention": key[4], "runtime_ms": "",
                   "error": "", "lambda": None}
            for col in NUMERIC_COLUMNS:
                vals = [r[col] for r in group if r.get(col) is not None]
                if not vals:
                    row[col] = None
                elif stat == "mean":
                    row[col] = float(np.mean(vals))
                else:
                    row[col] = float(np.std(vals, ddof=1) / np.sqrt(len(vals))) \
                        if len(vals) > 1 else 0.0
            out.append(row)
    return out


def rows_to_csv(rows: list[dict]) -> str:
    lines = [",".join(COLUMNS)]
    for r in rows:
        lines.append(",".join(_fmt(r.get(c, "")) for c in COLUMNS))
    return "\n".join(lines) + "\n"


def run_experiment(cfg: dict) -> str:
    """Run all replicates and return the CSV text; writes output files."""
    cfg = tenio.resolve_config(cfg)
    reps = range(cfg["replicates"])
    all_rows: list[list[dict]] = [None] * cfg["replicates"]
    timing = {}
    if cfg["jobs"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["jobs"]) as pool:
            futures = {rep: pool.submit(run_replicate, cfg, rep) for rep in reps}
            for rep, fut in futures.items():
                all_rows[rep], timing[rep] = fut.result()
    else:
        for rep in reps:
            all_rows[rep], timing[rep] = run_replicate(cfg, rep)
    rows = [r for chunk in all_rows for r in chunk]
    rows.extend(_summary_rows(rows))
    csv_text = rows_to_csv(rows)

    out = Path(cfg["output_path"])
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(csv_text)
    tenio.dump_config(cfg, out.with_suffix(out.suffix + ".config.json"))
    out.with_suffix(out.suffix + ".timing.json").write_text(
        json.dumps({str(k): v for k, v in timing.items()}, indent=2) + "\n")
    return csv_text
