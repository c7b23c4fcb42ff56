"""File formats: tensor files, matrix CSV, and experiment configs.

Tensor formats (dims are written 1-based-order, values colexicographic):

* ``.ten``  -- text: line 1 is ``K p_1 ... p_K``, followed by p* decimal
  values separated by whitespace.
* ``.tenb`` -- binary: magic ``TEN1``, little-endian uint32 K, K uint32
  dims, then p* little-endian float64 values.

Matrices are written as plain CSV, one row per line, 17 significant
digits (lossless float64 round trip).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .tensor_ops import unvectorize, vectorize

TEN_MAGIC = b"TEN1"


def write_tensor(path, t) -> None:
    path = Path(path)
    t = np.asarray(t, dtype=float)
    vec = vectorize(t)
    if path.suffix == ".tenb":
        with open(path, "wb") as fh:
            fh.write(TEN_MAGIC)
            fh.write(struct.pack("<I", t.ndim))
            fh.write(struct.pack(f"<{t.ndim}I", *t.shape))
            fh.write(vec.astype("<f8").tobytes())
    else:
        with open(path, "w") as fh:
            fh.write(str(t.ndim) + " " + " ".join(str(d) for d in t.shape) + "\n")
            for v in vec:
                fh.write(format_float(v) + "\n")


def read_tensor(path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".tenb":
        data = path.read_bytes()
        if data[:4] != TEN_MAGIC:
            raise ValueError(f"{path}: bad magic, not a .tenb file")
        (k,) = struct.unpack_from("<I", data, 4)
        dims = struct.unpack_from(f"<{k}I", data, 8)
        p_star = int(np.prod(dims))
        vec = np.frombuffer(data, dtype="<f8", count=p_star, offset=8 + 4 * k)
        if vec.size != p_star:
            raise ValueError(f"{path}: truncated payload")
        return unvectorize(vec, dims)
    tokens = path.read_text().split()
    if not tokens:
        raise ValueError(f"{path}: empty tensor file")
    k = int(tokens[0])
    if len(tokens) < 1 + k:
        raise ValueError(f"{path}: truncated header")
    dims = tuple(int(v) for v in tokens[1:1 + k])
    vals = np.array([float(v) for v in tokens[1 + k:]])
    if vals.size != int(np.prod(dims)):
        raise ValueError(f"{path}: expected {int(np.prod(dims))} values, got {vals.size}")
    return unvectorize(vals, dims)


def format_float(v: float) -> str:
    if v != v:
        raise ValueError("refusing to write NaN")
    return f"{v:.17g}"


def write_matrix_csv(path, a) -> None:
    a = np.asarray(a, dtype=float)
    with open(path, "w") as fh:
        for row in a:
            fh.write(",".join(format_float(v) for v in row) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            rows.append([float(v) for v in line.split(",")])
    return np.array(rows)


CONFIG_FIELDS = {
    "model_id": 3,
    "distribution": "normal",
    "n": 100,
    "n_validation": None,       # defaults to n
    "replicates": 20,
    "methods": ["SSS", "Sep", "Cyc"],
    "lambda_grid": None,        # null -> per-mode default grid
    "base_seed": 0,
    "jobs": 1,
    "loss_convention": "covariance-trace",
    "output_path": "results.csv",
    "slow_ok": False,
}


def load_config(path) -> dict:
    """Read a JSON config; unknown keys are an error, defaults filled in."""
    raw = json.loads(Path(path).read_text())
    return resolve_config(raw)


def resolve_config(raw: dict) -> dict:
    unknown = set(raw) - set(CONFIG_FIELDS)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    cfg = dict(CONFIG_FIELDS)
    cfg.update(raw)
    if cfg["n_validation"] is None:
        cfg["n_validation"] = cfg["n"]
    if cfg["replicates"] < 1:
        raise ValueError("replicates must be >= 1")
    if cfg["model_id"] == 2 and not cfg["slow_ok"]:
        raise ValueError("model 2 is beyond desk scale; pass slow_ok=true to run it")
    bad = [m for m in cfg["methods"] if m not in ("SSS", "Sep", "Cyc")]
    if bad:
        raise ValueError(f"unknown methods: {bad}")
    return cfg


def dump_config(cfg: dict, path) -> None:
    Path(path).write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
