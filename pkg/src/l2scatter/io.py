"""Model, template and dataset files.

Models and templates are JSON.  Floats are written with ``repr`` (shortest
round-trip form), so ``load(save(x))`` reproduces every bit.  Datasets are
plain comma-separated numeric tables.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from .classify import ClassTemplates
from .errors import DimensionError
from .frame import TightFrameOperator
from .partition import blocks_one_based, from_one_based
from .scatter import LayerSequence, ScatteringNetwork

MODEL_VERSION = 1


class DataError(ValueError):
    """Malformed input file."""


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _floats(a: np.ndarray) -> list:
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


def model_to_dict(net: ScatteringNetwork) -> dict:
    layers = []
    for W, A in zip(net.operators, net.partitions):
        layers.append({
            "n_in": W.n_in,
            "n_out": W.n_out,
            "psi_real": _floats(W.psi_real),
            "psi_imag": _floats(W.psi_imag),
            "blocks": blocks_one_based(A),
        })
    return {
        "version": MODEL_VERSION,
        "depth": net.depth,
        "input_dim": net.dims[0],
        "layers": layers,
        "final_blocks": blocks_one_based(net.final_partition),
    }


def model_from_dict(d: dict, check: bool = True) -> ScatteringNetwork:
    try:
        if d["version"] != MODEL_VERSION:
            raise DataError(f"unsupported model version {d['version']!r}")
        ops, parts = [], []
        for m, L in enumerate(d["layers"]):
            n_in, n_out = int(L["n_in"]), int(L["n_out"])
            re = np.array(L["psi_real"], dtype=float)
            im = np.array(L["psi_imag"], dtype=float)
            if re.size != n_in * n_out or im.size != n_in * n_out:
                raise DataError(f"layer {m + 1}: expected {n_out}x{n_in} frame arrays")
            ops.append(TightFrameOperator(re.reshape(n_out, n_in), im.reshape(n_out, n_in)))
            parts.append(from_one_based(n_in, L["blocks"]))
        if int(d["depth"]) != len(ops):
            raise DataError(f"depth {d['depth']} but {len(ops)} layers")
        last = ops[-1].n_out if ops else int(d["input_dim"])
        final = from_one_based(last, d["final_blocks"])
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed model file: {exc!r}") from None
    return ScatteringNetwork(tuple(ops), tuple(parts), final, check=check)


def save_model(net: ScatteringNetwork, path) -> None:
    atomic_write(path, json.dumps(model_to_dict(net), indent=1) + "\n")


def load_model(path, check: bool = True) -> ScatteringNetwork:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: {exc}") from None
    return model_from_dict(d, check=check)


def save_templates(t: ClassTemplates, path) -> None:
    d = {
        "version": MODEL_VERSION,
        "classes": [
            {"label": lab, "prior": float(p), "count": int(c),
             "template": [_floats(v) for v in tpl]}
            for lab, p, c, tpl in zip(t.labels, t.priors, t.counts, t.templates)
        ],
    }
    atomic_write(path, json.dumps(d, indent=1) + "\n")


def load_templates(path) -> ClassTemplates:
    with open(path) as fh:
        d = json.load(fh)
    try:
        cls = d["classes"]
        return ClassTemplates(
            [c["label"] for c in cls],
            [LayerSequence([np.array(v, dtype=float) for v in c["template"]]) for c in cls],
            np.array([c["prior"] for c in cls]),
            [int(c["count"]) for c in cls],
        )
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed templates file: {exc!r}") from None


def _label_value(cell: str):
    cell = cell.strip()
    try:
        v = float(cell)
    except ValueError:
        return cell
    return int(v) if v.is_integer() else v


def read_dataset(path, label_col: int | None = None) -> tuple[np.ndarray, list | None]:
    """Rows of floats; ``label_col`` (0-based, negative allowed) is split off as labels."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or all(not c.strip() for c in row):
                continue
            rows.append((lineno, row))
    if not rows:
        raise DataError(f"{path}: no data rows")
    width = len(rows[0][1])
    labels = [] if label_col is not None else None
    data = []
    for lineno, row in rows:
        if len(row) != width:
            raise DataError(f"{path}:{lineno}: {len(row)} fields, expected {width}")
        if label_col is not None:
            try:
                labels.append(_label_value(row[label_col]))
            except IndexError:
                raise DataError(f"{path}: label column {label_col} out of range") from None
            row = [c for j, c in enumerate(row) if j != label_col % width]
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
        data.append(vals)
    X = np.array(data, dtype=float)
    if X.shape[1] == 0:
        raise DataError(f"{path}: no feature columns")
    if not np.all(np.isfinite(X)):
        raise DataError(f"{path}: non-finite values")
    return X, labels


def format_rows(X: np.ndarray, labels: Sequence | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for i, row in enumerate(np.atleast_2d(X)):
        cells = [repr(float(v)) for v in row]
        if labels is not None:
            cells.append(str(labels[i]))
        w.writerow(cells)
    return buf.getvalue()


def write_dataset(path, X: np.ndarray, labels: Sequence | None = None) -> None:
    atomic_write(path, format_rows(X, labels))


def check_dim(X: np.ndarray, n: int, what: str = "data") -> None:
    if X.shape[1] != n:
        raise DimensionError(f"{what} has {X.shape[1]} columns, model expects {n}")
