"""svmlight-style data files, JSON model files and CSV reports."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .bernoulli import BernoulliModel
from .data import DataError, LabeledDataset, SparseCountMatrix
from .multinomial import MultinomialModel

MODEL_VERSION = 1
NA = "NA"

_LABELS = {"+1": 1, "1": 1, "-1": -1, "0": -1, "1.0": 1, "-1.0": -1, "0.0": -1, "+1.0": 1}


def fmt(x) -> str:
    """17-significant-digit rendering; integers and strings pass through, None is NA."""
    if x is None:
        return NA
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def read_svmlight(path, n_features: Optional[int] = None) -> LabeledDataset:
    """Parse ``<label> <idx>:<val> ...`` lines (1-based indices).

    Blank lines and ``#`` comments are ignored.  Labels may be -1/+1 or 0/1.
    """
    labels, row_ptr, cols, vals = [], [0], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            label = _LABELS.get(parts[0])
            if label is None:
                raise DataError(f"{path}:{lineno}: bad label {parts[0]!r}")
            prev = 0
            for token in parts[1:]:
                idx_s, sep, val_s = token.partition(":")
                try:
                    if not sep:
                        raise ValueError
                    idx, val = int(idx_s), float(val_s)
                except ValueError:
                    raise DataError(f"{path}:{lineno}: malformed pair {token!r}") from None
                if idx < 1:
                    raise DataError(f"{path}:{lineno}: indices are 1-based, got {idx}")
                if idx <= prev:
                    raise DataError(f"{path}:{lineno}: indices must be strictly increasing")
                if not math.isfinite(val) or val < 0:
                    raise DataError(f"{path}:{lineno}: negative or non-finite value {val_s}")
                prev = idx
                cols.append(idx - 1)
                vals.append(val)
            labels.append(label)
            row_ptr.append(len(cols))
    if not labels:
        raise DataError(f"{path}: no records")
    m = max(cols) + 1 if cols else 0
    if n_features is not None:
        if n_features < m:
            raise DataError(f"{path}: feature index {m} exceeds declared dimension {n_features}")
        m = n_features
    x = SparseCountMatrix(len(labels), m, row_ptr, cols, vals)
    return LabeledDataset(x, np.array(labels))


def write_svmlight(path, ds: LabeledDataset) -> None:
    x = ds.x
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(x.n_rows):
            lo, hi = x.row_ptr[i], x.row_ptr[i + 1]
            pairs = " ".join(
                f"{c + 1}:{fmt(v)}" for c, v in zip(x.col_idx[lo:hi], x.values[lo:hi])
            )
            label = "+1" if ds.y[i] == 1 else "-1"
            fh.write(f"{label} {pairs}".rstrip() + "\n")


Model = Union[BernoulliModel, MultinomialModel]


def _array(values) -> str:
    return "[" + ", ".join(fmt(v) for v in values) + "]"


def dumps_model(model: Model) -> str:
    kind = "bernoulli" if isinstance(model, BernoulliModel) else "multinomial"
    fields = [
        ("version", str(MODEL_VERSION)),
        ("model_kind", json.dumps(kind)),
        ("m", str(model.m)),
        ("theta_plus", _array(model.theta_plus)),
        ("theta_minus", _array(model.theta_minus)),
        ("log_prior_ratio", fmt(model.log_prior_ratio)),
        ("selected", _array(model.selected)),
        ("smoothing_gamma", fmt(model.gamma)),
    ]
    body = ",\n".join(f'  "{key}": {value}' for key, value in fields)
    return "{\n" + body + "\n}\n"


def loads_model(text: str) -> Model:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"model file is not valid JSON: {exc}") from None
    missing = {
        "version", "model_kind", "m", "theta_plus", "theta_minus",
        "log_prior_ratio", "selected", "smoothing_gamma",
    } - set(doc)
    if missing:
        raise DataError(f"model file missing fields: {sorted(missing)}")
    if doc["version"] != MODEL_VERSION:
        raise DataError(f"unsupported model version {doc['version']}")
    tp = np.array(doc["theta_plus"], dtype=np.float64)
    tm = np.array(doc["theta_minus"], dtype=np.float64)
    if tp.shape != (doc["m"],) or tm.shape != (doc["m"],):
        raise DataError("model file: theta length does not match m")
    cls = {"bernoulli": BernoulliModel, "multinomial": MultinomialModel}.get(doc["model_kind"])
    if cls is None:
        raise DataError(f"unknown model_kind {doc['model_kind']!r}")
    return cls(
        tp,
        tm,
        float(doc["log_prior_ratio"]),
        np.array(doc["selected"], dtype=np.int64),
        float(doc["smoothing_gamma"]),
    )


def save_model(path, model: Model) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path) -> Model:
    return loads_model(Path(path).read_text(encoding="utf-8"))


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_lines(path, values: Iterable) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in values:
            fh.write(f"{v}\n")
