"""Model (de)serialization: one self-describing JSON document per model.

The writer emits sorted keys and no whitespace, so two trainings with
the same inputs and seed produce byte-identical documents. The reader
re-checks every structural invariant before handing back a model.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from ..errors import ModelFormatError
from ..sessions import MalwareCategory
from .classifiers import (
    Algorithm,
    GNBParams,
    KNNParams,
    RFParams,
    Scaler,
    TrainMeta,
    TrainedModel,
)
from .forest import Tree

MODEL_VERSION = "edima-model/1"


def _params_doc(model: TrainedModel) -> dict:
    p = model.params
    if model.algorithm is Algorithm.GNB:
        return {
            "priors": [float(v) for v in p.priors],
            "means": [[float(v) for v in row] for row in p.means],
            "vars": [[float(v) for v in row] for row in p.vars],
        }
    if model.algorithm is Algorithm.KNN:
        return {
            "k": int(p.k),
            "x": [[float(v) for v in row] for row in p.x],
            "y": [int(v) for v in p.y],
        }
    trees = []
    for t in p.trees:
        trees.append({
            "feature": [int(v) for v in t.feature],
            "threshold": [float(v) for v in t.threshold],
            "left": [int(v) for v in t.left],
            "right": [int(v) for v in t.right],
            "n0": [int(v) for v in t.n0],
            "n1": [int(v) for v in t.n1],
        })
    return {"n_trees": int(p.n_trees), "trees": trees}


def serialize_model(model: TrainedModel) -> str:
    doc = {
        "version": MODEL_VERSION,
        "algorithm": model.algorithm.value,
        "category": model.category.value,
        "scaler": {
            "mean": [float(v) for v in model.scaler.mean],
            "stdev": [float(v) for v in model.scaler.stdev],
        },
        "params": _params_doc(model),
        "train_meta": {
            "seed": int(model.train_meta.seed),
            "n_rows": int(model.train_meta.n_rows),
            "trained_at": model.train_meta.trained_at,
        },
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def model_digest(model: TrainedModel) -> str:
    return hashlib.sha256(serialize_model(model).encode("utf-8")).hexdigest()


def _need(doc: dict, key: str, kind=None):
    if not isinstance(doc, dict) or key not in doc:
        raise ModelFormatError(f"missing field {key!r}")
    val = doc[key]
    if kind is not None and not isinstance(val, kind):
        raise ModelFormatError(f"field {key!r} has the wrong type")
    return val


def _float_list(doc, key, length=None) -> np.ndarray:
    raw = _need(doc, key, list)
    for v in raw:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ModelFormatError(f"field {key!r} must hold numbers")
    if length is not None and len(raw) != length:
        raise ModelFormatError(f"field {key!r} must have length {length}")
    return np.asarray(raw, dtype=np.float64)


def _int_list(doc, key, length=None) -> np.ndarray:
    raw = _need(doc, key, list)
    for v in raw:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ModelFormatError(f"field {key!r} must hold integers")
    if length is not None and len(raw) != length:
        raise ModelFormatError(f"field {key!r} must have length {length}")
    return np.asarray(raw, dtype=np.int64)


def _matrix(doc, key, width) -> np.ndarray:
    raw = _need(doc, key, list)
    rows = []
    for row in raw:
        if not isinstance(row, list) or len(row) != width:
            raise ModelFormatError(f"field {key!r} must be rows of length {width}")
        for v in row:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ModelFormatError(f"field {key!r} must hold numbers")
        rows.append([float(v) for v in row])
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), width)


def _parse_gnb(pd: dict, d: int) -> GNBParams:
    priors = _float_list(pd, "priors", 2)
    if (priors < 0).any() or abs(float(priors.sum()) - 1.0) > 1e-9:
        raise ModelFormatError("priors must be nonnegative and sum to 1")
    means = _matrix(pd, "means", d)
    vars_ = _matrix(pd, "vars", d)
    if means.shape[0] != 2 or vars_.shape[0] != 2:
        raise ModelFormatError("means and vars need one row per class")
    if (vars_ <= 0).any():
        raise ModelFormatError("variances must be positive")
    return GNBParams(priors=priors, means=means, vars=vars_)


def _parse_knn(pd: dict, d: int) -> KNNParams:
    k = _need(pd, "k", int)
    x = _matrix(pd, "x", d)
    y = _int_list(pd, "y", x.shape[0])
    if isinstance(k, bool) or k % 2 == 0 or not (1 <= k <= x.shape[0]):
        raise ModelFormatError(f"k must be odd and within [1, {x.shape[0]}]")
    if ((y != 0) & (y != 1)).any():
        raise ModelFormatError("labels must be 0 or 1")
    return KNNParams(k=k, x=x, y=y)


def _parse_tree(td: dict, d: int) -> Tree:
    feature = _int_list(td, "feature")
    n = feature.shape[0]
    if n < 1:
        raise ModelFormatError("empty tree")
    threshold = _float_list(td, "threshold", n)
    left = _int_list(td, "left", n)
    right = _int_list(td, "right", n)
    n0 = _int_list(td, "n0", n)
    n1 = _int_list(td, "n1", n)
    if (n0 < 0).any() or (n1 < 0).any() or ((n0 == 0) & (n1 == 0)).any():
        raise ModelFormatError("leaf counts must be nonnegative and not all zero")
    for i in range(n):
        if feature[i] < 0:
            if left[i] != -1 or right[i] != -1:
                raise ModelFormatError("leaves cannot have children")
        else:
            if feature[i] >= d:
                raise ModelFormatError(f"split feature out of range at node {i}")
            # preorder layout: children always come after their parent
            if not (i < left[i] < n and i < right[i] < n):
                raise ModelFormatError(f"bad child indices at node {i}")
    return Tree(feature=feature, threshold=threshold, left=left, right=right, n0=n0, n1=n1)


def _parse_rf(pd: dict, d: int) -> RFParams:
    n_trees = _need(pd, "n_trees", int)
    raw = _need(pd, "trees", list)
    if isinstance(n_trees, bool) or n_trees < 1 or len(raw) != n_trees:
        raise ModelFormatError("n_trees must be >= 1 and match the tree list")
    return RFParams(n_trees=n_trees, trees=[_parse_tree(t, d) for t in raw])


def deserialize_model(text: str) -> TrainedModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("document must be a JSON object")
    if _need(doc, "version") != MODEL_VERSION:
        raise ModelFormatError(f"unsupported version {doc.get('version')!r}")
    try:
        algorithm = Algorithm.from_wire(_need(doc, "algorithm", str))
        category = MalwareCategory.from_wire(_need(doc, "category", str))
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from exc

    sd = _need(doc, "scaler", dict)
    mean = _float_list(sd, "mean")
    d = mean.shape[0]
    if d < 1:
        raise ModelFormatError("scaler must cover at least one feature")
    stdev = _float_list(sd, "stdev", d)
    if (stdev < 0).any():
        raise ModelFormatError("scaler stdev must be nonnegative")
    scaler = Scaler(mean=mean, stdev=stdev)

    md = _need(doc, "train_meta", dict)
    seed = _need(md, "seed", int)
    n_rows = _need(md, "n_rows", int)
    trained_at = md.get("trained_at")
    if trained_at is not None and not isinstance(trained_at, str):
        raise ModelFormatError("trained_at must be a string or null")
    if isinstance(seed, bool) or isinstance(n_rows, bool) or n_rows < 0:
        raise ModelFormatError("bad train_meta")

    pd = _need(doc, "params", dict)
    if algorithm is Algorithm.GNB:
        params: object = _parse_gnb(pd, d)
    elif algorithm is Algorithm.KNN:
        params = _parse_knn(pd, d)
    else:
        params = _parse_rf(pd, d)

    return TrainedModel(algorithm=algorithm, category=category, scaler=scaler, params=params,
                        train_meta=TrainMeta(seed=seed, n_rows=n_rows, trained_at=trained_at))
