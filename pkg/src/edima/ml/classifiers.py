"""Training and prediction for the three supported classifiers.

All three are self-contained: Gaussian naive Bayes, k nearest neighbours
and a random forest. k-NN measures Euclidean distance on standardized
features; GNB and the forest consume raw features, which they handle
scale-equivariantly on their own. Prediction ties always break toward
MALICIOUS, the positive class.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import kernels
from ..errors import (
    CategoryMismatch,
    EmptyDataset,
    InvalidHyperparams,
    SingleClassDataset,
)
from ..features import FeatureVector, Label
from ..sessions import MalwareCategory
from .forest import rf_fit, rf_votes

N_FEATURES = 4


class Algorithm(enum.Enum):
    GNB = "gnb"
    KNN = "knn"
    RF = "rf"

    @classmethod
    def from_wire(cls, name: str) -> "Algorithm":
        for member in cls:
            if member.value == name:
                return member
        raise ValueError(f"unknown algorithm {name!r}")


@dataclass
class Dataset:
    """Labeled feature vectors sharing one category."""

    rows: list

    def __post_init__(self):
        cats = set()
        for fv in self.rows:
            if fv.label is None:
                raise ValueError("dataset rows must carry a label")
            cats.add(fv.category)
        if len(cats) > 1:
            raise CategoryMismatch(f"mixed categories in dataset: {sorted(c.value for c in cats)}")

    @property
    def category(self) -> MalwareCategory:
        return self.rows[0].category

    def __len__(self) -> int:
        return len(self.rows)

    def arrays(self) -> tuple:
        """(X, y) with X an (n, 4) float matrix and y 0/1 with 1 = malicious."""
        n = len(self.rows)
        x = np.zeros((n, N_FEATURES), dtype=np.float64)
        y = np.zeros(n, dtype=np.int64)
        for i, fv in enumerate(self.rows):
            x[i] = fv.values()
            y[i] = 1 if fv.label is Label.MALICIOUS else 0
        return x, y


@dataclass
class Scaler:
    mean: np.ndarray
    stdev: np.ndarray

    def transform(self, x: np.ndarray) -> np.ndarray:
        # constant features keep their raw offset instead of dividing by 0
        div = np.where(self.stdev == 0.0, 1.0, self.stdev)
        return (x - self.mean) / div


def fit_scaler(train) -> Scaler:
    """Per-feature population mean/stdev. Accepts a Dataset or a raw matrix."""
    if isinstance(train, Dataset):
        if len(train) == 0:
            raise EmptyDataset("cannot fit a scaler on an empty dataset")
        x, _ = train.arrays()
    else:
        x = np.asarray(train, dtype=np.float64)
        if x.shape[0] == 0:
            raise EmptyDataset("cannot fit a scaler on an empty dataset")
    return Scaler(mean=x.mean(axis=0), stdev=x.std(axis=0))


def apply_scaler(scaler: Scaler, fv: FeatureVector) -> np.ndarray:
    return scaler.transform(np.asarray(fv.values(), dtype=np.float64))


@dataclass
class GNBParams:
    priors: np.ndarray  # (2,) class frequencies, benign first
    means: np.ndarray   # (2, d)
    vars: np.ndarray    # (2, d), floored away from zero


def gnb_fit(x: np.ndarray, y: np.ndarray) -> GNBParams:
    """Per-class Gaussian parameters with a relative variance floor.

    The floor is 1e-9 times the largest pooled feature variance (1e-9
    absolute when every feature is constant), so constant features never
    produce a zero-width Gaussian.
    """
    n, d = x.shape
    pooled = x.var(axis=0)
    eps = 1e-9 * float(pooled.max()) if d else 0.0
    if eps <= 0.0:
        eps = 1e-9
    priors = np.zeros(2, dtype=np.float64)
    means = np.zeros((2, d), dtype=np.float64)
    vars_ = np.zeros((2, d), dtype=np.float64)
    for c in (0, 1):
        rows = x[y == c]
        priors[c] = rows.shape[0] / n
        means[c] = rows.mean(axis=0)
        vars_[c] = np.maximum(rows.var(axis=0), eps)
    return GNBParams(priors=priors, means=means, vars=vars_)


def gnb_log_joint(params: GNBParams, x: np.ndarray) -> np.ndarray:
    """(n, 2) log prior + log likelihood for each class."""
    out = np.zeros((x.shape[0], 2), dtype=np.float64)
    for c in (0, 1):
        diff = x - params.means[c]
        ll = np.log(2.0 * np.pi * params.vars[c]) + diff * diff / params.vars[c]
        out[:, c] = np.log(params.priors[c]) - 0.5 * ll.sum(axis=1)
    return out


def gnb_scores(params: GNBParams, x: np.ndarray) -> np.ndarray:
    """Normalized posterior probability of the malicious class per row."""
    jll = gnb_log_joint(params, x)
    mx = jll.max(axis=1, keepdims=True)
    e = np.exp(jll - mx)
    return e[:, 1] / (e[:, 0] + e[:, 1])


@dataclass
class KNNParams:
    k: int
    x: np.ndarray  # standardized training matrix
    y: np.ndarray


@dataclass
class RFParams:
    n_trees: int
    trees: list


@dataclass
class TrainMeta:
    seed: int
    n_rows: int
    trained_at: Optional[str] = None


@dataclass
class TrainedModel:
    algorithm: Algorithm
    category: MalwareCategory
    scaler: Scaler
    params: object
    train_meta: TrainMeta


def _default_k(n: int) -> int:
    k = min(5, n)
    if k % 2 == 0:
        k -= 1
    return max(k, 1)


def train(algorithm: Algorithm, train_set: Dataset, hyperparams: Optional[dict] = None,
          seed: int = 0, trained_at: Optional[str] = None) -> TrainedModel:
    """Fit one model. Deterministic given (rows, hyperparams, seed).

    hyperparams: {"k": odd int} for KNN, {"trees": int >= 1} for RF,
    nothing for GNB. trained_at is recorded verbatim (None by default)
    so the serialized bytes depend only on the inputs.
    """
    if len(train_set) == 0:
        raise EmptyDataset("training needs at least one row")
    x, y = train_set.arrays()
    n = x.shape[0]
    if len(np.unique(y)) < 2:
        raise SingleClassDataset("training needs both classes")

    hp = dict(hyperparams or {})
    scaler = fit_scaler(x)

    if algorithm is Algorithm.GNB:
        params: object = gnb_fit(x, y)
    elif algorithm is Algorithm.KNN:
        k = hp.pop("k", None)
        if k is None:
            k = _default_k(n)
        if not isinstance(k, int) or isinstance(k, bool) or k % 2 == 0 or not (1 <= k <= n):
            raise InvalidHyperparams(f"k must be an odd integer in [1, {n}], got {k!r}")
        params = KNNParams(k=k, x=scaler.transform(x), y=y)
    elif algorithm is Algorithm.RF:
        trees = hp.pop("trees", 100)
        if not isinstance(trees, int) or isinstance(trees, bool) or trees < 1:
            raise InvalidHyperparams(f"trees must be a positive integer, got {trees!r}")
        params = RFParams(n_trees=trees, trees=rf_fit(x, y, trees, seed))
    else:
        raise InvalidHyperparams(f"unknown algorithm {algorithm!r}")

    if hp:
        raise InvalidHyperparams(f"unknown hyperparameters: {sorted(hp)}")
    return TrainedModel(algorithm=algorithm, category=train_set.category, scaler=scaler,
                        params=params, train_meta=TrainMeta(seed=seed, n_rows=n, trained_at=trained_at))


def predict_many(model: TrainedModel, fvs: list) -> tuple:
    """Labels and malicious scores for a batch; same math as predict()."""
    for fv in fvs:
        if fv.category is not model.category:
            raise CategoryMismatch(
                f"model is for {model.category.value}, vector is {fv.category.value}")
    n = len(fvs)
    x = np.zeros((n, N_FEATURES), dtype=np.float64)
    for i, fv in enumerate(fvs):
        x[i] = fv.values()

    if model.algorithm is Algorithm.GNB:
        jll = gnb_log_joint(model.params, x)
        mx = jll.max(axis=1, keepdims=True)
        e = np.exp(jll - mx)
        scores = e[:, 1] / (e[:, 0] + e[:, 1])
        malicious = jll[:, 1] >= jll[:, 0]
    elif model.algorithm is Algorithm.KNN:
        votes = kernels.knn_votes(model.scaler.transform(x), model.params.x,
                                  model.params.y, model.params.k)
        scores = votes / float(model.params.k)
        malicious = 2 * votes >= model.params.k
    else:
        votes = rf_votes(model.params.trees, x)
        scores = votes / float(model.params.n_trees)
        malicious = 2 * votes >= model.params.n_trees

    labels = [Label.MALICIOUS if m else Label.BENIGN for m in malicious]
    return labels, np.asarray(scores, dtype=np.float64)


def predict(model: TrainedModel, fv: FeatureVector) -> tuple:
    """(label, malicious score in [0, 1]) for one feature vector."""
    labels, scores = predict_many(model, [fv])
    return labels[0], float(scores[0])
