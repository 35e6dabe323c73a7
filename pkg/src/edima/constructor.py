"""Dataset splitting, train-and-evaluate, and the model registry.

A candidate model only replaces the active one for its category when its
holdout accuracy beats the recorded active accuracy by at least min_gain,
so the registry's accuracy never moves backwards. The very first
candidate for a category is always promoted.
"""

from __future__ import annotations

import enum
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from filelock import FileLock

from .errors import TooFewRows
from .ml import (
    Algorithm,
    Dataset,
    Metrics,
    TrainedModel,
    compute_metrics,
    deserialize_model,
    model_digest,
    predict_many,
    serialize_model,
)
from .ml import train as train_model
from .rng import Stream, derive_seed
from .sessions import MalwareCategory


@dataclass
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


def _train_count(n: int, fraction: float) -> int:
    # round half up, then clamp so both sides stay nonempty
    want = int(math.floor(fraction * n + 0.5))
    return min(max(want, 1), n - 1)


def split(data: Dataset, spec: SplitSpec) -> tuple:
    """Deterministic (train, test) partition of `data`.

    Stratified mode permutes each class separately with its own derived
    stream, keeping class proportions within one row of the requested
    fraction. Output datasets preserve the original row order.
    """
    n = len(data)
    if spec.stratified:
        _, y = data.arrays()
        train_idx: list = []
        for c in (0, 1):
            members = [i for i in range(n) if y[i] == c]
            if len(members) < 2:
                raise TooFewRows(f"stratified split needs >= 2 rows per class, class {c} has {len(members)}")
            take = _train_count(len(members), spec.train_fraction)
            perm = Stream(derive_seed(spec.seed, c)).permutation(len(members))
            train_idx.extend(members[int(j)] for j in perm[:take])
    else:
        if n < 2:
            raise TooFewRows(f"split needs >= 2 rows, got {n}")
        take = _train_count(n, spec.train_fraction)
        perm = Stream(derive_seed(spec.seed, 0)).permutation(n)
        train_idx = [int(j) for j in perm[:take]]

    chosen = set(train_idx)
    train_rows = [data.rows[i] for i in range(n) if i in chosen]
    test_rows = [data.rows[i] for i in range(n) if i not in chosen]
    return Dataset(train_rows), Dataset(test_rows)


def build(algorithm: Algorithm, data: Dataset, spec: SplitSpec,
          hyperparams: Optional[dict] = None, seed: int = 0,
          trained_at: Optional[str] = None) -> tuple:
    """Split, fit on the train part only, score on the held-out part."""
    train_ds, test_ds = split(data, spec)
    model = train_model(algorithm, train_ds, hyperparams, seed=seed, trained_at=trained_at)
    predicted, _ = predict_many(model, test_ds.rows)
    truth = [fv.label for fv in test_ds.rows]
    return model, compute_metrics(predicted, truth)


class Decision(enum.Enum):
    PROMOTED = "promoted"
    KEPT = "kept"


class ModelRegistry:
    """One directory per category: active.model plus history.jsonl.

    active.model is a plain serialized model document, loadable on its
    own. The active accuracy is recovered from the most recent promoted
    line of the history.
    """

    ACTIVE = "active.model"
    HISTORY = "history.jsonl"

    def __init__(self, root):
        self.root = Path(root)

    def _dir(self, category: MalwareCategory) -> Path:
        return self.root / category.value

    def active_model(self, category: MalwareCategory) -> Optional[TrainedModel]:
        path = self._dir(category) / self.ACTIVE
        if not path.exists():
            return None
        return deserialize_model(path.read_text(encoding="utf-8"))

    def history(self, category: MalwareCategory) -> list:
        path = self._dir(category) / self.HISTORY
        if not path.exists():
            return []
        out = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    out.append(json.loads(line))
        return out

    def active_metrics(self, category: MalwareCategory) -> Optional[Metrics]:
        latest = None
        for entry in self.history(category):
            if entry.get("decision") == Decision.PROMOTED.value:
                latest = entry
        if latest is None:
            return None
        return Metrics.from_dict(latest["metrics"])

    def compare_and_promote(self, category: MalwareCategory, candidate: TrainedModel,
                            candidate_metrics: Metrics, min_gain: float = 0.01,
                            decided_at: Optional[str] = None) -> Decision:
        """PROMOTED iff no active model yet, or accuracy gains >= min_gain."""
        directory = self._dir(category)
        directory.mkdir(parents=True, exist_ok=True)
        with FileLock(str(directory / "lock")):
            active = self.active_metrics(category)
            if active is None or candidate_metrics.accuracy >= active.accuracy + min_gain:
                decision = Decision.PROMOTED
            else:
                decision = Decision.KEPT

            entry = {
                "digest": model_digest(candidate),
                "metrics": candidate_metrics.as_dict(),
                "decision": decision.value,
                "timestamp": decided_at,
            }
            with open(directory / self.HISTORY, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, sort_keys=True, separators=(",", ":")) + "\n")

            if decision is Decision.PROMOTED:
                fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
                try:
                    with os.fdopen(fd, "w", encoding="utf-8") as fh:
                        fh.write(serialize_model(candidate))
                    os.replace(tmp, directory / self.ACTIVE)
                except BaseException:
                    if os.path.exists(tmp):
                        os.unlink(tmp)
                    raise
        return decision
