"""Confusion counts and the four derived scores. MALICIOUS is positive."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import EmptyInput, LengthMismatch
from ..features import Label


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    fn: int
    tn: int
    accuracy: float
    precision: float
    recall: float
    f1: float

    def as_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
            "accuracy": self.accuracy, "precision": self.precision,
            "recall": self.recall, "f1": self.f1,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Metrics":
        return cls(tp=int(d["tp"]), fp=int(d["fp"]), fn=int(d["fn"]), tn=int(d["tn"]),
                   accuracy=float(d["accuracy"]), precision=float(d["precision"]),
                   recall=float(d["recall"]), f1=float(d["f1"]))


def from_counts(tp: int, fp: int, fn: int, tn: int) -> Metrics:
    # undefined ratios (empty denominator) are reported as 0.0
    total = tp + fp + fn + tn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics(tp=tp, fp=fp, fn=fn, tn=tn,
                   accuracy=(tp + tn) / total if total else 0.0,
                   precision=precision, recall=recall, f1=f1)


def compute_metrics(predicted: list, truth: list) -> Metrics:
    if len(predicted) != len(truth):
        raise LengthMismatch(f"{len(predicted)} predictions vs {len(truth)} truths")
    if not predicted:
        raise EmptyInput("cannot score an empty prediction list")
    tp = fp = fn = tn = 0
    for p, t in zip(predicted, truth):
        if p is Label.MALICIOUS:
            if t is Label.MALICIOUS:
                tp += 1
            else:
                fp += 1
        else:
            if t is Label.MALICIOUS:
                fn += 1
            else:
                tn += 1
    return from_counts(tp, fp, fn, tn)
