"""The 4-dimensional session feature vector and its JSON-lines row format.

For one filtered session the features are the number of distinct
destination IPs (f1) and the maximum, minimum and mean number of packets
sent per destination IP (f2, f3, f4). Scanning malware pushes f1 up and
f2..f4 toward 1 because it rarely probes the same address twice, while
normal gateway traffic revisits a small pool of endpoints.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Optional

from . import kernels
from .errors import MalformedRow
from .sessions import MalwareCategory, TrafficSession


class Label(enum.Enum):
    BENIGN = "benign"
    MALICIOUS = "malicious"

    @classmethod
    def from_wire(cls, name: str) -> "Label":
        for member in cls:
            if member.value == name:
                return member
        raise ValueError(f"unknown label {name!r}")


@dataclass
class FeatureVector:
    gateway: str
    window_start_us: int
    category: MalwareCategory
    f1_unique_dsts: int
    f2_max_pkts_per_dst: int
    f3_min_pkts_per_dst: int
    f4_mean_pkts_per_dst: float
    label: Optional[Label] = None

    @property
    def session_ref(self) -> str:
        return f"{self.gateway}/{self.window_start_us}"

    def values(self) -> tuple[float, float, float, float]:
        return (float(self.f1_unique_dsts), float(self.f2_max_pkts_per_dst),
                float(self.f3_min_pkts_per_dst), float(self.f4_mean_pkts_per_dst))


def extract_features(filtered: TrafficSession, category: MalwareCategory) -> FeatureVector:
    """Feature vector of one filtered session; all-zero when it is empty."""
    dsts = filtered.packets["dst_ip"]
    n_unique, max_c, min_c = kernels.group_counts(dsts)
    mean = len(dsts) / n_unique if n_unique else 0.0
    return FeatureVector(
        gateway=filtered.gateway_id,
        window_start_us=filtered.window_start_micros,
        category=category,
        f1_unique_dsts=int(n_unique),
        f2_max_pkts_per_dst=int(max_c),
        f3_min_pkts_per_dst=int(min_c),
        f4_mean_pkts_per_dst=float(mean),
        label=None,
    )


# Interchange row: exactly these keys, one JSON object per line.
ROW_KEYS = ("gateway", "window_start_us", "category", "f1", "f2", "f3", "f4", "label")


def to_row(fv: FeatureVector) -> dict:
    return {
        "gateway": fv.gateway,
        "window_start_us": fv.window_start_us,
        "category": fv.category.value,
        "f1": fv.f1_unique_dsts,
        "f2": fv.f2_max_pkts_per_dst,
        "f3": fv.f3_min_pkts_per_dst,
        "f4": fv.f4_mean_pkts_per_dst,
        "label": fv.label.value if fv.label is not None else None,
    }


def to_row_json(fv: FeatureVector) -> str:
    return json.dumps(to_row(fv), sort_keys=True, separators=(",", ":"))


def from_row(row: dict, line_no: int = 0) -> FeatureVector:
    try:
        return FeatureVector(
            gateway=str(row["gateway"]),
            window_start_us=int(row["window_start_us"]),
            category=MalwareCategory.from_wire(row["category"]),
            f1_unique_dsts=int(row["f1"]),
            f2_max_pkts_per_dst=int(row["f2"]),
            f3_min_pkts_per_dst=int(row["f3"]),
            f4_mean_pkts_per_dst=float(row["f4"]),
            label=Label.from_wire(row["label"]) if row.get("label") is not None else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRow(line_no, str(exc)) from exc
