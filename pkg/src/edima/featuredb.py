"""Labeled-sample store backing (re)training.

One JSON-lines file, one record per line: the feature row keys plus id,
source and added_at. Mutations rewrite the whole file through a temp
file and os.replace, so a failed operation leaves the store exactly as
it was and readers never observe a half-written file. Writers serialize
on a sibling .lock file.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from filelock import FileLock

from .errors import DuplicateId, MalformedRow
from .features import FeatureVector, Label, from_row, to_row
from .sessions import MalwareCategory


@dataclass(frozen=True)
class SampleRecord:
    id: str
    fv: FeatureVector
    source: str
    added_at: str  # ISO-8601, UTC

    def __post_init__(self):
        if self.fv.label is None:
            raise ValueError("the store only holds labeled vectors")


def record_to_row(rec: SampleRecord) -> dict:
    row = to_row(rec.fv)
    row["id"] = rec.id
    row["source"] = rec.source
    row["added_at"] = rec.added_at
    return row


def record_from_row(row: dict, line_no: int = 0) -> SampleRecord:
    fv = from_row(row, line_no)
    if fv.label is None:
        raise MalformedRow(line_no, "label missing")
    try:
        return SampleRecord(id=str(row["id"]), fv=fv, source=str(row["source"]),
                            added_at=str(row["added_at"]))
    except KeyError as exc:
        raise MalformedRow(line_no, f"missing key {exc}") from exc


class FeatureStore:
    def __init__(self, path):
        self.path = Path(path)
        self._lock = FileLock(str(self.path) + ".lock")

    def _load(self) -> list:
        if not self.path.exists():
            return []
        records = []
        with open(self.path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise MalformedRow(line_no, f"not valid JSON: {exc.msg}") from exc
                if not isinstance(row, dict):
                    raise MalformedRow(line_no, "row must be a JSON object")
                records.append(record_from_row(row, line_no))
        return records

    def _write(self, records: list) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                for rec in records:
                    fh.write(json.dumps(record_to_row(rec), sort_keys=True,
                                        separators=(",", ":")) + "\n")
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def __len__(self) -> int:
        return len(self._load())

    def insert(self, records: list) -> int:
        """Append a batch; all-or-nothing, any duplicate id aborts it."""
        if not records:
            return 0
        with self._lock:
            existing = self._load()
            seen = set(r.id for r in existing)
            for rec in records:
                if rec.id in seen:
                    raise DuplicateId(rec.id)
                seen.add(rec.id)
            self._write(existing + list(records))
        return len(records)

    def query(self, category: Optional[MalwareCategory] = None,
              label: Optional[Label] = None, limit: Optional[int] = None) -> list:
        """Records matching every given filter, ordered by added_at then id."""
        out = [r for r in self._load()
               if (category is None or r.fv.category is category)
               and (label is None or r.fv.label is label)]
        out.sort(key=lambda r: (r.added_at, r.id))
        if limit is not None:
            out = out[:limit]
        return out

    def export_file(self, path) -> int:
        records = self.query()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(record_to_row(rec), sort_keys=True,
                                    separators=(",", ":")) + "\n")
        return len(records)

    def import_file(self, path) -> int:
        """Load an exported file into this store; id collisions abort."""
        records = []
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise MalformedRow(line_no, f"not valid JSON: {exc.msg}") from exc
                if not isinstance(row, dict):
                    raise MalformedRow(line_no, "row must be a JSON object")
                records.append(record_from_row(row, line_no))
        return self.insert(records)
