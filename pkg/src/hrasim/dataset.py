"""Duration datasets shared by the simulator, the generative model and quantification."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["TimeSeriesDataset", "fmt_float"]

PROVENANCES = ("simulated", "synthetic", "experimental")


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class TimeSeriesDataset:
    """One row per trial, one column per procedural segment (seconds)."""

    segments: tuple[str, ...]
    values: np.ndarray
    provenance: str = "simulated"
    source: str = ""
    trial_ids: tuple[int, ...] = field(default=())

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 and vals.size == 0:
            vals = vals.reshape(0, len(self.segments))
        if vals.ndim != 2 or vals.shape[1] != len(self.segments):
            raise ValueError(f"values must be n x {len(self.segments)}")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "segments", tuple(self.segments))
        ids = tuple(self.trial_ids) or tuple(range(len(vals)))
        if len(ids) != len(vals):
            raise ValueError("trial_ids length mismatch")
        object.__setattr__(self, "trial_ids", ids)

    def __len__(self):
        return len(self.values)

    def column(self, segment: str) -> np.ndarray:
        return self.values[:, self.segments.index(segment)]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(f"# provenance={self.provenance} source={self.source}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial_id", *self.segments])
        for tid, row in zip(self.trial_ids, self.values):
            w.writerow([tid, *(fmt_float(v) for v in row)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def read_csv(cls, path) -> "TimeSeriesDataset":
        text = Path(path).read_text()
        lines = text.splitlines()
        meta = {}
        while lines and lines[0].startswith("#"):
            for tok in lines.pop(0)[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
        rows = list(csv.reader(lines))
        if not rows:
            raise ValueError(f"{path}: no header row")
        header, body = rows[0], rows[1:]
        if header[0] != "trial_id":
            raise ValueError(f"{path}: first column must be trial_id")
        ids = tuple(int(r[0]) for r in body)
        vals = np.array([[float(x) for x in r[1:]] for r in body], dtype=float)
        return cls(tuple(header[1:]), vals.reshape(len(body), len(header) - 1),
                   provenance=meta.get("provenance", "simulated"),
                   source=meta.get("source", ""), trial_ids=ids)
