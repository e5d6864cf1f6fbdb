"""Point samples, experiment manifests and their serialized forms."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

#: Sampler identities; the stream tag keeps their random streams disjoint.
SAMPLER_TAGS = {"graph": 1, "bm": 2}


def substream(seed: int, replication: int, sampler: str = "graph") -> np.random.Generator:
    """Independent, individually reproducible generator for one replication.

    Philox is counter based; ``SeedSequence(seed, spawn_key=(tag, rep))`` gives
    each (sampler, replication) pair its own key without any stream overlap.
    """
    if not (0 <= int(seed) < 2 ** 64):
        raise ValueError("seed must be a 64-bit unsigned integer")
    if int(replication) < 0:
        raise ValueError("replication must be nonnegative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(SAMPLER_TAGS[sampler], int(replication)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class PointSample:
    """Finite point configuration: positive reals in nonincreasing order, optional integer labels."""

    points: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1:
            raise ValueError("points must be one-dimensional")
        if np.any(~(pts > 0)):
            raise ValueError("points must be positive")
        if np.any(np.diff(pts) > 0):
            raise ValueError("points must be in nonincreasing order")
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.asarray(self.labels)
            if lab.shape != pts.shape:
                raise ValueError("labels must match points")
            if lab.size and (np.any(lab < 0) or not np.issubdtype(lab.dtype, np.integer)):
                raise ValueError("labels must be nonnegative integers")
            object.__setattr__(self, "labels", lab.astype(np.int64))

    @classmethod
    def from_unsorted(cls, points, labels=None) -> "PointSample":
        points = np.asarray(points, dtype=float)
        order = np.argsort(-points, kind="stable")
        return cls(points[order], None if labels is None else np.asarray(labels)[order])

    def __len__(self):
        return self.points.size

    def count_above(self, eps: float, strict: bool = False) -> int:
        return int(np.sum(self.points > eps if strict else self.points >= eps))

    def weight_above(self, eps: float, strict: bool = False) -> float:
        sel = self.points > eps if strict else self.points >= eps
        return float(np.sum(self.points[sel]))

    def largest(self, k: int = 1) -> float:
        """k-th largest point, or 0 when there are fewer than k points."""
        return float(self.points[k - 1]) if self.points.size >= k else 0.0

    def to_dict(self):
        out = {"points": [float(x) for x in self.points]}
        if self.labels is not None:
            out["labels"] = [int(v) for v in self.labels]
        return out

    @classmethod
    def from_dict(cls, d) -> "PointSample":
        labels = d.get("labels")
        return cls(np.asarray(d["points"], dtype=float),
                   None if labels is None else np.asarray(labels, dtype=np.int64))


@dataclass(frozen=True)
class ExperimentManifest:
    """Everything needed to re-run a command and reproduce its numbers."""

    command: str
    lam: float = 0.0
    eps: Optional[float] = None
    n: Optional[int] = None
    replications: Optional[int] = None
    seed: Optional[int] = None
    tolerances: dict = field(default_factory=dict)
    output_path: Optional[str] = None
    format: str = "csv"
    sampler: Optional[str] = None
    options: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentManifest":
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown manifest fields: {sorted(unknown)}")
        return cls(**data)
