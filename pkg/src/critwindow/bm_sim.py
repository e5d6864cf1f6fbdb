"""Excursions of reflected Brownian motion with parabolic drift.

``W^lam(s) = W(s) + lam s - s**2/2`` is simulated on a uniform grid and
reflected at its running minimum, ``B = W^lam - min_{u <= s} W^lam``. Each
excursion of ``B`` away from zero gives a point (its length) and a label
(a Poisson variable whose mean is the excursion area).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .records import PointSample, substream


HORIZON_SAFETY = 8.0


def default_horizon(lam: float) -> float:
    """Grid horizon long enough that the drift has pushed ``W^lam`` far below its maximum.

    Also at least the root of ``lam T - T**2/2 = -(lam**2/2 + HORIZON_SAFETY)``,
    which the first two terms miss once ``|lam|`` is large.
    """
    past_peak = lam + math.sqrt(2.0 * lam * lam + 2.0 * HORIZON_SAFETY)
    return max(12.0, 2.0 * lam + 8.0 / max(1.0, abs(lam)) ** (1.0 / 3.0) + 4.0, past_peak)


@dataclass(frozen=True)
class PathConfig:
    lam: float
    step: float = 5e-5
    horizon: float | None = None
    min_excursion: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.min_excursion > 0:
            raise ValueError("min_excursion must be positive")
        if self.step > self.min_excursion / 20.0:
            raise ValueError("step must be at most min_excursion / 20")
        if self.horizon is not None and not self.horizon > self.min_excursion:
            raise ValueError("horizon must exceed min_excursion")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def T(self) -> float:
        return default_horizon(self.lam) if self.horizon is None else float(self.horizon)

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.step))


@dataclass(frozen=True)
class ExcursionRecord:
    start: float
    length: float
    area: float
    mark: int


def drifted_path(cfg: PathConfig, rng: np.random.Generator | None = None, noise: bool = True):
    """Grid times and ``W^lam`` on the grid; ``noise=False`` drops the Brownian part."""
    m = cfg.n_steps
    h = cfg.step
    s = h * np.arange(m + 1)
    drift = cfg.lam * s - 0.5 * s * s
    if not noise:
        return s, drift
    if rng is None:
        raise ValueError("a generator is required when noise is on")
    w = np.empty(m + 1)
    w[0] = 0.0
    np.cumsum(rng.standard_normal(m) * math.sqrt(h), out=w[1:])
    return s, w + drift


def excursions_of(s, path, min_length: float):
    """``(start, length, area)`` of each completed excursion of the reflected path.

    An excursion starts at a grid zero of ``B`` and ends where ``path`` falls
    back to the running minimum; that crossing is located by linear
    interpolation inside the final grid step, so lengths are not tied to
    multiples of the step. The area is the trapezoid rule over the grid points,
    ``h * sum(B)`` since ``B`` vanishes at the grid ends. Excursions still open
    at the end of the grid are dropped.
    """
    runmin = np.minimum.accumulate(path)
    b = path - runmin
    zeros = np.flatnonzero(b == 0.0)
    if zeros.size < 2:
        return np.empty(0), np.empty(0), np.empty(0)
    h = s[1] - s[0]
    left, right = zeros[:-1], zeros[1:]
    keep = (right - left) > 1
    left, right = left[keep], right[keep]
    above = path[right - 1] - runmin[right - 1]  # > 0
    drop = path[right - 1] - path[right]  # >= above
    ends = s[right - 1] + h * (above / drop)
    lengths = ends - s[left]
    keep = lengths >= min_length
    left, right, lengths = left[keep], right[keep], lengths[keep]
    cb = np.concatenate(([0.0], np.cumsum(b)))
    areas = h * (cb[right] - cb[left + 1])
    return s[left], lengths, areas


def sample_excursions(cfg: PathConfig, replication: int = 0, noise: bool = True) -> list[ExcursionRecord]:
    """Excursions of one simulated path, longest first; deterministic in ``(seed, replication)``."""
    rng = substream(cfg.seed, replication, "bm")
    s, path = drifted_path(cfg, rng, noise)
    starts, lengths, areas = excursions_of(s, path, cfg.min_excursion)
    marks = rng.poisson(areas) if noise else np.zeros(areas.size, np.int64)
    order = np.lexsort((starts, -lengths))
    return [ExcursionRecord(float(starts[i]), float(lengths[i]), float(areas[i]), int(marks[i])) for i in order]


def excursion_point_sample(records) -> PointSample:
    """Lengths and marks of the excursions as a labelled point sample."""
    if not records:
        return PointSample(np.empty(0), np.empty(0, np.int64))
    lengths = np.array([r.length for r in records])
    marks = np.array([r.mark for r in records], dtype=np.int64)
    return PointSample.from_unsorted(lengths, marks)


def resolution_ties(records, step: float) -> int:
    """Number of adjacent (sorted) length pairs closer than ``2 * step``: ties the grid cannot resolve."""
    lengths = np.sort([r.length for r in records])
    return int(np.sum(np.diff(lengths) <= 2.0 * step)) if lengths.size > 1 else 0


def lengths_distinct(records) -> bool:
    """True when no two recorded excursion lengths coincide."""
    lengths = np.sort([r.length for r in records])
    return bool(lengths.size < 2 or np.all(np.diff(lengths) > 0))
