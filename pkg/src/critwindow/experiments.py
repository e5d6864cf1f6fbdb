"""Replication runners and summary statistics shared by the CLI and the tests."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from . import bm_sim, graph_sim
from .errors import InsufficientSamplesError
from .intensity import IntensityParams
from .moments import count_variance, expected_count, expected_weight, weight_variance


def worker_count() -> int:
    """Worker processes for replications: ``CW_THREADS`` if set, else the CPU count."""
    env = os.environ.get("CW_THREADS")
    cpus = os.cpu_count() or 1
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ValueError(f"CW_THREADS must be a positive integer, got {env!r}") from None
        if cap < 1:
            raise ValueError("CW_THREADS must be a positive integer")
        return cap
    return cpus


def _map(fn, items, workers=None):
    workers = worker_count() if workers is None else workers
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _points_record(sampler, seed, n, lam, eps, rep, points, labels):
    sel = points >= eps
    pts, lab = points[sel], labels[sel]
    return {
        "sampler": sampler, "seed": int(seed), "n": n, "lambda": float(lam), "eps": float(eps),
        "rep": int(rep), "z_eps": float(np.sum(pts)), "chi_eps": int(pts.size),
        "points": [float(x) for x in pts], "labels": [int(v) for v in lab],
    }


def _graph_one(rep, n, lam, eps, seed):
    comps = graph_sim.sample_components(graph_sim.WindowConfig(n, lam, seed), rep)
    stats = graph_sim.empirical_stats(comps, eps)
    rec = _points_record("graph", seed, n, lam, eps, rep, stats.labeled_points.points,
                         stats.labeled_points.labels)
    rec["z_eps"] = stats.z_eps  # same sum, kept in the integer domain
    return rec


def graph_records(n: int, lam: float, eps: float, replications: int, seed: int = 0, workers=None):
    """One record per G(n, p) replication with the components of scaled size ``>= eps``."""
    graph_sim.WindowConfig(n, lam, seed, replications)  # validate before spawning workers
    return _map(partial(_graph_one, n=int(n), lam=lam, eps=eps, seed=seed), range(replications), workers)


def _bm_one(rep, cfg, eps):
    recs = bm_sim.sample_excursions(cfg, rep)
    sample = bm_sim.excursion_point_sample(recs)
    return _points_record("bm", cfg.seed, None, cfg.lam, eps, rep, sample.points, sample.labels)


def bm_records(lam: float, eps: float, replications: int, seed: int = 0, step: float = 5e-5,
               min_excursion: float = 0.05, horizon=None, workers=None):
    """One record per simulated path with the excursions of length ``>= eps``."""
    if eps < min_excursion:
        raise ValueError("eps must be at least min_excursion")
    cfg = bm_sim.PathConfig(lam, step, horizon, min_excursion, seed)
    return _map(partial(_bm_one, cfg=cfg, eps=eps), range(replications), workers)


@dataclass(frozen=True)
class SampleSummary:
    mean: float
    mean_se: float
    variance: float
    variance_se: float
    count: int


def summarize(values) -> SampleSummary:
    """Sample mean and variance with their standard errors.

    ``se(var)`` uses ``(m4 - s**4 (R - 3)/(R - 1)) / R`` for ``R`` replications.
    """
    x = np.asarray(values, dtype=float)
    R = x.size
    if R < 4:
        raise InsufficientSamplesError("need at least 4 replications for variance standard errors")
    mean = float(np.mean(x))
    var = float(np.var(x, ddof=1))
    m4 = float(np.mean((x - mean) ** 4))
    var_se = math.sqrt(max(m4 - var * var * (R - 3) / (R - 1), 0.0) / R)
    return SampleSummary(mean, math.sqrt(var / R), var, var_se, R)


@dataclass(frozen=True)
class ComparisonRow:
    statistic: str
    empirical: float
    std_error: float
    analytic: float
    analytic_error: float

    @property
    def z_score(self) -> float:
        se = math.hypot(self.std_error, self.analytic_error)
        return (self.empirical - self.analytic) / se if se > 0 else math.inf


def compare_records(records, lam: float, eps: float) -> list[ComparisonRow]:
    """Mean and variance of ``z_eps`` and ``chi_eps`` against the exact moments."""
    params = IntensityParams(lam)
    z = summarize([r["z_eps"] for r in records])
    c = summarize([r["chi_eps"] for r in records])
    ew = expected_weight(eps, params)
    vw = weight_variance(eps, params)
    ec = expected_count(eps, params)
    vc = count_variance(eps, params)
    return [
        ComparisonRow("mean_z", z.mean, z.mean_se, float(ew), ew.error),
        ComparisonRow("var_z", z.variance, z.variance_se, float(vw), vw.error),
        ComparisonRow("mean_chi", c.mean, c.mean_se, float(ec), ec.error),
        ComparisonRow("var_chi", c.variance, c.variance_se, float(vc), vc.error),
    ]
