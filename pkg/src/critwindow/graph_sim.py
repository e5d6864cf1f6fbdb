"""Component structure of G(n, p) in the critical window ``p = 1/n + lam n**(-4/3)``.

Edges are drawn by geometric skips over the pair sequence
``(0,1), (0,2), (1,2), (0,3), ...`` (pair ``(i, j)``, ``i < j``, has index
``j (j - 1)/2 + i``), so a draw costs ``O(n + edges)`` instead of ``O(n**2)``.
Components come from a union-find with union by size and path compression.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from numba import njit
from scipy.special import gammaln, logsumexp

from .errors import InsufficientSamplesError
from .records import PointSample, substream


@dataclass(frozen=True)
class WindowConfig:
    n: int
    lam: float
    seed: int = 0
    replications: int = 1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1000:
            raise ValueError("n must be an integer >= 1000")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"edge probability {self.p} is outside (0, 1)")

    @property
    def p(self) -> float:
        n = float(self.n)
        return 1.0 / n + self.lam * n ** (-4.0 / 3.0)


@dataclass(frozen=True)
class ComponentSummary:
    size: int
    edges: int
    complexity: int
    scaled_size: float


@dataclass(frozen=True)
class Components:
    """All components of one draw, largest first (ties broken by edges, then root vertex)."""

    n: int
    sizes: np.ndarray
    edges: np.ndarray
    total_edges: int

    @property
    def complexity(self) -> np.ndarray:
        return self.edges - self.sizes + 1

    @property
    def scaled_sizes(self) -> np.ndarray:
        return self.sizes / float(np.cbrt(self.n)) ** 2

    def __len__(self):
        return self.sizes.size

    def __iter__(self) -> Iterator[ComponentSummary]:
        scaled = self.scaled_sizes
        cx = self.complexity
        for i in range(self.sizes.size):
            yield ComponentSummary(int(self.sizes[i]), int(self.edges[i]), int(cx[i]), float(scaled[i]))

    def __getitem__(self, i) -> ComponentSummary:
        return ComponentSummary(int(self.sizes[i]), int(self.edges[i]),
                                int(self.edges[i] - self.sizes[i] + 1),
                                float(self.sizes[i] / float(np.cbrt(self.n)) ** 2))


@njit(cache=True)
def _pair_from_index(k):
    u = np.empty(k.size, np.int64)
    v = np.empty(k.size, np.int64)
    for t in range(k.size):
        kk = k[t]
        j = np.int64((1.0 + math.sqrt(1.0 + 8.0 * kk)) / 2.0)
        while j * (j - 1) // 2 > kk:
            j -= 1
        while (j + 1) * j // 2 <= kk:
            j += 1
        u[t] = kk - j * (j - 1) // 2
        v[t] = j
    return u, v


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def _union_find_roots(n, u, v):
    parent = np.arange(n)
    size = np.ones(n, np.int64)
    for e in range(u.size):
        a = _find(parent, u[e])
        b = _find(parent, v[e])
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
    roots = np.empty(n, np.int64)
    for x in range(n):
        roots[x] = _find(parent, x)
    return roots


def sample_edges(n: int, p: float, rng: np.random.Generator):
    """Endpoints ``(u, v)`` of the edges of one G(n, p) draw, in pair-index order."""
    total = n * (n - 1) // 2
    mean = total * p
    batch = int(mean + 6.0 * math.sqrt(mean) + 64)
    chunks = []
    last = -1
    while True:
        gaps = rng.geometric(p, size=batch).astype(np.int64)
        pos = last + np.cumsum(gaps)
        keep = pos[pos < total]
        chunks.append(keep)
        if keep.size < pos.size:
            break
        last = int(pos[-1])
    idx = np.concatenate(chunks)
    return _pair_from_index(idx)


def components_from_edges(n: int, u, v) -> Components:
    """Component sizes and edge counts for an explicit edge list (no self loops or repeats)."""
    u = np.ascontiguousarray(u, dtype=np.int64)
    v = np.ascontiguousarray(v, dtype=np.int64)
    roots = _union_find_roots(int(n), u, v)
    sizes = np.bincount(roots, minlength=n)
    edges = np.bincount(roots[u], minlength=n) if u.size else np.zeros(n, np.int64)
    rs = np.flatnonzero(sizes)
    order = np.lexsort((rs, -edges[rs], -sizes[rs]))
    rs = rs[order]
    return Components(int(n), sizes[rs].astype(np.int64), edges[rs].astype(np.int64), int(u.size))


def sample_components(cfg: WindowConfig, replication: int = 0) -> Components:
    """One G(n, p) draw; deterministic in ``(seed, n, lam, replication)``."""
    rng = substream(cfg.seed, replication, "graph")
    u, v = sample_edges(int(cfg.n), cfg.p, rng)
    return components_from_edges(int(cfg.n), u, v)


@dataclass(frozen=True)
class EmpiricalStats:
    z_eps: float
    chi_eps: int
    labeled_points: PointSample
    per_label_counts: dict


def empirical_stats(components: Components, eps: float, n: int | None = None,
                    strict: bool = False) -> EmpiricalStats:
    """Weight and count of the components with scaled size ``>= eps`` (``> eps`` if ``strict``)."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    n = components.n if n is None else int(n)
    scale = float(np.cbrt(n)) ** 2
    cut = eps * scale
    sel = components.sizes > cut if strict else components.sizes >= cut
    sizes = components.sizes[sel]
    labels = components.complexity[sel]
    z = float(np.sum(sizes)) / scale
    points = PointSample(sizes / scale, labels)  # already nonincreasing
    uniq, counts = np.unique(labels, return_counts=True)
    return EmpiricalStats(z, int(sizes.size), points, {int(a): int(b) for a, b in zip(uniq, counts)})


# -- exact expectations for trees and unicyclic components -----------------

def log_unicyclic_count(k: int) -> float:
    """``log C(k, 1)``: connected unicyclic graphs on ``k`` labelled vertices.

    ``C(k, 1) = 1/2 sum_{r=3}^k k!/(k-r)! k**(k-r-1)`` (choose the cycle, attach a forest).
    Returns ``-inf`` for ``k < 3``.
    """
    if k < 3:
        return -math.inf
    r = np.arange(3, k + 1)
    terms = gammaln(k + 1) - gammaln(k - r + 1) + (k - r - 1) * math.log(k)
    return float(logsumexp(terms)) - math.log(2.0)


def tree_unicyclic_expectations(n: int, lam: float, k_max: int):
    """Expected numbers of tree and unicyclic components of each order ``k = 1..k_max``.

    Returns ``(k, t_k, u_k)`` arrays with
    ``t_k = C(n, k) k**(k-2) p**(k-1) (1-p)**((n-k)k + C(k,2) - k + 1)`` and
    ``u_k = C(k, 1) / k**(k-2) * p / (1-p) * t_k``.
    """
    n = int(n)
    p = 1.0 / n + lam * n ** (-4.0 / 3.0)
    if not 0 < p < 1:
        raise ValueError("edge probability outside (0, 1)")
    if not (1 <= k_max <= float(np.cbrt(n)) ** 2):
        raise ValueError("k_max must lie in [1, n**(2/3)]")
    k = np.arange(1, int(k_max) + 1)
    kf = k.astype(float)
    # log n!/(n-k)! as k log n + sum_{i<k} log1p(-i/n); differencing gammaln at n ~ 1e6 loses ~1e-10
    falling = kf * math.log(n) + np.cumsum(np.log1p(-(kf - 1.0) / n))
    log_binom = falling - gammaln(kf + 1.0)
    exponent = (n - kf) * kf + kf * (kf - 1.0) / 2.0 - kf + 1.0
    log_t = log_binom + (kf - 2.0) * np.log(kf) + (kf - 1.0) * math.log(p) + exponent * math.log1p(-p)
    t = np.exp(log_t)
    log_c = np.array([log_unicyclic_count(int(kk)) for kk in k])
    with np.errstate(invalid="ignore"):
        log_u = log_c - (kf - 2.0) * np.log(kf) + math.log(p) - math.log1p(-p) + log_t
    u = np.where(np.isfinite(log_c), np.exp(log_u), 0.0)
    return k, t, u


# -- complexity labels in a size window ------------------------------------------

@dataclass(frozen=True)
class LabelFrequencies:
    counts: dict
    total: int

    @property
    def frequencies(self) -> dict:
        return {k: v / self.total for k, v in sorted(self.counts.items())}


def window_label_counts(draws, window, n: int) -> LabelFrequencies:
    """Complexity labels of the components whose scaled size lies in ``[a, b]``."""
    a, b = window
    counts: dict = {}
    scale = float(np.cbrt(n)) ** 2
    for comps in draws:
        sel = (comps.sizes >= a * scale) & (comps.sizes <= b * scale)
        for lab in comps.complexity[sel]:
            counts[int(lab)] = counts.get(int(lab), 0) + 1
    return LabelFrequencies(counts, int(sum(counts.values())))


MIN_WINDOW_SAMPLES = 100


def label_frequency_check(n: int, lam: float, x_window, replications: int, seed: int = 0,
                          draws=None) -> LabelFrequencies:
    """Empirical complexity-label frequencies among components with scaled size in ``x_window``.

    Raises :class:`InsufficientSamplesError` when fewer than 100 components fall in the window.
    """
    a, b = x_window
    if not 0 < a < b:
        raise ValueError("window must satisfy 0 < a < b")
    if draws is None:
        cfg = WindowConfig(n, lam, seed, replications)
        draws = (sample_components(cfg, r) for r in range(replications))
    res = window_label_counts(draws, (a, b), n)
    if res.total < MIN_WINDOW_SAMPLES:
        raise InsufficientSamplesError(
            f"only {res.total} components in [{a}, {b}] over {replications} replications "
            f"(need {MIN_WINDOW_SAMPLES})"
        )
    return res
