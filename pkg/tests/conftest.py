import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from critwindow import bm_sim, graph_sim
from critwindow.experiments import _map

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# Large shared simulations, sized for the statistical acceptance checks.
GRAPH_N = 10 ** 6
GRAPH_REPS = 1000
GRAPH_SEED = 20240611
BM_PATHS = 10_000
BM_SEED = 977
BM_STEP = 5e-5
BM_MIN_EXCURSION = 0.05
POINT_FLOOR = 0.05


def _graph_rep(rep):
    comps = graph_sim.sample_components(graph_sim.WindowConfig(GRAPH_N, 0.0, GRAPH_SEED), rep)
    scaled = comps.scaled_sizes
    keep = scaled >= POINT_FLOOR
    complex_all = int(np.count_nonzero(comps.complexity >= 2))
    return scaled[keep], comps.complexity[keep], comps.total_edges, int(comps.sizes.sum()), complex_all


def _bm_rep(rep):
    cfg = bm_sim.PathConfig(0.0, BM_STEP, 12.0, BM_MIN_EXCURSION, BM_SEED)
    recs = bm_sim.sample_excursions(cfg, rep)
    return (np.array([r.length for r in recs]), np.array([r.mark for r in recs], dtype=np.int64),
            bm_sim.lengths_distinct(recs))


@pytest.fixture(scope="session")
def graph_draws():
    """Per replication: scaled sizes >= 0.05 (largest first), their complexities,
    edge and vertex totals, and the number of complex components of any size."""
    return _map(_graph_rep, range(GRAPH_REPS))


@pytest.fixture(scope="session")
def bm_paths():
    """Per path: excursion lengths >= 0.05 (longest first), Poisson marks, distinctness flag."""
    return _map(_bm_rep, range(BM_PATHS))


# One summary line per acceptance criterion, filled in by test_acceptance.py.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split('] ')[1].split('.')[0])):
            terminalreporter.write_line(line)
