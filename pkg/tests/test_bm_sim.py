import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from critwindow.bm_sim import (
    ExcursionRecord,
    HORIZON_SAFETY,
    PathConfig,
    default_horizon,
    drifted_path,
    excursion_point_sample,
    excursions_of,
    lengths_distinct,
    resolution_ties,
    sample_excursions,
)
from critwindow.experiments import summarize
from critwindow.intensity import IntensityParams
from critwindow.moments import expected_count
from critwindow.records import substream

from conftest import BM_STEP


def test_noise_free_parabola():
    for lam in (0.7, 1.0, 3.0):
        recs = sample_excursions(PathConfig(lam, 1e-4, 2 * lam + 2, 0.05), noise=False)
        assert len(recs) == 1
        r = recs[0]
        assert r.start == 0.0 and r.mark == 0
        assert r.length == pytest.approx(2 * lam, abs=1e-10)
        assert r.area == pytest.approx(2 * lam ** 3 / 3, rel=1e-6)


def test_noise_free_negative_drift_has_no_excursion():
    assert sample_excursions(PathConfig(-1.0, 1e-3, 5.0, 0.05), noise=False) == []


def test_interpolated_end_is_exact_for_linear_crossing():
    s = np.arange(6) * 0.5
    path = np.array([0.0, 1.0, 2.0, 1.0, -1.0, -2.0])
    starts, lengths, areas = excursions_of(s, path, 0.1)
    # falls from 1 to -1 over the step (1.5, 2.0), crossing 0 at 1.75
    assert starts.tolist() == [0.0] and lengths.tolist() == [1.75]
    assert areas.tolist() == [0.5 * (1.0 + 2.0 + 1.0)]


def test_open_excursion_at_horizon_is_dropped():
    s = np.arange(4) * 0.5
    assert excursions_of(s, np.array([0.0, 1.0, 2.0, 3.0]), 0.1)[1].size == 0


def test_strongly_subcritical_count():
    lam, eps, paths = -20.0, 0.01, 300
    cfg = PathConfig(lam, 1e-5, None, eps, seed=4)
    counts = [len(sample_excursions(cfg, r)) for r in range(paths)]
    s = summarize(counts)
    want = expected_count(eps, IntensityParams(lam))
    assert abs(s.mean - want) <= 3 * s.mean_se


def test_mean_count_matches_analytic(bm_paths):
    counts = [np.count_nonzero(lengths >= 0.5) for lengths, _, _ in bm_paths]
    s = summarize(counts)
    assert abs(s.mean - expected_count(0.5, IntensityParams(0.0))) <= 3 * s.mean_se


def test_lengths_distinct_every_path(bm_paths):
    assert all(flag for _, _, flag in bm_paths)


def test_record_invariants():
    cfg = PathConfig(0.5, 1e-4, 12.0, 0.02, seed=8)
    for rep in range(20):
        recs = sample_excursions(cfg, rep)
        lengths = [r.length for r in recs]
        assert lengths == sorted(lengths, reverse=True)
        assert all(r.length >= cfg.min_excursion and r.area >= 0 and r.mark >= 0 for r in recs)
        # excursions are disjoint in time
        spans = sorted((r.start, r.start + r.length) for r in recs)
        assert all(a[1] <= b[0] + 1e-12 for a, b in zip(spans, spans[1:]))


def test_marks_track_area():
    cfg = PathConfig(0.0, 1e-4, 12.0, 0.05, seed=12)
    recs = [r for rep in range(300) for r in sample_excursions(cfg, rep)]
    marks = np.array([r.mark for r in recs], dtype=float)
    areas = np.array([r.area for r in recs])
    # Poisson given the area: E(mark - area) = 0 with variance E(area)
    assert abs(np.mean(marks - areas)) <= 4 * math.sqrt(areas.mean() / areas.size)


def test_sampling_is_deterministic():
    cfg = PathConfig(0.0, 1e-4, 12.0, 0.05, seed=99)
    assert sample_excursions(cfg, 3) == sample_excursions(cfg, 3)
    assert sample_excursions(cfg, 3) != sample_excursions(cfg, 4)


def test_streams_differ_from_graph_sampler():
    a = substream(5, 0, "bm").standard_normal(4)
    b = substream(5, 0, "graph").standard_normal(4)
    assert not np.array_equal(a, b)


# -- point samples ----------------------------------------------------------------------

def test_empty_point_sample():
    ps = excursion_point_sample([])
    assert len(ps) == 0 and ps.largest() == 0.0


@given(st.lists(st.tuples(st.floats(0.05, 5.0), st.integers(0, 9)), max_size=30))
def test_point_sample_is_sorted_permutation(items):
    recs = [ExcursionRecord(float(i), x, x, m) for i, (x, m) in enumerate(items)]
    ps = excursion_point_sample(recs)
    assert sorted(ps.points.tolist()) == sorted(x for x, _ in items)
    assert np.all(np.diff(ps.points) <= 0)
    assert sorted(zip(ps.points.tolist(), ps.labels.tolist())) == sorted(items)


def test_distinctness_helpers():
    recs = [ExcursionRecord(0.0, x, 0.0, 0) for x in (1.0, 0.5, 0.5 + 1e-5)]
    assert lengths_distinct(recs)
    assert resolution_ties(recs, 1e-4) == 1
    assert not lengths_distinct(recs + [ExcursionRecord(9.0, 1.0, 0.0, 0)])


# -- discretization ------------------------------------------------------------------

def _coupled_counts(rep, step, eps=0.5):
    fine_cfg = PathConfig(0.0, step / 2, 12.0, 0.05, seed=31)
    s, fine = drifted_path(fine_cfg, substream(31, rep, "bm"))
    lengths = (excursions_of(s[::2], fine[::2], 0.05)[1], excursions_of(s, fine, 0.05)[1])
    return [np.count_nonzero(x >= eps) for x in lengths]


def test_refinement_changes_mean_count_within_error():
    # the coarse path is the fine path sampled every other step, so both see the same Brownian motion
    pairs = np.array([_coupled_counts(rep, 2 * BM_STEP) for rep in range(400)], dtype=float)
    coarse = summarize(pairs[:, 0])
    fine = summarize(pairs[:, 1])
    assert abs(fine.mean - coarse.mean) <= coarse.mean_se


# -- configuration ----------------------------------------------------------------------

def test_path_config_validation():
    with pytest.raises(ValueError):
        PathConfig(0.0, step=0.01, min_excursion=0.05)
    with pytest.raises(ValueError):
        PathConfig(0.0, step=0.0)
    with pytest.raises(ValueError):
        PathConfig(0.0, horizon=0.01)
    with pytest.raises(ValueError):
        PathConfig(0.0, seed=2 ** 64)
    cfg = PathConfig(0.0, step=1e-3, horizon=2.0, min_excursion=0.05)
    assert cfg.n_steps == 2000 and cfg.T == 2.0


@given(st.floats(-30.0, 30.0))
def test_default_horizon_past_the_peak(lam):
    T = default_horizon(lam)
    assert T >= 12.0 and T >= 2 * lam + 4
    assert lam * T - T * T / 2 <= -(lam * lam / 2 + HORIZON_SAFETY) + 1e-9 * (1 + lam * lam)
