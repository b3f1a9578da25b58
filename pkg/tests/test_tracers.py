import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ikabc.kernel import feature_map
from ikabc.kernel_abc import MaximaMapping, mapping_similarity, maxima_weighted_mapping, site_probabilities
from ikabc.partitioning import VoronoiPartitioning, build_voronoi_partitioning
from ikabc.tracers import TracersConfig, generate_tracer_points, tracers_search


def test_tracer_grid_1d():
    pts = generate_tracer_points([[0.0], [10.0]], 3)
    assert pts.ravel().tolist() == [0.0, 5.0, 10.0]


def test_tracer_degenerate_sites():
    pts = generate_tracer_points([[2.0, 3.0]] * 4, 7)
    assert pts.tolist() == [[2.0, 3.0]]
    with pytest.raises(ValueError):
        generate_tracer_points(np.empty((0, 2)), 3)


def test_tracer_most_distant_partner():
    # |(10,0)-(0,0)| = 10 < |(10,0)-(0,10)| = 14.1, so (10,0) pairs with (0,10)
    pts = generate_tracer_points([[0, 0], [10, 0], [0, 10]], 3)
    assert [5.0, 5.0] in pts.tolist()
    for p in pts:
        on_01 = p[1] == 0 or p[0] == 0
        on_12 = np.isclose(p[0] + p[1], 10)
        assert on_01 or on_12


def test_all_sites_equal():
    part = VoronoiPartitioning.from_sites([[[0.0, 0.0], [1.0, 1.0]]] * 3)
    mapping = MaximaMapping(np.array([1, 1, 1]), np.array([[1.0, 1.0]] * 3), part.uid)
    res = tracers_search(part, mapping)
    assert res.theta_est.tolist() == [1.0, 1.0]
    assert res.similarity == 1.0 and res.iterations == 1


def test_three_sites_1d():
    part = VoronoiPartitioning.from_sites([[0.0], [5.0], [10.0]])
    mapping = MaximaMapping(np.array([1]), np.array([[5.0]]), part.uid)
    res = tracers_search(part, mapping)
    assert res.similarity == 1.0
    # Voronoi cell of site 5 is (2.5, 7.5)
    assert 2.5 < res.theta_est[0] < 7.5


def test_large_epsilon_stops_after_one_iteration():
    data = np.random.default_rng(0).random((300, 3))
    part = build_voronoi_partitioning(data, 16, 40, 2)
    maps = feature_map(part, data)
    w = np.exp(-50 * ((data - 0.4) ** 2).sum(axis=1))
    mapping = maxima_weighted_mapping(site_probabilities(w, maps), part)
    res = tracers_search(part, mapping, TracersConfig(epsilon=2.0))
    assert res.iterations == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 12))
def test_trajectory_and_similarity_contract(seed, d):
    rng = np.random.default_rng(seed)
    data = rng.random((150, d))
    part = build_voronoi_partitioning(data, 12, 30, seed)
    maps = feature_map(part, data)
    mapping = maxima_weighted_mapping(site_probabilities(rng.normal(size=150), maps), part)
    cfg = TracersConfig(max_iter=8)
    res = tracers_search(part, mapping, cfg)
    assert np.all(np.diff(res.trajectory) >= 0)
    assert 1 <= res.iterations <= cfg.max_iter
    assert 0.0 <= res.similarity <= 1.0
    assert res.similarity == mapping_similarity(feature_map(part, res.theta_est), mapping)
    assert res.similarity == max(res.trajectory)


def test_trace_csv(tmp_path):
    part = VoronoiPartitioning.from_sites([[0.0], [5.0], [10.0]])
    mapping = MaximaMapping(np.array([1]), np.array([[5.0]]), part.uid)
    res = tracers_search(part, mapping)
    res.write_trace_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iteration,best_similarity,theta1"
    assert len(lines) == 1 + res.iterations


def test_config_validation():
    with pytest.raises(ValueError):
        TracersConfig(n_tr=0)
    with pytest.raises(ValueError):
        TracersConfig(epsilon=0)
