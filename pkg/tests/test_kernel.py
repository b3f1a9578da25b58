import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ikabc.kernel import (
    FeatureIndexMap,
    ProvenanceError,
    feature_map,
    gram_matrix,
    kernel_cross_vector,
    kernel_similarity,
    median_bandwidth,
    rbf_gram,
    save_gram_csv,
)
from ikabc.partitioning import VoronoiPartitioning, build_isolation_forest, build_voronoi_partitioning


@pytest.fixture
def two_trees():
    return VoronoiPartitioning.from_sites([[[0, 0], [10, 10]], [[0, 10], [10, 0]]])


def test_feature_map_examples(two_trees):
    one = VoronoiPartitioning.from_sites([[0.0], [1.0], [2.0]])
    assert feature_map(one, [1.0]).cells.tolist() == [1]
    # hand-computed nearest sites: tree 1 -> (0,0); tree 2 -> (10,0)
    assert feature_map(two_trees, [1, 0]).cells.tolist() == [0, 1]
    a, b = feature_map(two_trees, [3.3, 1.2]), feature_map(two_trees, [3.3, 1.2])
    np.testing.assert_array_equal(a.cells, b.cells)


def test_binary_embedding_has_one_per_tree(two_trees):
    fm = feature_map(two_trees, [1, 0])
    assert fm.to_binary().tolist() == [1, 0, 0, 1]
    batch = feature_map(two_trees, np.random.default_rng(0).random((7, 2)) * 10)
    assert batch.to_binary().shape == (7, 4)
    assert np.all(batch.to_binary().sum(axis=1) == 2)


def test_similarity_examples(two_trees):
    x, z = feature_map(two_trees, [1, 0]), feature_map(two_trees, [0, 9])
    assert z.cells.tolist() == [0, 0]
    assert kernel_similarity(x, x) == 1.0
    assert kernel_similarity(x, z) == 0.5
    # (1,2) -> cells [0,0]; (9,8) -> cells [1,1]
    assert kernel_similarity(feature_map(two_trees, [1, 2]), feature_map(two_trees, [9, 8])) == 0.0


def test_provenance_checked(two_trees):
    other = VoronoiPartitioning.from_sites([[[0, 0], [10, 11]], [[0, 10], [10, 0]]])
    with pytest.raises(ProvenanceError):
        kernel_similarity(feature_map(two_trees, [1, 0]), feature_map(other, [1, 0]))
    with pytest.raises(ProvenanceError):
        kernel_cross_vector(feature_map(two_trees, np.zeros((2, 2))), feature_map(other, [1, 0]))


def test_gram_examples(two_trees):
    assert gram_matrix([feature_map(two_trees, [1, 0])]).tolist() == [[1.0]]
    same = feature_map(two_trees, np.array([[1.0, 0], [1.0, 0]]))
    assert gram_matrix(same).tolist() == [[1, 1], [1, 1]]
    iso = FeatureIndexMap(np.array([[0, 0], [1, 1]]), 2, "x")
    assert gram_matrix(iso).tolist() == [[1, 0], [0, 1]]
    with pytest.raises(ValueError):
        gram_matrix([])


def test_cross_vector_examples(two_trees):
    maps = feature_map(two_trees, np.array([[1.0, 0], [10, 0], [0, 9]]))
    obs = feature_map(two_trees, [10, 0])
    assert kernel_cross_vector(maps, obs)[1] == 1.0
    lonely = FeatureIndexMap(np.array([[0, 0], [0, 0]]), 2, "y")
    assert kernel_cross_vector(lonely, FeatureIndexMap(np.array([1, 1]), 2, "y")).tolist() == [0, 0]
    # (0,9) -> [0,0] shares tree 1 with (1,0) -> [0,1]; (4,9) -> [1,0] shares nothing
    pair = feature_map(two_trees, np.array([[0, 9.0], [4.0, 9.0]]))
    np.testing.assert_array_equal(kernel_cross_vector(pair, feature_map(two_trees, [1, 0])), [0.5, 0.0])


def brute_gram(cells):
    n, t = cells.shape
    g = np.empty((n, n))
    for i in range(n):
        for m in range(n):
            g[i, m] = sum(cells[i, j] == cells[m, j] for j in range(t)) / t
    return g


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 30), st.integers(1, 5), st.integers(1, 8))
def test_gram_axioms(seed, n, d, t):
    rng = np.random.default_rng(seed)
    data = rng.normal(size=(n, d))
    part = build_voronoi_partitioning(data, max(1, n // 3), t, seed)
    maps = feature_map(part, data)
    g = gram_matrix(maps)
    np.testing.assert_array_equal(g, brute_gram(maps.cells))
    np.testing.assert_array_equal(g, g.T)
    np.testing.assert_array_equal(np.diag(g), 1.0)
    assert np.all(np.isin(np.round(g * t), np.arange(t + 1)))
    assert np.linalg.eigvalsh(g).min() >= -1e-8
    # explicit embedding agrees with the index form
    phi = maps.to_binary().astype(float)
    np.testing.assert_allclose(phi @ phi.T / t, g, atol=1e-15)


def test_forest_feature_map():
    data = np.random.default_rng(2).random((100, 2))
    forest = build_isolation_forest(data, 16, 10, 0)
    maps = feature_map(forest, data)
    assert maps.cells.shape == (100, 10)
    assert maps.cells.max() < forest.n_cells
    g = gram_matrix(maps)
    assert np.allclose(np.diag(g), 1) and np.linalg.eigvalsh(g).min() >= -1e-8


def test_rbf_alternative_and_export(tmp_path):
    pts = np.random.default_rng(0).random((30, 2))
    bw = median_bandwidth(pts)
    g = rbf_gram(pts, bw)
    assert np.allclose(np.diag(g), 1) and np.allclose(g, g.T)
    save_gram_csv(tmp_path / "g.csv", g)
    np.testing.assert_array_equal(np.loadtxt(tmp_path / "g.csv", delimiter=","), g)


def _mean_similarity(data, x, y, xi, t, seeds):
    sims = []
    for s in seeds:
        part = build_voronoi_partitioning(data, xi, t, s)
        sims.append(kernel_similarity(feature_map(part, x), feature_map(part, y)))
    return float(np.mean(sims))


def test_similarity_depends_on_density():
    rng = np.random.default_rng(0)
    dense = rng.uniform(0, 1, size=(950, 2))
    sparse = rng.uniform(3, 4, size=(50, 2))
    data = np.vstack([dense, sparse])
    dense_pair = _mean_similarity(data, [0.3, 0.5], [0.7, 0.5], 16, 50, range(10))
    sparse_pair = _mean_similarity(data, [3.3, 3.5], [3.7, 3.5], 16, 50, range(10))
    assert sparse_pair > 3 * dense_pair
