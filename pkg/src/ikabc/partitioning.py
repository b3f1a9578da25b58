"""Random partitionings of a point set: Voronoi diagrams and isolation trees.

Both partitioners produce ``t`` independent partitionings, each built from a
random subsample of ``xi`` rows drawn with a per-tree substream. Cell indices
are 0-based throughout.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .data import SeedSpec

__all__ = [
    "VoronoiPartitioning",
    "IsolationTree",
    "IsolationForest",
    "build_voronoi_partitioning",
    "assign_cell",
    "build_isolation_forest",
    "iforest_leaf_index",
    "average_path_length",
]


def parallel_map(fn, items, workers: int = 1) -> list:
    """Ordered map, threaded when ``workers > 1``. Results never depend on ``workers``."""
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _fingerprint(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a)
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()[:16]


def _check_sizes(n: int, xi: int, t: int) -> None:
    if t < 1:
        raise ValueError("number of partitionings t must be >= 1")
    if xi < 1:
        raise ValueError("xi must be >= 1")
    if xi > n:
        raise ValueError(f"xi={xi} exceeds the number of data rows n={n}")


@dataclass(frozen=True)
class VoronoiPartitioning:
    """``t`` Voronoi diagrams, each defined by ``xi`` sites.

    Attributes:
        sites: array ``(t, xi, d)`` of site coordinates.
        site_rows: array ``(t, xi)`` of source row indices (-1 when the sites
            were supplied directly rather than sampled).
    """

    sites: np.ndarray
    site_rows: np.ndarray
    uid: str = field(default="")

    def __post_init__(self):
        sites = np.asarray(self.sites, dtype=float)
        if sites.ndim != 3 or sites.shape[0] < 1 or sites.shape[1] < 1:
            raise ValueError("sites must have shape (t, xi, d) with t, xi >= 1")
        sites.setflags(write=False)
        object.__setattr__(self, "sites", sites)
        if not self.uid:
            object.__setattr__(self, "uid", "voronoi:" + _fingerprint(sites))

    @classmethod
    def from_sites(cls, sites) -> "VoronoiPartitioning":
        sites = np.asarray(sites, dtype=float)
        if sites.ndim == 2:
            sites = sites[None]
        return cls(sites, np.full(sites.shape[:2], -1, dtype=int))

    @property
    def n_trees(self) -> int:
        return self.sites.shape[0]

    @property
    def n_cells(self) -> int:
        return self.sites.shape[1]

    @property
    def dim(self) -> int:
        return self.sites.shape[2]

    def cells(self, points, workers: int = 1) -> np.ndarray:
        """Cell index of every point in every tree, shape ``(m, t)``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.dim:
            raise ValueError(f"points have dimension {points.shape[1]}, partitioning has {self.dim}")

        def one_tree(j):
            # argmin keeps the first minimum: ties go to the lowest site slot
            return np.argmin(cdist(points, self.sites[j], "sqeuclidean"), axis=1)

        return np.column_stack(parallel_map(one_tree, range(self.n_trees), workers))

    def to_dict(self) -> dict:
        return {
            "kind": "voronoi",
            "uid": self.uid,
            "xi": self.n_cells,
            "trees": [
                {"site_rows": self.site_rows[j].tolist(), "sites": self.sites[j].tolist()}
                for j in range(self.n_trees)
            ],
        }

    def dump_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def build_voronoi_partitioning(
    data, xi: int = 32, t: int = 200, seed: SeedSpec | int = 0, tag: str = "partitioning"
) -> VoronoiPartitioning:
    """Sample ``xi`` distinct rows of ``data`` as sites, independently for each of ``t`` trees."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(seed)
    n = data.shape[0]
    _check_sizes(n, xi, t)
    rows = np.stack([seed.rng(tag, j).choice(n, size=xi, replace=False) for j in range(t)])
    return VoronoiPartitioning(data[rows], rows)


def assign_cell(partitioning: VoronoiPartitioning, tree_index: int, x) -> int:
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != partitioning.dim:
        raise ValueError(f"point has dimension {x.shape[0]}, partitioning has {partitioning.dim}")
    d2 = ((partitioning.sites[tree_index] - x) ** 2).sum(axis=1)
    return int(np.argmin(d2))


@dataclass(frozen=True)
class IsolationTree:
    """Array-encoded binary tree. ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    depth: np.ndarray
    leaf_id: np.ndarray
    sample_rows: np.ndarray

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Node index of the leaf reached by each point."""
        node = np.zeros(points.shape[0], dtype=int)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            cur = node[idx]
            go_left = points[idx, self.feature[cur]] < self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return node


def _grow_tree(sample: np.ndarray, rows: np.ndarray, rng: np.random.Generator) -> IsolationTree:
    feature, threshold, left, right, depth = [], [], [], [], []

    def new_node(d):
        for lst, v in ((feature, -1), (threshold, np.nan), (left, -1), (right, -1), (depth, d)):
            lst.append(v)
        return len(feature) - 1

    root = new_node(0)
    # explicit stack; left child pushed last so leaves get numbered left to right
    stack = [(root, np.arange(sample.shape[0]))]
    while stack:
        node, members = stack.pop()
        pts = sample[members]
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        splittable = np.flatnonzero(hi > lo)
        if members.size <= 1 or splittable.size == 0:
            continue
        q = int(splittable[rng.integers(splittable.size)])
        p = rng.uniform(lo[q], hi[q])
        while not lo[q] < p < hi[q]:
            p = rng.uniform(lo[q], hi[q])
        mask = pts[:, q] < p
        feature[node], threshold[node] = q, p
        left[node] = new_node(depth[node] + 1)
        right[node] = new_node(depth[node] + 1)
        stack.append((right[node], members[~mask]))
        stack.append((left[node], members[mask]))

    feature = np.array(feature, dtype=int)
    leaf_id = np.full(feature.shape[0], -1, dtype=int)
    # number leaves in left-to-right (in-order) position
    order = _inorder_leaves(feature, np.array(left), np.array(right))
    leaf_id[order] = np.arange(order.size)
    return IsolationTree(
        feature,
        np.array(threshold, dtype=float),
        np.array(left, dtype=int),
        np.array(right, dtype=int),
        np.array(depth, dtype=int),
        leaf_id,
        rows,
    )


def _inorder_leaves(feature, left, right) -> np.ndarray:
    out, stack = [], [0]
    while stack:
        node = stack.pop()
        if feature[node] < 0:
            out.append(node)
        else:
            stack.append(right[node])
            stack.append(left[node])
    return np.array(out, dtype=int)


@dataclass(frozen=True)
class IsolationForest:
    trees: tuple
    xi: int
    dim: int
    uid: str = ""

    def __post_init__(self):
        if not self.uid:
            parts = []
            for tree in self.trees:
                parts += [tree.feature, tree.threshold]
            object.__setattr__(self, "uid", "iforest:" + _fingerprint(*parts))

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def n_cells(self) -> int:
        return max(tree.n_leaves for tree in self.trees)

    def _points(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.dim:
            raise ValueError(f"points have dimension {points.shape[1]}, forest has {self.dim}")
        return points

    def cells(self, points, workers: int = 1) -> np.ndarray:
        points = self._points(points)
        cols = parallel_map(lambda tree: tree.leaf_id[tree.apply(points)], self.trees, workers)
        return np.column_stack(cols)

    def path_lengths(self, points, workers: int = 1) -> np.ndarray:
        points = self._points(points)
        cols = parallel_map(lambda tree: tree.depth[tree.apply(points)], self.trees, workers)
        return np.column_stack(cols)


def build_isolation_forest(
    data,
    xi: int = 32,
    t: int = 200,
    seed: SeedSpec | int = 0,
    tag: str = "iforest",
    workers: int = 1,
) -> IsolationForest:
    """Grow ``t`` isolation trees to full isolation, each on a fresh ``xi``-row subsample.

    Growth stops at a node holding a single point or only coordinate-identical
    points; there is no depth cap.
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(seed)
    _check_sizes(data.shape[0], xi, t)
    if xi < 2:
        raise ValueError("isolation trees need xi >= 2")

    def one_tree(j):
        rng = seed.rng(tag, j)
        rows = rng.choice(data.shape[0], size=xi, replace=False)
        return _grow_tree(data[rows], rows, rng)

    return IsolationForest(tuple(parallel_map(one_tree, range(t), workers)), xi, data.shape[1])


def iforest_leaf_index(forest: IsolationForest, tree_index: int, x) -> int:
    tree = forest.trees[tree_index]
    return int(tree.leaf_id[tree.apply(forest._points(x))][0])


def average_path_length(forest: IsolationForest, x) -> float | np.ndarray:
    """Mean root-to-leaf edge count over the forest; vectorized over rows of ``x``."""
    x = np.asarray(x, dtype=float)
    h = forest.path_lengths(x).mean(axis=1)
    return float(h[0]) if x.ndim == 1 else h
