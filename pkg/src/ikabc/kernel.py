"""Isolation Kernel feature maps, similarities and Gram matrices.

A point's feature map is stored as its ``t`` cell indices; the equivalent
binary vector of length ``t * xi`` (one ``1`` per partitioning) is only
materialized on request via :meth:`FeatureIndexMap.to_binary`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist, pdist

from .partitioning import IsolationForest, VoronoiPartitioning

__all__ = [
    "ProvenanceError",
    "FeatureIndexMap",
    "feature_map",
    "kernel_similarity",
    "gram_matrix",
    "kernel_cross_vector",
    "median_bandwidth",
    "rbf_gram",
    "rbf_cross_vector",
    "save_gram_csv",
]


class ProvenanceError(ValueError):
    """Feature maps from different partitionings were combined."""


@dataclass(frozen=True)
class FeatureIndexMap:
    """Cell indices of one point ``(t,)`` or of a batch of points ``(m, t)``.

    ``source`` identifies the partitioning that produced the map.
    """

    cells: np.ndarray
    n_cells: int
    source: str

    @property
    def n_trees(self) -> int:
        return self.cells.shape[-1]

    def __len__(self) -> int:
        return 1 if self.cells.ndim == 1 else self.cells.shape[0]

    def __getitem__(self, i) -> "FeatureIndexMap":
        if self.cells.ndim == 1:
            raise TypeError("single-point map is not indexable")
        return FeatureIndexMap(self.cells[i], self.n_cells, self.source)

    def to_binary(self) -> np.ndarray:
        """Explicit 0/1 embedding, length ``t * n_cells`` per point."""
        cells = np.atleast_2d(self.cells)
        out = np.zeros((cells.shape[0], self.n_trees * self.n_cells), dtype=np.int8)
        offsets = np.arange(self.n_trees) * self.n_cells
        np.put_along_axis(out, cells + offsets, 1, axis=1)
        return out[0] if self.cells.ndim == 1 else out


def feature_map(
    partitioning: VoronoiPartitioning | IsolationForest, x, workers: int = 1
) -> FeatureIndexMap:
    """Map a point (1-D input) or a batch of points (2-D input) to cell indices."""
    x = np.asarray(x, dtype=float)
    cells = partitioning.cells(x, workers=workers)
    if x.ndim == 1:
        cells = cells[0]
    return FeatureIndexMap(cells, partitioning.n_cells, partitioning.uid)


def _check_compatible(a: FeatureIndexMap, b: FeatureIndexMap) -> None:
    if a.source != b.source or a.n_trees != b.n_trees:
        raise ProvenanceError(
            f"feature maps come from different partitionings ({a.source} vs {b.source})"
        )


def kernel_similarity(a: FeatureIndexMap, b: FeatureIndexMap) -> float:
    """Fraction of partitionings that put ``a`` and ``b`` in the same cell."""
    _check_compatible(a, b)
    return float(np.mean(a.cells == b.cells))


def _stack(maps) -> FeatureIndexMap:
    if isinstance(maps, FeatureIndexMap):
        return maps if maps.cells.ndim == 2 else FeatureIndexMap(
            maps.cells[None], maps.n_cells, maps.source
        )
    maps = list(maps)
    if not maps:
        raise ValueError("no feature maps given")
    for m in maps[1:]:
        _check_compatible(maps[0], m)
    return FeatureIndexMap(np.stack([m.cells for m in maps]), maps[0].n_cells, maps[0].source)


def gram_matrix(maps) -> np.ndarray:
    """Pairwise Isolation Kernel similarities of a batch of feature maps.

    Computed as ``Phi Phi^T / t`` with ``Phi`` the sparse one-hot embedding;
    counts are accumulated as integers, so the result is exactly symmetric
    with a unit diagonal.
    """
    batch = _stack(maps)
    n, t = batch.cells.shape
    if n == 0:
        raise ValueError("no feature maps given")
    cols = (batch.cells + np.arange(t) * batch.n_cells).ravel()
    rows = np.repeat(np.arange(n), t)
    phi = sp.csr_matrix(
        (np.ones(n * t, dtype=np.int32), (rows, cols)), shape=(n, t * batch.n_cells)
    )
    counts = (phi @ phi.T).toarray()
    return counts / float(t)


def kernel_cross_vector(maps, obs_map: FeatureIndexMap) -> np.ndarray:
    """Similarity of every sample map to the observation's map."""
    batch = _stack(maps)
    _check_compatible(batch, obs_map)
    return (batch.cells == obs_map.cells).mean(axis=1)


def median_bandwidth(points, max_rows: int = 2000) -> float:
    """Median pairwise Euclidean distance, on an evenly strided subset when large."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] > max_rows:
        points = points[:: -(-points.shape[0] // max_rows)]
    d = pdist(points)
    d = d[d > 0]
    return float(np.median(d)) if d.size else 1.0


def rbf_gram(points, bandwidth: float) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return np.exp(-cdist(points, points, "sqeuclidean") / (2.0 * bandwidth**2))


def rbf_cross_vector(points, x, bandwidth: float) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.exp(-cdist(points, x, "sqeuclidean")[:, 0] / (2.0 * bandwidth**2))


def save_gram_csv(path, gram) -> None:
    np.savetxt(path, np.asarray(gram), delimiter=",", fmt="%.17g")
