"""Kernel ABC weights and the maxima weighted mapping in parameter space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .kernel import FeatureIndexMap, ProvenanceError
from .partitioning import VoronoiPartitioning

__all__ = [
    "IllConditionedError",
    "PosteriorWeights",
    "SiteProbabilities",
    "MaximaMapping",
    "posterior_weights",
    "site_probabilities",
    "maxima_weighted_mapping",
    "mapping_similarity",
    "diagnostics",
]

RESIDUAL_TOL = 1e-8


class IllConditionedError(np.linalg.LinAlgError):
    """The regularized system could not be solved accurately; increase lambda."""


@dataclass(frozen=True)
class PosteriorWeights:
    w: np.ndarray
    lam: float
    residual_norm: float


@dataclass(frozen=True)
class SiteProbabilities:
    """Accumulated (unnormalized, possibly negative) weight per site, shape ``(t, xi)``."""

    p: np.ndarray
    source: str


@dataclass(frozen=True)
class MaximaMapping:
    cells: np.ndarray
    sites: np.ndarray
    source: str

    @property
    def n_trees(self) -> int:
        return self.cells.shape[0]

    def as_feature_map(self, n_cells: int) -> FeatureIndexMap:
        return FeatureIndexMap(self.cells, n_cells, self.source)


def posterior_weights(gram, k_vec, lam: float = 0.01) -> PosteriorWeights:
    """Solve ``(G + n*lam*I) w = k_vec`` by Cholesky factorization.

    One step of iterative refinement is applied when the first residual
    exceeds the tolerance.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    gram = np.asarray(gram, dtype=float)
    k_vec = np.asarray(k_vec, dtype=float).ravel()
    n = gram.shape[0]
    if gram.shape != (n, n) or k_vec.shape[0] != n:
        raise ValueError("gram must be (n, n) and k_vec of length n")
    if not (np.all(np.isfinite(gram)) and np.all(np.isfinite(k_vec))):
        raise ValueError("non-finite entries in the Gram matrix or cross vector")
    system = gram + (n * lam) * np.eye(n)
    diag = np.diag(system).copy()
    if np.all(diag > 0) and not np.any(system - np.diag(diag)):
        # diagonal system: solve elementwise, no factorization round-off
        w = k_vec / diag
        return PosteriorWeights(w, float(lam), float(np.abs(diag * w - k_vec).max(initial=0.0)))
    try:
        factor = sla.cho_factor(system, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError(
            f"Cholesky factorization failed for lambda={lam}; increase lambda"
        ) from exc
    w = sla.cho_solve(factor, k_vec, check_finite=False)
    residual = system @ w - k_vec
    if np.abs(residual).max(initial=0.0) > RESIDUAL_TOL:
        w = w - sla.cho_solve(factor, residual, check_finite=False)
        residual = system @ w - k_vec
    res = float(np.abs(residual).max(initial=0.0))
    if res > RESIDUAL_TOL:
        raise IllConditionedError(f"residual {res:.3g} above {RESIDUAL_TOL}; increase lambda")
    return PosteriorWeights(w, float(lam), res)


def site_probabilities(
    weights: PosteriorWeights | np.ndarray, param_maps: FeatureIndexMap, clip_negative: bool = False
) -> SiteProbabilities:
    """Sum the weights of the samples falling in each site's cell, divided by ``n``.

    Negative weights are kept unless ``clip_negative`` is set.
    """
    w = np.asarray(getattr(weights, "w", weights), dtype=float)
    cells = np.atleast_2d(param_maps.cells)
    n, t = cells.shape
    if w.shape[0] != n:
        raise ValueError(f"{w.shape[0]} weights for {n} feature maps")
    if clip_negative:
        w = np.clip(w, 0.0, None)
    xi = param_maps.n_cells
    flat = (np.arange(t) * xi + cells).ravel(order="F")
    # bincount sums in input order (tree-major here), so the result is reproducible
    p = np.bincount(flat, weights=np.tile(w, t), minlength=t * xi).reshape(t, xi) / n
    return SiteProbabilities(p, param_maps.source)


def maxima_weighted_mapping(
    probs: SiteProbabilities, partitioning: VoronoiPartitioning
) -> MaximaMapping:
    """Per tree, the site with the largest accumulated weight (lowest index on ties)."""
    if probs.p.shape != partitioning.sites.shape[:2]:
        raise ValueError(
            f"site probabilities {probs.p.shape} do not match partitioning "
            f"{partitioning.sites.shape[:2]}"
        )
    if probs.source != partitioning.uid:
        raise ProvenanceError("site probabilities were computed on another partitioning")
    cells = np.argmax(probs.p, axis=1)
    sites = partitioning.sites[np.arange(cells.size), cells]
    return MaximaMapping(cells, sites, partitioning.uid)


def mapping_similarity(theta_map: FeatureIndexMap, mapping: MaximaMapping):
    """Fraction of trees where ``theta_map`` falls in the maxima cell.

    Accepts a single map (returns float) or a batch (returns an array).
    """
    if theta_map.source != mapping.source or theta_map.n_trees != mapping.n_trees:
        raise ProvenanceError("feature map and maxima mapping come from different partitionings")
    sim = (theta_map.cells == mapping.cells).mean(axis=-1)
    return float(sim) if theta_map.cells.ndim == 1 else sim


def diagnostics(weights: PosteriorWeights, mapping: MaximaMapping | None = None) -> dict:
    out = {
        "lambda": weights.lam,
        "residual_norm": weights.residual_norm,
        "weight_min": float(weights.w.min()),
        "weight_max": float(weights.w.max()),
    }
    if mapping is not None:
        out["top_sites"] = mapping.sites.tolist()
    return out
