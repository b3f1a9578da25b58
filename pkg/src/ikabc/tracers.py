"""Derivative-free search for the point best matching a maxima weighted mapping.

Tracer points are laid on segments joining each base site to its most
distant partner, scored by their agreement with the mapping, and the best of
them are used to fit a search line. The top tracers become the next base
set until the best similarity stops improving.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .kernel import feature_map
from .kernel_abc import MaximaMapping, mapping_similarity
from .partitioning import VoronoiPartitioning

__all__ = ["TracersConfig", "TracersResult", "generate_tracer_points", "tracers_search"]

SELECT_THRESHOLD = 0.5


@dataclass(frozen=True)
class TracersConfig:
    n_tr: int = 50
    k_max: int = 20
    epsilon: float = 1e-3
    max_iter: int = 50
    line_samples: int = 200

    def __post_init__(self):
        for name in ("n_tr", "k_max", "max_iter", "line_samples"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


@dataclass
class TracersResult:
    theta_est: np.ndarray
    similarity: float
    iterations: int
    trajectory: list = field(default_factory=list)
    estimates: list = field(default_factory=list)

    def write_trace_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            d = self.theta_est.shape[0]
            writer.writerow(["iteration", "best_similarity"] + [f"theta{i + 1}" for i in range(d)])
            for it, (sim, theta) in enumerate(zip(self.trajectory, self.estimates), start=1):
                writer.writerow([it, repr(sim)] + [repr(float(v)) for v in theta])


def _unique_rows(points: np.ndarray) -> np.ndarray:
    """Drop repeated rows, keeping first occurrences in their original order."""
    _, first = np.unique(points, axis=0, return_index=True)
    return points[np.sort(first)]


def generate_tracer_points(base_sites, n_tr: int) -> np.ndarray:
    """Points ``a*z_j + (1-a)*z_m`` for each base site ``z_j`` and its farthest site ``z_m``.

    ``a`` runs over ``n_tr`` evenly spaced values in [0, 1]. Duplicates are
    removed; output order follows generation order.
    """
    z = np.asarray(base_sites, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    if z.shape[0] == 0:
        raise ValueError("empty site set")
    z = _unique_rows(z)
    if z.shape[0] == 1:
        return z.copy()
    d2 = ((z[:, None, :] - z[None, :, :]) ** 2).sum(axis=-1)
    far = np.argmax(d2, axis=1)
    alpha = np.linspace(1.0, 0.0, n_tr)[:, None]
    segments = [alpha * z[j] + (1.0 - alpha) * z[m] for j, m in enumerate(far)]
    return _unique_rows(np.vstack(segments))


def _select_top(points: np.ndarray, scores: np.ndarray, k_max: int):
    # stable sort: equal scores keep generation order
    order = np.argsort(-scores, kind="stable")
    above = order[scores[order] > SELECT_THRESHOLD]
    chosen = above[:k_max] if above.size >= k_max else order[:k_max]
    return points[chosen], scores[chosen]


def _line_candidates(top: np.ndarray, top_scores: np.ndarray, n_samples: int):
    """Candidates along the principal line of the top tracers, or None if degenerate."""
    if top.shape[0] < 2:
        return None
    if top_scores.sum() > 0:
        centre = np.average(top, axis=0, weights=top_scores)
    else:
        centre = top.mean(axis=0)
    centred = top - top.mean(axis=0)
    if not np.any(centred):
        return None
    _, _, vt = np.linalg.svd(centred, full_matrices=False)
    direction = vt[0]
    spread = np.abs((top - centre) @ direction).max()
    if spread == 0:
        return None
    tau = np.linspace(-2.0 * spread, 2.0 * spread, n_samples)
    return centre + tau[:, None] * direction


def tracers_search(
    partitioning: VoronoiPartitioning,
    mapping: MaximaMapping,
    config: TracersConfig | None = None,
    workers: int = 1,
) -> TracersResult:
    """Find a parameter point whose feature map agrees with ``mapping`` on most trees.

    Returns the best point ever scored. The search stops when an iteration
    improves the best similarity by less than ``config.epsilon``, when the
    similarity reaches 1, or after ``config.max_iter`` iterations.
    """
    config = config or TracersConfig()
    if partitioning.n_trees == 0:
        raise ValueError("partitioning has no trees")
    if mapping.n_trees == 0:
        raise ValueError("empty maxima mapping")
    if mapping.source != partitioning.uid:
        raise ValueError("mapping was not produced on this partitioning")

    def score(points):
        return np.atleast_1d(mapping_similarity(feature_map(partitioning, points, workers), mapping))

    base = np.asarray(mapping.sites, dtype=float)
    best_theta, best_sim = None, -np.inf
    previous = 0.0
    trajectory, estimates = [], []
    for _ in range(config.max_iter):
        tracers = generate_tracer_points(base, config.n_tr)
        scores = score(tracers)
        top, top_scores = _select_top(tracers, scores, config.k_max)
        candidates, cand_scores = top[:1], top_scores[:1]
        line = _line_candidates(top, top_scores, config.line_samples)
        if line is not None:
            line_scores = score(line)
            candidates = np.vstack([candidates, line])
            cand_scores = np.concatenate([cand_scores, line_scores])
        i = int(np.argmax(cand_scores))
        if cand_scores[i] > best_sim:
            best_theta, best_sim = candidates[i].copy(), float(cand_scores[i])
        trajectory.append(best_sim)
        estimates.append(best_theta.copy())
        if best_sim - previous < config.epsilon or best_sim >= 1.0:
            break
        previous = best_sim
        base = np.vstack([top, best_theta[None]])
    return TracersResult(best_theta, best_sim, len(trajectory), trajectory, estimates)
