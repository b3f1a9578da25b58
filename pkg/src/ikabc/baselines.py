"""Comparison estimators: rejection ABC, local-linear adjusted ABC, kernel posterior mean."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import PairedDataset, normalize_columns
from .kernel_abc import PosteriorWeights

__all__ = [
    "METHODS",
    "ESTIMATORS",
    "AbcEstimate",
    "central_tendency",
    "rejection_abc",
    "loclinear_abc",
    "ikernel_point_estimate",
]

METHODS = ("rejection", "loclinear", "ikernel_mean", "maxima_weighted")
ESTIMATORS = ("mean", "median", "mode")
MODE_BINS = 32


@dataclass
class AbcEstimate:
    method: str
    theta_est: np.ndarray
    estimator: str | None = None
    accepted_count: int | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        self.theta_est = np.asarray(self.theta_est, dtype=float)
        if not np.all(np.isfinite(self.theta_est)):
            raise ValueError("non-finite parameter estimate")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "estimator": self.estimator,
            "theta_est": self.theta_est.tolist(),
            "accepted_count": self.accepted_count,
            "diagnostics": self.diagnostics,
        }

    def to_json(self, **extra) -> str:
        return json.dumps({**self.to_dict(), **extra}, indent=2)


def central_tendency(samples, estimator: str = "mean") -> np.ndarray:
    """Column-wise mean, median or histogram mode.

    The mode is the midpoint of the fullest of 32 equal-width bins spanning
    the column's range (first bin wins ties).
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.shape[0] == 0:
        raise ValueError("cannot reduce an empty sample")
    if estimator == "mean":
        return samples.mean(axis=0)
    if estimator == "median":
        return np.median(samples, axis=0)
    if estimator != "mode":
        raise ValueError(f"unknown estimator {estimator!r}; expected one of {ESTIMATORS}")
    out = np.empty(samples.shape[1])
    for j, col in enumerate(samples.T):
        lo, hi = col.min(), col.max()
        if lo == hi:
            out[j] = lo
            continue
        counts, edges = np.histogram(col, bins=MODE_BINS, range=(lo, hi))
        k = int(np.argmax(counts))
        out[j] = 0.5 * (edges[k] + edges[k + 1])
    return out


def _accept(dataset: PairedDataset, tolerance_fraction: float):
    if not 0 < tolerance_fraction <= 1:
        raise ValueError("tolerance_fraction must lie in (0, 1]")
    count = math.ceil(dataset.n * tolerance_fraction - 1e-9)
    if count < 1:
        raise ValueError("tolerance keeps no samples")
    scaled = normalize_columns(dataset)
    dist = np.linalg.norm(scaled.sims - scaled.observation, axis=1)
    # stable sort keeps row order among equal distances
    idx = np.argsort(dist, kind="stable")[:count]
    return idx, dist[idx], scaled


def rejection_abc(
    dataset: PairedDataset, tolerance_fraction: float = 0.01, estimator: str = "median"
) -> AbcEstimate:
    """Keep the closest ``ceil(n * tol)`` simulations (on min-max scaled outputs)."""
    idx, dist, _ = _accept(dataset, tolerance_fraction)
    theta = central_tendency(dataset.params[idx], estimator)
    return AbcEstimate(
        "rejection", theta, estimator, int(idx.size), {"max_distance": float(dist[-1])}
    )


def loclinear_abc(
    dataset: PairedDataset, tolerance_fraction: float = 0.01, estimator: str = "median"
) -> AbcEstimate:
    """Rejection followed by a weighted local-linear regression adjustment.

    Accepted parameters are regressed on ``s - s*`` with Epanechnikov weights
    (bandwidth = largest accepted distance) and shifted to ``s*`` along the
    fitted slopes. A singular design falls back to the rejection estimate.
    """
    idx, dist, scaled = _accept(dataset, tolerance_fraction)
    theta = dataset.params[idx]
    ds = scaled.sims[idx] - scaled.observation
    h = dist[-1]
    kw = 1.0 - (dist / h) ** 2 if h > 0 else np.ones_like(dist)
    kw = np.clip(kw, 0.0, None)
    design = np.column_stack([np.ones(idx.size), ds])
    sw = np.sqrt(kw)[:, None]
    fallback = None
    if np.count_nonzero(kw) <= design.shape[1]:
        fallback = "too few positively weighted samples for regression"
    else:
        coef, _, rank, _ = np.linalg.lstsq(design * sw, theta * sw, rcond=None)
        if rank < design.shape[1]:
            fallback = "singular regression design"
    if fallback is not None:
        est = rejection_abc(dataset, tolerance_fraction, estimator)
        return AbcEstimate(
            "loclinear",
            est.theta_est,
            estimator,
            est.accepted_count,
            {**est.diagnostics, "fallback": fallback},
        )
    adjusted = theta - ds @ coef[1:]
    return AbcEstimate(
        "loclinear",
        central_tendency(adjusted, estimator),
        estimator,
        int(idx.size),
        {"max_distance": float(h), "intercept": coef[0].tolist()},
    )


def ikernel_point_estimate(weights: PosteriorWeights | np.ndarray, params) -> AbcEstimate:
    """Posterior-mean reduction ``sum_i w_i theta_i / sum_i w_i`` (signed weights)."""
    w = np.asarray(getattr(weights, "w", weights), dtype=float)
    params = np.atleast_2d(np.asarray(params, dtype=float))
    mass = w.sum()
    if abs(mass) <= 1e-12 * max(np.abs(w).sum(), 1e-300):
        raise ValueError("degenerate weight mass: weights sum to zero")
    theta = (w / mass) @ params
    return AbcEstimate("ikernel_mean", theta, "mean", None, {"weight_mass": float(mass)})
