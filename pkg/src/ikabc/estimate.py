"""End-to-end estimation: kernel weights, maxima weighted mapping, Tracers, baselines."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .baselines import AbcEstimate, ikernel_point_estimate, loclinear_abc, rejection_abc
from .data import PairedDataset, SeedSpec, denormalize_point, normalize_columns
from .kernel import (
    feature_map,
    gram_matrix,
    kernel_cross_vector,
    median_bandwidth,
    rbf_cross_vector,
    rbf_gram,
)
from .kernel_abc import (
    MaximaMapping,
    PosteriorWeights,
    diagnostics,
    maxima_weighted_mapping,
    posterior_weights,
    site_probabilities,
)
from .partitioning import (
    VoronoiPartitioning,
    build_isolation_forest,
    build_voronoi_partitioning,
)
from .tracers import TracersConfig, TracersResult, tracers_search

__all__ = [
    "EstimateConfig",
    "MaximaRun",
    "kernel_weights",
    "run_maxima_weighted",
    "maxima_weighted_abc",
    "ikernel_abc",
    "estimate",
]

SIM_STREAM = "partitioning/S"
PARAM_STREAM = "partitioning/Theta"


@dataclass(frozen=True)
class EstimateConfig:
    """Every knob of an estimation run; all fields have defaults."""

    xi: int = 32
    trees: int = 200
    xi_sim: int = 32
    trees_sim: int = 200
    lam: float = 0.01
    sim_kernel: str = "isolation"
    sim_partitioner: str = "voronoi"
    clip_negative: bool = False
    tolerance_fraction: float = 0.01
    estimator: str = "median"
    tracers: TracersConfig = field(default_factory=TracersConfig)

    def __post_init__(self):
        if self.sim_kernel not in ("isolation", "rbf"):
            raise ValueError("sim_kernel must be 'isolation' or 'rbf'")
        if self.sim_partitioner not in ("voronoi", "iforest"):
            raise ValueError("sim_partitioner must be 'voronoi' or 'iforest'")
        if isinstance(self.tracers, dict):
            object.__setattr__(self, "tracers", TracersConfig(**self.tracers))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: dict) -> "EstimateConfig":
        known = {k: v for k, v in values.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class MaximaRun:
    weights: PosteriorWeights
    partitioning: VoronoiPartitioning
    mapping: MaximaMapping
    search: TracersResult


def _seed(seed) -> SeedSpec:
    return seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))


def kernel_weights(
    scaled: PairedDataset, config: EstimateConfig, seed=0, workers: int = 1
) -> PosteriorWeights:
    """Posterior weights of the samples given the observation, from the simulation-space kernel."""
    seed = _seed(seed)
    if config.sim_kernel == "rbf":
        bw = median_bandwidth(scaled.sims)
        gram = rbf_gram(scaled.sims, bw)
        k_vec = rbf_cross_vector(scaled.sims, scaled.observation, bw)
    else:
        xi = min(config.xi_sim, scaled.n)
        if config.sim_partitioner == "iforest":
            part = build_isolation_forest(
                scaled.sims, max(xi, 2), config.trees_sim, seed, SIM_STREAM, workers
            )
        else:
            part = build_voronoi_partitioning(scaled.sims, xi, config.trees_sim, seed, SIM_STREAM)
        maps = feature_map(part, scaled.sims, workers)
        gram = gram_matrix(maps)
        k_vec = kernel_cross_vector(maps, feature_map(part, scaled.observation))
    return posterior_weights(gram, k_vec, config.lam)


def run_maxima_weighted(
    dataset: PairedDataset,
    config: EstimateConfig | None = None,
    seed=0,
    workers: int = 1,
    weights: PosteriorWeights | None = None,
) -> MaximaRun:
    """Weights -> parameter-space partitioning -> site masses -> maxima mapping -> Tracers.

    Everything runs in min-max scaled coordinates.
    """
    config = config or EstimateConfig()
    seed = _seed(seed)
    scaled = normalize_columns(dataset)
    if weights is None:
        weights = kernel_weights(scaled, config, seed, workers)
    part = build_voronoi_partitioning(
        scaled.params, min(config.xi, scaled.n), config.trees, seed, PARAM_STREAM
    )
    probs = site_probabilities(weights, feature_map(part, scaled.params, workers), config.clip_negative)
    mapping = maxima_weighted_mapping(probs, part)
    search = tracers_search(part, mapping, config.tracers, workers)
    return MaximaRun(weights, part, mapping, search)


def maxima_weighted_abc(
    dataset: PairedDataset,
    config: EstimateConfig | None = None,
    seed=0,
    workers: int = 1,
    weights: PosteriorWeights | None = None,
) -> AbcEstimate:
    run = run_maxima_weighted(dataset, config, seed, workers, weights)
    theta = denormalize_point(run.search.theta_est, dataset.param_ranges)
    diag = diagnostics(run.weights)
    diag.update(
        similarity=run.search.similarity,
        iterations=run.search.iterations,
        theta_est_normalized=run.search.theta_est.tolist(),
    )
    return AbcEstimate("maxima_weighted", theta, None, None, diag)


def ikernel_abc(
    dataset: PairedDataset,
    config: EstimateConfig | None = None,
    seed=0,
    workers: int = 1,
    weights: PosteriorWeights | None = None,
) -> AbcEstimate:
    config = config or EstimateConfig()
    if weights is None:
        weights = kernel_weights(normalize_columns(dataset), config, seed, workers)
    est = ikernel_point_estimate(weights, dataset.params)
    est.diagnostics.update(diagnostics(weights))
    return est


_ALIASES = {"ikernel": "ikernel_mean", "maxima": "maxima_weighted"}


def canonical_method(name: str) -> str:
    return _ALIASES.get(name, name)


def estimate(
    method: str,
    dataset: PairedDataset,
    config: EstimateConfig | None = None,
    seed=0,
    workers: int = 1,
    cache: dict | None = None,
) -> AbcEstimate:
    """Run one method by name. ``cache`` lets kernel methods share weights on one dataset."""
    config = config or EstimateConfig()
    method = canonical_method(method)
    if method == "rejection":
        return rejection_abc(dataset, config.tolerance_fraction, config.estimator)
    if method == "loclinear":
        return loclinear_abc(dataset, config.tolerance_fraction, config.estimator)
    if method not in ("ikernel_mean", "maxima_weighted"):
        raise ValueError(f"unknown method {method!r}")
    weights = None
    if cache is not None:
        if "weights" not in cache:
            cache["weights"] = kernel_weights(normalize_columns(dataset), config, seed, workers)
        weights = cache["weights"]
    fn = ikernel_abc if method == "ikernel_mean" else maxima_weighted_abc
    return fn(dataset, config, seed, workers, weights)
