"""Synthetic benchmark models, accuracy metrics and the MSE-vs-dimension sweep.

Both models map each parameter coordinate to one output coordinate:

* gaussian: ``y_i = exp(-alpha_i (x_i - x0_i)^2)``
* linear:   ``y_i = alpha_i (x_i - x0_i) + noise``

Samples are drawn uniformly on the domain but thinned near ``x0`` so the
region around the true parameter is sparse.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial.distance import cdist

from .data import PairedDataset, SeedSpec
from .estimate import EstimateConfig, canonical_method, estimate

__all__ = [
    "SyntheticSpec",
    "BenchmarkRow",
    "gaussian_model",
    "linear_model",
    "generate_gaussian_dataset",
    "generate_linear_dataset",
    "generate_dataset",
    "mse",
    "energy_distance",
    "mmd",
    "benchmark_sweep",
    "write_benchmark_csv",
]

MAX_CONSECUTIVE_REJECTIONS = 1_000_000
DEFAULT_ALPHA = {"gaussian": 4.0, "linear": 10.0}


class StarvationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SyntheticSpec:
    model: str
    d: int
    n: int
    alpha: np.ndarray
    x0: np.ndarray
    eta_stoch: float = 0.0
    gap_radius: float = 0.15
    gap_depth: float = 0.9
    domain: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.model not in DEFAULT_ALPHA:
            raise ValueError(f"unknown model {self.model!r}")
        if self.d < 1 or self.n < 1:
            raise ValueError("d and n must be >= 1")
        domain = self.domain
        if domain is None:
            domain = np.tile([0.0, 1.0], (self.d, 1))
        domain = np.asarray(domain, dtype=float).reshape(self.d, 2)
        alpha = np.broadcast_to(np.asarray(self.alpha, dtype=float), (self.d,)).copy()
        x0 = np.asarray(self.x0, dtype=float).reshape(self.d)
        if np.any(alpha <= 0):
            raise ValueError("alpha must be positive")
        if np.any(x0 < domain[:, 0]) or np.any(x0 > domain[:, 1]):
            raise ValueError("x0 must lie inside the domain")
        if self.eta_stoch < 0 or self.gap_radius <= 0 or not 0 <= self.gap_depth <= 1:
            raise ValueError("need eta_stoch >= 0, gap_radius > 0, 0 <= gap_depth <= 1")
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "x0", x0)

    @classmethod
    def default(
        cls,
        model: str,
        d: int,
        n: int,
        x0=None,
        seed: SeedSpec | int = 0,
        **kwargs,
    ) -> "SyntheticSpec":
        """Unit-cube domain, model default slope/shape; ``x0`` uniform in [0.3, 0.7]^d if omitted."""
        if x0 is None:
            seed = seed if isinstance(seed, SeedSpec) else SeedSpec(seed)
            x0 = seed.rng("x0").uniform(0.3, 0.7, size=d)
        kwargs.setdefault("alpha", DEFAULT_ALPHA.get(model, 1.0))
        return cls(model=model, d=d, n=n, x0=x0, **kwargs)

    def resized(self, d: int, x0) -> "SyntheticSpec":
        return replace(
            self,
            d=d,
            alpha=np.full(d, self.alpha[0]),
            x0=x0,
            domain=np.tile(self.domain[0], (d, 1)),
        )


def gaussian_model(x, x0, alpha) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.exp(-np.asarray(alpha) * (x - np.asarray(x0)) ** 2)


def linear_model(x, x0, alpha) -> np.ndarray:
    return np.asarray(alpha) * (np.asarray(x, dtype=float) - np.asarray(x0))


def _gap_sample(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    lo, hi = spec.domain[:, 0], spec.domain[:, 1]
    batch = max(1024, 2 * spec.n)
    out, have, streak = [], 0, 0
    while have < spec.n:
        x = rng.uniform(lo, hi, size=(batch, spec.d))
        r2 = ((x - spec.x0) ** 2).sum(axis=1)
        keep = rng.random(batch) < 1.0 - spec.gap_depth * np.exp(-r2 / spec.gap_radius**2)
        hits = np.flatnonzero(keep)
        if hits.size == 0:
            streak += batch
        else:
            streak = batch - 1 - hits[-1]
        if streak > MAX_CONSECUTIVE_REJECTIONS:
            raise StarvationError(
                "gap sampling rejected over 1e6 consecutive candidates; use a smaller gap_depth"
            )
        out.append(x[hits])
        have += hits.size
    return np.vstack(out)[: spec.n]


def _generate(spec: SyntheticSpec, seed) -> PairedDataset:
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(seed)
    rng = seed.rng("synthetic")
    x = _gap_sample(spec, rng)
    if spec.model == "gaussian":
        y = gaussian_model(x, spec.x0, spec.alpha)
        obs = gaussian_model(spec.x0, spec.x0, spec.alpha)
    else:
        y = linear_model(x, spec.x0, spec.alpha)
        if spec.eta_stoch > 0:
            y = y + rng.normal(0.0, spec.eta_stoch, size=y.shape)
        obs = linear_model(spec.x0, spec.x0, spec.alpha)
    return PairedDataset(x, y, obs)


def generate_gaussian_dataset(spec: SyntheticSpec, seed=0) -> PairedDataset:
    if spec.model != "gaussian":
        raise ValueError("spec.model must be 'gaussian'")
    return _generate(spec, seed)


def generate_linear_dataset(spec: SyntheticSpec, seed=0) -> PairedDataset:
    if spec.model != "linear":
        raise ValueError("spec.model must be 'linear'")
    return _generate(spec, seed)


def generate_dataset(spec: SyntheticSpec, seed=0) -> PairedDataset:
    return _generate(spec, seed)


def mse(theta_est, theta_true) -> float:
    a = np.asarray(theta_est, dtype=float).ravel()
    b = np.asarray(theta_true, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(np.mean((a - b) ** 2))


def _as_samples(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a = a[:, None] if a.ndim == 1 else a
    b = b[:, None] if b.ndim == 1 else b
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("samples must be non-empty")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    return a, b


def energy_distance(sample_a, sample_b) -> float:
    """V-statistic ``2 E|A-B| - E|A-A'| - E|B-B'|`` over all pairs."""
    a, b = _as_samples(sample_a, sample_b)
    value = 2 * cdist(a, b).mean() - cdist(a, a).mean() - cdist(b, b).mean()
    return max(float(value), 0.0)


def mmd(sample_a, sample_b, bandwidth: float) -> float:
    """Square root of the biased MMD^2 with a Gaussian kernel of width ``bandwidth``."""
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    a, b = _as_samples(sample_a, sample_b)

    def k(x, y):
        return np.exp(-cdist(x, y, "sqeuclidean") / (2 * bandwidth**2)).mean()

    return math.sqrt(max(k(a, a) + k(b, b) - 2 * k(a, b), 0.0))


@dataclass
class BenchmarkRow:
    dimension: int
    method: str
    replicate_seed: int
    mse: float
    wall_time: float
    error: str = ""


def benchmark_sweep(
    dims,
    methods,
    replicates: int,
    spec_template: SyntheticSpec,
    abc_config: EstimateConfig | None = None,
    seed: SeedSpec | int = 0,
    workers: int = 1,
) -> list[BenchmarkRow]:
    """MSE of every method on shared datasets, per dimension and replicate.

    Each replicate draws its own ``x0`` and dataset from a derived seed; a
    failing method yields a row with ``mse = nan`` and the error text.
    Rows come out ordered by (dimension, method, replicate).
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    abc_config = abc_config or EstimateConfig()
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(seed)
    methods = [canonical_method(m) for m in methods]
    rows = []
    for d in dims:
        per_method = {m: [] for m in methods}
        for r in range(replicates):
            rep_seed = seed.child(f"replicate/d{d}", r)
            x0 = rep_seed.rng("x0").uniform(0.3, 0.7, size=d)
            spec = spec_template.resized(d, x0)
            dataset = generate_dataset(spec, rep_seed)
            cache = {}
            for m in methods:
                start = time.perf_counter()
                try:
                    est = estimate(m, dataset, abc_config, rep_seed, workers, cache)
                    err, value = "", mse(est.theta_est, x0)
                except Exception as exc:  # recorded per row, sweep continues
                    err, value = f"{type(exc).__name__}: {exc}", math.nan
                elapsed = time.perf_counter() - start
                per_method[m].append(
                    BenchmarkRow(d, m, rep_seed.master_seed, value, elapsed, err)
                )
        for m in methods:
            rows.extend(per_method[m])
    return rows


BENCHMARK_COLUMNS = ("dimension", "method", "replicate_seed", "mse", "wall_time_ms", "error")


def write_benchmark_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BENCHMARK_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.dimension,
                    row.method,
                    row.replicate_seed,
                    repr(row.mse),
                    f"{1000 * row.wall_time:.3f}",
                    row.error,
                ]
            )
