"""``ikabc`` command line: generate synthetic data, estimate parameters, run benchmark sweeps."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .baselines import ESTIMATORS, AbcEstimate
from .data import DatasetError, SeedSpec, denormalize_point, load_paired_dataset, write_csv
from .estimate import EstimateConfig, canonical_method, estimate, run_maxima_weighted
from .kernel_abc import diagnostics
from .synthetic import SyntheticSpec, benchmark_sweep, generate_dataset, write_benchmark_csv
from .tracers import TracersConfig

CLI_METHODS = ("rejection", "loclinear", "ikernel", "maxima")

DEFAULTS = {
    "generate": {
        "model": "gaussian",
        "dim": 2,
        "n": 5000,
        "eta": 0.0,
        "gap_depth": 0.9,
        "gap_radius": 0.15,
        "alpha": None,
        "seed": 0,
        "out": ".",
    },
    "estimate": {
        "data": None,
        "params": None,
        "sims": None,
        "obs": None,
        "method": "maxima",
        "seed": 0,
        "workers": 1,
        "out": ".",
        "dump_partitions": False,
    },
    "benchmark": {
        "model": "gaussian",
        "dims": "2,4,8",
        "methods": ",".join(CLI_METHODS),
        "replicates": 3,
        "n": 5000,
        "eta": 0.0,
        "gap_depth": 0.9,
        "gap_radius": 0.15,
        "alpha": None,
        "seed": 0,
        "workers": 1,
        "out": ".",
    },
}
ESTIMATE_KEYS = {
    "xi": 32,
    "trees": 200,
    "xi_sim": 32,
    "trees_sim": 200,
    "lam": 0.01,
    "tol": 0.01,
    "estimator": "median",
    "sim_kernel": "isolation",
    "n_tr": 50,
    "k_max": 20,
    "epsilon": 1e-3,
    "max_iter": 50,
}
for _cmd in ("estimate", "benchmark"):
    DEFAULTS[_cmd].update(ESTIMATE_KEYS)


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _add_estimation_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--xi", type=_positive_int, help="Voronoi sites per tree in parameter space")
    p.add_argument("--trees", type=_positive_int, help="partitionings in parameter space")
    p.add_argument("--xi-sim", dest="xi_sim", type=_positive_int)
    p.add_argument("--trees-sim", dest="trees_sim", type=_positive_int)
    p.add_argument("--lambda", dest="lam", type=float, help="ridge regularization constant")
    p.add_argument("--tol", type=float, help="acceptance fraction for rejection/loclinear")
    p.add_argument("--estimator", choices=ESTIMATORS)
    p.add_argument("--sim-kernel", dest="sim_kernel", choices=("isolation", "rbf"))
    p.add_argument("--n-tr", dest="n_tr", type=_positive_int, help="tracers per site pair")
    p.add_argument("--k-max", dest="k_max", type=_positive_int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=_positive_int)


def _add_common(p: argparse.ArgumentParser, workers: bool = True) -> None:
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="JSON file of option values; flags override it")
    if workers:
        p.add_argument("--workers", type=_positive_int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ikabc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic (params, sims, obs) dataset")
    gen.add_argument("--model", choices=("gaussian", "linear"))
    gen.add_argument("--dim", type=_positive_int)
    gen.add_argument("--n", type=_positive_int)
    gen.add_argument("--eta", type=float, help="noise standard deviation (linear model)")
    gen.add_argument("--gap-depth", dest="gap_depth", type=float)
    gen.add_argument("--gap-radius", dest="gap_radius", type=float)
    gen.add_argument("--alpha", type=float)
    _add_common(gen, workers=False)

    est = sub.add_parser("estimate", help="estimate parameters for an observation")
    est.add_argument("--data", help="directory holding params.csv, sims.csv, obs.csv")
    est.add_argument("--params")
    est.add_argument("--sims")
    est.add_argument("--obs")
    est.add_argument("--method")
    est.add_argument("--dump-partitions", dest="dump_partitions", action="store_true", default=None)
    _add_estimation_flags(est)
    _add_common(est)

    bench = sub.add_parser("benchmark", help="MSE-vs-dimension sweep on synthetic data")
    bench.add_argument("--model", choices=("gaussian", "linear"))
    bench.add_argument("--dims", help="comma list or range, e.g. 2,4,8 or 2..4")
    bench.add_argument("--methods", help=f"comma list from {', '.join(CLI_METHODS)}")
    bench.add_argument("--replicates", type=_positive_int)
    bench.add_argument("--n", type=_positive_int)
    bench.add_argument("--eta", type=float)
    bench.add_argument("--gap-depth", dest="gap_depth", type=float)
    bench.add_argument("--gap-radius", dest="gap_radius", type=float)
    bench.add_argument("--alpha", type=float)
    _add_estimation_flags(bench)
    _add_common(bench)
    return parser


def _effective(args: argparse.Namespace) -> dict:
    values = dict(DEFAULTS[args.command])
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        unknown = sorted(set(loaded) - set(values) - {"command"})
        if unknown:
            raise UsageError(f"unknown keys in {args.config}: {', '.join(unknown)}")
        values.update({k: v for k, v in loaded.items() if k != "command"})
    for key in values:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return {"command": args.command, **values}


def _estimate_config(cfg: dict) -> EstimateConfig:
    return EstimateConfig(
        xi=cfg["xi"],
        trees=cfg["trees"],
        xi_sim=cfg["xi_sim"],
        trees_sim=cfg["trees_sim"],
        lam=cfg["lam"],
        sim_kernel=cfg["sim_kernel"],
        tolerance_fraction=cfg["tol"],
        estimator=cfg["estimator"],
        tracers=TracersConfig(
            n_tr=cfg["n_tr"], k_max=cfg["k_max"], epsilon=cfg["epsilon"], max_iter=cfg["max_iter"]
        ),
    )


def _parse_methods(text: str) -> list[str]:
    names = [m.strip() for m in str(text).split(",") if m.strip()]
    bad = [m for m in names if m not in CLI_METHODS]
    if bad or not names:
        raise UsageError(
            f"unknown method(s) {', '.join(bad) or '(none)'}; valid methods: {', '.join(CLI_METHODS)}"
        )
    return names


def _parse_dims(text) -> list[int]:
    if isinstance(text, list):
        dims = [int(v) for v in text]
    elif ".." in str(text):
        lo, hi = str(text).split("..")
        dims = list(range(int(lo), int(hi) + 1))
    else:
        dims = [int(v) for v in str(text).split(",") if v.strip()]
    if not dims or min(dims) < 1:
        raise UsageError(f"invalid --dims {text!r}")
    return dims


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _synthetic_template(cfg: dict, dim: int) -> SyntheticSpec:
    kwargs = dict(eta_stoch=cfg["eta"], gap_depth=cfg["gap_depth"], gap_radius=cfg["gap_radius"])
    if cfg["alpha"] is not None:
        kwargs["alpha"] = cfg["alpha"]
    return SyntheticSpec.default(cfg["model"], dim, cfg["n"], seed=SeedSpec(cfg["seed"]), **kwargs)


def run_generate(cfg: dict) -> int:
    if cfg["dim"] < 1 or cfg["n"] < 1:
        raise UsageError("--dim and --n must be positive")
    spec = _synthetic_template(cfg, cfg["dim"])
    dataset = generate_dataset(spec, SeedSpec(cfg["seed"]))
    out = _out_dir(cfg)
    write_csv(out / "params.csv", dataset.params, "p")
    write_csv(out / "sims.csv", dataset.sims, "s")
    write_csv(out / "obs.csv", dataset.observation, "s")
    write_csv(out / "truth.csv", spec.x0, "p")
    _write_json(out / "config.json", {**cfg, "alpha": spec.alpha.tolist(), "x0": spec.x0.tolist()})
    return 0


def run_estimate(cfg: dict) -> int:
    method = canonical_method(_parse_methods(cfg["method"])[0])
    if cfg["data"]:
        base = Path(cfg["data"])
        paths = [base / "params.csv", base / "sims.csv", base / "obs.csv"]
    else:
        paths = [cfg["params"], cfg["sims"], cfg["obs"]]
        if any(p is None for p in paths):
            raise UsageError("give --data DIR or all of --params, --sims, --obs")
    dataset = load_paired_dataset(*paths)
    config = _estimate_config(cfg)
    seed = SeedSpec(cfg["seed"])
    out = _out_dir(cfg)
    if method == "maxima_weighted":
        run = run_maxima_weighted(dataset, config, seed, cfg["workers"])
        theta = denormalize_point(run.search.theta_est, dataset.param_ranges)
        diag = diagnostics(run.weights, run.mapping)
        diag["top_sites"] = [
            denormalize_point(s, dataset.param_ranges).tolist() for s in run.mapping.sites
        ]
        _write_json(out / "diagnostics.json", diag)
        run.search.write_trace_csv(out / "trace.csv")
        if cfg["dump_partitions"]:
            run.partitioning.dump_json(out / "partitions.json")
        result = AbcEstimate(
            "maxima_weighted",
            theta,
            None,
            None,
            {
                "similarity": run.search.similarity,
                "iterations": run.search.iterations,
                "lambda": run.weights.lam,
                "residual_norm": run.weights.residual_norm,
            },
        )
    else:
        result = estimate(method, dataset, config, seed, cfg["workers"])
    _write_json(out / "estimate.json", {**result.to_dict(), "config": cfg})
    print(json.dumps({"theta_est": result.theta_est.tolist()}))
    return 0


def run_benchmark(cfg: dict) -> int:
    dims = _parse_dims(cfg["dims"])
    methods = [canonical_method(m) for m in _parse_methods(cfg["methods"])]
    template = _synthetic_template(cfg, dims[0])
    rows = benchmark_sweep(
        dims, methods, cfg["replicates"], template, _estimate_config(cfg), SeedSpec(cfg["seed"]),
        cfg["workers"],
    )
    out = _out_dir(cfg)
    write_benchmark_csv(rows, out / "benchmark.csv")
    _write_json(out / "config.json", cfg)
    failed = [r for r in rows if r.error]
    for r in failed:
        print(f"error: d={r.dimension} {r.method} seed={r.replicate_seed}: {r.error}", file=sys.stderr)
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _effective(args)
        handler = {"generate": run_generate, "estimate": run_estimate, "benchmark": run_benchmark}
        return handler[args.command](cfg)
    except UsageError as exc:
        parser.error(str(exc))
    except (DatasetError, ValueError, np.linalg.LinAlgError, OSError) as exc:
        print(json.dumps({"error": str(exc), "error_type": type(exc).__name__}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
