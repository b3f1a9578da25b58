"""Compare the four estimators across dimensions on both benchmark models.

A reduced sweep (n=2000, 3 replicates) so it finishes in a couple of
minutes; the full-size comparison lives in the acceptance tests. Prints the
median MSE per dimension and method.
"""

import sys

import numpy as np

from ikabc.baselines import METHODS
from ikabc.estimate import EstimateConfig
from ikabc.synthetic import SyntheticSpec, benchmark_sweep

model = sys.argv[1] if len(sys.argv) > 1 else "gaussian"
eta = 0.6 if model == "linear" else 0.0
dims = (2, 4, 8)

template = SyntheticSpec.default(model, dims[0], 2000, seed=0, eta_stoch=eta)
rows = benchmark_sweep(dims, METHODS, 3, template, EstimateConfig(trees=100, trees_sim=100), seed=11)

print(f"{model} model, eta = {eta}: median MSE over 3 replicates")
print("d   " + "".join(f"{m:>17s}" for m in METHODS))
for d in dims:
    cells = []
    for m in METHODS:
        vals = [r.mse for r in rows if r.dimension == d and r.method == m]
        cells.append(f"{np.median(vals):17.3e}")
    print(f"{d:<4d}" + "".join(cells))

failed = [r for r in rows if r.error]
if failed:
    print(f"\n{len(failed)} runs failed, first: {failed[0].error}")
