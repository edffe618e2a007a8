"""Tour of the robust aggregation rules on a poisoned toy instance.

Builds 20 honest gradients around a shared direction plus 5 colluding
outliers, then shows what each rule returns and how far it lands from the
honest mean. Run with: python demos/01_robust_aggregators.py
"""

import numpy as np

from gasfl.aggregators import AggregatorSpec, aggregate, bucketing_wrap, estimate_resilience
from gasfl.core import SeedSpec

rng = np.random.default_rng(0)
n_honest, n_byz, d = 20, 5, 32

honest = rng.standard_normal((n_honest, d)) * 0.5 + 1.0
byz = np.tile(honest.mean(axis=0) + 8.0 * honest.std(axis=0), (n_byz, 1))
gradients = np.vstack([honest, byz])
honest_mean = honest.mean(axis=0)

print(f"{n_honest} honest + {n_byz} colluding gradients, d={d}")
print(f"{'rule':18s} {'||out - honest mean||':>22s}")
for kind in ["mean", "median", "trimmed_mean", "multi_krum", "bulyan",
             "geometric_median", "dnc"]:
    out = aggregate(AggregatorSpec(kind), gradients, n_byz, seed=SeedSpec(1))
    print(f"{kind:18s} {np.linalg.norm(out - honest_mean):22.4f}")

wrapped = bucketing_wrap(AggregatorSpec("median"), gradients, n_byz, s=2, seed=SeedSpec(2))
print(f"{'bucketing(median)':18s} {np.linalg.norm(wrapped - honest_mean):22.4f}")

print("\nEmpirical resilience probe (n=10, f=2, 200 trials):")
for kind in ["mean", "median", "multi_krum"]:
    report = estimate_resilience(AggregatorSpec(kind), 10, 2, 8, 200, SeedSpec(3))
    print(f"  {kind:12s} lambda_hat = {report.lambda_hat:.3f}")
print("(mean has no bound; watch it explode as the adversary moves out)")
for scale in [1e2, 1e4, 1e6]:
    report = estimate_resilience(AggregatorSpec("mean"), 10, 2, 8, 50, SeedSpec(3),
                                 adversary_scale=scale)
    print(f"  mean @ adversary distance {scale:.0e}: lambda_hat = {report.lambda_hat:.1f}")
