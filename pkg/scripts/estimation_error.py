"""Monte Carlo error of the empirical scattering mean against its bounds.

    python scripts/estimation_error.py --trials 1000
"""
import argparse

import numpy as np

from l2scatter.scatter import empirical_scatter_layers, expected_scatter_exact, mean_estimation_bound
from l2scatter.synthetic import random_distribution, random_network

ap = argparse.ArgumentParser()
ap.add_argument("--trials", type=int, default=1000)
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

rng = np.random.default_rng(args.seed)
net = random_network(rng, [4, 6, 6, 6])
dist = random_distribution(rng, 6, 4, offset=0.5)
exact = expected_scatter_exact(net, dist).expectations

print(f"{'P':>6s} {'m':>2s} {'MC error':>11s} {'tight':>11s} {'coarse':>11s}")
for P in (10, 100, 1000):
    errs = np.array([[np.sum((mu - e) ** 2) for mu, e in
                      zip(empirical_scatter_layers(net, dist.sample(rng, P))[0], exact)]
                     for _ in range(args.trials)])
    for m in range(net.depth + 1):
        tight, coarse = mean_estimation_bound(net, dist, m, P)
        print(f"{P:6d} {m:2d} {errs[:, m].mean():11.4e} {tight:11.4e} {coarse:11.4e}")
