"""Layer-by-layer decay of ||E X_m|| and E||X_m||^2 for a heavy-tailed law.

The expected scattering of an unbounded variable is not absolutely summable;
at finite depth one can only watch ||E X_m|| decay fast at first and then
slowly.  The law here is a large finite sample of a Student-t vector, so the
numbers are exact for that empirical law.

    python scripts/decay_profile.py --depth 12 --dim 4
"""
import argparse

import numpy as np

from l2scatter.frame import random_tight_frame
from l2scatter.scatter import DiscreteDistribution, ScatteringNetwork, expected_scatter_exact

ap = argparse.ArgumentParser()
ap.add_argument("--depth", type=int, default=12)
ap.add_argument("--dim", type=int, default=4)
ap.add_argument("--atoms", type=int, default=4000)
ap.add_argument("--dof", type=float, default=3.0)
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

rng = np.random.default_rng(args.seed)
atoms = rng.standard_t(args.dof, size=(args.atoms, args.dim))
dist = DiscreteDistribution.uniform(atoms)
ops = [random_tight_frame(args.dim, args.dim, args.seed + m) for m in range(args.depth)]
net = ScatteringNetwork.build(ops)
res = expected_scatter_exact(net, dist)

total = dist.mean_square_norm()
print(f"E||X||^2 = {total:.6g}")
print(f"{'m':>3s} {'||E X_m||':>12s} {'E||X_m||^2':>12s} {'cum share':>10s}")
cum = 0.0
for m, mu in enumerate(res.expectations):
    layer = res.layers[m]
    cum += mu @ mu
    print(f"{m:3d} {np.linalg.norm(mu):12.6g} {dist.probs @ np.sum(layer ** 2, axis=1):12.6g} "
          f"{cum / total:10.6f}")
