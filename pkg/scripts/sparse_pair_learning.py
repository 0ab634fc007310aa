"""Learn one layer on the two-sample R^4 set from several starting points.

    python scripts/sparse_pair_learning.py
"""
import numpy as np

from l2scatter.frame import pairing_operator, random_tight_frame
from l2scatter.learn import LayerObjectiveState, objective, optimize_layer

X = np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]])

starts = {
    "aligned pairing (1,2)(3,4)": pairing_operator(4, [(0, 1), (2, 3)]),
    "misaligned pairing (1,3)(2,4)": pairing_operator(4, [(0, 2), (1, 3)]),
}
for seed in range(3):
    starts[f"random frame seed={seed}"] = random_tight_frame(4, 2, seed)

print(f"{'start':34s} {'initial':>9s} {'final':>9s} {'steps':>6s}")
for name, W in starts.items():
    state = LayerObjectiveState(X, W.stacked)
    Wf, trace = optimize_layer(state)
    print(f"{name:34s} {objective(state):9.5f} {trace[-1]:9.5f} {len(trace) - 1:6d}")
