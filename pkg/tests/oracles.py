"""Slow, independent reference computations used by the tests.

They go through complex arithmetic and explicit loops rather than the
package's vectorized real-pair code paths.
"""
import numpy as np


def complex_matrix(op):
    return np.asarray(op.psi_real) + 1j * np.asarray(op.psi_imag)


def modulus(op, x):
    return np.abs(complex_matrix(op) @ np.asarray(x, dtype=complex))


def block_average(blocks, x):
    out = np.empty(len(x))
    for b in blocks:
        m = sum(x[k] for k in b) / len(b)
        for k in b:
            out[k] = m
    return out


def averaged_scatter(net, x):
    tilde = [np.asarray(x, dtype=float)]
    outs = []
    for m, W in enumerate(net.operators):
        a = block_average(net.partitions[m].blocks, tilde[-1])
        outs.append(a)
        tilde.append(modulus(W, tilde[-1] - a))
    outs.append(block_average(net.final_partition.blocks, tilde[-1]))
    return tilde, outs


def expected_scatter(net, atoms, probs):
    """Per-atom paths centered by exact layer means, one atom at a time."""
    paths = [[np.asarray(a, dtype=float)] for a in atoms]
    means = []
    for m in range(net.depth + 1):
        mu = sum(p * path[m] for p, path in zip(probs, paths))
        means.append(mu)
        if m < net.depth:
            for path in paths:
                path.append(modulus(net.operators[m], path[m] - mu))
    return means, paths


def sparsity_objective(X, V):
    """Double loop over frame vectors and samples."""
    n = V.shape[0] // 2
    P = len(X)
    total = 0.0
    for k in range(n):
        psi = V[k] + 1j * V[n + k]
        s = sum(abs(np.dot(x, psi)) for x in X)
        total += s * s
    return total / P ** 2
