"""Seeded random networks, partitions and finite-support distributions."""
from __future__ import annotations

import json
from typing import Sequence

import numpy as np

from .frame import random_tight_frame
from .partition import BlockPartition
from .scatter import DiscreteDistribution, ScatteringNetwork

SPEC_PROB_TOL = 1e-9


def random_partition(rng: np.random.Generator, n: int, max_size: int) -> BlockPartition:
    """Random permutation cut into blocks of random size ``1..max_size``."""
    perm = rng.permutation(n)
    blocks, i = [], 0
    while i < n:
        s = int(rng.integers(1, max_size + 1))
        blocks.append(tuple(int(k) for k in perm[i:i + s]))
        i += s
    return BlockPartition(n, tuple(blocks))


def random_dims(rng: np.random.Generator, depth: int, n0: int, max_dim: int = 16) -> list[int]:
    dims = [n0]
    for _ in range(depth):
        lo = (dims[-1] + 1) // 2
        dims.append(int(rng.integers(lo, max(lo, max_dim) + 1)))
    return dims


def random_network(rng: np.random.Generator, dims: Sequence[int], max_block: int = 3,
                   exact_block: int | None = None) -> ScatteringNetwork:
    """Random tight frames; partitions with blocks of size at most ``max_block``.

    With ``exact_block`` every partition uses contiguous blocks of that size
    after a random shuffle (last block possibly shorter).
    """
    ops = [random_tight_frame(dims[m], dims[m + 1], int(rng.integers(2 ** 31)))
           for m in range(len(dims) - 1)]
    if exact_block is not None:
        parts = []
        for n in dims:
            perm = rng.permutation(n)
            parts.append(BlockPartition(n, tuple(tuple(int(k) for k in perm[s:s + exact_block])
                                                 for s in range(0, n, exact_block))))
    else:
        parts = [random_partition(rng, n, max_block) for n in dims]
    return ScatteringNetwork(tuple(ops), tuple(parts[:-1]), parts[-1])


def random_distribution(rng: np.random.Generator, n_atoms: int, dim: int,
                        scale: float = 1.0, offset: float = 0.0) -> DiscreteDistribution:
    atoms = offset + scale * rng.standard_normal((n_atoms, dim))
    w = rng.uniform(0.1, 1.0, n_atoms)
    return DiscreteDistribution.normalized(atoms, w)


def parse_distribution_spec(d: dict) -> DiscreteDistribution:
    """``{"atoms": [[...], ...], "probs": [...], "labels": [...]}``; labels optional.

    Probabilities must sum to one within ``1e-9``; they are then renormalized.
    """
    atoms = np.asarray(d["atoms"], dtype=float)
    probs = np.asarray(d["probs"], dtype=float)
    if abs(probs.sum() - 1.0) > SPEC_PROB_TOL:
        raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
    return DiscreteDistribution.normalized(atoms, probs, d.get("labels"))


def load_distribution_spec(path) -> tuple[DiscreteDistribution, int | None]:
    with open(path) as fh:
        d = json.load(fh)
    n = d.get("n")
    return parse_distribution_spec(d), None if n is None else int(n)
