"""Forward propagation: averaged, exact expected and empirical scattering.

Every infinite sum is truncated at the network depth ``M`` and the leftover
energy (``||x~_M||^2`` or ``E||X_M||^2``) is reported next to the layer
outputs, so the conservation laws become exact finite identities.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimensionError, EmptyInputError, InvalidNetworkError
from .frame import DEFAULT_TOL, TightFrameOperator, apply_modulus, validate
from .partition import BlockPartition, apply_average

PROB_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ScatteringNetwork:
    """Operators ``W_1..W_M`` with averaging partitions ``A_0..A_M``.

    ``partitions[m]`` acts on layer ``m`` (dimension ``dims[m]``) and
    ``final_partition`` is ``A_M``.  ``check=False`` skips the tight-frame
    test so that corrupted models can still be loaded and diagnosed.
    """

    operators: tuple[TightFrameOperator, ...]
    partitions: tuple[BlockPartition, ...]
    final_partition: BlockPartition
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        ops = tuple(self.operators)
        parts = tuple(self.partitions)
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "partitions", parts)
        if len(ops) != len(parts):
            raise InvalidNetworkError(
                f"{len(ops)} operators but {len(parts)} layer partitions")
        for m, (W, A) in enumerate(zip(ops, parts)):
            if W.n_in != A.n:
                raise InvalidNetworkError(
                    f"layer {m}: partition over {A.n} coordinates, operator expects {W.n_in}")
            if m + 1 < len(ops) and W.n_out != ops[m + 1].n_in:
                raise InvalidNetworkError(
                    f"layer {m + 1}: operator outputs {W.n_out}, next expects {ops[m + 1].n_in}")
            if self.check and not validate(W, DEFAULT_TOL):
                raise InvalidNetworkError(
                    f"layer {m + 1}: operator is not a tight frame "
                    f"(residual {W.frame_residual():.3e})")
        last = ops[-1].n_out if ops else self.final_partition.n
        if self.final_partition.n != last:
            raise InvalidNetworkError(
                f"final partition over {self.final_partition.n} coordinates, last layer has {last}")

    @classmethod
    def build(cls, operators: Sequence[TightFrameOperator],
              partitions: Sequence[BlockPartition] | None = None,
              final_partition: BlockPartition | None = None,
              check: bool = True) -> "ScatteringNetwork":
        """Fill unspecified partitions with the defaults (singletons, full at the end)."""
        operators = list(operators)
        if not operators and final_partition is None:
            raise InvalidNetworkError("depth-0 network needs an explicit final partition")
        if partitions is None:
            partitions = [BlockPartition.singletons(W.n_in) for W in operators]
        if final_partition is None:
            final_partition = BlockPartition.full(operators[-1].n_out)
        return cls(tuple(operators), tuple(partitions), final_partition, check)

    @property
    def depth(self) -> int:
        return len(self.operators)

    @property
    def dims(self) -> list[int]:
        if not self.operators:
            return [self.final_partition.n]
        return [self.operators[0].n_in] + [W.n_out for W in self.operators]

    def partition(self, m: int) -> BlockPartition:
        """``A_m`` for ``m = 0..depth``."""
        return self.final_partition if m == self.depth else self.partitions[m]

    def is_valid(self, tol: float = DEFAULT_TOL) -> bool:
        return all(validate(W, tol) for W in self.operators)


@dataclass(frozen=True, eq=False)
class LayerSequence:
    """One real vector per layer ``m = 0..depth``."""

    vectors: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "vectors", tuple(np.asarray(v, dtype=float) for v in self.vectors))

    def __len__(self):
        return len(self.vectors)

    def __getitem__(self, m):
        return self.vectors[m]

    def __iter__(self):
        return iter(self.vectors)

    @property
    def lengths(self) -> list[int]:
        return [v.shape[-1] for v in self.vectors]

    def concat(self) -> np.ndarray:
        return np.concatenate(self.vectors, axis=-1)

    def energies(self) -> np.ndarray:
        """Squared norm of each layer."""
        return np.array([float(v @ v) for v in self.vectors])

    def distance2(self, other: "LayerSequence") -> float:
        if self.lengths != other.lengths:
            raise DimensionError(f"layer lengths {self.lengths} vs {other.lengths}")
        return float(sum(np.sum((a - b) ** 2) for a, b in zip(self, other)))


def layer_offsets(lengths: Sequence[int]) -> list[tuple[int, int, int]]:
    """``(m, offset, length)`` for a concatenated layer vector."""
    out, off = [], 0
    for m, n in enumerate(lengths):
        out.append((m, off, int(n)))
        off += int(n)
    return out


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Finite-support law: atoms (rows) with probabilities.

    ``labels`` optionally tags each atom with a class; ``components`` then
    splits the law into per-class conditionals with priors.
    """

    atoms: np.ndarray
    probs: np.ndarray
    labels: tuple | None = None

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        probs = np.atleast_1d(np.asarray(self.probs, dtype=float))
        if atoms.size == 0 or probs.size == 0:
            raise EmptyInputError("distribution has no atoms")
        if atoms.ndim != 2 or probs.ndim != 1 or atoms.shape[0] != probs.shape[0]:
            raise DimensionError(
                f"{atoms.shape[0]} atoms of shape {atoms.shape[1:]} vs {probs.shape} probabilities")
        if np.any(probs <= 0) or not np.all(np.isfinite(probs)):
            raise ValueError("probabilities must be positive and finite")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        if self.labels is not None and len(self.labels) != atoms.shape[0]:
            raise DimensionError(f"{len(self.labels)} labels for {atoms.shape[0]} atoms")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))

    @classmethod
    def normalized(cls, atoms, weights, labels=None) -> "DiscreteDistribution":
        w = np.asarray(weights, dtype=float)
        return cls(atoms, w / w.sum(), labels)

    @classmethod
    def uniform(cls, atoms) -> "DiscreteDistribution":
        atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
        return cls(atoms, np.full(atoms.shape[0], 1.0 / atoms.shape[0]))

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def mean_square_norm(self) -> float:
        return float(self.probs @ np.sum(self.atoms ** 2, axis=1))

    def sample(self, rng: np.random.Generator, size: int, return_labels: bool = False):
        idx = rng.choice(len(self.probs), size=size, p=self.probs)
        if return_labels:
            if self.labels is None:
                raise ValueError("distribution carries no labels")
            return self.atoms[idx], [self.labels[i] for i in idx]
        return self.atoms[idx]

    def components(self) -> list[tuple[object, float, "DiscreteDistribution"]]:
        """``(label, prior, conditional law)`` per class, in order of first appearance."""
        if self.labels is None:
            return [(None, 1.0, self)]
        out = []
        for lab in dict.fromkeys(self.labels):
            mask = np.array([l == lab for l in self.labels])
            prior = float(self.probs[mask].sum())
            out.append((lab, prior, DiscreteDistribution.normalized(self.atoms[mask], self.probs[mask])))
        return out


def _as_batch(net: ScatteringNetwork, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 0 or X.shape[-1] != net.dims[0]:
        raise DimensionError(f"expected input dimension {net.dims[0]}, got shape {X.shape}")
    return X


def averaged_scatter_layers(net: ScatteringNetwork, X) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Batched averaged scattering: lists of ``x~_m`` and ``A_m x~_m`` arrays."""
    X = _as_batch(net, X)
    tilde, out = [X], []
    for m, W in enumerate(net.operators):
        avg = apply_average(net.partitions[m], tilde[-1])
        out.append(avg)
        tilde.append(apply_modulus(W, tilde[-1] - avg))
    out.append(apply_average(net.final_partition, tilde[-1]))
    return tilde, out


def averaged_scatter(net: ScatteringNetwork, x) -> tuple[LayerSequence, LayerSequence]:
    """``x~_{m+1} = |W_{m+1}(x~_m - A_m x~_m)|``; returns ``(x~_m)_m`` and ``(A_m x~_m)_m``."""
    x = _as_batch(net, x)
    if x.ndim != 1:
        raise DimensionError(f"expected a single vector, got shape {x.shape}")
    tilde, out = averaged_scatter_layers(net, x)
    return LayerSequence(tilde), LayerSequence(out)


def energy_split(net: ScatteringNetwork, x) -> tuple[np.ndarray, float]:
    """``||A_m x~_m||^2`` for ``m < depth`` and the residual ``||x~_depth||^2``."""
    tilde, out = averaged_scatter(net, x)
    return out.energies()[:-1], float(tilde[-1] @ tilde[-1])


class ExpectedScattering(NamedTuple):
    expectations: LayerSequence
    variances: list[float]
    atom_paths: list[LayerSequence]
    layers: list[np.ndarray]


def expected_scatter_exact(net: ScatteringNetwork, dist: DiscreteDistribution) -> ExpectedScattering:
    """Propagate every atom jointly, centering each layer by its exact mean.

    ``layers[m]`` holds the ``(n_atoms, N_m)`` values of ``X_m``;
    ``variances[m] = E||X_m - E X_m||^2``.
    """
    if net.dims[0] != dist.dim:
        raise DimensionError(f"atoms have dimension {dist.dim}, network expects {net.dims[0]}")
    p = dist.probs
    layers = [dist.atoms]
    means, variances = [], []
    for m in range(net.depth + 1):
        Xm = layers[-1]
        mu = p @ Xm
        centered = Xm - mu
        means.append(mu)
        variances.append(float(p @ np.sum(centered ** 2, axis=1)))
        if m < net.depth:
            layers.append(apply_modulus(net.operators[m], centered))
    paths = [LayerSequence([L[a] for L in layers]) for a in range(len(p))]
    return ExpectedScattering(LayerSequence(means), variances, paths, layers)


def empirical_scatter_layers(net: ScatteringNetwork, samples) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Batched estimator: lists of ``mu_bar_m`` and ``(P, N_m)`` sample layers."""
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyInputError(f"need a non-empty (P, N) sample array, got shape {X.shape}")
    X = _as_batch(net, X)
    layers, mus = [X], []
    for m in range(net.depth + 1):
        mu = layers[-1].mean(axis=0)
        mus.append(mu)
        if m < net.depth:
            layers.append(apply_modulus(net.operators[m], layers[-1] - mu))
    return mus, layers


def empirical_scatter(net: ScatteringNetwork, samples) -> tuple[LayerSequence, list[LayerSequence]]:
    """``X_{i,m+1} = |W_{m+1}(X_{i,m} - mu_bar_m)|`` with the shared cross-sample mean.

    Network partitions play no role here.
    """
    mus, layers = empirical_scatter_layers(net, samples)
    paths = [LayerSequence([L[i] for L in layers]) for i in range(layers[0].shape[0])]
    return LayerSequence(mus), paths


def empirical_variances(layers: Sequence[np.ndarray]) -> list[float]:
    """``P^{-1} sum_i ||X_{i,m} - mu_bar_m||^2`` per layer."""
    return [float(np.mean(np.sum((L - L.mean(axis=0)) ** 2, axis=1))) for L in layers]


def mean_estimation_bound(net: ScatteringNetwork, dist: DiscreteDistribution, m: int,
                          P: int) -> tuple[float, float]:
    """Upper bounds on ``E||mu_bar_m - E X_m||^2`` for ``P`` i.i.d. samples.

    The tight bound is ``P^{-1} (sum_{n<=m} Var_n^{1/2})^2`` where ``Var_n`` is
    the tail energy ``sum_{k>n} ||E X_k||^2``; the coarse one is
    ``P^{-1} (m+1)^2 E||X||^2``.
    """
    if not 0 <= m <= net.depth:
        raise ValueError(f"layer index {m} outside 0..{net.depth}")
    if P < 1:
        raise ValueError(f"sample count must be positive, got {P}")
    res = expected_scatter_exact(net, dist)
    tight = float(np.sum(np.sqrt(res.variances[: m + 1])) ** 2) / P
    coarse = (m + 1) ** 2 * dist.mean_square_norm() / P
    return tight, coarse
