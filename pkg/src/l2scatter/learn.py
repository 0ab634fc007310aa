"""Greedy layerwise learning of tight-frame operators.

Each layer minimizes the sparsity objective

    P^{-2} sum_n ( sum_i |<x_i, psi_n>| )^2

over centered inputs ``x_i``, with ``V = [a; b]`` constrained to the Stiefel
manifold (orthonormal columns).  Minimizing it is the same as maximizing the
variance passed on to the next layer.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, NumericalFailure
from .frame import (TightFrameOperator, contiguous_pairing, orthonormalize_columns,
                    random_tight_frame)
from .partition import BlockPartition
from .scatter import (DiscreteDistribution, ScatteringNetwork, expected_scatter_exact)

log = logging.getLogger(__name__)

STIEFEL_TOL = 1e-8
REL_DECREASE_TOL = 1e-9


@dataclass
class LayerObjectiveState:
    centered_samples: np.ndarray
    stiefel_point: np.ndarray
    smoothing_eps: float = 1e-6
    step_size: float = 1.0
    shrink_factor: float = 0.5
    max_iters: int = 500
    max_backtracks: int = 40
    # seeded random tangent probes tried when first-order progress stalls
    escape_trials: int = 8
    escape_radius: float = 1e-2
    seed: int = 0

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.centered_samples, dtype=float))
        V = np.asarray(self.stiefel_point, dtype=float)
        if V.ndim != 2 or V.shape[0] % 2 or V.shape[1] != X.shape[1]:
            raise DimensionError(
                f"Stiefel point {V.shape} incompatible with samples of dimension {X.shape[1]}")
        self.centered_samples = X
        self.stiefel_point = V

    @property
    def n_out(self) -> int:
        return self.stiefel_point.shape[0] // 2

    def with_point(self, V: np.ndarray) -> "LayerObjectiveState":
        return replace(self, stiefel_point=V)


def stiefel_residual(V: np.ndarray) -> float:
    return float(np.linalg.norm(V.T @ V - np.eye(V.shape[1])))


def _responses(X: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = V.shape[0] // 2
    return X @ V[:n].T, X @ V[n:].T


def _objective_at(X: np.ndarray, V: np.ndarray) -> float:
    a, b = _responses(X, V)
    S = np.hypot(a, b).sum(axis=0)
    return float(S @ S) / X.shape[0] ** 2


def objective(state: LayerObjectiveState) -> float:
    """Exact (unsmoothed) objective."""
    return _objective_at(state.centered_samples, state.stiefel_point)


def smoothed_objective(state: LayerObjectiveState) -> float:
    """Objective with ``|z|`` replaced by ``(|z|^2 + eps^2)^{1/2}``."""
    a, b = _responses(state.centered_samples, state.stiefel_point)
    S = np.sqrt(a * a + b * b + state.smoothing_eps ** 2).sum(axis=0)
    return float(S @ S) / state.centered_samples.shape[0] ** 2


def _gradient_at(X: np.ndarray, V: np.ndarray, eps: float) -> np.ndarray:
    P = X.shape[0]
    a, b = _responses(X, V)
    r = np.sqrt(a * a + b * b + eps * eps)
    S = r.sum(axis=0)
    coef = 2.0 * S / P ** 2
    ga = coef[:, None] * ((a / r).T @ X)
    gb = coef[:, None] * ((b / r).T @ X)
    return np.vstack([ga, gb])


def gradient(state: LayerObjectiveState) -> np.ndarray:
    """Euclidean gradient of the smoothed objective with respect to ``V``."""
    return _gradient_at(state.centered_samples, state.stiefel_point, state.smoothing_eps)


def riemannian_gradient(V: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Projection of ``G`` onto the tangent space of the Stiefel manifold at ``V``."""
    VtG = V.T @ G
    return G - V @ (0.5 * (VtG + VtG.T))


def retract(V: np.ndarray, step: np.ndarray) -> np.ndarray:
    return orthonormalize_columns(V + step)


def _escape(X, V, f, rng, trials, radius):
    """Try random tangent directions; return the first strictly better point."""
    for _ in range(trials):
        Z = riemannian_gradient(V, rng.standard_normal(V.shape))
        Z *= radius / max(np.linalg.norm(Z), np.finfo(float).tiny)
        V_new = retract(V, Z)
        f_new = _objective_at(X, V_new)
        if f_new < f:
            return V_new, f_new
    return None


def optimize_layer(state: LayerObjectiveState,
                   callback: Callable[[int, np.ndarray, float], None] | None = None,
                   ) -> tuple[TightFrameOperator, list[float]]:
    """Backtracking Riemannian descent with orthonormalization retraction.

    An iterate is accepted only when the exact objective strictly decreases,
    so the returned trace is non-increasing.  When neither a gradient step nor
    the relative-decrease test makes progress, a few seeded random tangent
    probes are tried before declaring convergence; this moves the iterate off
    symmetric critical points such as structured pairings.
    ``callback(iteration, V, value)`` sees every accepted iterate.
    """
    X = state.centered_samples
    V = state.stiefel_point
    if stiefel_residual(V) > STIEFEL_TOL:
        V = orthonormalize_columns(V)
    rng = np.random.default_rng(state.seed)
    f = _objective_at(X, V)
    if not np.isfinite(f):
        raise NumericalFailure(0, "non-finite objective")
    trace = [f]
    if callback is not None:
        callback(0, V, f)
    for it in range(1, state.max_iters + 1):
        G = _gradient_at(X, V, state.smoothing_eps)
        if not np.all(np.isfinite(G)):
            raise NumericalFailure(it, "non-finite gradient")
        D = -riemannian_gradient(V, G)
        t = state.step_size
        accepted = None
        if np.any(D):
            for _ in range(state.max_backtracks):
                V_new = retract(V, t * D)
                f_new = _objective_at(X, V_new)
                if not np.isfinite(f_new):
                    raise NumericalFailure(it, "non-finite objective")
                if f_new < f:
                    accepted = (V_new, f_new)
                    break
                t *= state.shrink_factor
        stalled = accepted is None or (f - accepted[1]) <= REL_DECREASE_TOL * max(f, 1e-300)
        if stalled:
            probe = _escape(X, V if accepted is None else accepted[0],
                            f if accepted is None else accepted[1],
                            rng, state.escape_trials, state.escape_radius)
            if probe is not None:
                accepted = probe
            elif accepted is None:
                break
        V, f = accepted
        trace.append(f)
        if callback is not None:
            callback(it, V, f)
        if stalled and probe is None:
            break
    return TightFrameOperator.from_stacked(V), trace


@dataclass
class OptimizerConfig:
    smoothing_eps: float = 1e-6
    step_size: float = 1.0
    shrink_factor: float = 0.5
    max_iters: int = 500
    escape_trials: int = 8
    escape_radius: float = 1e-2
    init: str = "random"  # or "pairing" (requires n_out = n_in / 2)


def _initial_operator(n_in: int, n_out: int, init: str, seed: int) -> TightFrameOperator:
    if init == "random":
        return random_tight_frame(n_in, n_out, seed)
    if init == "pairing":
        if 2 * n_out != n_in:
            raise DimensionError(f"pairing init needs n_out = n_in/2, got {n_in} -> {n_out}")
        return contiguous_pairing(n_in)
    raise ValueError(f"unknown init {init!r}")


def build_network_greedy(samples, dims: Sequence[int],
                         partitions: Sequence[BlockPartition] | None = None,
                         config: OptimizerConfig | None = None,
                         seed: int = 0) -> tuple[ScatteringNetwork, list[list[float]]]:
    """Learn ``W_1..W_M`` one layer at a time; returns the network and per-layer traces.

    Layer ``m+1`` is fitted on ``X_{i,m} - mu_bar_m`` computed with the layers
    already frozen.  ``partitions`` has one entry per layer ``0..M`` (the last
    is the final partition); they do not affect training.
    """
    config = config or OptimizerConfig()
    X = np.asarray(samples, dtype=float)
    dims = [int(d) for d in dims]
    if X.ndim != 2 or X.shape[0] == 0:
        raise DimensionError(f"need a non-empty (P, N) sample array, got shape {X.shape}")
    if len(dims) < 2:
        raise DimensionError("need at least two layer widths")
    if dims[0] != X.shape[1]:
        raise DimensionError(f"dims[0]={dims[0]} but samples have dimension {X.shape[1]}")
    for m in range(len(dims) - 1):
        if 2 * dims[m + 1] < dims[m]:
            raise DimensionError(f"layer {m + 1}: 2*{dims[m + 1]} < {dims[m]}")
    seeds = np.random.SeedSequence(seed).generate_state(2 * (len(dims) - 1))
    operators, traces = [], []
    layer = X
    for m in range(len(dims) - 1):
        centered = layer - layer.mean(axis=0)
        W0 = _initial_operator(dims[m], dims[m + 1], config.init, int(seeds[2 * m]))
        state = LayerObjectiveState(
            centered, W0.stacked, smoothing_eps=config.smoothing_eps,
            step_size=config.step_size, shrink_factor=config.shrink_factor,
            max_iters=config.max_iters, escape_trials=config.escape_trials,
            escape_radius=config.escape_radius, seed=int(seeds[2 * m + 1]))
        W, trace = optimize_layer(state)
        log.info("layer %d: objective %.6g -> %.6g in %d steps", m + 1, trace[0], trace[-1],
                 len(trace) - 1)
        operators.append(W)
        traces.append(trace)
        layer = np.hypot(*_responses(centered, W.stacked))
    if partitions is None:
        net = ScatteringNetwork.build(operators)
    else:
        partitions = list(partitions)
        net = ScatteringNetwork(tuple(operators), tuple(partitions[:-1]), partitions[-1])
    return net, traces


def class_separation(net: ScatteringNetwork,
                     classes: Sequence[tuple[float, DiscreteDistribution]]) -> float:
    """``sum_{k,l} p_k p_l ||E(U X^(k)) - E(U X^(l))||^2`` over layers ``0..depth``.

    A diagnostic only; the unsupervised objective never sees labels.
    """
    reps = [(p, expected_scatter_exact(net, d).expectations) for p, d in classes]
    total = 0.0
    for pk, ek in reps:
        for pl, el in reps:
            total += pk * pl * ek.distance2(el)
    return total
