import numpy as np
import pytest

from l2scatter.errors import DimensionError, NumericalFailure
from l2scatter.frame import pairing_operator, random_tight_frame, validate
from l2scatter.learn import (LayerObjectiveState, OptimizerConfig, build_network_greedy,
                             class_separation, gradient, objective, optimize_layer,
                             smoothed_objective, stiefel_residual)
from l2scatter.partition import BlockPartition
from l2scatter.scatter import (DiscreteDistribution, ScatteringNetwork, empirical_scatter_layers,
                               empirical_variances)
from l2scatter.synthetic import random_distribution, random_network

from oracles import sparsity_objective

SPARSE_PAIR = np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]])
ALIGNED = pairing_operator(4, [(0, 1), (2, 3)])
MISALIGNED = pairing_operator(4, [(0, 2), (1, 3)])


def _state(X, V, **kw):
    return LayerObjectiveState(X, V, **kw)


def test_objective_examples():
    assert objective(_state(SPARSE_PAIR, ALIGNED.stacked)) == pytest.approx(1.0, abs=1e-15)
    assert objective(_state(SPARSE_PAIR, MISALIGNED.stacked)) == pytest.approx(2.0, abs=1e-15)
    assert objective(_state(np.zeros((3, 4)), MISALIGNED.stacked)) == 0.0


def test_objective_matches_loop_oracle(rng):
    for seed in range(10):
        X = rng.standard_normal((7, 5))
        V = random_tight_frame(5, 4, seed).stacked
        assert objective(_state(X, V)) == pytest.approx(sparsity_objective(X, V), rel=1e-12)


def test_objective_permutation_invariance(rng):
    X = rng.standard_normal((9, 4))
    V = random_tight_frame(4, 3, 1).stacked
    st = _state(X, V)
    perm = rng.permutation(9)
    st2 = _state(X[perm], V)
    assert objective(st2) == pytest.approx(objective(st), rel=1e-13)
    np.testing.assert_allclose(gradient(st2), gradient(st), rtol=1e-12, atol=1e-14)


def test_zero_samples_zero_gradient():
    st = _state(np.zeros((4, 3)), random_tight_frame(3, 2, 0).stacked)
    np.testing.assert_array_equal(gradient(st), 0.0)


def _fd_gradient(st, h=1e-6):
    G = np.zeros_like(st.stiefel_point)
    for idx in np.ndindex(G.shape):
        E = np.zeros_like(G)
        E[idx] = h
        G[idx] = (smoothed_objective(st.with_point(st.stiefel_point + E))
                  - smoothed_objective(st.with_point(st.stiefel_point - E))) / (2 * h)
    return G


def test_gradient_finite_differences():
    for seed in range(20):
        r = np.random.default_rng(seed)
        n_in = int(r.integers(2, 7))
        X = r.standard_normal((int(r.integers(2, 15)), n_in))
        X -= X.mean(axis=0)
        # gradient is checked off the manifold too
        V = r.standard_normal((2 * int(r.integers((n_in + 1) // 2, 6)), n_in))
        st = _state(X, V)
        G = gradient(st)
        assert np.linalg.norm(_fd_gradient(st) - G) <= 1e-5 * np.linalg.norm(G)


def test_optimizer_escapes_misaligned_pairing():
    W, trace = optimize_layer(_state(SPARSE_PAIR, MISALIGNED.stacked))
    assert trace[0] == pytest.approx(2.0)
    assert trace[-1] <= 1.5
    assert trace[-1] >= 1.0 - 1e-9
    assert validate(W)


def test_optimizer_zero_samples_converges_immediately():
    _, trace = optimize_layer(_state(np.zeros((3, 4)), random_tight_frame(4, 3, 5).stacked))
    assert trace == [0.0]


def test_optimizer_is_deterministic(rng):
    X = rng.standard_normal((10, 4))
    X -= X.mean(axis=0)
    V = random_tight_frame(4, 4, 9).stacked
    a = optimize_layer(_state(X, V, seed=3))
    b = optimize_layer(_state(X, V, seed=3))
    assert a[1] == b[1]
    assert a[0] == b[0]


@pytest.mark.parametrize("seed", range(50))
def test_trace_monotone_and_feasible(seed):
    r = np.random.default_rng(seed)
    n_in = int(r.integers(2, 7))
    X = r.standard_normal((int(r.integers(3, 20)), n_in))
    X -= X.mean(axis=0)
    V = random_tight_frame(n_in, int(r.integers((n_in + 1) // 2, 7)), seed).stacked
    residuals = []
    W, trace = optimize_layer(_state(X, V, max_iters=100, seed=seed),
                              callback=lambda it, Vk, f: residuals.append(stiefel_residual(Vk)))
    assert np.all(np.diff(trace) <= 0)
    assert max(residuals) <= 1e-8
    assert len(residuals) == len(trace)
    assert validate(W, 1e-8)
    assert trace[-1] <= trace[0]


def test_numerical_failure_reports_iteration():
    X = np.array([[np.inf, 0.0], [0.0, 1.0]])
    with pytest.raises(NumericalFailure) as info:
        optimize_layer(_state(X, random_tight_frame(2, 1, 0).stacked))
    assert info.value.iteration == 0


def test_state_shape_check():
    with pytest.raises(DimensionError):
        _state(np.zeros((2, 3)), np.eye(4))


def test_greedy_depth_one_equals_single_layer(rng):
    X = rng.standard_normal((12, 4))
    cfg = OptimizerConfig(max_iters=50)
    net, traces = build_network_greedy(X, [4, 3], config=cfg, seed=5)
    seeds = np.random.SeedSequence(5).generate_state(2)
    st = _state(X - X.mean(axis=0), random_tight_frame(4, 3, int(seeds[0])).stacked,
                max_iters=50, seed=int(seeds[1]))
    W, trace = optimize_layer(st)
    assert net.operators[0] == W
    assert traces[0] == trace


def test_greedy_properties(rng):
    X = rng.standard_normal((40, 4)) * [3.0, 1.0, 0.5, 0.1]
    dims = [4, 4, 3, 2]
    parts = [BlockPartition.contiguous(n, 2) for n in dims]
    net, traces = build_network_greedy(X, dims, parts, OptimizerConfig(max_iters=60), seed=1)
    assert net.dims == dims
    assert all(validate(W, 1e-8) for W in net.operators)
    assert all(np.all(np.diff(t) <= 0) for t in traces)
    again, _ = build_network_greedy(X, dims, parts, OptimizerConfig(max_iters=60), seed=1)
    assert all(a == b for a, b in zip(net.operators, again.operators))
    mus, layers = empirical_scatter_layers(net, X)
    var = empirical_variances(layers)
    for m in range(net.depth):
        assert abs(var[m] - var[m + 1] - mus[m + 1] @ mus[m + 1]) <= 1e-10 * var[0]
        # the learned layer's objective is exactly ||mu_bar_{m+1}||^2
        st = _state(layers[m] - mus[m], net.operators[m].stacked)
        assert objective(st) == pytest.approx(mus[m + 1] @ mus[m + 1], rel=1e-12)


def test_greedy_rejects_bad_dims(rng):
    X = rng.standard_normal((5, 4))
    with pytest.raises(DimensionError):
        build_network_greedy(X, [4, 1])
    with pytest.raises(DimensionError):
        build_network_greedy(X, [3, 3])


def test_pairing_init_scores_higher_than_learned():
    cfg_p = OptimizerConfig(init="pairing", max_iters=0)
    X = np.vstack([SPARSE_PAIR, -SPARSE_PAIR])
    _, t_pair = build_network_greedy(X, [4, 2], config=cfg_p)
    _, t_learn = build_network_greedy(X, [4, 2], config=OptimizerConfig(init="pairing"))
    assert t_learn[0][-1] <= t_pair[0][-1]


def test_class_separation():
    r = np.random.default_rng(0)
    net = random_network(r, [3, 4])
    d = random_distribution(r, 4, 3)
    assert class_separation(net, [(1.0, d)]) == 0.0
    assert class_separation(net, [(0.3, d), (0.7, d)]) == 0.0
    x, y = np.array([1.0, 2.0, 0.0]), np.array([-1.0, 0.5, 3.0])
    depth0 = ScatteringNetwork((), (), BlockPartition.singletons(3))
    dx = DiscreteDistribution([x], [1.0])
    dy = DiscreteDistribution([y], [1.0])
    got = class_separation(depth0, [(0.25, dx), (0.75, dy)])
    assert got == pytest.approx(2 * 0.25 * 0.75 * np.sum((x - y) ** 2), rel=1e-14)
