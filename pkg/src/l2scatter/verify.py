"""Randomized invariant suite: conservation laws, contractions and bounds.

Each check returns a worst-case ``residual`` and the ``bound`` it must not
exceed.  Residuals are normalized so that the bounds are the tolerances
the library promises (relative where the quantity scales with the input).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import learn
from .classify import averaging_error_bounds, readout_equivalence
from .frame import (apply_complex, apply_modulus, pairing_operator, random_tight_frame)
from .partition import apply_average, residual
from .scatter import (DiscreteDistribution, ScatteringNetwork, averaged_scatter,
                      empirical_scatter_layers, expected_scatter_exact, mean_estimation_bound)
from .synthetic import random_dims, random_distribution, random_network, random_partition


@dataclass
class PropertyResult:
    name: str
    passed: bool
    residual: float
    bound: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"PROPERTY {self.name} {status} residual={self.residual:.3e} bound={self.bound:.3e}"


def _result(name, residual, bound) -> PropertyResult:
    residual = float(residual)
    return PropertyResult(name, bool(np.isfinite(residual) and residual <= bound), residual, bound)


@dataclass
class Level:
    instances: int
    mc_trials: int
    learn_seeds: int
    grad_points: int


LEVELS = {
    "quick": Level(instances=40, mc_trials=300, learn_seeds=10, grad_points=5),
    "full": Level(instances=200, mc_trials=1000, learn_seeds=50, grad_points=20),
}


class Suite:
    """Holds the RNG, the level and an optional user network to stress."""

    def __init__(self, seed: int = 0, level: str = "quick", net: ScatteringNetwork | None = None):
        self.rng = np.random.default_rng(seed)
        self.level = LEVELS[level]
        self.user_net = net

    def network(self, depth: int | None = None, max_block: int = 3) -> ScatteringNetwork:
        if self.user_net is not None:
            return self.user_net
        depth = depth if depth is not None else int(self.rng.integers(1, 6))
        n0 = int(self.rng.integers(2, 13))
        return random_network(self.rng, random_dims(self.rng, depth, n0), max_block)

    def vector(self, n: int, nonnegative: bool = False) -> np.ndarray:
        x = self.rng.standard_normal(n) * self.rng.uniform(0.1, 10.0)
        return np.abs(x) if nonnegative else x

    def operators(self):
        if self.user_net is not None and self.user_net.depth:
            return list(self.user_net.operators)
        out = []
        for _ in range(self.level.instances):
            n_in = int(self.rng.integers(1, 17))
            n_out = int(self.rng.integers((n_in + 1) // 2, 20))
            out.append(random_tight_frame(n_in, n_out, int(self.rng.integers(2 ** 31))))
        return out

    # -- frame / partition -------------------------------------------------

    def frame_norm_preservation(self):
        worst = 0.0
        for W in self.operators():
            for _ in range(5):
                x = self.vector(W.n_in)
                y = apply_modulus(W, x)
                worst = max(worst, abs(y @ y - x @ x) / (x @ x))
        return _result("frame_norm_preservation", worst, 1e-10)

    def modulus_contraction(self):
        worst = -np.inf
        for W in self.operators():
            for _ in range(5):
                x, y = self.vector(W.n_in), self.vector(W.n_in)
                d_out = np.linalg.norm(apply_modulus(W, x) - apply_modulus(W, y))
                worst = max(worst, (d_out - np.linalg.norm(x - y)) / max(1.0, np.linalg.norm(x - y)))
        return _result("modulus_contraction", worst, 1e-12)

    def complex_linearity(self):
        worst = 0.0
        for W in self.operators():
            x, y = self.vector(W.n_in), self.vector(W.n_in)
            a = np.concatenate(apply_complex(W, x + y))
            b = np.concatenate(apply_complex(W, x)) + np.concatenate(apply_complex(W, y))
            worst = max(worst, np.max(np.abs(a - b)) / (1 + np.max(np.abs(a))))
        return _result("complex_linearity", worst, 1e-12)

    def projector_identities(self):
        worst = 0.0
        for _ in range(self.level.instances):
            n = int(self.rng.integers(1, 40))
            p = random_partition(self.rng, n, int(self.rng.integers(1, 6)))
            x = self.vector(n)
            Ax = apply_average(p, x)
            r = residual(p, x)
            worst = max(worst,
                        np.max(np.abs(apply_average(p, Ax) - Ax)),
                        abs(x @ x - Ax @ Ax - r @ r) / (x @ x),
                        abs(Ax @ r) / (x @ x))
        return _result("projector_identities", worst, 1e-12)

    def averaging_lower_bound(self):
        worst = -np.inf
        for _ in range(self.level.instances):
            n = int(self.rng.integers(1, 40))
            p = random_partition(self.rng, n, int(self.rng.integers(1, 6)))
            x = self.vector(n, nonnegative=True)
            Ax = apply_average(p, x)
            worst = max(worst, (x @ x / p.max_block_size - Ax @ Ax) / (x @ x))
        return _result("averaging_lower_bound", worst, 1e-12)

    # -- averaged scattering ---------------------------------------------------

    def energy_identity(self):
        worst = 0.0
        for _ in range(self.level.instances):
            net = self.network()
            x = self.vector(net.dims[0])
            tilde, out = averaged_scatter(net, x)
            total = out.energies()[:-1].sum() + tilde[-1] @ tilde[-1]
            worst = max(worst, abs(x @ x - total) / (x @ x))
        return _result("energy_identity", worst, 1e-10)

    def contractivity(self):
        worst = -np.inf
        for _ in range(self.level.instances):
            net = self.network()
            x, y = self.vector(net.dims[0]), self.vector(net.dims[0])
            tx, ox = averaged_scatter(net, x)
            ty, oy = averaged_scatter(net, y)
            lhs = sum(np.sum((a - b) ** 2) for a, b in zip(ox.vectors[:-1], oy.vectors[:-1]))
            lhs += np.sum((tx[-1] - ty[-1]) ** 2)
            d2 = np.sum((x - y) ** 2)
            worst = max(worst, (lhs - d2) / d2)
        return _result("contractivity", worst, 1e-10)

    def decay_bound(self):
        worst = -np.inf
        for _ in range(self.level.instances):
            if self.user_net is not None:
                net = self.user_net
            else:
                M = int(self.rng.choice([2, 4]))
                depth = int(self.rng.integers(1, 6))
                dims = random_dims(self.rng, depth, int(self.rng.integers(2, 13)))
                net = random_network(self.rng, dims, max_block=M)
            M = max(net.partition(m).max_block_size for m in range(net.depth + 1))
            x = self.vector(net.dims[0], nonnegative=True)
            tilde, _ = averaged_scatter(net, x)
            for m, v in enumerate(tilde):
                worst = max(worst, (v @ v - (x @ x) * (1 - 1 / M) ** m) / (x @ x))
        return _result("decay_bound", worst, 1e-12)

    # -- expected scattering ---------------------------------------------------

    def distribution(self, dim: int) -> DiscreteDistribution:
        return random_distribution(self.rng, int(self.rng.integers(1, 9)), dim,
                                   scale=self.rng.uniform(0.5, 3.0),
                                   offset=self.rng.uniform(-1.0, 1.0))

    def expected_energy_and_variance(self):
        e_worst = v_worst = m_worst = 0.0
        for _ in range(max(self.level.instances // 4, 10)):
            net = self.network()
            dist = self.distribution(net.dims[0])
            res = expected_scatter_exact(net, dist)
            total_in = dist.mean_square_norm()
            E = res.expectations.energies()
            last = res.layers[-1]
            tail = dist.probs @ np.sum(last ** 2, axis=1)
            e_worst = max(e_worst, abs(total_in - E[:-1].sum() - tail) / total_in)
            var = res.variances
            for m in range(net.depth):
                v_worst = max(v_worst, abs(var[m] - var[m + 1] - E[m + 1]) / total_in)
                nxt = dist.probs @ np.sum(res.layers[m + 1] ** 2, axis=1)
                cur = dist.probs @ np.sum(res.layers[m] ** 2, axis=1)
                m_worst = max(m_worst, (nxt - var[m]) / total_in, (var[m] - cur) / total_in)
        return [_result("expected_energy_identity", e_worst, 1e-10),
                _result("variance_identity", v_worst, 1e-10),
                _result("monotone_layer_energy", m_worst, 1e-10)]

    def expected_contractivity(self):
        worst = -np.inf
        for _ in range(max(self.level.instances // 4, 10)):
            net = self.network()
            dx = self.distribution(net.dims[0])
            dy = DiscreteDistribution(dx.atoms + self.rng.standard_normal(dx.atoms.shape), dx.probs)
            rx, ry = expected_scatter_exact(net, dx), expected_scatter_exact(net, dy)
            p = dx.probs
            lhs = sum(np.sum((a - b) ** 2) for a, b in
                      zip(rx.expectations.vectors[:-1], ry.expectations.vectors[:-1]))
            lhs += p @ np.sum((rx.layers[-1] - ry.layers[-1]) ** 2, axis=1)
            d2 = p @ np.sum((dx.atoms - dy.atoms) ** 2, axis=1)
            worst = max(worst, (lhs - d2) / d2)
        return _result("expected_contractivity", worst, 1e-10)

    def mean_estimation(self):
        """Monte Carlo error of mu_bar_m against both estimation bounds."""
        worst_mc = worst_order = -np.inf
        dists = [DiscreteDistribution([[1.0, 1.0], [-1.0, -1.0]], [0.5, 0.5])]
        nets = [ScatteringNetwork.build([pairing_operator(2, [(0, 1)])])]
        for _ in range(3):
            net = self.network(depth=int(self.rng.integers(1, 4)))
            nets.append(net)
            dists.append(self.distribution(net.dims[0]))
        for net, dist in zip(nets, dists):
            exact = expected_scatter_exact(net, dist).expectations
            for P in (10, 100):
                errs = np.empty((self.level.mc_trials, net.depth + 1))
                for t in range(self.level.mc_trials):
                    mus, _ = empirical_scatter_layers(net, dist.sample(self.rng, P))
                    errs[t] = [np.sum((mu - e) ** 2) for mu, e in zip(mus, exact)]
                mean = errs.mean(axis=0)
                se = errs.std(axis=0, ddof=1) / np.sqrt(len(errs))
                for m in range(net.depth + 1):
                    tight, coarse = mean_estimation_bound(net, dist, m, P)
                    worst_mc = max(worst_mc, mean[m] - tight - 3 * se[m])
                    worst_order = max(worst_order, tight - coarse)
        return [_result("mean_estimation_bound", worst_mc, 0.0),
                _result("estimation_bound_order", worst_order, 1e-12)]

    def averaging_error(self):
        worst = -np.inf
        for _ in range(max(self.level.instances // 2, 10)):
            net = self.network()
            dist = self.distribution(net.dims[0])
            lhs, rhs = averaging_error_bounds(net, dist)
            worst = max(worst, np.max(lhs - rhs) / max(1.0, dist.mean_square_norm()))
        return _result("averaging_error_bound", worst, 1e-10)

    def readout_identity(self):
        worst = 0.0
        for _ in range(max(self.level.instances // 2, 10)):
            net = self.network()
            w = self.rng.standard_normal(sum(net.dims))
            lhs, rhs = readout_equivalence(net, w, self.vector(net.dims[0]))
            worst = max(worst, abs(lhs - rhs) / (1 + abs(lhs)))
        return _result("readout_identity", worst, 1e-10)

    # -- learning ------------------------------------------------------------------

    def _learn_state(self, seed: int | None = None) -> learn.LayerObjectiveState:
        rng = np.random.default_rng(seed) if seed is not None else self.rng
        n_in = int(rng.integers(2, 7))
        n_out = int(rng.integers((n_in + 1) // 2, 7))
        X = rng.standard_normal((int(rng.integers(3, 20)), n_in))
        X -= X.mean(axis=0)
        V = random_tight_frame(n_in, n_out, int(rng.integers(2 ** 31))).stacked
        return learn.LayerObjectiveState(X, V, max_iters=100, seed=int(rng.integers(2 ** 31)))

    def gradient_check(self):
        worst = 0.0
        h = 1e-6
        for _ in range(self.level.grad_points):
            st = self._learn_state()
            G = learn.gradient(st)
            fd = np.zeros_like(G)
            for idx in np.ndindex(G.shape):
                E = np.zeros_like(G)
                E[idx] = h
                fd[idx] = (learn.smoothed_objective(st.with_point(st.stiefel_point + E))
                           - learn.smoothed_objective(st.with_point(st.stiefel_point - E))) / (2 * h)
            worst = max(worst, np.linalg.norm(fd - G) / np.linalg.norm(G))
        return _result("gradient_check", worst, 1e-5)

    def learning_runs(self):
        rise = -np.inf
        feas = 0.0
        for s in range(self.level.learn_seeds):
            st = self._learn_state(seed=int(self.rng.integers(2 ** 31)))
            resid = []
            _, trace = learn.optimize_layer(
                st, callback=lambda it, V, f: resid.append(learn.stiefel_residual(V)))
            rise = max(rise, np.max(np.diff(trace)) if len(trace) > 1 else 0.0)
            feas = max(feas, max(resid))
        X = np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]])
        W0 = pairing_operator(4, [(0, 2), (1, 3)])
        _, trace = learn.optimize_layer(learn.LayerObjectiveState(X, W0.stacked))
        return [_result("objective_monotone", rise, 0.0),
                _result("stiefel_feasibility", feas, learn.STIEFEL_TOL),
                _result("sparse_pair_learning", trace[-1], 1.5)]

    def checks(self) -> list[Callable]:
        return [self.frame_norm_preservation, self.modulus_contraction, self.complex_linearity,
                self.projector_identities, self.averaging_lower_bound, self.energy_identity,
                self.contractivity, self.decay_bound, self.expected_energy_and_variance,
                self.expected_contractivity, self.mean_estimation, self.averaging_error,
                self.readout_identity, self.gradient_check, self.learning_runs]


def run_suite(seed: int = 0, level: str = "quick", net: ScatteringNetwork | None = None,
              echo: Callable[[str], None] | None = None) -> list[PropertyResult]:
    suite = Suite(seed, level, net)
    results = []
    for check in suite.checks():
        out = check()
        for r in out if isinstance(out, list) else [out]:
            results.append(r)
            if echo is not None:
                echo(r.line())
    return results
