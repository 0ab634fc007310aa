"""Nearest-template classification on averaged scattering, and linear readouts."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .errors import DimensionError, EmptyInputError
from .partition import apply_average
from .scatter import (DiscreteDistribution, LayerSequence, ScatteringNetwork,
                      averaged_scatter, averaged_scatter_layers, empirical_scatter_layers,
                      expected_scatter_exact)


def label_sort_key(label):
    """Numeric labels sort numerically, everything else as strings after them."""
    try:
        return (0, float(label), "")
    except (TypeError, ValueError):
        return (1, 0.0, str(label))


@dataclass
class ClassTemplates:
    labels: list
    templates: list[LayerSequence]
    priors: np.ndarray
    counts: list[int]

    def __post_init__(self):
        if not self.labels:
            raise EmptyInputError("no classes")
        if not len(self.labels) == len(self.templates) == len(self.priors) == len(self.counts):
            raise DimensionError("labels, templates, priors and counts differ in length")
        lengths = {tuple(t.lengths) for t in self.templates}
        if len(lengths) != 1:
            raise DimensionError(f"templates have different layer lengths: {sorted(lengths)}")
        self.priors = np.asarray(self.priors, dtype=float)
        if abs(self.priors.sum() - 1.0) > 1e-12:
            raise ValueError(f"priors sum to {self.priors.sum()!r}")

    def index(self, label) -> int:
        return self.labels.index(label)


def fit_templates(net: ScatteringNetwork, samples, labels: Sequence[Hashable]) -> ClassTemplates:
    """Per-class empirical scattering means; priors are class frequencies.

    Classes are ordered by ``label_sort_key``; that order breaks ties.
    """
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2 or X.shape[0] != len(labels):
        raise DimensionError(f"{len(labels)} labels for samples of shape {X.shape}")
    if X.shape[0] == 0:
        raise EmptyInputError("no labeled samples")
    classes = sorted(set(labels), key=label_sort_key)
    labels_arr = list(labels)
    templates, counts = [], []
    for c in classes:
        idx = [i for i, l in enumerate(labels_arr) if l == c]
        mus, _ = empirical_scatter_layers(net, X[idx])
        templates.append(LayerSequence(mus))
        counts.append(len(idx))
    total = sum(counts)
    return ClassTemplates(classes, templates, np.array(counts) / total, counts)


def template_distances(net: ScatteringNetwork, templates: ClassTemplates, X) -> np.ndarray:
    """``sum_{m<=depth} ||A_m x~_m - template_{k,m}||^2`` for each row of ``X`` and class."""
    if list(templates.templates[0].lengths) != net.dims:
        raise DimensionError(
            f"templates have layer lengths {templates.templates[0].lengths}, network {net.dims}")
    _, out = averaged_scatter_layers(net, X)
    Z = np.concatenate(out, axis=-1)
    T = np.stack([t.concat() for t in templates.templates])
    return np.sum((Z[..., None, :] - T) ** 2, axis=-1)


def classify_nearest(net: ScatteringNetwork, templates: ClassTemplates, x):
    """Label of the nearest template; ties go to the earliest class."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionError(f"expected a single vector, got shape {x.shape}")
    d = template_distances(net, templates, x)
    return templates.labels[int(np.argmin(d))], d


def classify_batch(net: ScatteringNetwork, templates: ClassTemplates, X) -> list:
    d = template_distances(net, templates, np.atleast_2d(X))
    return [templates.labels[k] for k in np.argmin(d, axis=1)]


def average_readout(net: ScatteringNetwork, w) -> np.ndarray:
    """``A w`` applied layer by layer to a concatenated weight vector."""
    w = np.asarray(w, dtype=float)
    dims = net.dims
    if w.shape != (sum(dims),):
        raise DimensionError(f"weight vector of length {w.shape} for layer widths {dims}")
    parts = np.split(w, np.cumsum(dims)[:-1])
    return np.concatenate([apply_average(net.partition(m), p) for m, p in enumerate(parts)])


def readout_equivalence(net: ScatteringNetwork, w, x) -> tuple[float, float]:
    """``<w, A U~x>`` and ``<A w, U~x>``; equal because ``A`` is an orthogonal projector."""
    Aw = average_readout(net, w)
    tilde, out = averaged_scatter(net, x)
    lhs = float(np.asarray(w, dtype=float) @ out.concat())
    rhs = float(Aw @ tilde.concat())
    return lhs, rhs


@dataclass
class LinearReadout:
    w: np.ndarray
    bias: float

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        if not (np.all(np.isfinite(self.w)) and np.isfinite(self.bias)):
            raise ValueError("readout has non-finite entries")

    def score(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=float) @ self.w + self.bias


def scattering_features(net: ScatteringNetwork, X, emit: str = "utilde") -> np.ndarray:
    """Concatenated ``x~_m`` (``utilde``) or ``A_m x~_m`` (``autilde``) per row."""
    tilde, out = averaged_scatter_layers(net, X)
    if emit == "utilde":
        return np.concatenate(tilde, axis=-1)
    if emit == "autilde":
        return np.concatenate(out, axis=-1)
    raise ValueError(f"emit must be 'utilde' or 'autilde', got {emit!r}")


def fit_readouts(features, labels: Sequence[Hashable], ridge: float = 1e-8) -> dict:
    """One-vs-rest least-squares readouts (targets +1/-1)."""
    Z = np.asarray(features, dtype=float)
    if Z.ndim != 2 or Z.shape[0] != len(labels):
        raise DimensionError(f"{len(labels)} labels for features of shape {Z.shape}")
    Za = np.hstack([Z, np.ones((Z.shape[0], 1))])
    gram = Za.T @ Za + ridge * np.eye(Za.shape[1])
    readouts = {}
    for c in sorted(set(labels), key=label_sort_key):
        y = np.where(np.array([l == c for l in labels]), 1.0, -1.0)
        coef = np.linalg.solve(gram, Za.T @ y)
        readouts[c] = LinearReadout(coef[:-1], float(coef[-1]))
    return readouts


def predict_readouts(readouts: dict, features) -> list:
    labels = list(readouts)
    scores = np.stack([readouts[c].score(features) for c in labels], axis=-1)
    return [labels[k] for k in np.argmax(np.atleast_2d(scores), axis=1)]


def averaging_error_bounds(net: ScatteringNetwork, dist: DiscreteDistribution
                           ) -> tuple[np.ndarray, np.ndarray]:
    """Exact ``E||A_m X~_m - E X_m||^2`` and its bound ``(sum_{n<=m} E||A_n X_n - E X_n||^2^{1/2})^2``.

    ``X~`` is the averaged scattering of each atom; ``X`` the expected
    scattering path.  Both are enumerated over the atoms, ``m = 0..depth``.
    """
    exact = expected_scatter_exact(net, dist)
    _, out = averaged_scatter_layers(net, dist.atoms)
    p = dist.probs
    lhs, terms = [], []
    for m in range(net.depth + 1):
        mu = exact.expectations[m]
        lhs.append(float(p @ np.sum((out[m] - mu) ** 2, axis=1)))
        AX = apply_average(net.partition(m), exact.layers[m])
        terms.append(float(p @ np.sum((AX - mu) ** 2, axis=1)))
    rhs = np.cumsum(np.sqrt(terms)) ** 2
    return np.array(lhs), rhs
