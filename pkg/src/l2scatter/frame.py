"""Complex tight-frame operators stored as paired real matrices.

A complex operator ``W: R^n_in -> C^n_out`` with rows ``psi_n = a_n + i b_n`` is
kept as two real ``(n_out, n_in)`` matrices.  The unitary condition
``W* W = Id`` is the statement that the stacked ``(2 n_out, n_in)`` real matrix
``V = [a; b]`` has orthonormal columns.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, InvalidPartitionError

DEFAULT_TOL = 1e-8


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TightFrameOperator:
    psi_real: np.ndarray
    psi_imag: np.ndarray

    def __post_init__(self):
        re = _frozen(self.psi_real)
        im = _frozen(self.psi_imag)
        if re.ndim != 2 or re.shape != im.shape:
            raise DimensionError(
                f"psi_real {re.shape} and psi_imag {im.shape} must be equal-shape matrices")
        if 2 * re.shape[0] < re.shape[1]:
            raise DimensionError(
                f"2*n_out={2 * re.shape[0]} < n_in={re.shape[1]}: cannot be a tight frame")
        object.__setattr__(self, "psi_real", re)
        object.__setattr__(self, "psi_imag", im)

    @property
    def n_in(self) -> int:
        return self.psi_real.shape[1]

    @property
    def n_out(self) -> int:
        return self.psi_real.shape[0]

    @property
    def stacked(self) -> np.ndarray:
        """The ``(2 n_out, n_in)`` real matrix, real rows first."""
        return np.vstack([self.psi_real, self.psi_imag])

    @classmethod
    def from_stacked(cls, V: np.ndarray) -> "TightFrameOperator":
        V = np.asarray(V, dtype=float)
        if V.ndim != 2 or V.shape[0] % 2:
            raise DimensionError(f"stacked matrix must have an even row count, got {V.shape}")
        n_out = V.shape[0] // 2
        return cls(V[:n_out], V[n_out:])

    def frame_residual(self) -> float:
        """Frobenius norm of ``V^T V - Id``."""
        V = self.stacked
        return float(np.linalg.norm(V.T @ V - np.eye(self.n_in)))

    def __eq__(self, other):
        if not isinstance(other, TightFrameOperator):
            return NotImplemented
        return (np.array_equal(self.psi_real, other.psi_real)
                and np.array_equal(self.psi_imag, other.psi_imag))

    __hash__ = None


def pairing_operator(n_in: int, pairs: Sequence[tuple[int, int]]) -> TightFrameOperator:
    """Operator with ``psi_n = delta_{k'} + i delta_{k''}`` for each pair.

    Pairs use 0-based indices and must form a perfect matching of
    ``range(n_in)``.
    """
    if n_in <= 0 or n_in % 2:
        raise InvalidPartitionError(f"pairing needs a positive even dimension, got {n_in}")
    seen = set()
    for p in pairs:
        if len(p) != 2:
            raise InvalidPartitionError(f"pair {p!r} does not have two entries")
        k1, k2 = int(p[0]), int(p[1])
        if k1 == k2:
            raise InvalidPartitionError(f"degenerate pair ({k1}, {k2})")
        for k in (k1, k2):
            if not 0 <= k < n_in:
                raise InvalidPartitionError(f"index {k} outside 0..{n_in - 1}")
            if k in seen:
                raise InvalidPartitionError(f"index {k} appears in more than one pair")
            seen.add(k)
    if len(seen) != n_in:
        raise InvalidPartitionError(f"pairs cover {len(seen)} of {n_in} indices")
    n_out = n_in // 2
    re = np.zeros((n_out, n_in))
    im = np.zeros((n_out, n_in))
    for n, (k1, k2) in enumerate(pairs):
        re[n, int(k1)] = 1.0
        im[n, int(k2)] = 1.0
    return TightFrameOperator(re, im)


def contiguous_pairing(n_in: int) -> TightFrameOperator:
    """Pairing operator on ``(0, 1), (2, 3), ...``."""
    return pairing_operator(n_in, [(k, k + 1) for k in range(0, n_in, 2)])


def orthonormalize_columns(M: np.ndarray) -> np.ndarray:
    """Gram-Schmidt of the columns (QR with a positive-diagonal convention)."""
    Q, R = np.linalg.qr(M)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def random_tight_frame(n_in: int, n_out: int, seed: int) -> TightFrameOperator:
    """Seeded random isometry: Gaussian ``(2 n_out, n_in)`` matrix, orthonormalized."""
    if n_in <= 0 or n_out <= 0:
        raise DimensionError(f"dimensions must be positive, got n_in={n_in}, n_out={n_out}")
    if 2 * n_out < n_in:
        raise DimensionError(f"2*n_out={2 * n_out} < n_in={n_in}")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((2 * n_out, n_in))
    return TightFrameOperator.from_stacked(orthonormalize_columns(G))


def validate(op: TightFrameOperator, tol: float = DEFAULT_TOL) -> bool:
    return op.frame_residual() <= tol


def _check_input(op: TightFrameOperator, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != op.n_in:
        raise DimensionError(f"expected trailing dimension {op.n_in}, got shape {x.shape}")
    return x


def apply_complex(op: TightFrameOperator, x) -> tuple[np.ndarray, np.ndarray]:
    """Real and imaginary parts of ``W x``; ``x`` may carry leading batch axes."""
    x = _check_input(op, x)
    return x @ op.psi_real.T, x @ op.psi_imag.T


def apply_modulus(op: TightFrameOperator, x) -> np.ndarray:
    """``|W x|`` coordinate-wise."""
    re, im = apply_complex(op, x)
    return np.hypot(re, im)
