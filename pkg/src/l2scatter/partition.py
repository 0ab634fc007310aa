"""Block-averaging projectors over the coordinates of a layer."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, InvalidPartitionError


@dataclass(frozen=True, eq=False)
class BlockPartition:
    """Partition of ``range(n)`` into sorted, non-empty blocks (0-based)."""

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n = int(self.n)
        if n <= 0:
            raise InvalidPartitionError(f"layer dimension must be positive, got {n}")
        blocks = tuple(tuple(sorted(int(k) for k in b)) for b in self.blocks)
        count = np.zeros(n, dtype=int)
        for b in blocks:
            if not b:
                raise InvalidPartitionError("empty block")
            for k in b:
                if not 0 <= k < n:
                    raise InvalidPartitionError(f"index {k} outside 0..{n - 1}")
                count[k] += 1
        if np.any(count != 1):
            bad = int(np.flatnonzero(count != 1)[0])
            raise InvalidPartitionError(
                f"index {bad} appears {count[bad]} times; blocks must cover each index once")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "blocks", blocks)
        perm = np.fromiter((k for b in blocks for k in b), dtype=np.intp, count=n)
        sizes = np.array([len(b) for b in blocks], dtype=np.intp)
        starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.intp)
        object.__setattr__(self, "_perm", perm)
        object.__setattr__(self, "_sizes", sizes)
        object.__setattr__(self, "_starts", starts)

    @classmethod
    def singletons(cls, n: int) -> "BlockPartition":
        return cls(n, tuple((k,) for k in range(n)))

    @classmethod
    def full(cls, n: int) -> "BlockPartition":
        return cls(n, (tuple(range(n)),))

    @classmethod
    def contiguous(cls, n: int, size: int) -> "BlockPartition":
        """Blocks ``[0, size), [size, 2 size), ...``; the last may be shorter."""
        if size <= 0:
            raise InvalidPartitionError(f"block size must be positive, got {size}")
        return cls(n, tuple(tuple(range(s, min(s + size, n))) for s in range(0, n, size)))

    @property
    def max_block_size(self) -> int:
        return int(self._sizes.max())

    def matrix(self) -> np.ndarray:
        """Dense ``n x n`` projector (for tests and small problems)."""
        P = np.zeros((self.n, self.n))
        for b in self.blocks:
            P[np.ix_(b, b)] = 1.0 / len(b)
        return P

    def __eq__(self, other):
        if not isinstance(other, BlockPartition):
            return NotImplemented
        return self.n == other.n and self.blocks == other.blocks

    __hash__ = None


def apply_average(p: BlockPartition, x) -> np.ndarray:
    """Replace every coordinate by the mean of its block (along the last axis)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != p.n:
        raise DimensionError(f"expected trailing dimension {p.n}, got shape {x.shape}")
    xs = x[..., p._perm]
    sums = np.add.reduceat(xs, p._starts, axis=-1)
    lo = np.minimum.reduceat(xs, p._starts, axis=-1)
    hi = np.maximum.reduceat(xs, p._starts, axis=-1)
    # clipping is a no-op in exact arithmetic; it makes constant blocks exact,
    # so the projector is idempotent bit for bit
    means = np.clip(sums / p._sizes, lo, hi)
    out = np.empty_like(xs)
    out[..., p._perm] = np.repeat(means, p._sizes, axis=-1)
    return out


def residual(p: BlockPartition, x) -> np.ndarray:
    """``x - A x``."""
    x = np.asarray(x, dtype=float)
    return x - apply_average(p, x)


def parse_block_spec(token: str, n: int) -> BlockPartition:
    """``singleton``, ``full`` or ``size:k``."""
    token = token.strip()
    if token == "singleton":
        return BlockPartition.singletons(n)
    if token == "full":
        return BlockPartition.full(n)
    if token.startswith("size:"):
        try:
            k = int(token[5:])
        except ValueError:
            raise InvalidPartitionError(f"bad block size in {token!r}") from None
        return BlockPartition.contiguous(n, k)
    raise InvalidPartitionError(f"unknown block spec {token!r}")


def partitions_from_spec(spec: str | Sequence[str] | None, dims: Sequence[int]) -> list[BlockPartition]:
    """Partitions for layers ``0..len(dims)-1``.

    ``None`` gives singletons everywhere except one full block at the last
    layer.  A single token applies to every non-final layer (final stays
    ``full``); otherwise one token per layer is required.
    """
    depth = len(dims) - 1
    if spec is None:
        tokens: list[str] = ["singleton"] * depth + ["full"]
    else:
        if isinstance(spec, str):
            spec = [t for t in spec.split(",") if t.strip()]
        tokens = list(spec)
        if len(tokens) == 1:
            tokens = tokens * depth + ["full"]
        elif len(tokens) != depth + 1:
            raise InvalidPartitionError(
                f"need 1 or {depth + 1} block specs for dims {list(dims)}, got {len(tokens)}")
    return [parse_block_spec(t, n) for t, n in zip(tokens, dims)]


def blocks_one_based(p: BlockPartition) -> list[list[int]]:
    return [[k + 1 for k in b] for b in p.blocks]


def from_one_based(n: int, blocks: Iterable[Iterable[int]]) -> BlockPartition:
    return BlockPartition(n, tuple(tuple(int(k) - 1 for k in b) for b in blocks))
