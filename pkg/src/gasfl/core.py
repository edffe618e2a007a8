"""Gradient vectors, random index partitions, and derived random streams.

Gradients are plain 1-D float64 numpy arrays throughout the package; the
helpers here validate shapes and finiteness at the boundaries where it
matters. Randomness is never global: every consumer receives a SeedSpec and
derives labeled child streams from it.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedSpec:
    """A master seed plus a derivation path of (label, index) pairs.

    Equal (master_seed, path) pairs produce identical streams; distinct
    paths produce statistically independent streams. Children are derived
    with :meth:`child`, so parallel workers can share a master seed without
    sharing mutable RNG state.
    """

    master_seed: int
    path: tuple[tuple[str, int], ...] = ()

    def child(self, label: str, index: int = 0) -> "SeedSpec":
        return SeedSpec(self.master_seed, self.path + ((label, int(index)),))

    def _entropy(self) -> list[int]:
        words = [self.master_seed & _MASK64]
        for label, index in self.path:
            words.append(zlib.crc32(label.encode("utf-8")))
            words.append(index & _MASK64)
        return words

    def generator(self) -> np.random.Generator:
        """Fresh PCG64 generator for this exact derivation path."""
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self._entropy())))


@dataclass(frozen=True)
class IndexPartition:
    """Disjoint cover of {0..d-1} by p index sets, each sorted ascending."""

    subsets: tuple[np.ndarray, ...]
    d: int
    p: int

    def __post_init__(self):
        if len(self.subsets) != self.p:
            raise ValueError(f"partition has {len(self.subsets)} subsets, expected p={self.p}")
        lo, hi = self.d // self.p, -(-self.d // self.p)
        seen = np.concatenate([np.asarray(s) for s in self.subsets]) if self.p else np.array([])
        if len(seen) != self.d or len(np.unique(seen)) != self.d or seen.min() < 0 or seen.max() >= self.d:
            raise ValueError("subsets are not a disjoint cover of {0..d-1}")
        for s in self.subsets:
            if not lo <= len(s) <= hi:
                raise ValueError(f"subset size {len(s)} outside [{lo}, {hi}]")


def as_gradient(values) -> np.ndarray:
    """Coerce to a 1-D float64 array. Shape errors raise ValueError."""
    g = np.asarray(values, dtype=np.float64)
    if g.ndim != 1:
        raise ValueError(f"gradient must be 1-D, got shape {g.shape}")
    return g


def as_gradient_matrix(gradients) -> np.ndarray:
    """Stack a nonempty sequence of equal-length gradients into an (n, d) matrix."""
    if isinstance(gradients, np.ndarray) and gradients.ndim == 2:
        return np.asarray(gradients, dtype=np.float64)
    rows = [as_gradient(g) for g in gradients]
    if not rows:
        raise ValueError("empty gradient list")
    d = rows[0].shape[0]
    for i, r in enumerate(rows):
        if r.shape[0] != d:
            raise ValueError(f"dimension mismatch: gradient 0 has d={d}, gradient {i} has d={r.shape[0]}")
    return np.stack(rows)


def check_server_ingress(matrix: np.ndarray) -> None:
    """Reject client uploads containing NaN (or infinite) entries."""
    if np.isnan(matrix).any():
        bad = int(np.argwhere(np.isnan(matrix).any(axis=1))[0, 0])
        raise ValueError(f"gradient from client {bad} contains NaN entries")
    if np.isinf(matrix).any():
        bad = int(np.argwhere(np.isinf(matrix).any(axis=1))[0, 0])
        raise ValueError(f"gradient from client {bad} contains infinite entries")


def make_partition(d: int, p: int, seed: SeedSpec) -> IndexPartition:
    """Uniformly random partition of {0..d-1} into p sorted index sets.

    The indices are shuffled with the seeded stream and chunked into p
    contiguous blocks; the first (d mod p) blocks get ceil(d/p) indices and
    the rest floor(d/p). p > d is clamped to p = d.
    """
    if d <= 0:
        raise ValueError("empty dimension")
    if p <= 0:
        raise ValueError(f"group count must be positive, got p={p}")
    p = min(p, d)
    order = np.arange(d)
    seed.generator().shuffle(order)
    subsets = tuple(np.sort(chunk) for chunk in np.array_split(order, p))
    return IndexPartition(subsets=subsets, d=d, p=p)


def extract_subvector(g: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Sub-vector of g at the given indices, in ascending index order."""
    g = as_gradient(g)
    idx = np.asarray(indices)
    if idx.size and (idx.min() < 0 or idx.max() >= g.shape[0]):
        raise ValueError(f"index out of range for dimension {g.shape[0]}")
    return g[np.sort(idx)]


def mean(gradients: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Coordinate-wise arithmetic mean of a nonempty list of gradients."""
    return as_gradient_matrix(gradients).mean(axis=0)


def l2_norm(g: np.ndarray) -> float:
    return float(np.linalg.norm(as_gradient(g)))
