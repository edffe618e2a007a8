"""Synthetic classification data and non-IID client partitioning.

The dataset is a Gaussian-blob classification task sized to run in seconds:
class centers sit on a sphere, samples add isotropic noise. Client shards
come from a per-class Dirichlet draw, the standard recipe for dialing data
heterogeneity with a single concentration parameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SeedSpec


@dataclass(frozen=True)
class SyntheticDataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    r_sep: float
    noise: float

    def __post_init__(self):
        if self.labels.min(initial=0) < 0 or self.labels.max(initial=0) >= self.n_classes:
            raise ValueError("labels out of range")

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class DirichletPartition:
    """Per-client sample index lists; disjoint and jointly covering the data."""

    client_indices: tuple[np.ndarray, ...]
    beta: float


@dataclass(frozen=True)
class SyntheticGradientModel:
    """Direct honest-gradient generator for training-free aggregation studies.

    Client i's mean gradient is a shared base direction plus a fixed
    per-client shift of magnitude kappa (the heterogeneity); each round adds
    isotropic noise with total magnitude sigma (the stochastic-gradient
    proxy).
    """

    dim: int
    n_honest: int
    kappa: float
    sigma: float
    seed: SeedSpec
    base_norm: float = 1.0

    def client_means(self) -> np.ndarray:
        rng = self.seed.child("client_means").generator()
        base = rng.standard_normal(self.dim)
        base *= self.base_norm / max(np.linalg.norm(base), 1e-300)
        shifts = rng.standard_normal((self.n_honest, self.dim))
        shifts *= self.kappa / np.maximum(np.linalg.norm(shifts, axis=1, keepdims=True), 1e-300)
        return base + shifts

    def sample_round(self, round: int) -> np.ndarray:
        """(n_honest, dim) honest gradients for one round."""
        rng = self.seed.child("round_noise", round).generator()
        noise = rng.standard_normal((self.n_honest, self.dim)) * (self.sigma / np.sqrt(self.dim))
        return self.client_means() + noise


def generate_synthetic(n_classes: int, dim: int, per_class: int, r_sep: float,
                       noise: float, seed: SeedSpec,
                       test_per_class: int | None = None) -> tuple[SyntheticDataset, SyntheticDataset]:
    """Train and test splits drawn independently from one blob model.

    Class centers are random unit directions scaled to r_sep; every sample
    is its class center plus N(0, noise^2 I) jitter.
    """
    if n_classes < 2:
        raise ValueError(f"need at least 2 classes, got {n_classes}")
    if dim < 1:
        raise ValueError(f"feature dimension must be >= 1, got {dim}")
    if test_per_class is None:
        test_per_class = per_class
    rng = seed.child("centers").generator()
    centers = rng.standard_normal((n_classes, dim))
    centers *= r_sep / np.maximum(np.linalg.norm(centers, axis=1, keepdims=True), 1e-300)

    def draw(count: int, split: str) -> SyntheticDataset:
        srng = seed.child(split).generator()
        labels = np.repeat(np.arange(n_classes), count)
        features = centers[labels] + noise * srng.standard_normal((labels.size, dim))
        return SyntheticDataset(features=features, labels=labels, n_classes=n_classes,
                                r_sep=r_sep, noise=noise)

    return draw(per_class, "train"), draw(test_per_class, "test")


def dirichlet_partition(labels: np.ndarray, n_clients: int, beta: float,
                        seed: SeedSpec) -> DirichletPartition:
    """Split sample indices across clients with per-class Dirichlet proportions.

    For each class a proportion vector is drawn from Dir(beta); the class's
    shuffled indices are divided by largest-remainder rounding, so every
    sample lands on exactly one client.
    """
    if n_clients < 1:
        raise ValueError(f"need at least 1 client, got {n_clients}")
    if beta <= 0:
        raise ValueError(f"concentration must be positive, got beta={beta}")
    labels = np.asarray(labels)
    shards: list[list[np.ndarray]] = [[] for _ in range(n_clients)]
    for y in np.unique(labels):
        class_idx = np.flatnonzero(labels == y)
        rng = seed.child("class", int(y)).generator()
        rng.shuffle(class_idx)
        props = rng.dirichlet(np.full(n_clients, beta))
        counts = _largest_remainder(props, class_idx.size)
        start = 0
        for i, cnt in enumerate(counts):
            shards[i].append(class_idx[start : start + cnt])
            start += cnt
    client_indices = tuple(np.sort(np.concatenate(parts)) if parts else np.array([], dtype=np.int64)
                           for parts in shards)
    return DirichletPartition(client_indices=client_indices, beta=beta)


def _largest_remainder(proportions: np.ndarray, total: int) -> np.ndarray:
    """Integer counts summing to `total`, proportional to `proportions`."""
    raw = proportions * total
    counts = np.floor(raw).astype(np.int64)
    short = total - int(counts.sum())
    if short:
        # hand the leftovers to the largest fractional parts, lower index first
        order = np.lexsort((np.arange(len(raw)), -(raw - counts)))
        counts[order[:short]] += 1
    return counts


__all__ = ["SyntheticDataset", "DirichletPartition", "SyntheticGradientModel",
           "generate_synthetic", "dirichlet_partition"]
