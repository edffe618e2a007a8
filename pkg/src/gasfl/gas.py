"""Split-gradient meta-aggregation.

The defense splits each client gradient into p groups of coordinates, applies
a base robust rule per group, scores every client by its distance to each
group's aggregate, sums the scores across groups, keeps the lowest-scoring
clients, and returns their plain average. Low-dimensional group scoring keeps
colluding outliers visible, while averaging the kept clients preserves all
the honest signal.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np

from .aggregators import AggregatorSpec, aggregate
from .core import IndexPartition, SeedSpec, as_gradient_matrix, make_partition


@dataclass(frozen=True)
class KnownF:
    """Keep n - f clients; the server knows the Byzantine count."""

    f: int

    def __post_init__(self):
        if self.f < 0:
            raise ValueError(f"Byzantine count must be >= 0, got f={self.f}")


@dataclass(frozen=True)
class Ratio:
    """Drop ceil(delta * n) clients per call; f is unknown to the server."""

    delta: float

    def __post_init__(self):
        if not 0.0 <= self.delta < 0.5:
            raise ValueError(f"removal ratio must lie in [0, 0.5), got delta={self.delta}")


Selection = Union[KnownF, Ratio]


@dataclass(frozen=True)
class GasConfig:
    p: int
    base: AggregatorSpec
    selection: Selection
    seed: SeedSpec
    partition_policy: str = "per_round"  # or "fixed"

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"group count must be >= 1, got p={self.p}")
        if self.partition_policy not in ("per_round", "fixed"):
            raise ValueError(f"unknown partition policy {self.partition_policy!r}")


@dataclass(frozen=True)
class ScoreTable:
    """Per-group identification scores (n x p) and their row totals."""

    group_scores: np.ndarray
    totals: np.ndarray


@dataclass(frozen=True)
class SelectionResult:
    selected: np.ndarray
    keep_count: int


def group_scores(sub_vectors, base: AggregatorSpec, f: int,
                 seed: SeedSpec | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Aggregate one group's sub-vectors and score each client against it.

    Returns (aggregate, scores) where scores[i] is the l2 distance from
    client i's sub-vector to the group aggregate.
    """
    sub = as_gradient_matrix(sub_vectors)
    agg = aggregate(base, sub, f, seed=seed)
    return agg, np.linalg.norm(sub - agg, axis=1)


def total_scores(table: ScoreTable) -> np.ndarray:
    """Row sums of the score table, accumulated in ascending group order."""
    return _ascending_row_sums(table.group_scores)


def _ascending_row_sums(scores: np.ndarray) -> np.ndarray:
    totals = np.zeros(scores.shape[0])
    for q in range(scores.shape[1]):
        totals += scores[:, q]
    return totals


def select_clients(totals: np.ndarray, keep_count: int) -> SelectionResult:
    """Indices of the keep_count lowest totals, ties toward the lower index."""
    totals = np.asarray(totals, dtype=np.float64)
    n = totals.shape[0]
    if not 1 <= keep_count <= n:
        raise ValueError(f"keep_count must lie in [1, {n}], got {keep_count}")
    kept = np.sort(np.argsort(totals, kind="stable")[:keep_count])
    return SelectionResult(selected=kept, keep_count=keep_count)


def _resolve_counts(selection: Selection, n: int) -> tuple[int, int]:
    """(keep_count, byzantine count handed to the base rule) for n clients."""
    if isinstance(selection, KnownF):
        if 2 * selection.f >= n:
            raise ValueError(f"Byzantine count must satisfy f < n/2, got n={n}, f={selection.f}")
        return n - selection.f, selection.f
    removed = int(np.ceil(selection.delta * n))
    return n - removed, removed


def gas_aggregate(config: GasConfig, gradients, round: int = 0, n_jobs: int = 1,
                  ) -> tuple[np.ndarray, ScoreTable, SelectionResult, IndexPartition]:
    """Full split/score/select/average pipeline for one communication round.

    The coordinate partition is resampled per round (or held fixed, per
    `config.partition_policy`) from seeds derived off `config.seed`, so the
    call is a pure function of (config, gradients, round). Group scoring may
    run on `n_jobs` threads; results land in preallocated slots and totals
    are summed in ascending group order, so parallel and sequential runs are
    bit-identical.
    """
    x = as_gradient_matrix(gradients)
    n, d = x.shape
    if n < 2:
        raise ValueError(f"need at least 2 clients, got n={n}")
    keep_count, base_f = _resolve_counts(config.selection, n)
    if keep_count < 1:
        raise ValueError(f"selection keeps {keep_count} of {n} clients; nothing to average")

    if config.partition_policy == "per_round":
        part_seed = config.seed.child("partition", round)
    else:
        part_seed = config.seed.child("fixed_partition")
    partition = make_partition(d, min(config.p, d), part_seed)

    scores = np.empty((n, partition.p))
    round_seed = config.seed.child("round", round)

    def _score_group(q: int) -> None:
        _, col = group_scores(x[:, partition.subsets[q]], config.base, base_f,
                              seed=round_seed.child("group", q))
        scores[:, q] = col

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(_score_group, range(partition.p)))
    else:
        for q in range(partition.p):
            _score_group(q)

    table = ScoreTable(group_scores=scores, totals=_ascending_row_sums(scores))
    result = select_clients(table.totals, keep_count)
    return x[result.selected].mean(axis=0), table, result, partition


__all__ = [
    "GasConfig", "KnownF", "Ratio", "ScoreTable", "SelectionResult",
    "group_scores", "total_scores", "select_clients", "gas_aggregate",
]
