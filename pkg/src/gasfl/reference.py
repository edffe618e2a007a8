"""Straight-line reference implementations used to cross-check the fast paths.

Everything here is written with plain loops and sorting, deliberately not
sharing code with the production rules, so the two routes can disagree when
one of them is wrong. The oracle CLI command and the test suite both consume
these.
"""

from __future__ import annotations

import math

import numpy as np


def median_reference(points: np.ndarray) -> np.ndarray:
    n, d = points.shape
    out = np.zeros(d)
    for j in range(d):
        col = sorted(points[i][j] for i in range(n))
        mid = n // 2
        out[j] = col[mid] if n % 2 else (col[mid - 1] + col[mid]) / 2.0
    return out


def trimmed_mean_reference(points: np.ndarray, f: int) -> np.ndarray:
    n, d = points.shape
    out = np.zeros(d)
    for j in range(d):
        col = sorted(points[i][j] for i in range(n))
        kept = col[f : n - f]
        out[j] = sum(kept) / len(kept)
    return out


def krum_scores_reference(points: np.ndarray, f: int) -> np.ndarray:
    n = points.shape[0]
    scores = np.zeros(n)
    for i in range(n):
        dists = []
        for j in range(n):
            if j == i:
                continue
            dists.append(sum((points[i][k] - points[j][k]) ** 2 for k in range(points.shape[1])))
        dists.sort()
        scores[i] = sum(dists[: n - f - 2])
    return scores


def multi_krum_reference(points: np.ndarray, f: int) -> np.ndarray:
    n = points.shape[0]
    scores = krum_scores_reference(points, f)
    order = sorted(range(n), key=lambda i: (scores[i], i))
    chosen = sorted(order[: n - f])
    return points[chosen].mean(axis=0)


def bulyan_selection_reference(points: np.ndarray, f: int) -> list[int]:
    """First stage: repeated Krum picks on a shrinking pool."""
    n = points.shape[0]
    pool = list(range(n))
    chosen: list[int] = []
    for _ in range(n - 2 * f):
        best, best_score = None, None
        for i in pool:
            dists = []
            for j in pool:
                if j == i:
                    continue
                dists.append(sum((points[i][k] - points[j][k]) ** 2 for k in range(points.shape[1])))
            dists.sort()
            k_near = max(0, len(pool) - f - 2)
            score = sum(dists[:k_near])
            if best_score is None or score < best_score:
                best, best_score = i, score
        chosen.append(best)
        pool.remove(best)
    return sorted(chosen)


def bulyan_reference(points: np.ndarray, f: int) -> np.ndarray:
    sel = points[bulyan_selection_reference(points, f)]
    theta, d = sel.shape
    beta = theta - 2 * f
    out = np.zeros(d)
    for j in range(d):
        col = sorted(sel[i][j] for i in range(theta))
        mid = theta // 2
        med = col[mid] if theta % 2 else (col[mid - 1] + col[mid]) / 2.0
        # beta values nearest the median; distance ties prefer the lower value
        ranked = sorted(col, key=lambda v: (abs(v - med), v))
        out[j] = sum(ranked[:beta]) / beta
    return out


def geometric_median_objective(z: np.ndarray, points: np.ndarray) -> float:
    return float(sum(math.sqrt(float(((z - p) ** 2).sum())) for p in points))


def top_direction_reference(centered: np.ndarray) -> np.ndarray:
    """Top right singular direction via a dense symmetric eigensolver."""
    cov = centered.T @ centered
    vals, vecs = np.linalg.eigh(cov)
    return vecs[:, -1]


def bucketed_means_reference(points: np.ndarray, s: int, permutation: np.ndarray) -> np.ndarray:
    """Permute, chunk into ceil(n/s) consecutive buckets, average each."""
    n = points.shape[0]
    n_buckets = math.ceil(n / s)
    base, extra = divmod(n, n_buckets)
    means, start = [], 0
    for b in range(n_buckets):
        size = base + (1 if b < extra else 0)
        idx = permutation[start : start + size]
        means.append(points[idx].mean(axis=0))
        start += size
    return np.stack(means)


__all__ = [
    "median_reference", "trimmed_mean_reference", "krum_scores_reference",
    "multi_krum_reference", "bulyan_selection_reference", "bulyan_reference",
    "geometric_median_objective", "top_direction_reference", "bucketed_means_reference",
]
