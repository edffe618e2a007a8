"""Omniscient model-poisoning attacks.

Each attack sees the full matrix of honest gradients for the round and emits
the f Byzantine uploads. The statistics-based attacks (lie, min_max, min_sum,
ipm) collude: all f uploads are identical. bit_flip and label_flip act on the
Byzantine clients' own training instead; label flipping happens inside local
training, so its crafted vectors pass through unchanged here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import SeedSpec, as_gradient_matrix

KINDS = ("none", "bit_flip", "label_flip", "lie", "min_max", "min_sum", "ipm")

_GAMMA_CAP = 1e12


@dataclass(frozen=True)
class AttackSpec:
    """Tagged choice of attack plus its hyperparameters.

    `z` scales the lie offset, `gamma_init`/`tau` drive the min_max/min_sum
    step search, and `epsilon` scales the inner-product manipulation.
    """

    kind: str
    z: float = 1.5
    gamma_init: float = 10.0
    tau: float = 1e-5
    epsilon: float = 0.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}, expected one of {KINDS}")
        if self.tau <= 0 or self.gamma_init <= 0:
            raise ValueError("gamma_init and tau must be positive")


@dataclass(frozen=True)
class AttackContext:
    """What the attacker knows in one round.

    honest_gradients is the (n_honest, d) matrix of true honest uploads;
    byz_true_gradients holds the Byzantine clients' own honestly computed
    gradients (needed by none / bit_flip / label_flip), or None.
    """

    honest_gradients: np.ndarray
    byz_count: int
    byz_true_gradients: np.ndarray | None = None


def lie(honest, z: float) -> np.ndarray:
    """Hide just outside the crowd: mean + z * population std, per coordinate."""
    x = _require_honest(honest, 2, "lie")
    return x.mean(axis=0) + z * x.std(axis=0)


def _largest_feasible_gamma(feasible: Callable[[float], bool], gamma_init: float, tau: float) -> float:
    """Largest gamma accepted by `feasible`: doubling bracket, then bisection to width tau."""
    lo, hi = 0.0, gamma_init
    while feasible(hi):
        lo, hi = hi, 2.0 * hi
        if hi > _GAMMA_CAP:
            return lo
    while hi - lo > tau:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def min_max(honest, gamma_init: float = 10.0, tau: float = 1e-5) -> np.ndarray:
    """Push along -std as far as the largest honest pairwise distance allows."""
    x = _require_honest(honest, 2, "min_max")
    mu, delta = x.mean(axis=0), x.std(axis=0)
    if not delta.any():
        return mu
    bound = _max_pairwise_distance(x)

    def feasible(gamma: float) -> bool:
        return float(np.linalg.norm(x - (mu - gamma * delta), axis=1).max()) <= bound

    return mu - _largest_feasible_gamma(feasible, gamma_init, tau) * delta


def min_sum(honest, gamma_init: float = 10.0, tau: float = 1e-5) -> np.ndarray:
    """Like min_max, but bounded by the worst honest sum of squared distances."""
    x = _require_honest(honest, 2, "min_sum")
    mu, delta = x.mean(axis=0), x.std(axis=0)
    if not delta.any():
        return mu
    diff = x[:, None, :] - x[None, :, :]
    bound = float(np.einsum("ijk,ijk->ij", diff, diff).sum(axis=1).max())

    def feasible(gamma: float) -> bool:
        point = mu - gamma * delta
        return float(((x - point) ** 2).sum()) <= bound

    return mu - _largest_feasible_gamma(feasible, gamma_init, tau) * delta


def ipm(honest, epsilon: float = 0.5) -> np.ndarray:
    """Send the negatively scaled honest mean to flip the update's direction."""
    x = _require_honest(honest, 1, "ipm")
    return -epsilon * x.mean(axis=0)


def bit_flip(byz_true: np.ndarray) -> np.ndarray:
    """Each Byzantine client negates its own honestly computed gradient."""
    return -as_gradient_matrix(byz_true)


def craft(spec: AttackSpec, ctx: AttackContext, seed: SeedSpec | None = None) -> np.ndarray:
    """The f Byzantine uploads for this round, as an (f, d) matrix.

    Colluding attacks return f copies of one vector. `seed` is part of the
    contract for future randomized attacks; none of the current kinds use it.
    """
    f = ctx.byz_count
    if f < 0:
        raise ValueError(f"Byzantine count must be >= 0, got {f}")
    if f == 0:
        d = as_gradient_matrix(ctx.honest_gradients).shape[1]
        return np.zeros((0, d))
    if spec.kind in ("none", "label_flip", "bit_flip"):
        own = ctx.byz_true_gradients
        if own is None:
            raise ValueError(f"{spec.kind} needs the Byzantine clients' own gradients")
        own = as_gradient_matrix(own)
        if own.shape[0] != f:
            raise ValueError(f"expected {f} Byzantine gradients, got {own.shape[0]}")
        return -own if spec.kind == "bit_flip" else own.copy()

    if spec.kind == "lie":
        vec = lie(ctx.honest_gradients, spec.z)
    elif spec.kind == "min_max":
        vec = min_max(ctx.honest_gradients, spec.gamma_init, spec.tau)
    elif spec.kind == "min_sum":
        vec = min_sum(ctx.honest_gradients, spec.gamma_init, spec.tau)
    elif spec.kind == "ipm":
        vec = ipm(ctx.honest_gradients, spec.epsilon)
    else:
        raise ValueError(f"unknown attack kind {spec.kind!r}")
    return np.tile(vec, (f, 1))


def _require_honest(honest, minimum: int, name: str) -> np.ndarray:
    x = as_gradient_matrix(honest)
    if x.shape[0] < minimum:
        raise ValueError(f"{name} needs at least {minimum} honest gradients, got {x.shape[0]}")
    return x


def _max_pairwise_distance(x: np.ndarray) -> float:
    diff = x[:, None, :] - x[None, :, :]
    return float(np.sqrt(np.einsum("ijk,ijk->ij", diff, diff).max()))


__all__ = ["AttackSpec", "AttackContext", "KINDS", "craft", "lie", "min_max", "min_sum", "ipm", "bit_flip"]
