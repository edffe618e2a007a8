"""Differentiable classifiers over a single flat parameter vector.

The default model is a softmax linear classifier (weights then biases in the
flat layout, d = C*m + C). Setting `hidden` switches to a one-hidden-layer
tanh network with layout [W1, b1, W2, b2]. Loss is mean cross-entropy;
gradients are analytic and checked against finite differences in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SeedSpec


@dataclass(frozen=True)
class Model:
    n_classes: int
    n_features: int
    hidden: int | None = None

    @property
    def dim(self) -> int:
        c, m = self.n_classes, self.n_features
        if self.hidden is None:
            return c * m + c
        h = self.hidden
        return h * m + h + c * h + c

    def init_params(self, seed: SeedSpec, scale: float = 0.3) -> np.ndarray:
        return scale * seed.child("init").generator().standard_normal(self.dim)

    def _unpack(self, w: np.ndarray):
        c, m = self.n_classes, self.n_features
        if self.hidden is None:
            return w[: c * m].reshape(c, m), w[c * m :]
        h = self.hidden
        parts = np.split(w, np.cumsum([h * m, h, c * h]))
        return parts[0].reshape(h, m), parts[1], parts[2].reshape(c, h), parts[3]

    def logits(self, w: np.ndarray, features: np.ndarray) -> np.ndarray:
        if self.hidden is None:
            weights, bias = self._unpack(w)
            return features @ weights.T + bias
        w1, b1, w2, b2 = self._unpack(w)
        hidden = np.tanh(features @ w1.T + b1)
        return hidden @ w2.T + b2

    def loss(self, w: np.ndarray, features: np.ndarray, labels: np.ndarray) -> float:
        z = self.logits(w, features)
        z = z - z.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(z).sum(axis=1))
        return float(np.mean(log_norm - z[np.arange(len(labels)), labels]))

    def grad(self, w: np.ndarray, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
        """Analytic gradient of the mean cross-entropy loss at w."""
        n = features.shape[0]
        if self.hidden is None:
            weights, _ = self._unpack(w)
            probs = _softmax(features @ weights.T + _bias_of(self, w))
            probs[np.arange(n), labels] -= 1.0
            probs /= n
            return np.concatenate([(probs.T @ features).ravel(), probs.sum(axis=0)])
        w1, b1, w2, b2 = self._unpack(w)
        hidden = np.tanh(features @ w1.T + b1)
        probs = _softmax(hidden @ w2.T + b2)
        probs[np.arange(n), labels] -= 1.0
        probs /= n
        d_hidden = (probs @ w2) * (1.0 - hidden * hidden)
        return np.concatenate([
            (d_hidden.T @ features).ravel(), d_hidden.sum(axis=0),
            (probs.T @ hidden).ravel(), probs.sum(axis=0),
        ])

    def predict(self, w: np.ndarray, features: np.ndarray) -> np.ndarray:
        return self.logits(w, features).argmax(axis=1)

    def accuracy(self, w: np.ndarray, features: np.ndarray, labels: np.ndarray) -> float:
        return float(np.mean(self.predict(w, features) == labels))


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _bias_of(model: Model, w: np.ndarray) -> np.ndarray:
    return w[model.n_classes * model.n_features :]


def finite_difference_grad(model: Model, w: np.ndarray, features: np.ndarray,
                           labels: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient, the oracle for Model.grad."""
    g = np.zeros_like(w)
    probe = w.copy()
    for j in range(w.size):
        probe[j] = w[j] + step
        hi = model.loss(probe, features, labels)
        probe[j] = w[j] - step
        lo = model.loss(probe, features, labels)
        probe[j] = w[j]
        g[j] = (hi - lo) / (2.0 * step)
    return g


__all__ = ["Model", "finite_difference_grad"]
