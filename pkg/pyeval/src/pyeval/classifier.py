"""Lightweight deterministic classifier for the reference plugin.

Per-channel log-variance features feed a softmax regression trained by
full-batch gradient descent from a zero initialization, so a fixed
(dataset, channels, seed, config) always yields the same accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOG_EPS = 1e-12


@dataclass(frozen=True)
class PluginConfig:
    classifier: str = "logistic_regression"
    test_fraction: float = 0.25
    max_iterations: int = 300
    learning_rate: float = 0.5
    l2: float = 1e-3

    def __post_init__(self):
        if self.classifier != "logistic_regression":
            raise ValueError(
                f"unsupported classifier {self.classifier!r} (this reference plugin "
                "ships the logistic_regression path only)"
            )
        if not (0.0 < self.test_fraction < 1.0):
            raise ValueError("test_fraction must lie strictly between 0 and 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def log_variance_features(samples: np.ndarray) -> np.ndarray:
    return np.log(LOG_EPS + samples.astype(np.float64).var(axis=2))


def stratified_split(labels: np.ndarray, test_fraction: float,
                     seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split; every class keeps >=1 trial on each side."""
    rng = np.random.default_rng(seed)
    train, test = [], []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if len(members) < 2:
            raise ValueError(f"class {cls} needs at least 2 trials to split")
        order = members[rng.permutation(len(members))]
        n_test = int(round(len(members) * test_fraction))
        n_test = min(max(n_test, 1), len(members) - 1)
        test.extend(order[:n_test])
        train.extend(order[n_test:])
    return np.sort(np.asarray(train)), np.sort(np.asarray(test))


class SoftmaxRegression:
    def __init__(self, cfg: PluginConfig):
        self.cfg = cfg
        self.classes: np.ndarray | None = None
        self.weights: np.ndarray | None = None  # (d+1, K) incl. bias row
        self._mean: np.ndarray | None = None
        self._std: np.ndarray | None = None

    def _design(self, features: np.ndarray) -> np.ndarray:
        z = (features - self._mean) / self._std
        return np.hstack([z, np.ones((len(z), 1))])

    def fit(self, features: np.ndarray, labels: np.ndarray) -> "SoftmaxRegression":
        self.classes = np.unique(labels)
        if len(self.classes) < 2:
            raise ValueError("need at least two classes")
        self._mean = features.mean(axis=0)
        std = features.std(axis=0)
        std[std == 0.0] = 1.0
        self._std = std
        x = self._design(features)
        y = np.searchsorted(self.classes, labels)
        onehot = np.eye(len(self.classes))[y]
        w = np.zeros((x.shape[1], len(self.classes)))
        n = len(x)
        for _ in range(self.cfg.max_iterations):
            logits = x @ w
            logits -= logits.max(axis=1, keepdims=True)
            p = np.exp(logits)
            p /= p.sum(axis=1, keepdims=True)
            grad = x.T @ (p - onehot) / n + self.cfg.l2 * w
            w -= self.cfg.learning_rate * grad
        self.weights = w
        return self

    def predict(self, features: np.ndarray) -> np.ndarray:
        scores = self._design(features) @ self.weights
        return self.classes[np.argmax(scores, axis=1)]


def held_out_accuracy(samples: np.ndarray, labels: np.ndarray, channels: list[int],
                      seed: int, cfg: PluginConfig) -> float:
    """Restrict to the channels, split, train, score the held-out fraction."""
    c = samples.shape[1]
    if not channels:
        raise ValueError("channel list is empty")
    cleaned = sorted(set(int(ch) for ch in channels))
    for ch in cleaned:
        if ch < 0 or ch >= c:
            raise ValueError(f"channel {ch} out of range for {c} channels")
    features = log_variance_features(samples[:, cleaned, :])
    train, test = stratified_split(labels, cfg.test_fraction, seed)
    model = SoftmaxRegression(cfg).fit(features[train], labels[train])
    predictions = model.predict(features[test])
    return float((predictions == labels[test]).mean())
