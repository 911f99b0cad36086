"""Linear discriminant classifier with identity-target covariance shrinkage.

The pooled within-class covariance S (maximum-likelihood, divided by the
total training count) is blended toward a scaled identity:

    S_r = (1 - gamma) * S + gamma * (trace(S) / d) * I

and class k is scored by the usual linear discriminant

    delta_k(x) = x . w_k - 0.5 * mu_k . w_k + log pi_k,   w_k = S_r^{-1} mu_k

with empirical means mu_k and priors pi_k. The linear systems are solved, not
inverted, and prediction ties resolve to the smallest class id so results are
bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularCovarianceError


@dataclass(frozen=True)
class ShrinkageLdaModel:
    class_ids: np.ndarray   # (K,) sorted ascending
    coef: np.ndarray        # (K, d), row k = S_r^{-1} mu_k
    intercept: np.ndarray   # (K,)
    gamma: float

    def decision_scores(self, features: np.ndarray) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        return x @ self.coef.T + self.intercept

    def predict(self, features: np.ndarray) -> np.ndarray:
        scores = self.decision_scores(features)
        # argmax returns the first maximum, i.e. the smallest class id on ties
        return self.class_ids[np.argmax(scores, axis=1)]


def fit_shrinkage_lda(features, labels, gamma: float) -> ShrinkageLdaModel:
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError("features must be a non-empty 2-D matrix")
    if not (0.0 <= gamma <= 1.0):
        raise ValueError("gamma must lie in [0, 1]")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("training split must contain at least two classes")
    n, d = x.shape
    means = np.empty((len(classes), d))
    priors = np.empty(len(classes))
    scatter = np.zeros((d, d))
    for k, cls in enumerate(classes):
        block = x[y == cls]
        means[k] = block.mean(axis=0)
        priors[k] = len(block) / n
        centered = block - means[k]
        scatter += centered.T @ centered
    pooled = scatter / n
    target = np.trace(pooled) / d
    if target <= 0.0:
        # all features constant: keep the regularizer positive so gamma > 0
        # still yields a solvable (nearest-mean) system
        target = np.finfo(np.float64).tiny
    reg = (1.0 - gamma) * pooled + gamma * target * np.eye(d)
    try:
        coef = np.linalg.solve(reg, means.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularCovarianceError(
            f"regularized covariance is singular at gamma={gamma}"
        ) from exc
    intercept = -0.5 * np.einsum("kd,kd->k", means, coef) + np.log(priors)
    return ShrinkageLdaModel(class_ids=classes, coef=coef, intercept=intercept, gamma=float(gamma))
