"""Gradient boosting for binary labels with logistic loss.

Stage 0 is the log-odds of the training class balance. Each round fits a
regression tree to the residuals y - p and takes a Newton step in each
leaf: sum(residuals) / sum(p * (1 - p)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import Hyperparams, check_training_inputs, sigmoid
from .tree import RegressionTree, fit_regression_tree


@dataclass(frozen=True)
class GbmModel:
    init_logit: float
    learning_rate: float
    trees: tuple[RegressionTree, ...]

    kind = "gbm"

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        score = np.full(X.shape[0], self.init_logit)
        for tree in self.trees:
            score += self.learning_rate * tree.predict(X)
        return score

    def proba(self, X: np.ndarray) -> np.ndarray:
        p1 = sigmoid(self.decision(X))
        return np.column_stack([1.0 - p1, p1])


def train_gbm(X, y, hp: Hyperparams) -> GbmModel:
    X, y = check_training_inputs(X, y)
    p = hp.gbm
    yf = y.astype(np.float64)

    p1 = float(np.mean(yf))
    init_logit = math.log(p1 / (1.0 - p1))
    score = np.full(X.shape[0], init_logit)

    trees = []
    for _ in range(p.n_rounds):
        prob = sigmoid(score)
        residual = yf - prob
        tree = fit_regression_tree(
            X,
            residual,
            p.max_depth,
            leaf_numerator=residual,
            leaf_denominator=prob * (1.0 - prob),
        )
        trees.append(tree)
        score += p.learning_rate * tree.predict(X)
    return GbmModel(init_logit=init_logit, learning_rate=p.learning_rate, trees=tuple(trees))
