"""Logistic regression trained by full-batch gradient descent.

The step size backtracks (halves) whenever a step would increase the
objective, so the loss trace is non-increasing by construction. The bias
term is excluded from the L2 penalty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import Hyperparams, check_training_inputs, sigmoid


@dataclass(frozen=True)
class LogRegModel:
    weights: tuple[float, ...]
    bias: float

    kind = "logreg"

    def decision(self, X: np.ndarray) -> np.ndarray:
        return X @ np.asarray(self.weights) + self.bias

    def proba(self, X: np.ndarray) -> np.ndarray:
        p1 = sigmoid(self.decision(X))
        return np.column_stack([1.0 - p1, p1])


def logistic_loss(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float) -> float:
    z = X @ w + b
    # log(1 + e^z) - y*z == -[y log p + (1-y) log(1-p)], stable for large |z|
    data_term = float(np.mean(np.logaddexp(0.0, z) - y * z))
    return data_term + 0.5 * l2 * float(w @ w)


def logistic_gradient(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float
) -> tuple[np.ndarray, float]:
    n = X.shape[0]
    residual = sigmoid(X @ w + b) - y
    grad_w = X.T @ residual / n + l2 * w
    grad_b = float(np.mean(residual))
    return grad_w, grad_b


def descend(loss_fn, grad_fn, w, b, learning_rate, epochs, max_halvings=40):
    """Shared descent loop: full-batch steps with halving backtracking.

    Accepts a step only if it does not increase the objective; a step that
    cannot improve after max_halvings halvings is skipped. Returns the final
    (w, b) and the per-epoch loss trace (epochs + 1 entries).
    """
    current = loss_fn(w, b)
    trace = [current]
    for _ in range(epochs):
        grad_w, grad_b = grad_fn(w, b)
        step = learning_rate
        for _ in range(max_halvings):
            cand_w = w - step * grad_w
            cand_b = b - step * grad_b
            cand_loss = loss_fn(cand_w, cand_b)
            if cand_loss <= current:
                w, b, current = cand_w, cand_b, cand_loss
                break
            step *= 0.5
        trace.append(current)
    return w, b, trace


def train_logreg(X, y, hp: Hyperparams) -> LogRegModel:
    """Minimize L2-regularized logistic loss from a zero initialization."""
    X, y = check_training_inputs(X, y)
    p = hp.logreg
    w = np.zeros(X.shape[1])
    b = 0.0
    w, b, _ = descend(
        lambda w_, b_: logistic_loss(w_, b_, X, y, p.l2),
        lambda w_, b_: logistic_gradient(w_, b_, X, y, p.l2),
        w,
        b,
        p.learning_rate,
        p.epochs,
    )
    return LogRegModel(weights=tuple(float(v) for v in w), bias=float(b))
