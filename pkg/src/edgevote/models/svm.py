"""Linear SVM: L2-regularized hinge loss trained by subgradient descent,
with a logistic calibration layer fit on held-out margins.

The calibration maps the raw margin m to sigmoid(a * m + b). When no
usable validation data is available the map falls back to the identity
coefficients (a=1, b=0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import Hyperparams, ModelError, check_training_inputs, sigmoid
from .logreg import descend, train_logreg


@dataclass(frozen=True)
class SvmModel:
    weights: tuple[float, ...]
    bias: float
    calib_a: float = 1.0
    calib_b: float = 0.0

    kind = "svm"

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return X @ np.asarray(self.weights) + self.bias

    def proba(self, X: np.ndarray) -> np.ndarray:
        p1 = sigmoid(self.calib_a * self.decision(X) + self.calib_b)
        return np.column_stack([1.0 - p1, p1])


def hinge_loss(w: np.ndarray, b: float, X: np.ndarray, s: np.ndarray, l2: float) -> float:
    """Mean hinge loss over signed labels s in {-1, +1}, plus L2 penalty."""
    margins = 1.0 - s * (X @ w + b)
    return float(np.mean(np.maximum(margins, 0.0))) + 0.5 * l2 * float(w @ w)

def hinge_subgradient(
    w: np.ndarray, b: float, X: np.ndarray, s: np.ndarray, l2: float
) -> tuple[np.ndarray, float]:
    violating = (1.0 - s * (X @ w + b)) > 0.0
    coeff = np.where(violating, -s, 0.0)
    grad_w = X.T @ coeff / len(s) + l2 * w
    grad_b = float(np.mean(coeff))
    return grad_w, grad_b


def train_svm(X, y, hp: Hyperparams, X_val=None, y_val=None) -> SvmModel:
    """Fit the hinge objective, then calibrate on validation margins."""
    X, y = check_training_inputs(X, y)
    p = hp.svm
    s = 2.0 * y - 1.0
    w = np.zeros(X.shape[1])
    b = 0.0
    w, b, _ = descend(
        lambda w_, b_: hinge_loss(w_, b_, X, s, p.l2),
        lambda w_, b_: hinge_subgradient(w_, b_, X, s, p.l2),
        w,
        b,
        p.learning_rate,
        p.epochs,
    )
    model = SvmModel(weights=tuple(float(v) for v in w), bias=float(b))

    if X_val is None or y_val is None:
        return model
    try:
        margins = model.decision(X_val)
        calib = train_logreg(margins.reshape(-1, 1), np.asarray(y_val), hp)
    except ModelError:
        return model
    return SvmModel(
        weights=model.weights,
        bias=model.bias,
        calib_a=calib.weights[0],
        calib_b=calib.bias,
    )
