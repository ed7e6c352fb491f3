"""Five from-scratch binary classifiers plus metrics and model files.

All trainers take a scaled feature matrix, integer labels, and a
Hyperparams bundle; all models expose proba(X) -> (n, 2) probabilities.
"""

from .base import (
    ArityMismatch,
    BadHyperparams,
    DimensionMismatch,
    ForestParams,
    GbmParams,
    Hyperparams,
    LengthMismatch,
    LogRegParams,
    ModelError,
    Prediction,
    SingleClassTraining,
    SvmParams,
    TreeParams,
    prediction_from_probs,
    sigmoid,
)
from .forest import ForestModel, train_forest
from .gbm import GbmModel, train_gbm
from .io import (
    SerializationError,
    dumps_model,
    load_model,
    loads_model,
    model_from_dict,
    model_to_dict,
    save_model,
)
from .logreg import LogRegModel, train_logreg
from .metrics import (
    Confusion,
    EvalReport,
    confusion_counts,
    evaluate,
    rank_auc,
    roc_points,
    trapezoid_auc,
)
from .svm import SvmModel, train_svm
from .tree import TreeModel, train_tree

import numpy as np

TRAINED_MODEL_TYPES = (LogRegModel, TreeModel, ForestModel, GbmModel, SvmModel)


def predict(model, x) -> Prediction:
    """Single-row prediction with the shared tie rule (exact tie -> 0)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ArityMismatch(f"expected a feature vector, got shape {x.shape}")
    arity = getattr(model, "weights", None)
    if arity is not None and len(x) != len(arity):
        raise ArityMismatch(f"model takes {len(arity)} features, got {len(x)}")
    p0, p1 = model.proba(x.reshape(1, -1))[0]
    return prediction_from_probs(float(p0), float(p1))


def predict_batch(model, X) -> list[Prediction]:
    probs = model.proba(np.asarray(X, dtype=np.float64))
    return [prediction_from_probs(float(p0), float(p1)) for p0, p1 in probs]


__all__ = [
    "ArityMismatch",
    "BadHyperparams",
    "Confusion",
    "DimensionMismatch",
    "EvalReport",
    "ForestModel",
    "ForestParams",
    "GbmModel",
    "GbmParams",
    "Hyperparams",
    "LengthMismatch",
    "LogRegModel",
    "LogRegParams",
    "ModelError",
    "Prediction",
    "SerializationError",
    "SingleClassTraining",
    "SvmModel",
    "SvmParams",
    "TRAINED_MODEL_TYPES",
    "TreeModel",
    "TreeParams",
    "confusion_counts",
    "dumps_model",
    "evaluate",
    "load_model",
    "loads_model",
    "model_from_dict",
    "model_to_dict",
    "predict",
    "predict_batch",
    "prediction_from_probs",
    "rank_auc",
    "roc_points",
    "save_model",
    "sigmoid",
    "train_forest",
    "train_gbm",
    "train_logreg",
    "train_svm",
    "train_tree",
    "trapezoid_auc",
]
