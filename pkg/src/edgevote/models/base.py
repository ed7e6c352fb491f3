"""Shared model-layer types: predictions, hyperparameter bundles, errors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ModelError(Exception):
    """Base class for training and prediction failures."""


class SingleClassTraining(ModelError):
    pass


class DimensionMismatch(ModelError):
    pass


class ArityMismatch(ModelError):
    pass


class LengthMismatch(ModelError):
    pass


class BadHyperparams(ModelError):
    pass


@dataclass(frozen=True)
class Prediction:
    """A class label plus a normalized two-class probability vector.

    The label is always argmax of probs; exact ties resolve to class 0.
    """

    label: int
    probs: tuple[float, float]

    def __post_init__(self):
        if abs(self.probs[0] + self.probs[1] - 1.0) > 1e-9:
            raise ModelError(f"probabilities {self.probs} do not sum to 1")
        expected = 1 if self.probs[1] > self.probs[0] else 0
        if self.label != expected:
            raise ModelError(
                f"label {self.label} is not argmax of {self.probs} (ties go to 0)"
            )


def prediction_from_probs(p0: float, p1: float) -> Prediction:
    label = 1 if p1 > p0 else 0
    return Prediction(label=label, probs=(float(p0), float(p1)))


@dataclass(frozen=True)
class LogRegParams:
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-3


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 5
    min_samples_split: int = 4


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 8
    features_per_split: int = 3
    bootstrap: bool = True  # test hook; production forests always bootstrap


@dataclass(frozen=True)
class GbmParams:
    n_rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3


@dataclass(frozen=True)
class SvmParams:
    learning_rate: float = 0.01
    epochs: int = 500
    l2: float = 1e-2


@dataclass(frozen=True)
class Hyperparams:
    """Per-algorithm hyperparameter bundle with one global seed."""

    logreg: LogRegParams = field(default_factory=LogRegParams)
    tree: TreeParams = field(default_factory=TreeParams)
    forest: ForestParams = field(default_factory=ForestParams)
    gbm: GbmParams = field(default_factory=GbmParams)
    svm: SvmParams = field(default_factory=SvmParams)
    seed: int = 0

    def __post_init__(self):
        counts = (
            self.logreg.epochs,
            self.tree.max_depth,
            self.tree.min_samples_split,
            self.forest.n_trees,
            self.forest.max_depth,
            self.forest.features_per_split,
            self.gbm.max_depth,
            self.svm.epochs,
        )
        if any(c < 1 for c in counts):
            raise BadHyperparams(f"counts must be >= 1: {counts}")
        # n_rounds=0 is a legal prior-only boosted model, so it validates
        # separately; a zero boosting rate likewise freezes it at the prior.
        if self.gbm.n_rounds < 0:
            raise BadHyperparams(f"n_rounds must be >= 0: {self.gbm.n_rounds}")
        if self.gbm.learning_rate < 0:
            raise BadHyperparams(
                f"boosting rate must be >= 0: {self.gbm.learning_rate}"
            )
        rates = (self.logreg.learning_rate, self.svm.learning_rate)
        if any(r <= 0 for r in rates):
            raise BadHyperparams(f"learning rates must be > 0: {rates}")

    def to_dict(self) -> dict:
        return {
            "logreg": vars(self.logreg).copy(),
            "tree": vars(self.tree).copy(),
            "forest": vars(self.forest).copy(),
            "gbm": vars(self.gbm).copy(),
            "svm": vars(self.svm).copy(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        return cls(
            logreg=LogRegParams(**d["logreg"]),
            tree=TreeParams(**d["tree"]),
            forest=ForestParams(**d["forest"]),
            gbm=GbmParams(**d["gbm"]),
            svm=SvmParams(**d["svm"]),
            seed=d["seed"],
        )


def check_training_inputs(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Validate a training matrix/label pair shared by every trainer."""
    # C order keeps BLAS kernels on one code path, so results are
    # bit-reproducible no matter how the caller built the matrix
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    if X.ndim != 2:
        raise DimensionMismatch(f"X must be 2-D, got shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch(
            f"X has {X.shape[0]} rows but y has {y.shape[0]} labels"
        )
    if X.shape[0] < 2:
        raise DimensionMismatch(f"need at least 2 rows, got {X.shape[0]}")
    classes = np.unique(y)
    if not set(classes.tolist()) <= {0, 1}:
        raise DimensionMismatch(f"labels must be 0 or 1, got classes {classes}")
    if len(classes) < 2:
        raise SingleClassTraining(f"training labels contain only class {classes}")
    return X, y


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out
