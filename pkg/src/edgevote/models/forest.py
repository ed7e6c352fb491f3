"""Random forest: bagged Gini trees with per-node feature subsampling.

Each tree draws from its own ``SeedSequence(entropy=seed, spawn_key=(t,))``
stream, so tree t is reproducible independently of how many trees run or
in what order they are built.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import Hyperparams, check_training_inputs
from .tree import TreeModel, grow_classification_tree


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[TreeModel, ...]
    seed: int

    kind = "forest"

    def proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        acc = np.zeros((X.shape[0], 2))
        for tree in self.trees:
            acc += tree.proba(X)
        return acc / len(self.trees)


def _tree_rng(seed: int, t: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(t,)))
    )


def train_forest(X, y, hp: Hyperparams) -> ForestModel:
    """Bootstrap-aggregated trees; features_per_split features are drawn
    without replacement at every node."""
    X, y = check_training_inputs(X, y)
    p = hp.forest
    n, d = X.shape
    fps = min(p.features_per_split, d)

    trees = []
    for t in range(p.n_trees):
        rng = _tree_rng(hp.seed, t)
        if p.bootstrap:
            idx = rng.integers(0, n, size=n)
            Xb, yb = X[idx], y[idx]
        else:
            Xb, yb = X, y

        def sampler(total, rng=rng):
            if fps >= total:
                return range(total)
            return rng.choice(total, size=fps, replace=False)

        root = grow_classification_tree(Xb, yb, p.max_depth, 2, sampler)
        trees.append(TreeModel(root=root))
    return ForestModel(trees=tuple(trees), seed=hp.seed)
