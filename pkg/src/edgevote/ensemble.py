"""Voting ensembles over the base classifiers.

Hard voting takes the majority label; soft voting takes the class with
the greatest summed probability. Sharded training shuffles the training
rows once with a seeded RNG and gives each member a disjoint slice.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .dataset import TooFewRecords
from .models import (
    Hyperparams,
    ModelError,
    Prediction,
    model_from_dict,
    model_to_dict,
    predict,
    prediction_from_probs,
    train_forest,
    train_gbm,
    train_logreg,
    train_svm,
    train_tree,
)
from .models.io import FORMAT_VERSION, SerializationError


class EnsembleError(ModelError):
    pass


class EmptyMemberList(EnsembleError):
    """Fewer than two members where voting needs a quorum."""


class UnnormalizedInput(EnsembleError):
    """A member probability vector does not sum to 1."""


class UnknownAlgorithm(EnsembleError):
    pass


class VotingMode(Enum):
    HARD = "hard"
    SOFT = "soft"


PRESET_COMBOS = ("svm-dt-lr", "rf-svm-lr")

_TRAINERS = {
    "lr": train_logreg,
    "dt": train_tree,
    "rf": train_forest,
    "gbm": train_gbm,
    "svm": train_svm,
}


def parse_combo(name: str) -> tuple[str, ...]:
    """Split a combo tag like "svm-dt-lr" into algorithm kinds."""
    kinds = tuple(part.strip() for part in name.split("-"))
    for kind in kinds:
        if kind not in _TRAINERS:
            raise UnknownAlgorithm(
                f"unknown algorithm {kind!r}; choose from {sorted(_TRAINERS)}"
            )
    return kinds


@dataclass(frozen=True)
class Ensemble:
    members: tuple
    mode: VotingMode
    combo_name: str


def hard_vote(labels, probs) -> Prediction:
    """Majority vote; output probs are the vote shares.

    An exact tie falls back to soft aggregation of the member probs, so
    the returned label still matches argmax of the returned probs.
    """
    labels = list(labels)
    probs = list(probs)
    if len(labels) < 2:
        raise EmptyMemberList(f"voting needs >= 2 members, got {len(labels)}")
    votes1 = sum(1 for lab in labels if lab == 1)
    votes0 = len(labels) - votes1
    if votes0 == votes1:
        return soft_vote(probs)
    label = 1 if votes1 > votes0 else 0
    return Prediction(label=label, probs=(votes0 / len(labels), votes1 / len(labels)))


def soft_vote(probs) -> Prediction:
    """Summed-probability vote; exact tie resolves to class 0.

    Per-class sums use math.fsum, so the result is identical under any
    permutation of the members.
    """
    probs = list(probs)
    if len(probs) < 2:
        raise EmptyMemberList(f"voting needs >= 2 members, got {len(probs)}")
    for p in probs:
        if abs(math.fsum(p) - 1.0) > 1e-9:
            raise UnnormalizedInput(f"member probs sum to {math.fsum(p)!r}")
    s0 = math.fsum(p[0] for p in probs)
    s1 = math.fsum(p[1] for p in probs)
    label = 1 if s1 > s0 else 0
    return Prediction(label=label, probs=(s0 / len(probs), s1 / len(probs)))


def member_seeds(seed: int, k: int) -> tuple[int, ...]:
    """Deterministic per-member training seeds derived from one seed."""
    return tuple(int(v) for v in np.random.SeedSequence(seed).generate_state(k))


def shard_indices(n: int, k: int, seed: int) -> tuple[tuple[int, ...], ...]:
    """Shuffle range(n) and cut it into k shards; sizes differ by at most
    one, with the remainder going to the leading shards."""
    order = np.random.default_rng(seed).permutation(n)
    base, rem = divmod(n, k)
    shards = []
    start = 0
    for i in range(k):
        size = base + (1 if i < rem else 0)
        shards.append(tuple(int(v) for v in order[start : start + size]))
        start += size
    return tuple(shards)


def train_member(kind: str, X, y, hp: Hyperparams, X_val=None, y_val=None):
    """Train one member; the SVM also gets validation data to calibrate."""
    if kind not in _TRAINERS:
        raise UnknownAlgorithm(f"unknown algorithm {kind!r}")
    if kind == "svm":
        return train_svm(X, y, hp, X_val=X_val, y_val=y_val)
    return _TRAINERS[kind](X, y, hp)


def train_sharded(
    combo,
    X,
    y,
    hp: Hyperparams,
    seed: int,
    X_val=None,
    y_val=None,
    mode: VotingMode = VotingMode.HARD,
) -> Ensemble:
    """Train member i on shard i of a seeded disjoint partition of rows."""
    combo = tuple(combo)
    for kind in combo:
        if kind not in _TRAINERS:
            raise UnknownAlgorithm(f"unknown algorithm {kind!r}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(X) < 2 * len(combo):
        raise TooFewRecords(
            f"{len(X)} training rows cannot feed {len(combo)} members"
        )
    shards = shard_indices(len(X), len(combo), seed)
    seeds = member_seeds(seed, len(combo))
    members = tuple(
        train_member(
            kind,
            X[list(shard)],
            y[list(shard)],
            replace(hp, seed=member_seed),
            X_val,
            y_val,
        )
        for kind, shard, member_seed in zip(combo, shards, seeds)
    )
    return Ensemble(members=members, mode=mode, combo_name="-".join(combo))


def train_whole_data(
    combo,
    X,
    y,
    hp: Hyperparams,
    seed: int,
    X_val=None,
    y_val=None,
    mode: VotingMode = VotingMode.HARD,
) -> Ensemble:
    """Train every member on the full training set (no sharding)."""
    combo = tuple(combo)
    for kind in combo:
        if kind not in _TRAINERS:
            raise UnknownAlgorithm(f"unknown algorithm {kind!r}")
    seeds = member_seeds(seed, len(combo))
    members = tuple(
        train_member(kind, X, y, replace(hp, seed=member_seed), X_val, y_val)
        for kind, member_seed in zip(combo, seeds)
    )
    return Ensemble(members=members, mode=mode, combo_name="-".join(combo))


def ensemble_predict(e: Ensemble, x) -> Prediction:
    """Vote the members' predictions on one feature vector."""
    preds = [predict(m, x) for m in e.members]
    if e.mode is VotingMode.HARD:
        return hard_vote([p.label for p in preds], [p.probs for p in preds])
    return soft_vote([p.probs for p in preds])


def ensemble_predict_batch(e: Ensemble, X) -> list[Prediction]:
    """Batch voting; one proba pass per member, then per-row votes."""
    X = np.asarray(X, dtype=np.float64)
    member_probs = [m.proba(X) for m in e.members]
    out = []
    for i in range(X.shape[0]):
        rows = [tuple(float(v) for v in mp[i]) for mp in member_probs]
        if e.mode is VotingMode.HARD:
            labels = [prediction_from_probs(*r).label for r in rows]
            out.append(hard_vote(labels, rows))
        else:
            out.append(soft_vote(rows))
    return out


def ensemble_to_dict(e: Ensemble) -> dict:
    return {
        "version": FORMAT_VERSION,
        "combo_name": e.combo_name,
        "mode": e.mode.value,
        "members": [model_to_dict(m) for m in e.members],
    }


def ensemble_from_dict(doc: dict) -> Ensemble:
    if not isinstance(doc, dict) or "members" not in doc:
        raise SerializationError("ensemble document needs a member list")
    if doc.get("version") != FORMAT_VERSION:
        raise SerializationError(f"unsupported ensemble version: {doc.get('version')!r}")
    try:
        mode = VotingMode(doc["mode"])
    except (KeyError, ValueError) as exc:
        raise SerializationError(f"bad voting mode: {exc}") from exc
    return Ensemble(
        members=tuple(model_from_dict(m) for m in doc["members"]),
        mode=mode,
        combo_name=str(doc.get("combo_name", "")),
    )


def dumps_ensemble(e: Ensemble) -> str:
    return json.dumps(ensemble_to_dict(e), sort_keys=True, separators=(",", ":"))


def loads_ensemble(text: str) -> Ensemble:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SerializationError(f"not valid JSON: {exc}") from exc
    return ensemble_from_dict(doc)
