"""JSON serialization for trained models.

Every document carries a `kind` tag and a format version. Floats are
emitted by repr (shortest round-trip form), so decode(encode(m)) == m
bit for bit.
"""

from __future__ import annotations

import json

from .base import ModelError
from .forest import ForestModel
from .gbm import GbmModel
from .logreg import LogRegModel
from .svm import SvmModel
from .tree import RegressionTree, TreeModel

FORMAT_VERSION = 1


class SerializationError(ModelError):
    """Malformed or unsupported model document."""


def model_to_dict(model) -> dict:
    if isinstance(model, LogRegModel):
        body = {"weights": list(model.weights), "bias": model.bias}
    elif isinstance(model, TreeModel):
        body = {"root": model.root}
    elif isinstance(model, ForestModel):
        body = {"trees": [t.root for t in model.trees], "seed": model.seed}
    elif isinstance(model, GbmModel):
        body = {
            "init_logit": model.init_logit,
            "learning_rate": model.learning_rate,
            "trees": [t.root for t in model.trees],
        }
    elif isinstance(model, SvmModel):
        body = {
            "weights": list(model.weights),
            "bias": model.bias,
            "calib_a": model.calib_a,
            "calib_b": model.calib_b,
        }
    else:
        raise SerializationError(f"not a trained model: {type(model).__name__}")
    return {"kind": model.kind, "version": FORMAT_VERSION, **body}


def model_from_dict(doc: dict):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise SerializationError("model document needs a 'kind' tag")
    if doc.get("version") != FORMAT_VERSION:
        raise SerializationError(f"unsupported model version: {doc.get('version')!r}")
    kind = doc["kind"]
    try:
        if kind == "logreg":
            return LogRegModel(
                weights=tuple(float(w) for w in doc["weights"]), bias=float(doc["bias"])
            )
        if kind == "tree":
            return TreeModel(root=doc["root"])
        if kind == "forest":
            return ForestModel(
                trees=tuple(TreeModel(root=r) for r in doc["trees"]),
                seed=int(doc["seed"]),
            )
        if kind == "gbm":
            return GbmModel(
                init_logit=float(doc["init_logit"]),
                learning_rate=float(doc["learning_rate"]),
                trees=tuple(RegressionTree(root=r) for r in doc["trees"]),
            )
        if kind == "svm":
            return SvmModel(
                weights=tuple(float(w) for w in doc["weights"]),
                bias=float(doc["bias"]),
                calib_a=float(doc["calib_a"]),
                calib_b=float(doc["calib_b"]),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise SerializationError(f"bad {kind} document: {exc}") from exc
    raise SerializationError(f"unknown model kind: {kind!r}")


def dumps_model(model) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))


def loads_model(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SerializationError(f"not valid JSON: {exc}") from exc
    return model_from_dict(doc)


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model))
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())
