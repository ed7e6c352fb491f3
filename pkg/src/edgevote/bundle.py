"""Trained-model bundle: the ensemble plus everything inference needs.

A bundle embeds the fitted scaler and feature mask next to the ensemble,
so any node holding the file can turn raw patient rows into predictions
without re-deriving preprocessing state. Serialization is canonical
JSON, making equal bundles byte-equal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import FeatureMask, Scaler, apply_scaler
from .ensemble import (
    Ensemble,
    ensemble_from_dict,
    ensemble_predict_batch,
    ensemble_to_dict,
)
from .models import Prediction
from .models.io import FORMAT_VERSION, SerializationError


@dataclass(frozen=True)
class Bundle:
    ensemble: Ensemble
    scaler: Scaler
    mask: FeatureMask
    seed: int
    reports: dict = field(default_factory=dict)
    hyperparams: dict = field(default_factory=dict)

    def transform(self, X) -> np.ndarray:
        """Raw patient feature rows -> the matrix the members were fed:
        standardize all columns, then keep the mask's selection."""
        return self.mask.apply(apply_scaler(self.scaler, X))

    def predict_rows(self, X) -> list[Prediction]:
        X = np.asarray(X, dtype=np.float64).reshape(-1, len(self.scaler.mean))
        if X.shape[0] == 0:
            return []
        return ensemble_predict_batch(self.ensemble, self.transform(X))


def bundle_to_dict(b: Bundle) -> dict:
    return {
        "version": FORMAT_VERSION,
        "ensemble": ensemble_to_dict(b.ensemble),
        "scaler": b.scaler.to_dict(),
        "mask": b.mask.to_dict(),
        "seed": b.seed,
        "reports": b.reports,
        "hyperparams": b.hyperparams,
    }


def bundle_from_dict(doc: dict) -> Bundle:
    if not isinstance(doc, dict) or "ensemble" not in doc:
        raise SerializationError("bundle document needs an embedded ensemble")
    if doc.get("version") != FORMAT_VERSION:
        raise SerializationError(f"unsupported bundle version: {doc.get('version')!r}")
    try:
        return Bundle(
            ensemble=ensemble_from_dict(doc["ensemble"]),
            scaler=Scaler.from_dict(doc["scaler"]),
            mask=FeatureMask.from_dict(doc["mask"]),
            seed=int(doc["seed"]),
            reports=doc.get("reports", {}),
            hyperparams=doc.get("hyperparams", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SerializationError(f"bad bundle document: {exc}") from exc


def dumps_bundle(b: Bundle) -> str:
    return json.dumps(bundle_to_dict(b), sort_keys=True, separators=(",", ":"))


def loads_bundle(text: str) -> Bundle:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SerializationError(f"not valid JSON: {exc}") from exc
    return bundle_from_dict(doc)


def save_bundle(b: Bundle, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_bundle(b))
        fh.write("\n")


def load_bundle(path) -> Bundle:
    with open(path, encoding="utf-8") as fh:
        return loads_bundle(fh.read())
