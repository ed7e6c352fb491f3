"""Task execution: the compute path behind TaskDispatch.

One executor instance serializes its jobs (FIFO, one at a time), which
models a single-actor node and keeps execution_ms free of co-runner
noise. Both workers and the master (for broker-self and colocated
placements) run dispatches through this class.
"""

from __future__ import annotations

import threading
import time

from ..bundle import Bundle, bundle_from_dict, load_bundle
from ..dataset import DatasetError, matrix_from_csv_block, parse_feature_block
from ..ensemble import train_member
from ..models import Hyperparams, ModelError, model_to_dict
from ..models.io import SerializationError


class TaskFailure(Exception):
    """The task could not produce a result; detail travels in an Error reply."""


class Executor:
    def __init__(self, bundle: Bundle | None = None, clock=time.perf_counter):
        self._bundle = bundle
        self._clock = clock
        self._lock = threading.Lock()
        self._pending = 0
        self._pending_lock = threading.Lock()

    @classmethod
    def from_model_path(cls, path: str | None) -> "Executor":
        return cls(bundle=load_bundle(path) if path else None)

    @property
    def queue_length(self) -> int:
        return self._pending

    def _resolve_bundle(self, payload: dict) -> Bundle:
        if payload.get("ensemble") is not None:
            try:
                return bundle_from_dict(payload["ensemble"])
            except SerializationError as exc:
                raise TaskFailure(f"inline model rejected: {exc}") from exc
        if self._bundle is None:
            raise TaskFailure(
                f"no model loaded on this node for ref {payload.get('model_ref')!r}"
            )
        return self._bundle

    def run(self, payload: dict) -> tuple[dict, float]:
        """Execute one dispatch payload; returns (result fields, exec ms)."""
        with self._pending_lock:
            self._pending += 1
        try:
            with self._lock:
                start = self._clock()
                if payload["kind"] == "predict":
                    body = self._predict(payload)
                else:
                    body = self._train(payload)
                elapsed_ms = (self._clock() - start) * 1000.0
            return body, elapsed_ms
        finally:
            with self._pending_lock:
                self._pending -= 1

    def _predict(self, payload: dict) -> dict:
        bundle = self._resolve_bundle(payload)
        try:
            X, _ = parse_feature_block(payload["csv"])
            preds = bundle.predict_rows(X)
        except (DatasetError, ModelError) as exc:
            raise TaskFailure(f"predict failed: {exc}") from exc
        return {
            "predictions": [
                {"label": p.label, "probs": [p.probs[0], p.probs[1]]} for p in preds
            ]
        }

    def _train(self, payload: dict) -> dict:
        try:
            X, y = matrix_from_csv_block(payload["csv"])
            if y is None:
                raise TaskFailure("training block carries no labels")
            X_val = y_val = None
            if payload["val_csv"]:
                X_val, y_val = matrix_from_csv_block(payload["val_csv"])
            hp = Hyperparams.from_dict(payload["hp"])
            model = train_member(payload["algorithm"], X, y, hp, X_val, y_val)
        except (DatasetError, ModelError, KeyError, TypeError, ValueError) as exc:
            raise TaskFailure(f"train failed: {exc}") from exc
        return {"model": model_to_dict(model)}


def system_load() -> tuple[float, float]:
    """Current machine CPU and memory utilisation as fractions in [0, 1]."""
    import psutil

    cpu = psutil.cpu_percent(interval=None) / 100.0
    mem = psutil.virtual_memory().percent / 100.0
    return min(max(cpu, 0.0), 1.0), min(max(mem, 0.0), 1.0)
