"""Shared builders for the test suite."""

from pathlib import Path

from edgevote.models import Hyperparams
from edgevote.models.base import (
    ForestParams,
    GbmParams,
    LogRegParams,
    SvmParams,
    TreeParams,
)
from edgevote.protocol import Message, MsgType, PlacementDecision

REPO_ROOT = Path(__file__).resolve().parent.parent
PIMA_CSV = REPO_ROOT / "data" / "pima_diabetes.csv"


def fast_hp(seed: int = 0) -> Hyperparams:
    """Small models for tests where speed matters more than accuracy."""
    return Hyperparams(
        logreg=LogRegParams(epochs=80),
        tree=TreeParams(max_depth=4),
        forest=ForestParams(n_trees=12, max_depth=5),
        gbm=GbmParams(n_rounds=15),
        svm=SvmParams(epochs=80),
        seed=seed,
    )


def _text(rng, prefix: str) -> str:
    return f"{prefix}-{rng.integers(0, 10**9)}"


def random_message(rng) -> Message:
    """One structurally valid message with a randomly chosen type."""
    kind = rng.choice(list(MsgType))
    sender = _text(rng, "node")
    msg_id = int(rng.integers(0, 2**63))
    if kind is MsgType.REGISTER_WORKER:
        payload = {"worker_id": _text(rng, "w"), "address": f"10.0.0.{rng.integers(1, 255)}:{rng.integers(1024, 65535)}"}
    elif kind is MsgType.LOAD_QUERY:
        payload = {}
    elif kind is MsgType.LOAD_REPORT:
        payload = {
            "cpu_load": float(rng.uniform(0, 1)),
            "mem_load": float(rng.uniform(0, 1)),
            "queue_length": int(rng.integers(0, 50)),
            "taken_at": float(rng.uniform(0, 1e12)),
        }
    elif kind is MsgType.JOB_REQUEST:
        payload = {"job_id": _text(rng, "job")}
    elif kind is MsgType.PLACEMENT_RESPONSE:
        decision = rng.choice(list(PlacementDecision))
        payload = {
            "job_id": _text(rng, "job"),
            "decision": decision.value,
            "target_address": "127.0.0.1:9000",
            "target_node_id": _text(rng, "n"),
            "via_cloud": bool(decision is PlacementDecision.CLOUD),
            "arbitration_ms": float(rng.uniform(0, 100)),
        }
    elif kind is MsgType.TASK_DISPATCH:
        if rng.integers(0, 2):
            use_ref = bool(rng.integers(0, 2))
            payload = {
                "job_id": _text(rng, "job"),
                "kind": "predict",
                "csv": "glucose\n99\n",
                "model_ref": "default" if use_ref else None,
                "ensemble": None if use_ref else {"members": int(rng.integers(1, 5))},
            }
        else:
            payload = {
                "job_id": _text(rng, "job"),
                "kind": "train",
                "algorithm": str(rng.choice(["lr", "dt", "rf", "gbm", "svm"])),
                "hp": {"seed": int(rng.integers(0, 100))},
                "csv": "f0,label\n1.5,1\n",
                "val_csv": "f0,label\n0.5,0\n",
            }
    elif kind is MsgType.TASK_RESULT:
        base = {
            "job_id": _text(rng, "job"),
            "worker_id": _text(rng, "w"),
            "execution_ms": float(rng.uniform(0, 500)),
        }
        if rng.integers(0, 2):
            p1 = float(rng.uniform(0, 1))
            label = 1 if p1 > 1 - p1 else 0
            base["predictions"] = [{"label": label, "probs": [1 - p1, p1]}]
        else:
            base["model"] = {"kind": "dt", "version": 1}
        payload = base
    elif kind is MsgType.HEARTBEAT:
        payload = {"ack_for": int(rng.integers(0, 2**31))} if rng.integers(0, 2) else {}
    else:
        payload = {"code": "TaskFailure", "detail": _text(rng, "boom")}
        if rng.integers(0, 2):
            payload["job_id"] = _text(rng, "job")
    return Message(msg_type=kind, msg_id=msg_id, sender_id=sender, payload=payload)
