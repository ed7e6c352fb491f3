"""Placement arbitration: pure decision over a registry snapshot."""

from __future__ import annotations

from dataclasses import dataclass

from ..protocol import PlacementDecision
from .registry import WorkerEntry


@dataclass(frozen=True)
class Placement:
    decision: PlacementDecision
    target_node_id: str
    target_address: str
    via_cloud: bool


def arbitrate(
    snapshot,
    threshold: float,
    cloud_enabled: bool,
    now: float,
    heartbeat_interval_ms: int,
    self_node_id: str,
    self_address: str,
    cloud_address: str | None = None,
) -> Placement:
    """Choose where a job runs, from a point-in-time registry snapshot.

    Healthy workers under the load threshold compete on cpu_load, ties
    broken by lexicographically smallest worker_id. With no candidates
    the job goes to the cloud when enabled, else the broker runs it.
    """
    best: WorkerEntry | None = None
    for entry in snapshot:
        if not entry.healthy(now, heartbeat_interval_ms):
            continue
        if entry.load is None or entry.load.cpu_load >= threshold:
            continue
        if (
            best is None
            or entry.load.cpu_load < best.load.cpu_load
            or (
                entry.load.cpu_load == best.load.cpu_load
                and entry.worker_id < best.worker_id
            )
        ):
            best = entry
    if best is not None:
        return Placement(
            decision=PlacementDecision.WORKER,
            target_node_id=best.worker_id,
            target_address=best.address,
            via_cloud=False,
        )
    if cloud_enabled and cloud_address:
        return Placement(
            decision=PlacementDecision.CLOUD,
            target_node_id="cloud",
            target_address=cloud_address,
            via_cloud=True,
        )
    return Placement(
        decision=PlacementDecision.BROKER_SELF,
        target_node_id=self_node_id,
        target_address=self_address,
        via_cloud=False,
    )
