"""Broker/master node: registrations, load tracking, placement, and the
broker-self execution path."""

from __future__ import annotations

import itertools
import threading
import time
from dataclasses import replace

from ..dataset import matrix_to_csv_block
from ..ensemble import Ensemble, VotingMode, member_seeds, shard_indices
from ..models import model_from_dict
from ..protocol import (
    LoadReport,
    Message,
    MsgType,
    PlacementDecision,
)
from .arbitration import arbitrate
from .config import NodeConfig, Role
from .executor import Executor, TaskFailure, system_load
from .registry import WorkerRegistry
from .transport import (
    MessageServer,
    TransportError,
    make_message,
    next_msg_id,
    request,
)


class WorkerTrainingFailure(Exception):
    """A training dispatch failed; partial members are discarded."""


_LOAD_CHECK_TIMEOUT_S = 5.0
_TRAIN_TIMEOUT_S = 600.0


class MasterServer:
    def __init__(self, cfg: NodeConfig, clock=time.monotonic):
        if cfg.role is not Role.MASTER:
            raise ValueError(f"MasterServer needs a Master config, got {cfg.role}")
        self.cfg = cfg
        self.registry = WorkerRegistry(cfg.heartbeat_interval_ms, clock)
        self.executor = Executor.from_model_path(cfg.model_path)
        self._server = MessageServer(
            cfg.listen_address, cfg.shared_secret, self._handle, cfg.delay_ms_for
        )
        self._arbitration_lock = threading.Lock()
        self._actor_profiles = {
            a.node_id: itertools.cycle(a.load_profile) for a in cfg.colocated_actors
        }
        for actor in cfg.colocated_actors:
            self.registry.register(actor.node_id, self.address, colocated=True)
            self.registry.update_load(
                actor.node_id,
                LoadReport(0.0, 0.0, 0, self.registry.now() * 1000.0),
            )

    @property
    def address(self) -> str:
        return self._server.address

    def start(self) -> None:
        self._server.start()

    def stop(self) -> None:
        self._server.stop()

    # ------------------------------------------------------------------
    # message handling
    # ------------------------------------------------------------------

    def _handle(self, msg: Message) -> Message | None:
        if msg.msg_type is MsgType.REGISTER_WORKER:
            self.registry.register(msg.payload["worker_id"], msg.payload["address"])
            return self._ack(msg)
        if msg.msg_type is MsgType.LOAD_REPORT:
            self.registry.update_load(msg.sender_id, LoadReport.from_payload(msg.payload))
            return self._ack(msg)
        if msg.msg_type is MsgType.HEARTBEAT:
            self.registry.touch(msg.sender_id)
            return self._ack(msg)
        if msg.msg_type is MsgType.LOAD_QUERY:
            cpu, mem = system_load()
            report = LoadReport(
                cpu, mem, self.executor.queue_length, self.registry.now() * 1000.0
            )
            return make_message(MsgType.LOAD_REPORT, report.to_payload(), self.cfg.node_id)
        if msg.msg_type is MsgType.JOB_REQUEST:
            return self._place_job(msg)
        if msg.msg_type is MsgType.TASK_DISPATCH:
            return self._execute(msg)
        return make_message(
            MsgType.ERROR,
            {"code": "unsupported", "detail": f"master ignores {msg.msg_type.value}"},
            self.cfg.node_id,
        )

    def _ack(self, msg: Message) -> Message:
        return make_message(MsgType.HEARTBEAT, {"ack_for": msg.msg_id}, self.cfg.node_id)

    def _execute(self, msg: Message) -> Message:
        job_id = msg.payload["job_id"]
        try:
            body, elapsed_ms = self.executor.run(msg.payload)
        except TaskFailure as exc:
            return make_message(
                MsgType.ERROR,
                {"code": "TaskFailure", "detail": str(exc), "job_id": job_id},
                self.cfg.node_id,
            )
        payload = {
            "job_id": job_id,
            "worker_id": self.cfg.node_id,
            "execution_ms": elapsed_ms,
            **body,
        }
        return make_message(MsgType.TASK_RESULT, payload, self.cfg.node_id)

    # ------------------------------------------------------------------
    # placement
    # ------------------------------------------------------------------

    def _refresh_loads(self) -> None:
        """Live load checks: one query per healthy worker.

        Remote workers answer over the network; colocated actors sample
        their scripted profiles in-process. Per-worker query cost is what
        ties arbitration time to the worker count.
        """
        now = self.registry.now()
        for entry in self.registry.snapshot():
            if not entry.healthy(now, self.cfg.heartbeat_interval_ms):
                continue
            if entry.colocated:
                cpu = float(next(self._actor_profiles[entry.worker_id]))
                self.registry.update_load(
                    entry.worker_id,
                    LoadReport(cpu, 0.0, self.executor.queue_length, now * 1000.0),
                )
                continue
            query = make_message(MsgType.LOAD_QUERY, {}, self.cfg.node_id)
            try:
                reply, _, _ = request(
                    entry.address,
                    query,
                    self.cfg.shared_secret,
                    timeout_s=_LOAD_CHECK_TIMEOUT_S,
                    delay_ms=self.cfg.delay_ms_for(entry.worker_id),
                )
            except TransportError:
                continue  # keep the stale report; health decay handles death
            if reply.msg_type is MsgType.LOAD_REPORT:
                self.registry.update_load(
                    entry.worker_id, LoadReport.from_payload(reply.payload)
                )

    def _place_job(self, msg: Message) -> Message:
        job_id = msg.payload["job_id"]
        with self._arbitration_lock:
            start = time.perf_counter()
            self._refresh_loads()
            placement = arbitrate(
                self.registry.snapshot(),
                self.cfg.heavy_load_threshold,
                self.cfg.cloud_enabled,
                self.registry.now(),
                self.cfg.heartbeat_interval_ms,
                self.cfg.node_id,
                self.address,
                self.cfg.cloud_address,
            )
            arbitration_ms = (time.perf_counter() - start) * 1000.0
        payload = {
            "job_id": job_id,
            "decision": placement.decision.value,
            "target_address": placement.target_address,
            "target_node_id": placement.target_node_id,
            "via_cloud": placement.via_cloud,
            "arbitration_ms": arbitration_ms,
        }
        return make_message(MsgType.PLACEMENT_RESPONSE, payload, self.cfg.node_id)

    # ------------------------------------------------------------------
    # distributed training
    # ------------------------------------------------------------------

    def distribute_training(
        self,
        combo,
        X,
        y,
        hp,
        seed: int,
        X_val=None,
        y_val=None,
        mode: VotingMode = VotingMode.HARD,
    ) -> Ensemble:
        """Train one member per shard on the registered workers, round-robin.

        Shards, member order, and member seeds follow train_sharded
        exactly, so the assembled ensemble serializes byte-identically to
        a local run with the same arguments.
        """
        import numpy as np

        combo = tuple(combo)
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        targets = self.registry.healthy_entries()
        if not targets:
            raise WorkerTrainingFailure("no healthy workers registered")
        shards = shard_indices(len(X), len(combo), seed)
        seeds = member_seeds(seed, len(combo))
        val_block = (
            matrix_to_csv_block(X_val, y_val) if X_val is not None and y_val is not None else ""
        )
        members = []
        for i, (kind, shard) in enumerate(zip(combo, shards)):
            target = targets[i % len(targets)]
            payload = {
                "job_id": f"train-{seed}-{i}",
                "kind": "train",
                "algorithm": kind,
                "hp": replace(hp, seed=seeds[i]).to_dict(),
                "csv": matrix_to_csv_block(X[list(shard)], y[list(shard)]),
                "val_csv": val_block,
            }
            msg = make_message(MsgType.TASK_DISPATCH, payload, self.cfg.node_id)
            try:
                reply, _, _ = request(
                    target.address,
                    msg,
                    self.cfg.shared_secret,
                    timeout_s=_TRAIN_TIMEOUT_S,
                    delay_ms=self.cfg.delay_ms_for(target.worker_id),
                )
            except TransportError as exc:
                raise WorkerTrainingFailure(
                    f"member {i} ({kind}) on {target.worker_id}: {exc}"
                ) from exc
            if reply.msg_type is not MsgType.TASK_RESULT or "model" not in reply.payload:
                detail = reply.payload.get("detail", reply.msg_type.value)
                raise WorkerTrainingFailure(f"member {i} ({kind}): {detail}")
            members.append(model_from_dict(reply.payload["model"]))
        return Ensemble(members=tuple(members), mode=mode, combo_name="-".join(combo))


def run_master(cfg: NodeConfig) -> MasterServer:
    """Start a master and return its handle; callers own the lifetime."""
    server = MasterServer(cfg)
    server.start()
    return server
