"""Gateway node: submits jobs through the master and times the exchange."""

from __future__ import annotations

import itertools
import time

from ..bench.records import TimingRecord
from ..models import Prediction
from ..protocol import MsgType, PlacementDecision
from .config import NodeConfig, Role
from .jobs import JobRecord, JobState
from .transport import RequestTimeout, TransportError, make_message, request


class GatewayError(Exception):
    pass


class PlacementTimeout(GatewayError):
    """The master did not answer the job request in time."""


class DispatchTimeout(GatewayError):
    """The placed node did not return a task result in time."""


class ResultMismatch(GatewayError):
    """The result row count does not match the submitted rows."""


def _count_rows(csv_block: str) -> int:
    lines = [ln for ln in csv_block.strip().splitlines() if ln.strip()]
    return max(0, len(lines) - 1)


class Gateway:
    def __init__(self, cfg: NodeConfig, scenario: str = "adhoc"):
        if cfg.role is not Role.GATEWAY:
            raise ValueError(f"Gateway needs a Gateway config, got {cfg.role}")
        self.cfg = cfg
        self.scenario = scenario
        self.jobs: dict[str, JobRecord] = {}
        self._job_counter = itertools.count()

    def submit_job(
        self,
        csv_block: str,
        model_ref: str | None = None,
        ensemble_doc: dict | None = None,
        job_id: str | None = None,
    ) -> tuple[list[Prediction], TimingRecord]:
        """Run one prediction job: placement, then dispatch to the target.

        Exactly one of model_ref / ensemble_doc selects the model; model_ref
        means the target's configured bundle, ensemble_doc ships one inline.
        """
        if (model_ref is None) == (ensemble_doc is None):
            raise ValueError("pass exactly one of model_ref / ensemble_doc")
        if job_id is None:
            job_id = f"{self.cfg.node_id}-{next(self._job_counter)}"
        record = JobRecord(job_id, self.cfg.node_id)
        self.jobs[job_id] = record
        try:
            return self._run(record, csv_block, model_ref, ensemble_doc)
        except Exception:
            if record.state not in (JobState.COMPLETED, JobState.FAILED):
                record.advance(JobState.FAILED)
            raise

    def _run(self, record, csv_block, model_ref, ensemble_doc):
        job_id = record.job_id
        start = time.perf_counter()
        record.advance(JobState.ARBITRATING)
        placement_msg = make_message(MsgType.JOB_REQUEST, {"job_id": job_id}, self.cfg.node_id)
        try:
            placement, sent_a, recv_a = request(
                self.cfg.master_address,
                placement_msg,
                self.cfg.shared_secret,
                timeout_s=self.cfg.request_timeout_s,
                delay_ms=self.cfg.delay_ms_for(None),
            )
        except RequestTimeout as exc:
            raise PlacementTimeout(str(exc)) from exc
        if placement.msg_type is not MsgType.PLACEMENT_RESPONSE:
            detail = placement.payload.get("detail", placement.msg_type.value)
            raise GatewayError(f"placement failed: {detail}")
        record.placement = dict(placement.payload)

        dispatch_payload = {
            "job_id": job_id,
            "kind": "predict",
            "csv": csv_block,
            "model_ref": model_ref,
            "ensemble": ensemble_doc,
        }
        dispatch_msg = make_message(MsgType.TASK_DISPATCH, dispatch_payload, self.cfg.node_id)
        record.advance(JobState.DISPATCHED)
        target_id = placement.payload["target_node_id"]
        try:
            result, sent_b, recv_b = request(
                placement.payload["target_address"],
                dispatch_msg,
                self.cfg.shared_secret,
                timeout_s=self.cfg.request_timeout_s,
                delay_ms=self.cfg.delay_ms_for(target_id),
            )
        except RequestTimeout as exc:
            raise DispatchTimeout(str(exc)) from exc
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        if result.msg_type is not MsgType.TASK_RESULT:
            detail = result.payload.get("detail", result.msg_type.value)
            raise GatewayError(f"task failed on {target_id}: {detail}")

        entries = result.payload.get("predictions")
        if entries is None:
            raise GatewayError("task result carries no predictions")
        if len(entries) != _count_rows(csv_block):
            raise ResultMismatch(
                f"submitted {_count_rows(csv_block)} rows, got {len(entries)} predictions"
            )
        predictions = [Prediction(e["label"], tuple(e["probs"])) for e in entries]

        arbitration_ms = float(placement.payload["arbitration_ms"])
        execution_ms = float(result.payload["execution_ms"])
        timing = TimingRecord(
            job_id=job_id,
            scenario=self.scenario,
            arbitration_ms=arbitration_ms,
            latency_ms=max(0.0, elapsed_ms - arbitration_ms - execution_ms),
            execution_ms=execution_ms,
            response_ms=elapsed_ms,
            bytes_sent=sent_a + sent_b,
            bytes_received=recv_a + recv_b,
        )
        record.advance(JobState.COMPLETED)
        return predictions, timing
