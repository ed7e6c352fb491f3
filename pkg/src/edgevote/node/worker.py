"""Worker node: registers with the master, heartbeats load reports, and
serves load queries and task dispatches."""

from __future__ import annotations

import threading
import time

from ..protocol import LoadReport, Message, MsgType
from .config import NodeConfig, Role
from .executor import Executor, TaskFailure, system_load
from .transport import MessageServer, TransportError, make_message, request


class MasterUnreachable(Exception):
    """Registration kept failing after the retry budget."""


_MAX_REGISTER_ATTEMPTS = 5
_REGISTER_BACKOFF_S = 0.2


class WorkerServer:
    def __init__(self, cfg: NodeConfig):
        if cfg.role is not Role.WORKER:
            raise ValueError(f"WorkerServer needs a Worker config, got {cfg.role}")
        self.cfg = cfg
        self.executor = Executor.from_model_path(cfg.model_path)
        self._server = MessageServer(
            cfg.listen_address, cfg.shared_secret, self._handle, cfg.delay_ms_for
        )
        self._profile_idx = 0
        self._profile_lock = threading.Lock()
        self._stop = threading.Event()
        self._hb_thread = threading.Thread(target=self._heartbeat_loop, daemon=True)

    @property
    def address(self) -> str:
        return self._server.address

    def start(self) -> None:
        self._server.start()
        self.register()
        self._hb_thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._hb_thread.is_alive():
            self._hb_thread.join(timeout=2.0)
        self._server.stop()

    # ------------------------------------------------------------------
    # master-directed traffic
    # ------------------------------------------------------------------

    def register(self) -> None:
        payload = {"worker_id": self.cfg.node_id, "address": self.address}
        msg = make_message(MsgType.REGISTER_WORKER, payload, self.cfg.node_id)
        last_error: Exception | None = None
        for attempt in range(_MAX_REGISTER_ATTEMPTS):
            try:
                reply, _, _ = request(
                    self.cfg.master_address,
                    msg,
                    self.cfg.shared_secret,
                    timeout_s=self.cfg.request_timeout_s,
                    delay_ms=self.cfg.delay_ms_for(None),
                )
            except TransportError as exc:
                last_error = exc
                time.sleep(_REGISTER_BACKOFF_S * (2**attempt))
                continue
            if reply.msg_type is MsgType.HEARTBEAT:
                return
            last_error = RuntimeError(f"unexpected reply {reply.msg_type.value}")
            time.sleep(_REGISTER_BACKOFF_S * (2**attempt))
        raise MasterUnreachable(
            f"registration with {self.cfg.master_address} failed: {last_error}"
        )

    def _heartbeat_loop(self) -> None:
        interval_s = self.cfg.heartbeat_interval_ms / 1000.0
        while not self._stop.wait(interval_s):
            report = self._sample_load(advance=False)
            msg = make_message(MsgType.LOAD_REPORT, report.to_payload(), self.cfg.node_id)
            try:
                request(
                    self.cfg.master_address,
                    msg,
                    self.cfg.shared_secret,
                    timeout_s=self.cfg.request_timeout_s,
                    delay_ms=self.cfg.delay_ms_for(None),
                )
            except TransportError:
                continue  # master may be restarting; keep trying

    # ------------------------------------------------------------------
    # serving
    # ------------------------------------------------------------------

    def _sample_load(self, advance: bool) -> LoadReport:
        """Scripted profiles advance one step per load query, so the load
        the master sees for job j is profile[j % len]; heartbeats reuse
        the current step. Without a profile, report the real machine."""
        if self.cfg.load_profile:
            with self._profile_lock:
                idx = self._profile_idx
                if advance:
                    self._profile_idx += 1
            cpu = float(self.cfg.load_profile[idx % len(self.cfg.load_profile)])
            mem = 0.0
        else:
            cpu, mem = system_load()
        return LoadReport(cpu, mem, self.executor.queue_length, time.monotonic() * 1000.0)

    def _handle(self, msg: Message) -> Message | None:
        if msg.msg_type is MsgType.LOAD_QUERY:
            report = self._sample_load(advance=True)
            return make_message(MsgType.LOAD_REPORT, report.to_payload(), self.cfg.node_id)
        if msg.msg_type is MsgType.TASK_DISPATCH:
            return self._execute(msg)
        if msg.msg_type is MsgType.HEARTBEAT:
            return make_message(MsgType.HEARTBEAT, {"ack_for": msg.msg_id}, self.cfg.node_id)
        return make_message(
            MsgType.ERROR,
            {"code": "unsupported", "detail": f"worker ignores {msg.msg_type.value}"},
            self.cfg.node_id,
        )

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


def run_worker(cfg: NodeConfig) -> WorkerServer:
    """Start a worker (including registration) and return its handle."""
    server = WorkerServer(cfg)
    server.start()
    return server
