"""Launches scenario nodes as OS processes and collects timing records."""

from __future__ import annotations

import json
import os
import socket
import subprocess
import sys
import tempfile
import threading
import time

from ..bundle import Bundle, save_bundle
from ..dataset import (
    FeatureMask,
    apply_scaler,
    drop_missing,
    fit_scaler,
    load_csv,
    records_to_csv_block,
    split,
)
from ..ensemble import VotingMode, parse_combo, train_sharded
from ..models import Hyperparams, Prediction, evaluate
from .presets import ScenarioConfig
from .records import BenchError, TimingRecord, parse_records_csv

_STARTUP_TIMEOUT_S = 60.0
_SECRET = "bench-secret"


class PortConflict(BenchError):
    pass


class NodeCrash(BenchError):
    def __init__(self, node_id: str, exit_info: str, partial_records=()):
        super().__init__(f"node {node_id} crashed: {exit_info}")
        self.node_id = node_id
        self.exit_info = exit_info
        self.partial_records = list(partial_records)


class _Child:
    """A spawned node process with line-buffered output capture."""

    def __init__(self, node_id: str, cmd: list[str]):
        self.node_id = node_id
        self.proc = subprocess.Popen(
            cmd,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self.stdout_lines: list[str] = []
        self.stderr_lines: list[str] = []
        self._threads = [
            threading.Thread(target=self._pump, args=(self.proc.stdout, self.stdout_lines), daemon=True),
            threading.Thread(target=self._pump, args=(self.proc.stderr, self.stderr_lines), daemon=True),
        ]
        for t in self._threads:
            t.start()

    @staticmethod
    def _pump(stream, sink: list[str]) -> None:
        for line in stream:
            sink.append(line.rstrip("\n"))
        stream.close()

    def exit_info(self) -> str:
        tail = " | ".join(self.stderr_lines[-5:]) or "(no stderr)"
        return f"exit={self.proc.returncode} stderr: {tail}"

    def wait_ready(self, timeout_s: float) -> None:
        deadline = time.monotonic() + timeout_s
        while time.monotonic() < deadline:
            if any(line.startswith("READY") for line in self.stdout_lines):
                return
            if self.proc.poll() is not None:
                stderr = "\n".join(self.stderr_lines)
                if "BindFailure" in stderr or "Address already in use" in stderr:
                    raise PortConflict(f"{self.node_id}: {self.exit_info()}")
                raise NodeCrash(self.node_id, self.exit_info())
            time.sleep(0.01)
        raise NodeCrash(self.node_id, f"no READY within {timeout_s}s; {self.exit_info()}")

    def shutdown(self) -> None:
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait(timeout=5)
        for t in self._threads:
            t.join(timeout=1)


def _free_port() -> int:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as s:
        s.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def _prepare_inputs(cfg: ScenarioConfig, data_path: str, out_dir: str):
    """Train the deployed bundle and render the job rows once per run."""
    ds = load_csv(data_path)
    kept = drop_missing(ds)
    sd = split(kept, seed=cfg.seed)
    scaler = fit_scaler(kept, sd.train_idx)
    mask = FeatureMask(tuple(range(len(kept.feature_names))))
    X, y = kept.feature_matrix(), kept.labels()

    def part(idx):
        rows = list(idx)
        return mask.apply(apply_scaler(scaler, X[rows])), y[rows]

    X_train, y_train = part(sd.train_idx)
    X_val, y_val = part(sd.val_idx)
    hp = Hyperparams(seed=cfg.seed)
    ens = train_sharded(
        parse_combo(cfg.combo), X_train, y_train, hp, cfg.seed, X_val, y_val,
        mode=VotingMode(cfg.mode),
    )
    bundle = Bundle(
        ensemble=ens, scaler=scaler, mask=mask, seed=cfg.seed,
        reports={}, hyperparams=hp.to_dict(),
    )
    bundle_path = os.path.join(out_dir, "model.json")
    save_bundle(bundle, bundle_path)

    test_rows = [kept.records[i] for i in sd.test_idx[: cfg.rows_per_job]]
    rows_path = os.path.join(out_dir, "rows.csv")
    with open(rows_path, "w", encoding="utf-8") as fh:
        fh.write(records_to_csv_block([r.features() for r in test_rows]))
    y_true = [r.outcome for r in test_rows]
    return bundle_path, rows_path, y_true


def _node_config_doc(
    cfg: ScenarioConfig, spec, listen_port, master_address, master_node_id, bundle_path
) -> dict:
    delays = cfg.delay_map_for(spec.node_id)
    if spec.role in ("gateway", "worker"):
        # sends toward the master resolve through the wildcard row, since
        # those nodes only know the master by address
        delays.setdefault("*", delays.get(master_node_id, 0.0))
    doc = {
        "node_id": spec.node_id,
        "shared_secret": _SECRET,
        "heartbeat_interval_ms": cfg.heartbeat_interval_ms,
        "heavy_load_threshold": cfg.heavy_load_threshold,
        "injected_hop_delay_ms": delays,
        "model_path": bundle_path,
    }
    if spec.role == "master":
        doc["role"] = "Master"
        doc["listen_address"] = f"127.0.0.1:{listen_port}"
        doc["colocated_actors"] = [
            {"node_id": actor_id, "load_profile": list(profile)}
            for actor_id, profile in spec.colocated
        ]
    elif spec.role == "worker":
        doc["role"] = "Worker"
        doc["listen_address"] = f"127.0.0.1:{listen_port}"
        doc["master_address"] = master_address
        doc["load_profile"] = list(spec.load_profile)
    else:
        doc["role"] = "Gateway"
        doc["master_address"] = master_address
        doc["request_timeout_s"] = 60.0
    return doc


def _read_predictions(path: str) -> list[Prediction]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines or lines[0] != "label,prob_1":
        raise BenchError(f"unrecognized predictions header in {path}")
    out = []
    for ln in lines[1:]:
        label_text, prob_text = ln.split(",")
        p1 = float(prob_text)
        out.append(Prediction(int(label_text), (1.0 - p1, p1)))
    return out


def run_scenario(
    cfg: ScenarioConfig,
    data_path: str = "data/pima_diabetes.csv",
    out_dir: str | None = None,
):
    """Run one deployment scenario end to end.

    Returns (records, eval_report): one TimingRecord per repetition plus
    the prediction quality of the final job against the true labels.
    On a node crash, partial records travel on the exception and a
    FAILED marker file lands in out_dir.
    """
    out_dir = out_dir or tempfile.mkdtemp(prefix="edgevote-bench-")
    os.makedirs(out_dir, exist_ok=True)
    bundle_path, rows_path, y_true = _prepare_inputs(cfg, data_path, out_dir)

    master_spec = next(n for n in cfg.nodes if n.role == "master")
    worker_specs = [n for n in cfg.nodes if n.role == "worker"]
    gateway_spec = next(n for n in cfg.nodes if n.role == "gateway")

    ports = {s.node_id: _free_port() for s in [master_spec, *worker_specs]}
    master_address = f"127.0.0.1:{ports[master_spec.node_id]}"

    config_paths = {}
    for spec in cfg.nodes:
        doc = _node_config_doc(
            cfg, spec, ports.get(spec.node_id), master_address,
            master_spec.node_id, bundle_path,
        )
        path = os.path.join(out_dir, f"{spec.node_id}.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
        config_paths[spec.node_id] = path

    records_path = os.path.join(out_dir, "gateway-records.csv")
    preds_path = os.path.join(out_dir, "gateway-preds.csv")
    children: list[_Child] = []

    def _spawn(role: str, spec_id: str, extra: list[str]) -> _Child:
        cmd = [sys.executable, "-m", "edgevote.cli", role, "--config", config_paths[spec_id], *extra]
        child = _Child(spec_id, cmd)
        children.append(child)
        return child

    def _partial_records() -> list[TimingRecord]:
        if os.path.exists(records_path):
            try:
                with open(records_path, encoding="utf-8") as fh:
                    return parse_records_csv(fh.read())
            except BenchError:
                return []
        return []

    def _mark_failed(node_id: str, info: str) -> None:
        with open(os.path.join(out_dir, "FAILED"), "w", encoding="utf-8") as fh:
            fh.write(f"{node_id}\n{info}\n")

    try:
        _spawn("master", master_spec.node_id, []).wait_ready(_STARTUP_TIMEOUT_S)
        for spec in worker_specs:
            _spawn("worker", spec.node_id, []).wait_ready(_STARTUP_TIMEOUT_S)

        gw = _spawn(
            "gateway",
            gateway_spec.node_id,
            [
                "--in", rows_path,
                "--model-ref", "default",
                "--reps", str(cfg.repetitions),
                "--warmup", str(cfg.warmup),
                "--scenario", cfg.name,
                "--timing-out", records_path,
                "--pred-out", preds_path,
            ],
        )
        # generous ceiling: every hop of every rep sleeps its injected delay
        max_delay = max((l.one_way_ms for l in cfg.links), default=0.0)
        budget = 60.0 + (cfg.repetitions + cfg.warmup) * (4 * max_delay / 1000.0 + 2.0)
        try:
            rc = gw.proc.wait(timeout=budget)
        except subprocess.TimeoutExpired:
            partial = _partial_records()
            _mark_failed(gateway_spec.node_id, "gateway timed out")
            raise NodeCrash(gateway_spec.node_id, f"no exit within {budget:.0f}s", partial) from None
        for child in children[:-1]:
            if child.proc.poll() is not None:
                partial = _partial_records()
                _mark_failed(child.node_id, child.exit_info())
                raise NodeCrash(child.node_id, child.exit_info(), partial)
        if rc != 0:
            partial = _partial_records()
            _mark_failed(gateway_spec.node_id, gw.exit_info())
            raise NodeCrash(gateway_spec.node_id, gw.exit_info(), partial)

        with open(records_path, encoding="utf-8") as fh:
            records = parse_records_csv(fh.read())
        if len(records) != cfg.repetitions:
            _mark_failed(gateway_spec.node_id, f"{len(records)}/{cfg.repetitions} records")
            raise NodeCrash(
                gateway_spec.node_id,
                f"completed {len(records)}/{cfg.repetitions} repetitions",
                records,
            )
        eval_report = evaluate(_read_predictions(preds_path), y_true)
        return records, eval_report
    finally:
        for child in reversed(children):
            child.shutdown()
