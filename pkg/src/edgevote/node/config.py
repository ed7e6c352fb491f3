"""Node role configuration shared by gateway, master, and worker."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

DEFAULT_THRESHOLD = 0.8
DEFAULT_HEARTBEAT_MS = 500
DEFAULT_TIMEOUT_S = 10.0


class ConfigError(Exception):
    pass


class Role(Enum):
    GATEWAY = "Gateway"
    MASTER = "Master"
    WORKER = "Worker"


def parse_address(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise ConfigError(f"address must be host:port, got {text!r}")
    try:
        port_num = int(port)
    except ValueError:
        raise ConfigError(f"bad port in address {text!r}") from None
    if not 0 <= port_num <= 65535:
        raise ConfigError(f"port out of range in address {text!r}")
    return host, port_num


@dataclass(frozen=True)
class ColocatedActor:
    """An executor that lives inside the master process.

    It appears in the registry at the master's own address, so placement
    can pick it, but its load checks never touch the network.
    """

    node_id: str
    load_profile: tuple[float, ...] = (0.0,)


@dataclass(frozen=True)
class NodeConfig:
    role: Role
    node_id: str
    listen_address: str = ""
    master_address: str = ""
    heavy_load_threshold: float = DEFAULT_THRESHOLD
    cloud_enabled: bool = False
    cloud_address: str | None = None
    heartbeat_interval_ms: int = DEFAULT_HEARTBEAT_MS
    shared_secret: str = ""
    injected_hop_delay_ms: dict = field(default_factory=dict)
    load_profile: tuple[float, ...] | None = None
    colocated_actors: tuple[ColocatedActor, ...] = ()
    model_path: str | None = None
    request_timeout_s: float = DEFAULT_TIMEOUT_S

    def __post_init__(self):
        if not 0.0 < self.heavy_load_threshold <= 1.0:
            raise ConfigError(
                f"heavy_load_threshold must be in (0, 1], got {self.heavy_load_threshold}"
            )
        if self.role in (Role.GATEWAY, Role.WORKER) and not self.master_address:
            raise ConfigError(f"{self.role.value} nodes need a master_address")
        if self.role in (Role.MASTER, Role.WORKER) and not self.listen_address:
            raise ConfigError(f"{self.role.value} nodes need a listen_address")
        if self.cloud_enabled and not self.cloud_address:
            raise ConfigError("cloud_enabled needs a cloud_address")
        if self.heartbeat_interval_ms <= 0:
            raise ConfigError("heartbeat_interval_ms must be positive")
        for peer, delay in self.injected_hop_delay_ms.items():
            if not isinstance(peer, str) or delay < 0:
                raise ConfigError(f"bad delay entry {peer!r}: {delay!r}")

    def delay_ms_for(self, peer_node_id: str | None) -> float:
        """One-way injected delay toward a peer; '*' is the wildcard row."""
        table = self.injected_hop_delay_ms
        if peer_node_id is not None and peer_node_id in table:
            return float(table[peer_node_id])
        return float(table.get("*", 0.0))


def config_from_dict(doc: dict) -> NodeConfig:
    try:
        role = Role(doc["role"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad or missing role: {exc}") from exc
    known = {
        "listen_address",
        "master_address",
        "heavy_load_threshold",
        "cloud_enabled",
        "cloud_address",
        "heartbeat_interval_ms",
        "shared_secret",
        "injected_hop_delay_ms",
        "model_path",
        "request_timeout_s",
    }
    kwargs = {k: doc[k] for k in known if k in doc}
    if "load_profile" in doc and doc["load_profile"] is not None:
        kwargs["load_profile"] = tuple(float(v) for v in doc["load_profile"])
    if "colocated_actors" in doc:
        kwargs["colocated_actors"] = tuple(
            ColocatedActor(
                node_id=a["node_id"],
                load_profile=tuple(float(v) for v in a.get("load_profile", (0.0,))),
            )
            for a in doc["colocated_actors"]
        )
    try:
        return NodeConfig(role=role, node_id=str(doc["node_id"]), **kwargs)
    except KeyError as exc:
        raise ConfigError(f"missing config field: {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"bad config field: {exc}") from exc


def config_to_dict(cfg: NodeConfig) -> dict:
    return {
        "role": cfg.role.value,
        "node_id": cfg.node_id,
        "listen_address": cfg.listen_address,
        "master_address": cfg.master_address,
        "heavy_load_threshold": cfg.heavy_load_threshold,
        "cloud_enabled": cfg.cloud_enabled,
        "cloud_address": cfg.cloud_address,
        "heartbeat_interval_ms": cfg.heartbeat_interval_ms,
        "shared_secret": cfg.shared_secret,
        "injected_hop_delay_ms": dict(cfg.injected_hop_delay_ms),
        "load_profile": list(cfg.load_profile) if cfg.load_profile else None,
        "colocated_actors": [
            {"node_id": a.node_id, "load_profile": list(a.load_profile)}
            for a in cfg.colocated_actors
        ],
        "model_path": cfg.model_path,
        "request_timeout_s": cfg.request_timeout_s,
    }


def load_config(path) -> NodeConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such config file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    return config_from_dict(doc)
