"""Deployment scenario descriptions: node layout, links, and delays."""

from __future__ import annotations

from dataclasses import dataclass

from .records import BenchError


class UnknownPreset(BenchError):
    pass


@dataclass(frozen=True)
class NodeSpec:
    """One OS process in a scenario.

    Masters may carry colocated executors: (actor_id, load_profile) pairs
    that share the master process and address.
    """

    node_id: str
    role: str  # "gateway" | "master" | "worker"
    load_profile: tuple[float, ...] = ()
    colocated: tuple[tuple[str, tuple[float, ...]], ...] = ()


@dataclass(frozen=True)
class LinkSpec:
    """Injected one-way delay between two nodes: delay_ms per hop x hops."""

    a: str
    b: str
    delay_ms: float
    hops: int = 1

    @property
    def one_way_ms(self) -> float:
        return self.delay_ms * self.hops


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    nodes: tuple[NodeSpec, ...]
    links: tuple[LinkSpec, ...] = ()
    cloud_enabled: bool = False
    combo: str = "svm-dt-lr"
    mode: str = "hard"
    repetitions: int = 30
    seed: int = 0
    warmup: int = 2
    rows_per_job: int = 10
    heavy_load_threshold: float = 0.8
    heartbeat_interval_ms: int = 500

    def __post_init__(self):
        gateways = [n for n in self.nodes if n.role == "gateway"]
        masters = [n for n in self.nodes if n.role == "master"]
        if not gateways:
            raise BenchError("a scenario needs at least one gateway")
        if len(masters) != 1:
            raise BenchError(f"a scenario needs exactly one master, got {len(masters)}")
        if any(l.delay_ms < 0 or l.hops < 1 for l in self.links):
            raise BenchError("links need delay_ms >= 0 and hops >= 1")
        if self.repetitions < 1:
            raise BenchError("repetitions must be >= 1")
        ids = [n.node_id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise BenchError(f"duplicate node ids: {ids}")

    def delay_map_for(self, node_id: str) -> dict[str, float]:
        """Per-peer one-way delays this node applies to its own sends."""
        table: dict[str, float] = {}
        for link in self.links:
            if link.a == node_id:
                table[link.b] = link.one_way_ms
            elif link.b == node_id:
                table[link.a] = link.one_way_ms
        return table


# Scripted CPU profiles. The edge presets share one set so that the
# placement sequence a master computes is comparable between layouts;
# every value sits below the 0.8 threshold, so jobs stay on workers.
_EDGE_PROFILES = {
    "actor0": (0.35, 0.55, 0.25, 0.6, 0.3, 0.45),
    "actor1": (0.25, 0.5, 0.4, 0.2, 0.65, 0.35),
    "actor2": (0.55, 0.3, 0.6, 0.4, 0.2, 0.5),
}

# The remote-cluster preset models an offloaded deployment: far away in
# hops but on lightly loaded hardware.
_CLOUD_PROFILES = {
    "actor0": (0.05, 0.1, 0.08, 0.04, 0.07, 0.06),
    "actor1": (0.04, 0.09, 0.06, 0.08, 0.03, 0.05),
    "actor2": (0.07, 0.05, 0.1, 0.03, 0.06, 0.04),
}

_EDGE_HOP_MS = 5.0
_CLOUD_HOP_MS = 20.0
_CLOUD_HOPS = 2


def _pairwise_links(ids, delay_ms, hops=1):
    out = []
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            out.append(LinkSpec(a, b, delay_ms, hops))
    return tuple(out)


def preset(name: str) -> ScenarioConfig:
    """Canned deployment layouts used by the benchmark CLI."""
    if name == "a_bcd":
        # four processes: user, master carrying actor0, two remote workers
        nodes = (
            NodeSpec("gw", "gateway"),
            NodeSpec("master", "master", colocated=(("actor0", _EDGE_PROFILES["actor0"]),)),
            NodeSpec("actor1", "worker", load_profile=_EDGE_PROFILES["actor1"]),
            NodeSpec("actor2", "worker", load_profile=_EDGE_PROFILES["actor2"]),
        )
        links = _pairwise_links(["gw", "master", "actor1", "actor2"], _EDGE_HOP_MS)
        return ScenarioConfig(name=name, nodes=nodes, links=links)
    if name == "a_b":
        # two processes: user, and one master process holding all three
        # executors, so inter-actor traffic never leaves the process
        nodes = (
            NodeSpec("gw", "gateway"),
            NodeSpec(
                "master",
                "master",
                colocated=(
                    ("actor0", _EDGE_PROFILES["actor0"]),
                    ("actor1", _EDGE_PROFILES["actor1"]),
                    ("actor2", _EDGE_PROFILES["actor2"]),
                ),
            ),
        )
        links = (LinkSpec("gw", "master", _EDGE_HOP_MS),)
        return ScenarioConfig(name=name, nodes=nodes, links=links)
    if name == "a_cloud_bcd":
        # user reaches a remote cluster over multiple hops; the cluster's
        # internal links are free and its machines are nearly idle
        nodes = (
            NodeSpec("gw", "gateway"),
            NodeSpec("master", "master", colocated=(("actor0", _CLOUD_PROFILES["actor0"]),)),
            NodeSpec("actor1", "worker", load_profile=_CLOUD_PROFILES["actor1"]),
            NodeSpec("actor2", "worker", load_profile=_CLOUD_PROFILES["actor2"]),
        )
        links = (
            LinkSpec("gw", "master", _CLOUD_HOP_MS, _CLOUD_HOPS),
            LinkSpec("gw", "actor1", _CLOUD_HOP_MS, _CLOUD_HOPS),
            LinkSpec("gw", "actor2", _CLOUD_HOP_MS, _CLOUD_HOPS),
            LinkSpec("master", "actor1", 0.0),
            LinkSpec("master", "actor2", 0.0),
            LinkSpec("actor1", "actor2", 0.0),
        )
        return ScenarioConfig(name=name, nodes=nodes, links=links)
    raise UnknownPreset(f"no preset named {name!r}")
