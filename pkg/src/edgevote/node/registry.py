"""Master-side worker registry with heartbeat-based health tracking."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, replace

from ..protocol import LoadReport


@dataclass(frozen=True)
class WorkerEntry:
    worker_id: str
    address: str
    load: LoadReport | None
    last_seen: float
    colocated: bool = False

    def healthy(self, now: float, heartbeat_interval_ms: int) -> bool:
        """Alive while fewer than 3 heartbeat intervals have been missed."""
        if self.colocated:
            return True
        return (now - self.last_seen) * 1000.0 < 3 * heartbeat_interval_ms


class WorkerRegistry:
    """worker_id -> WorkerEntry map with exclusive writes, snapshot reads."""

    def __init__(self, heartbeat_interval_ms: int, clock=time.monotonic):
        self._entries: dict[str, WorkerEntry] = {}
        self._lock = threading.Lock()
        self._interval_ms = heartbeat_interval_ms
        self._clock = clock

    def register(self, worker_id: str, address: str, colocated: bool = False) -> None:
        with self._lock:
            self._entries[worker_id] = WorkerEntry(
                worker_id=worker_id,
                address=address,
                load=None,
                last_seen=self._clock(),
                colocated=colocated,
            )

    def update_load(self, worker_id: str, load: LoadReport) -> bool:
        """Record a load report; returns False for unregistered workers."""
        with self._lock:
            entry = self._entries.get(worker_id)
            if entry is None:
                return False
            now = self._clock()
            # last_seen is monotone: a late packet never rolls it back
            self._entries[worker_id] = replace(
                entry, load=load, last_seen=max(entry.last_seen, now)
            )
            return True

    def touch(self, worker_id: str) -> None:
        with self._lock:
            entry = self._entries.get(worker_id)
            if entry is not None:
                self._entries[worker_id] = replace(
                    entry, last_seen=max(entry.last_seen, self._clock())
                )

    def snapshot(self) -> tuple[WorkerEntry, ...]:
        """Point-in-time copy of all entries, ordered by worker_id."""
        with self._lock:
            return tuple(sorted(self._entries.values(), key=lambda e: e.worker_id))

    def healthy_entries(self) -> tuple[WorkerEntry, ...]:
        now = self._clock()
        return tuple(
            e for e in self.snapshot() if e.healthy(now, self._interval_ms)
        )

    @property
    def heartbeat_interval_ms(self) -> int:
        return self._interval_ms

    def now(self) -> float:
        return self._clock()
