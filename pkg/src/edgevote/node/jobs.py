"""Per-job lifecycle record: forward-only state machine."""

from __future__ import annotations

import time
from enum import Enum


class IllegalTransition(Exception):
    pass


class JobState(Enum):
    RECEIVED = "Received"
    ARBITRATING = "Arbitrating"
    DISPATCHED = "Dispatched"
    COMPLETED = "Completed"
    FAILED = "Failed"


_ORDER = {
    JobState.RECEIVED: 0,
    JobState.ARBITRATING: 1,
    JobState.DISPATCHED: 2,
    JobState.COMPLETED: 3,
}
_TERMINAL = {JobState.COMPLETED, JobState.FAILED}


class JobRecord:
    """Tracks one job from receipt to completion.

    States advance strictly forward through Received, Arbitrating,
    Dispatched, Completed; Failed is reachable from any non-terminal
    state. Every transition is timestamped.
    """

    def __init__(self, job_id: str, gateway_id: str, clock=time.monotonic):
        self.job_id = job_id
        self.gateway_id = gateway_id
        self.placement = None
        self._clock = clock
        self.state = JobState.RECEIVED
        self.timestamps = {JobState.RECEIVED: clock()}

    def advance(self, new_state: JobState) -> None:
        if self.state in _TERMINAL:
            raise IllegalTransition(f"{self.job_id}: {self.state.value} is terminal")
        if new_state is JobState.FAILED:
            pass  # permitted from any non-terminal state
        elif new_state not in _ORDER or _ORDER[new_state] <= _ORDER[self.state]:
            raise IllegalTransition(
                f"{self.job_id}: {self.state.value} -> {new_state.value}"
            )
        self.state = new_state
        self.timestamps[new_state] = self._clock()
