from .arbitration import Placement, arbitrate
from .config import (
    ColocatedActor,
    ConfigError,
    NodeConfig,
    Role,
    config_from_dict,
    config_to_dict,
    load_config,
    parse_address,
)
from .executor import Executor, TaskFailure, system_load
from .gateway import (
    DispatchTimeout,
    Gateway,
    GatewayError,
    PlacementTimeout,
    ResultMismatch,
)
from .jobs import IllegalTransition, JobRecord, JobState
from .master import MasterServer, WorkerTrainingFailure, run_master
from .registry import WorkerEntry, WorkerRegistry
from .transport import (
    BindFailure,
    MessageServer,
    PeerUnreachable,
    RequestTimeout,
    TransportError,
    fire_and_forget,
    make_message,
    request,
)
from .worker import MasterUnreachable, WorkerServer, run_worker

__all__ = [
    "BindFailure",
    "ColocatedActor",
    "ConfigError",
    "DispatchTimeout",
    "Executor",
    "Gateway",
    "GatewayError",
    "IllegalTransition",
    "JobRecord",
    "JobState",
    "MasterServer",
    "MasterUnreachable",
    "MessageServer",
    "NodeConfig",
    "PeerUnreachable",
    "Placement",
    "PlacementTimeout",
    "RequestTimeout",
    "ResultMismatch",
    "Role",
    "TaskFailure",
    "TransportError",
    "WorkerEntry",
    "WorkerRegistry",
    "WorkerServer",
    "WorkerTrainingFailure",
    "arbitrate",
    "config_from_dict",
    "config_to_dict",
    "fire_and_forget",
    "load_config",
    "make_message",
    "parse_address",
    "request",
    "run_master",
    "run_worker",
    "system_load",
]
