"""Wire protocol for gateway, broker, and worker nodes.

Frame layout: a 4-byte big-endian unsigned length N followed by N bytes
of UTF-8 JSON (canonical form: sorted keys, no whitespace). The envelope
carries an HMAC-SHA256 hex tag computed with a pre-shared secret over
every field except the tag itself, so any body tampering is detected.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import struct
from dataclasses import dataclass, field
from enum import Enum

PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 64 * 1024 * 1024
_HEADER = struct.Struct("!I")
_TAG_LEN = 64  # hex sha256
_MAX_MSG_ID = 2**64 - 1


class ProtocolError(Exception):
    pass


class TruncatedFrame(ProtocolError):
    """Fewer bytes than the header or the declared length requires."""


class TrailingBytes(ProtocolError):
    """A single-frame decode was handed more than one frame's bytes."""


class BadLength(ProtocolError):
    """Length prefix of 0 or beyond the 64 MiB cap."""


class MalformedBody(ProtocolError):
    """Body is not canonical JSON with the expected structure."""


class UnknownType(ProtocolError):
    """msg_type token outside the known enum."""


class BadAuthTag(ProtocolError):
    """HMAC verification failed."""


class VersionMismatch(ProtocolError):
    pass


class PayloadTooLarge(ProtocolError):
    """Encoded body would exceed the 64 MiB frame cap."""


class MsgType(Enum):
    REGISTER_WORKER = "RegisterWorker"
    LOAD_QUERY = "LoadQuery"
    LOAD_REPORT = "LoadReport"
    JOB_REQUEST = "JobRequest"
    PLACEMENT_RESPONSE = "PlacementResponse"
    TASK_DISPATCH = "TaskDispatch"
    TASK_RESULT = "TaskResult"
    HEARTBEAT = "Heartbeat"
    ERROR = "Error"


class PlacementDecision(Enum):
    WORKER = "Worker"
    BROKER_SELF = "BrokerSelf"
    CLOUD = "Cloud"


@dataclass(frozen=True)
class Message:
    """One protocol message. The auth tag exists only on the wire; it is
    derived from the secret at encode time and checked at decode time."""

    msg_type: MsgType
    msg_id: int
    sender_id: str
    payload: dict = field(default_factory=dict)
    version: int = PROTOCOL_VERSION


@dataclass(frozen=True)
class LoadReport:
    """Worker load snapshot: fractions in [0,1], queue length >= 0."""

    cpu_load: float
    mem_load: float
    queue_length: int
    taken_at: float

    def __post_init__(self):
        if not (0.0 <= self.cpu_load <= 1.0 and 0.0 <= self.mem_load <= 1.0):
            raise ValueError(f"load fractions out of range: {self}")
        if self.queue_length < 0:
            raise ValueError(f"negative queue length: {self.queue_length}")

    def to_payload(self) -> dict:
        return {
            "cpu_load": self.cpu_load,
            "mem_load": self.mem_load,
            "queue_length": self.queue_length,
            "taken_at": self.taken_at,
        }

    @classmethod
    def from_payload(cls, p: dict) -> "LoadReport":
        return cls(
            cpu_load=float(p["cpu_load"]),
            mem_load=float(p["mem_load"]),
            queue_length=int(p["queue_length"]),
            taken_at=float(p["taken_at"]),
        )


# ---------------------------------------------------------------------------
# payload schemas
# ---------------------------------------------------------------------------

_number = (int, float)


def _is_fraction(v) -> bool:
    return isinstance(v, _number) and not isinstance(v, bool) and 0.0 <= v <= 1.0


def _is_number(v, minimum=None) -> bool:
    if not isinstance(v, _number) or isinstance(v, bool):
        return False
    return minimum is None or v >= minimum


def _is_text(v) -> bool:
    return isinstance(v, str)


def _check_keys(payload: dict, required: dict, optional: dict = None):
    optional = optional or {}
    allowed = set(required) | set(optional)
    missing = set(required) - set(payload)
    extra = set(payload) - allowed
    if missing or extra:
        raise MalformedBody(
            f"payload keys off schema: missing={sorted(missing)} extra={sorted(extra)}"
        )
    for key, check in {**required, **optional}.items():
        if key in payload and not check(payload[key]):
            raise MalformedBody(f"payload field {key!r} rejected: {payload[key]!r}")


def _check_register_worker(p):
    _check_keys(p, {"worker_id": _is_text, "address": _is_text})


def _check_load_query(p):
    _check_keys(p, {})


def _check_load_report(p):
    _check_keys(
        p,
        {
            "cpu_load": _is_fraction,
            "mem_load": _is_fraction,
            "queue_length": lambda v: isinstance(v, int) and not isinstance(v, bool) and v >= 0,
            "taken_at": lambda v: _is_number(v, 0),
        },
    )


def _check_job_request(p):
    _check_keys(p, {"job_id": _is_text})


def _check_placement_response(p):
    decisions = {d.value for d in PlacementDecision}
    _check_keys(
        p,
        {
            "job_id": _is_text,
            "decision": lambda v: v in decisions,
            "target_address": _is_text,
            "via_cloud": lambda v: isinstance(v, bool),
            "target_node_id": _is_text,
            "arbitration_ms": lambda v: _is_number(v, 0),
        },
    )
    if p["decision"] == PlacementDecision.CLOUD.value and not p["via_cloud"]:
        raise MalformedBody("Cloud placement must set via_cloud")


def _check_task_dispatch(p):
    kind = p.get("kind")
    if kind == "predict":
        _check_keys(
            p,
            {
                "job_id": _is_text,
                "kind": lambda v: v == "predict",
                "csv": _is_text,
                "model_ref": lambda v: v is None or _is_text(v),
                "ensemble": lambda v: v is None or isinstance(v, dict),
            },
        )
        if (p["model_ref"] is None) == (p["ensemble"] is None):
            raise MalformedBody("dispatch needs exactly one of model_ref/ensemble")
    elif kind == "train":
        _check_keys(
            p,
            {
                "job_id": _is_text,
                "kind": lambda v: v == "train",
                "algorithm": _is_text,
                "hp": lambda v: isinstance(v, dict),
                "csv": _is_text,
                "val_csv": _is_text,
            },
        )
    else:
        raise MalformedBody(f"unknown dispatch kind: {kind!r}")


def _check_prediction_entry(v) -> bool:
    return (
        isinstance(v, dict)
        and set(v) == {"label", "probs"}
        and isinstance(v["label"], int)
        and not isinstance(v["label"], bool)
        and v["label"] in (0, 1)
        and isinstance(v["probs"], list)
        and len(v["probs"]) == 2
        and all(_is_fraction(x) for x in v["probs"])
    )


def _check_task_result(p):
    _check_keys(
        p,
        {
            "job_id": _is_text,
            "worker_id": _is_text,
            "execution_ms": lambda v: _is_number(v, 0),
        },
        optional={
            "predictions": lambda v: isinstance(v, list)
            and all(_check_prediction_entry(e) for e in v),
            "model": lambda v: isinstance(v, dict),
        },
    )
    if ("predictions" in p) == ("model" in p):
        raise MalformedBody("result needs exactly one of predictions/model")


def _check_heartbeat(p):
    _check_keys(p, {}, optional={"ack_for": lambda v: isinstance(v, int)})


def _check_error(p):
    _check_keys(
        p,
        {"code": _is_text, "detail": _is_text},
        optional={"job_id": lambda v: v is None or _is_text(v)},
    )


_PAYLOAD_CHECKS = {
    MsgType.REGISTER_WORKER: _check_register_worker,
    MsgType.LOAD_QUERY: _check_load_query,
    MsgType.LOAD_REPORT: _check_load_report,
    MsgType.JOB_REQUEST: _check_job_request,
    MsgType.PLACEMENT_RESPONSE: _check_placement_response,
    MsgType.TASK_DISPATCH: _check_task_dispatch,
    MsgType.TASK_RESULT: _check_task_result,
    MsgType.HEARTBEAT: _check_heartbeat,
    MsgType.ERROR: _check_error,
}

_ENVELOPE_KEYS = {"version", "msg_type", "msg_id", "sender_id", "auth_tag", "payload"}


# ---------------------------------------------------------------------------
# codec
# ---------------------------------------------------------------------------


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _compute_tag(version, msg_type_token, msg_id, sender_id, payload, secret: bytes) -> str:
    signed = _canonical(
        {
            "version": version,
            "msg_type": msg_type_token,
            "msg_id": msg_id,
            "sender_id": sender_id,
            "payload": payload,
        }
    )
    return hmac.new(secret, signed.encode("utf-8"), hashlib.sha256).hexdigest()


def _as_secret(secret) -> bytes:
    return secret.encode("utf-8") if isinstance(secret, str) else bytes(secret)


def encode(msg: Message, secret) -> bytes:
    """Frame a message: length prefix + canonical JSON body with auth tag."""
    check = _PAYLOAD_CHECKS.get(msg.msg_type)
    if check is None:
        raise UnknownType(f"unknown msg_type: {msg.msg_type!r}")
    check(msg.payload)
    if not (0 <= msg.msg_id <= _MAX_MSG_ID):
        raise MalformedBody(f"msg_id out of 64-bit range: {msg.msg_id}")
    tag = _compute_tag(
        msg.version, msg.msg_type.value, msg.msg_id, msg.sender_id, msg.payload,
        _as_secret(secret),
    )
    body = _canonical(
        {
            "version": msg.version,
            "msg_type": msg.msg_type.value,
            "msg_id": msg.msg_id,
            "sender_id": msg.sender_id,
            "auth_tag": tag,
            "payload": msg.payload,
        }
    ).encode("utf-8")
    if len(body) > MAX_FRAME_BYTES:
        raise PayloadTooLarge(f"{len(body)} bytes exceeds {MAX_FRAME_BYTES}")
    return _HEADER.pack(len(body)) + body


def _split_frame(data: bytes) -> tuple[bytes, bytes]:
    if len(data) < _HEADER.size:
        raise TruncatedFrame(f"{len(data)} bytes is shorter than the frame header")
    (length,) = _HEADER.unpack_from(data)
    if length == 0 or length > MAX_FRAME_BYTES:
        raise BadLength(f"declared body length {length}")
    body = data[_HEADER.size : _HEADER.size + length]
    if len(body) < length:
        raise TruncatedFrame(f"body has {len(body)} of {length} declared bytes")
    return body, data[_HEADER.size + length :]


def _decode_body(body: bytes, secret: bytes) -> Message:
    try:
        text = body.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedBody(f"body is not UTF-8: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedBody(f"body is not JSON: {exc}") from exc
    if not isinstance(doc, dict) or set(doc) != _ENVELOPE_KEYS:
        raise MalformedBody("envelope must have exactly the six envelope fields")
    version, token, msg_id = doc["version"], doc["msg_type"], doc["msg_id"]
    sender_id, tag, payload = doc["sender_id"], doc["auth_tag"], doc["payload"]
    if not isinstance(version, int) or isinstance(version, bool):
        raise MalformedBody(f"version must be an integer: {version!r}")
    if not isinstance(token, str):
        raise MalformedBody("msg_type must be text")
    if not isinstance(msg_id, int) or isinstance(msg_id, bool) or not (
        0 <= msg_id <= _MAX_MSG_ID
    ):
        raise MalformedBody(f"msg_id must be a 64-bit integer: {msg_id!r}")
    if not isinstance(sender_id, str):
        raise MalformedBody("sender_id must be text")
    if not isinstance(tag, str) or len(tag) != _TAG_LEN or any(
        c not in "0123456789abcdef" for c in tag
    ):
        raise MalformedBody("auth_tag must be 64 lowercase hex characters")
    if not isinstance(payload, dict):
        raise MalformedBody("payload must be an object")
    if version != PROTOCOL_VERSION:
        raise VersionMismatch(f"version {version}, this peer speaks {PROTOCOL_VERSION}")
    expected = _compute_tag(version, token, msg_id, sender_id, payload, secret)
    if not hmac.compare_digest(expected, tag):
        raise BadAuthTag("auth tag does not verify")
    try:
        msg_type = MsgType(token)
    except ValueError:
        raise UnknownType(f"unknown msg_type token: {token!r}") from None
    _PAYLOAD_CHECKS[msg_type](payload)
    return Message(
        msg_type=msg_type,
        msg_id=msg_id,
        sender_id=sender_id,
        payload=payload,
        version=version,
    )


def decode(data: bytes, secret) -> Message:
    """Decode exactly one frame; extra bytes after it are an error."""
    body, rest = _split_frame(data)
    if rest:
        raise TrailingBytes(f"{len(rest)} bytes after the first frame")
    return _decode_body(body, _as_secret(secret))


def decode_stream(data: bytes, secret) -> tuple[list[Message], bytes]:
    """Decode every complete frame in a buffer.

    Returns the messages and the unconsumed tail (a partial frame, or
    empty). Raises on the first malformed frame.
    """
    secret = _as_secret(secret)
    messages = []
    while data:
        if len(data) < _HEADER.size:
            break
        (length,) = _HEADER.unpack_from(data)
        if length == 0 or length > MAX_FRAME_BYTES:
            raise BadLength(f"declared body length {length}")
        if len(data) - _HEADER.size < length:
            break
        body, data = _split_frame(data)
        messages.append(_decode_body(body, secret))
    return messages, data
