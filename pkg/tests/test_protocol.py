"""Wire codec: framing, canonical encoding, authentication, error taxonomy."""

import json
import struct

import numpy as np
import pytest

from edgevote.protocol import (
    MAX_FRAME_BYTES,
    PROTOCOL_VERSION,
    BadAuthTag,
    BadLength,
    MalformedBody,
    Message,
    MsgType,
    PayloadTooLarge,
    ProtocolError,
    TrailingBytes,
    TruncatedFrame,
    UnknownType,
    VersionMismatch,
    decode,
    decode_stream,
    encode,
)
from edgevote.protocol import _compute_tag  # crafting bodies for decode tests
from helpers import random_message

SECRET = "test-secret"


def heartbeat(msg_id=1, sender="n1", payload=None):
    return Message(
        msg_type=MsgType.HEARTBEAT,
        msg_id=msg_id,
        sender_id=sender,
        payload=payload or {},
    )


def craft_body(version, token, msg_id, sender, payload, secret=SECRET, tag=None):
    """Hand-rolled frame with a freely chosen envelope."""
    if tag is None:
        tag = _compute_tag(version, token, msg_id, sender, payload, secret.encode())
    body = json.dumps(
        {
            "version": version,
            "msg_type": token,
            "msg_id": msg_id,
            "sender_id": sender,
            "auth_tag": tag,
            "payload": payload,
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode()
    return struct.pack("!I", len(body)) + body


class TestRoundTrip:
    def test_all_types(self):
        rng = np.random.default_rng(0)
        seen = set()
        for _ in range(200):
            msg = random_message(rng)
            seen.add(msg.msg_type)
            assert decode(encode(msg, SECRET), SECRET) == msg
        assert seen == set(MsgType)

    def test_length_prefix_matches_body(self):
        frame = encode(heartbeat(), SECRET)
        (declared,) = struct.unpack("!I", frame[:4])
        assert declared == len(frame) - 4

    def test_canonical_bytes_are_stable(self):
        a = Message(MsgType.ERROR, 5, "n1", {"code": "X", "detail": "d"})
        b = Message(MsgType.ERROR, 5, "n1", {"detail": "d", "code": "X"})
        assert encode(a, SECRET) == encode(b, SECRET)
        assert encode(a, SECRET) == encode(a, SECRET)

    def test_unicode_payload(self):
        msg = Message(MsgType.ERROR, 9, "nø", {"code": "E", "detail": "χαλάει"})
        assert decode(encode(msg, SECRET), SECRET) == msg


class TestFraming:
    def test_zero_length_prefix(self):
        with pytest.raises(BadLength):
            decode(struct.pack("!I", 0) + b"{}", SECRET)

    def test_oversize_length_prefix(self):
        with pytest.raises(BadLength):
            decode(struct.pack("!I", MAX_FRAME_BYTES + 1), SECRET)

    def test_truncated_header(self):
        with pytest.raises(TruncatedFrame):
            decode(b"\x00\x01", SECRET)

    def test_truncated_body(self):
        frame = encode(heartbeat(), SECRET)
        with pytest.raises(TruncatedFrame):
            decode(frame[:-3], SECRET)

    def test_trailing_bytes(self):
        frame = encode(heartbeat(), SECRET)
        with pytest.raises(TrailingBytes):
            decode(frame + b"x", SECRET)

    def test_payload_too_large(self):
        msg = Message(
            MsgType.ERROR, 1, "n1",
            {"code": "E", "detail": "x" * (MAX_FRAME_BYTES + 10)},
        )
        with pytest.raises(PayloadTooLarge):
            encode(msg, SECRET)

    def test_decode_stream_frames_and_tail(self):
        m1, m2 = heartbeat(1), heartbeat(2, payload={"ack_for": 7})
        buf = encode(m1, SECRET) + encode(m2, SECRET)
        tail = encode(heartbeat(3), SECRET)[:10]
        msgs, rest = decode_stream(buf + tail, SECRET)
        assert msgs == [m1, m2]
        assert rest == tail

    def test_decode_stream_empty(self):
        assert decode_stream(b"", SECRET) == ([], b"")


class TestAuthentication:
    def test_flipped_payload_byte(self):
        frame = bytearray(encode(heartbeat(payload={"ack_for": 41}), SECRET))
        at = frame.index(b'"ack_for":41') + len(b'"ack_for":4')
        frame[at] ^= 0x01
        with pytest.raises(BadAuthTag):
            decode(bytes(frame), SECRET)

    def test_wrong_secret(self):
        frame = encode(heartbeat(), SECRET)
        with pytest.raises(BadAuthTag):
            decode(frame, "other-secret")

    def test_forged_tag(self):
        frame = craft_body(
            PROTOCOL_VERSION, "Heartbeat", 1, "n1", {}, tag="0" * 64
        )
        with pytest.raises(BadAuthTag):
            decode(frame, SECRET)

    def test_tampered_sender(self):
        frame = encode(Message(MsgType.HEARTBEAT, 1, "aa"), SECRET)
        with pytest.raises(BadAuthTag):
            decode(frame.replace(b'"sender_id":"aa"', b'"sender_id":"ab"'), SECRET)


class TestEnvelope:
    def test_version_mismatch(self):
        frame = craft_body(PROTOCOL_VERSION + 1, "Heartbeat", 1, "n1", {})
        with pytest.raises(VersionMismatch):
            decode(frame, SECRET)

    def test_unknown_type_names_the_token(self):
        frame = craft_body(PROTOCOL_VERSION, "Gossip", 1, "n1", {})
        with pytest.raises(UnknownType) as exc:
            decode(frame, SECRET)
        assert "Gossip" in str(exc.value)

    def test_not_json(self):
        body = b"this is not json at all, sorry"
        with pytest.raises(MalformedBody):
            decode(struct.pack("!I", len(body)) + body, SECRET)

    def test_missing_envelope_field(self):
        body = json.dumps({"version": 1, "msg_type": "Heartbeat"}).encode()
        with pytest.raises(MalformedBody):
            decode(struct.pack("!I", len(body)) + body, SECRET)

    def test_invalid_utf8(self):
        body = b'{"version":1,\xff\xfe}'
        with pytest.raises(MalformedBody):
            decode(struct.pack("!I", len(body)) + body, SECRET)


class TestPayloadSchemas:
    def test_missing_key_rejected_at_encode(self):
        msg = Message(MsgType.REGISTER_WORKER, 1, "w1", {"worker_id": "w1"})
        with pytest.raises(MalformedBody) as exc:
            encode(msg, SECRET)
        assert "address" in str(exc.value)

    def test_extra_key_rejected_at_encode(self):
        msg = Message(MsgType.LOAD_QUERY, 1, "m", {"surprise": 1})
        with pytest.raises(MalformedBody):
            encode(msg, SECRET)

    def test_missing_key_rejected_at_decode(self):
        frame = craft_body(
            PROTOCOL_VERSION, "RegisterWorker", 1, "w1", {"worker_id": "w1"}
        )
        with pytest.raises(MalformedBody):
            decode(frame, SECRET)

    def test_load_report_range_checked(self):
        payload = {"cpu_load": 1.5, "mem_load": 0.1, "queue_length": 0, "taken_at": 0}
        with pytest.raises(MalformedBody):
            encode(Message(MsgType.LOAD_REPORT, 1, "w1", payload), SECRET)

    def test_dispatch_needs_exactly_one_model_source(self):
        base = {"job_id": "j", "kind": "predict", "csv": "x\n"}
        both = dict(base, model_ref="default", ensemble={"a": 1})
        neither = dict(base, model_ref=None, ensemble=None)
        for payload in (both, neither):
            with pytest.raises(MalformedBody):
                encode(Message(MsgType.TASK_DISPATCH, 1, "g", payload), SECRET)

    def test_cloud_placement_must_set_via_cloud(self):
        payload = {
            "job_id": "j", "decision": "Cloud", "target_address": "a:1",
            "target_node_id": "cloud", "via_cloud": False, "arbitration_ms": 1.0,
        }
        with pytest.raises(MalformedBody):
            encode(Message(MsgType.PLACEMENT_RESPONSE, 1, "m", payload), SECRET)
