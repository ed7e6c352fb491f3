"""Framed TCP transport with per-peer delay injection.

One connection carries one request and at most one reply, which keeps
per-job message ordering trivial. Injected delays sleep before each
send, so a link configured with d ms adds d per direction.
"""

from __future__ import annotations

import itertools
import socket
import socketserver
import threading
import time

from ..protocol import MAX_FRAME_BYTES, Message, MsgType, decode, encode
from .config import parse_address


class TransportError(Exception):
    pass


class RequestTimeout(TransportError):
    """No reply within the allotted time."""


class PeerUnreachable(TransportError):
    pass


class BindFailure(TransportError):
    """Listen address could not be bound."""


_HEADER_LEN = 4
_msg_ids = itertools.count(1)


def next_msg_id() -> int:
    return next(_msg_ids)


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = sock.recv(min(remaining, 65536))
        if not chunk:
            raise TransportError(f"connection closed with {remaining} bytes pending")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def send_frame(sock: socket.socket, msg: Message, secret, delay_ms: float = 0.0) -> int:
    """Encode and send one message; returns bytes sent on the wire."""
    data = encode(msg, secret)
    if delay_ms > 0:
        time.sleep(delay_ms / 1000.0)
    sock.sendall(data)
    return len(data)


def recv_frame(sock: socket.socket, secret) -> tuple[Message, int]:
    """Receive exactly one frame; returns (message, bytes received)."""
    header = _recv_exact(sock, _HEADER_LEN)
    length = int.from_bytes(header, "big")
    if length == 0 or length > MAX_FRAME_BYTES:
        # let decode() raise the typed error with the same diagnosis
        return decode(header, secret), _HEADER_LEN
    body = _recv_exact(sock, length)
    return decode(header + body, secret), _HEADER_LEN + length


def request(
    address: str,
    msg: Message,
    secret,
    timeout_s: float,
    delay_ms: float = 0.0,
) -> tuple[Message, int, int]:
    """Connect, send one message, wait for one reply, close.

    Returns (reply, bytes_sent, bytes_received). Timeouts raise
    RequestTimeout; refused/failed connections raise PeerUnreachable.
    """
    host, port = parse_address(address)
    try:
        sock = socket.create_connection((host, port), timeout=timeout_s)
    except socket.timeout as exc:
        raise RequestTimeout(f"connecting to {address}: {exc}") from exc
    except OSError as exc:
        raise PeerUnreachable(f"connecting to {address}: {exc}") from exc
    try:
        sock.settimeout(timeout_s)
        sent = send_frame(sock, msg, secret, delay_ms)
        try:
            reply, received = recv_frame(sock, secret)
        except socket.timeout as exc:
            raise RequestTimeout(f"waiting on {address}: {exc}") from exc
        except TransportError as exc:
            raise PeerUnreachable(f"reply from {address}: {exc}") from exc
        return reply, sent, received
    finally:
        sock.close()


def fire_and_forget(address: str, msg: Message, secret, timeout_s: float, delay_ms=0.0) -> int:
    """Send without waiting for a reply (used only where loss is benign)."""
    host, port = parse_address(address)
    try:
        with socket.create_connection((host, port), timeout=timeout_s) as sock:
            return send_frame(sock, msg, secret, delay_ms)
    except OSError as exc:
        raise PeerUnreachable(f"sending to {address}: {exc}") from exc


class MessageServer:
    """Threaded one-request-per-connection server.

    The handler receives the decoded Message and returns a reply Message
    or None; the server applies the reply delay for the requesting peer
    (looked up by the request's sender_id) before sending.
    """

    def __init__(self, listen_address: str, secret, handler, delay_lookup=None):
        self._secret = secret
        self._handler = handler
        self._delay_lookup = delay_lookup or (lambda peer: 0.0)
        host, port = parse_address(listen_address)
        outer = self

        class _Handler(socketserver.BaseRequestHandler):
            def handle(self):
                try:
                    msg, _ = recv_frame(self.request, outer._secret)
                except Exception:
                    return  # malformed or unauthenticated peers get silence
                reply = outer._handler(msg)
                if reply is not None:
                    delay = outer._delay_lookup(msg.sender_id)
                    try:
                        send_frame(self.request, reply, outer._secret, delay)
                    except OSError:
                        pass

        class _Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        try:
            self._server = _Server((host, port), _Handler)
        except OSError as exc:
            raise BindFailure(f"cannot bind {listen_address}: {exc}") from exc
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def address(self) -> str:
        host, port = self._server.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()


def make_message(msg_type: MsgType, payload: dict, sender_id: str) -> Message:
    return Message(
        msg_type=msg_type,
        msg_id=next_msg_id(),
        sender_id=sender_id,
        payload=payload,
    )
