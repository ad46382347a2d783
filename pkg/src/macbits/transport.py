"""Message framing and duplex channels (in-memory pair and TCP).

Frame layout on the wire: 1 byte message type, 4 bytes big-endian payload
length, payload. Both channel flavors count frames and bytes per direction;
the online phase asserts its exact communication footprint from these
counters.
"""

from __future__ import annotations

import enum
import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass, field

from .errors import ProtocolError, TransportError, UsageError

PROTOCOL_VERSION = 1
SESSION_ID_BYTES = 16
FRAME_HEADER_BYTES = 5
MAX_PAYLOAD = (1 << 32) - 1


class Role(enum.Enum):
    ALICE = 0
    BOB = 1

    @property
    def other(self) -> "Role":
        return Role.BOB if self is Role.ALICE else Role.ALICE

    def __str__(self):
        return "alice" if self is Role.ALICE else "bob"


class MsgType(enum.IntEnum):
    HELLO = 1
    EQ_COMMIT = 2
    EQ_VALUE = 3
    EQ_OPEN = 4
    OT_SETUP = 5
    OT_MASKED0 = 6
    OT_MASKED1 = 7
    LABIT_PAIRING = 8
    LABIT_D = 9
    AMPLIFY_MATRIX = 10
    ROT_MASK0 = 11
    ROT_MASK1 = 12
    LAOT_X0 = 13
    LAOT_X1 = 14
    LAOT_D = 15
    LAOT_I0 = 16
    LAOT_I1 = 17
    COMB_PERM = 18
    COMB_D = 19
    LAAND_D = 20
    LAAND_U = 21
    GK_COMMIT = 22
    RT_ANNOUNCE_BATCH = 23
    RT_REVEAL_BATCH = 24
    RT_ACC_FLUSH = 25
    RT_OUTPUT = 26


@dataclass(frozen=True)
class Message:
    msg_type: MsgType
    payload: bytes


@dataclass
class ChannelStats:
    frames_sent: int = 0
    frames_received: int = 0
    bytes_sent: int = 0
    bytes_received: int = 0


class Channel:
    """Reliable ordered duplex message channel."""

    def __init__(self):
        self.stats = ChannelStats()
        # Session parameters, populated by perform_hello.
        self.role = None
        self.kappa = None
        self.psi = None
        self.session_id = None

    # subclasses implement _send_frame / _recv_frame / close

    def send(self, msg_type: MsgType, payload: bytes) -> None:
        if len(payload) > MAX_PAYLOAD:
            raise UsageError("payload too large for frame")
        self._send_frame(MsgType(msg_type), bytes(payload))
        self.stats.frames_sent += 1
        self.stats.bytes_sent += FRAME_HEADER_BYTES + len(payload)

    def recv(self, expected: MsgType) -> bytes:
        msg = self._recv_frame()
        self.stats.frames_received += 1
        self.stats.bytes_received += FRAME_HEADER_BYTES + len(msg.payload)
        if msg.msg_type != expected:
            raise ProtocolError(
                f"expected {MsgType(expected).name}, got {msg.msg_type.name}"
            )
        return msg.payload

    def close(self) -> None:
        raise NotImplementedError


class MemoryChannel(Channel):
    """One endpoint of an in-process channel pair."""

    _CLOSED = object()

    def __init__(self, inbox: queue.Queue, outbox: queue.Queue, timeout: float):
        super().__init__()
        self._inbox = inbox
        self._outbox = outbox
        self._timeout = timeout
        self._closed = False

    def _send_frame(self, msg_type: MsgType, payload: bytes) -> None:
        if self._closed:
            raise TransportError("send on closed channel")
        self._outbox.put(Message(msg_type, payload))

    def _recv_frame(self) -> Message:
        if self._closed:
            raise TransportError("recv on closed channel")
        try:
            item = self._inbox.get(timeout=self._timeout)
        except queue.Empty:
            raise TransportError(f"recv timed out after {self._timeout}s") from None
        if item is self._CLOSED:
            raise TransportError("peer closed the channel")
        return item

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._outbox.put(self._CLOSED)


def memory_pair(timeout: float = 120.0):
    """Two connected MemoryChannel endpoints."""
    ab, ba = queue.Queue(), queue.Queue()
    return MemoryChannel(ba, ab, timeout), MemoryChannel(ab, ba, timeout)


class TcpChannel(Channel):
    def __init__(self, sock: socket.socket, timeout: float):
        super().__init__()
        self._sock = sock
        self._sock.settimeout(timeout)
        self._send_lock = threading.Lock()
        self._recv_lock = threading.Lock()
        self._closed = False

    def _send_frame(self, msg_type: MsgType, payload: bytes) -> None:
        frame = struct.pack(">BI", int(msg_type), len(payload)) + payload
        try:
            with self._send_lock:
                self._sock.sendall(frame)
        except OSError as e:
            raise TransportError(f"send failed: {e}") from None

    def _recv_exact(self, n: int) -> bytes:
        buf = bytearray()
        while len(buf) < n:
            try:
                chunk = self._sock.recv(n - len(buf))
            except socket.timeout:
                raise TransportError("recv timed out") from None
            except OSError as e:
                raise TransportError(f"recv failed: {e}") from None
            if not chunk:
                raise TransportError("peer closed the connection")
            buf += chunk
        return bytes(buf)

    def _recv_frame(self) -> Message:
        with self._recv_lock:
            hdr = self._recv_exact(FRAME_HEADER_BYTES)
            t, n = struct.unpack(">BI", hdr)
            payload = self._recv_exact(n) if n else b""
        try:
            mt = MsgType(t)
        except ValueError:
            raise ProtocolError(f"unknown message type {t}") from None
        return Message(mt, payload)

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            try:
                self._sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self._sock.close()


def tcp_listen(host: str, port: int, timeout: float = 120.0) -> TcpChannel:
    """Accept one peer connection and wrap it."""
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    srv.bind((host, port))
    srv.listen(1)
    srv.settimeout(timeout)
    try:
        conn, _ = srv.accept()
    except socket.timeout:
        raise TransportError("no peer connected before timeout") from None
    finally:
        srv.close()
    conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    return TcpChannel(conn, timeout)


def tcp_connect(host: str, port: int, timeout: float = 120.0, retry_for: float = 10.0) -> TcpChannel:
    """Connect to a listening peer, retrying briefly so start order is free."""
    deadline = time.monotonic() + retry_for
    while True:
        try:
            sock = socket.create_connection((host, port), timeout=timeout)
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            return TcpChannel(sock, timeout)
        except OSError as e:
            if time.monotonic() >= deadline:
                raise TransportError(f"connect failed: {e}") from None
            time.sleep(0.05)


def _pack_hello(role: Role, kappa: int, psi: int, session_id: bytes, extra: bytes) -> bytes:
    if len(session_id) != SESSION_ID_BYTES:
        raise UsageError("session id must be 16 bytes")
    if len(extra) > 0xFFFF:
        raise UsageError("hello extra too large")
    return (
        struct.pack(">HBHH", PROTOCOL_VERSION, role.value, kappa, psi)
        + session_id
        + struct.pack(">H", len(extra))
        + extra
    )


def _unpack_hello(payload: bytes):
    version, role_v, kappa, psi = struct.unpack(">HBHH", payload[:7])
    sid = payload[7 : 7 + SESSION_ID_BYTES]
    (elen,) = struct.unpack(">H", payload[23:25])
    extra = payload[25 : 25 + elen]
    return version, Role(role_v), kappa, psi, sid, extra


def perform_hello(ch: Channel, role: Role, kappa: int, psi: int,
                  session_id: bytes = None, extra: bytes = b"", rng=None):
    """Two-step session handshake. Alice speaks first and fixes the session id
    when Bob passes none. Any parameter disagreement aborts before protocol
    traffic. Returns (session_id, peer_extra)."""
    if role is Role.ALICE:
        if session_id is None:
            if rng is None:
                raise UsageError("alice needs a session id or an rng to mint one")
            session_id = rng.getrandbits(8 * SESSION_ID_BYTES).to_bytes(SESSION_ID_BYTES, "little")
        ch.send(MsgType.HELLO, _pack_hello(role, kappa, psi, session_id, extra))
        version, prole, pk, pp, psid, pextra = _unpack_hello(ch.recv(MsgType.HELLO))
    else:
        version, prole, pk, pp, psid, pextra = _unpack_hello(ch.recv(MsgType.HELLO))
        if session_id is not None and psid != session_id:
            raise ProtocolError("session id mismatch")
        session_id = psid
        ch.send(MsgType.HELLO, _pack_hello(role, kappa, psi, session_id, extra))
    if version != PROTOCOL_VERSION:
        raise ProtocolError(f"protocol version mismatch: {version}")
    if prole == role:
        raise ProtocolError("both endpoints claim the same role")
    if (pk, pp) != (kappa, psi):
        raise ProtocolError(f"parameter mismatch: peer has kappa={pk}, psi={pp}")
    if psid != session_id:
        raise ProtocolError("session id mismatch")
    ch.role, ch.kappa, ch.psi, ch.session_id = role, kappa, psi, session_id
    return session_id, pextra


def run_pair(fn_alice, fn_bob, timeout: float = 300.0, channels=()):
    """Run both protocol endpoints in threads; re-raise the first failure.

    Passing the underlying channels lets the runner close them as soon as one
    side fails, which unblocks a peer waiting in recv. Security aborts are
    reported in preference to the secondary transport errors they cause.
    """
    results = [None, None]
    errors = [None, None]

    def wrap(i, fn):
        try:
            results[i] = fn()
        except BaseException as e:  # noqa: BLE001 - propagated below
            errors[i] = e
            for ch in channels:
                try:
                    ch.close()
                except Exception:
                    pass

    ta = threading.Thread(target=wrap, args=(0, fn_alice), daemon=True)
    tb = threading.Thread(target=wrap, args=(1, fn_bob), daemon=True)
    ta.start()
    tb.start()
    ta.join(timeout)
    tb.join(timeout)
    if ta.is_alive() or tb.is_alive():
        for ch in channels:
            try:
                ch.close()
            except Exception:
                pass
        ta.join(5.0)
        tb.join(5.0)
        raise TransportError("protocol pair deadlocked or timed out")
    real = [e for e in errors if e is not None and not isinstance(e, TransportError)]
    if real:
        raise real[0]
    for e in errors:
        if e is not None:
            raise e
    return results[0], results[1]
