"""Two-peer key exchange over TCP.

Frame layout: 1 type byte, 3-byte big-endian payload length, payload.

======== ===== =====================================================
type     value payload
======== ===== =====================================================
HELLO    1     version (1 byte) + nonce (8 bytes)
PACKAGE  2     ceil(b/8) bytes of packed bits (+1 -> 1, MSB first)
               + 4-byte big-endian package sequence number
CONFIRM  3     4-byte big-endian iteration at which synchrony was declared
ABORT    4     reason code (1 byte)
======== ===== =====================================================

The initiator sends first and the peers strictly alternate. Nothing on the
wire says whether a bit came from an authentication step or a
synchronisation step, and no parameters are negotiated: both sides are
configured out of band.
"""
from __future__ import annotations

import logging
import os
import socket
import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Literal

import numpy as np

from .errors import FramingError, ProtocolError
from .keying import TrajectoryWalker, derive_key
from .protocol import Session, SessionConfig, Status

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
MAX_PAYLOAD = (1 << 24) - 1
HEADER = struct.Struct("!B3s")
SEQ = struct.Struct("!I")


class MsgType(IntEnum):
    HELLO = 1
    PACKAGE = 2
    CONFIRM_SYNC = 3
    ABORT = 4


class AbortReason(IntEnum):
    AUTH_FAILURE = 1
    EXHAUSTED = 2
    PROTOCOL_ERROR = 3
    FRAME_ERROR = 4


class ExitCode(IntEnum):
    SYNCHRONIZED = 0
    TRANSPORT_ERROR = 1
    REJECTED = 2
    EXHAUSTED = 3
    PROTOCOL_ERROR = 4


@dataclass(frozen=True)
class WireMessage:
    type: MsgType
    payload: bytes = b""


def frame_message(msg: WireMessage) -> bytes:
    n = len(msg.payload)
    if n > MAX_PAYLOAD:
        raise FramingError(f"payload of {n} bytes exceeds {MAX_PAYLOAD}")
    return HEADER.pack(int(msg.type), n.to_bytes(3, "big")) + msg.payload


def decode_frame(data: bytes) -> tuple[WireMessage, bytes]:
    """Decode one frame from the front of ``data``; returns it and the remainder."""
    if len(data) < HEADER.size:
        raise FramingError("truncated frame header")
    type_byte, raw_len = HEADER.unpack_from(data)
    n = int.from_bytes(raw_len, "big")
    end = HEADER.size + n
    if len(data) < end:
        raise FramingError(f"truncated frame: need {n} payload bytes, have {len(data) - HEADER.size}")
    try:
        kind = MsgType(type_byte)
    except ValueError:
        raise FramingError(f"unknown message type {type_byte}") from None
    return WireMessage(kind, bytes(data[HEADER.size:end])), bytes(data[end:])


def pack_package(bits, seq: int) -> bytes:
    bits = np.asarray(bits).ravel()
    return np.packbits(bits > 0).tobytes() + SEQ.pack(seq)


def unpack_package(payload: bytes, b: int) -> tuple[np.ndarray, int]:
    nbytes = (b + 7) // 8
    if len(payload) != nbytes + SEQ.size:
        raise FramingError(f"PACKAGE payload has {len(payload)} bytes, expected {nbytes + SEQ.size}")
    raw = np.unpackbits(np.frombuffer(payload[:nbytes], dtype=np.uint8))[:b]
    (seq,) = SEQ.unpack(payload[nbytes:])
    return raw.astype(np.int8) * 2 - 1, seq


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("peer closed the connection")
        buf += chunk
    return bytes(buf)


def read_message(sock: socket.socket) -> WireMessage:
    header = _recv_exact(sock, HEADER.size)
    n = int.from_bytes(header[1:], "big")
    msg, _ = decode_frame(header + _recv_exact(sock, n))
    return msg


def send_message(sock: socket.socket, msg: WireMessage) -> None:
    sock.sendall(frame_message(msg))


@dataclass(frozen=True)
class PeerConfig:
    role: Literal["initiator", "responder"]
    host: str
    port: int
    session: SessionConfig
    key_bits: int = 2048
    timeout: float = 30.0


@dataclass
class KeyExchangeResult:
    status: Status | None
    exit_code: ExitCode
    key_hex: str | None = None
    sync_iteration: int | None = None
    iterations: int = 0
    abort_reason: AbortReason | None = None
    peer_nonce: bytes | None = None
    detail: str = ""


_REASON_STATUS = {
    AbortReason.AUTH_FAILURE: (Status.REJECTED, ExitCode.REJECTED),
    AbortReason.EXHAUSTED: (Status.EXHAUSTED, ExitCode.EXHAUSTED),
}


def _from_peer_abort(session: Session, payload: bytes) -> KeyExchangeResult:
    try:
        reason = AbortReason(payload[0])
    except (IndexError, ValueError):
        reason = AbortReason.PROTOCOL_ERROR
    status, code = _REASON_STATUS.get(reason, (None, ExitCode.PROTOCOL_ERROR))
    return KeyExchangeResult(status, code, iterations=session.t, abort_reason=reason,
                             detail="peer aborted")


def _abort(sock, reason: AbortReason) -> None:
    """Send ABORT, then drain until the peer closes so no RST eats the frame."""
    try:
        send_message(sock, WireMessage(MsgType.ABORT, bytes([reason])))
        sock.shutdown(socket.SHUT_WR)
        while sock.recv(4096):
            pass
    except OSError:
        pass


def exchange(sock: socket.socket, role: str, cfg: SessionConfig, key_bits: int = 2048) -> KeyExchangeResult:
    """Run the authenticated exchange over an already-connected socket."""
    session = Session(cfg)
    nonce = os.urandom(8)
    send_message(sock, WireMessage(MsgType.HELLO, bytes([PROTOCOL_VERSION]) + nonce))
    hello = read_message(sock)
    if hello.type != MsgType.HELLO or len(hello.payload) != 9 or hello.payload[0] != PROTOCOL_VERSION:
        _abort(sock, AbortReason.PROTOCOL_ERROR)
        return KeyExchangeResult(None, ExitCode.PROTOCOL_ERROR, detail="bad HELLO")
    peer_nonce = hello.payload[1:]
    log.info("peer nonce %s", peer_nonce.hex())

    seq = 0
    while True:
        own = session.produce_package()
        package = WireMessage(MsgType.PACKAGE, pack_package(own, seq))
        if role == "initiator":
            send_message(sock, package)
        msg = read_message(sock)

        if msg.type == MsgType.ABORT:
            result = _from_peer_abort(session, msg.payload)
            result.peer_nonce = peer_nonce
            return result
        if msg.type != MsgType.PACKAGE:
            _abort(sock, AbortReason.PROTOCOL_ERROR)
            return KeyExchangeResult(session.status, ExitCode.PROTOCOL_ERROR, iterations=session.t,
                                     peer_nonce=peer_nonce, detail=f"unexpected {msg.type.name}")
        try:
            bits, peer_seq = unpack_package(msg.payload, cfg.b)
        except FramingError as exc:
            _abort(sock, AbortReason.FRAME_ERROR)
            return KeyExchangeResult(session.status, ExitCode.PROTOCOL_ERROR, iterations=session.t,
                                     peer_nonce=peer_nonce, detail=str(exc))
        if peer_seq != seq:
            _abort(sock, AbortReason.PROTOCOL_ERROR)
            return KeyExchangeResult(session.status, ExitCode.PROTOCOL_ERROR, iterations=session.t,
                                     peer_nonce=peer_nonce, detail="sequence mismatch")
        if role == "responder":
            send_message(sock, package)
        status = session.consume_package(bits)
        seq += 1
        if status in (Status.AUTHENTICATING, Status.SYNCHRONISING):
            continue
        result = _finish(sock, session, key_bits)
        result.peer_nonce = peer_nonce
        return result


def _finish(sock, session: Session, key_bits: int) -> KeyExchangeResult:
    status = session.status
    if status == Status.SYNCHRONIZED:
        send_message(sock, WireMessage(MsgType.CONFIRM_SYNC, SEQ.pack(session.sync_iteration)))
    else:
        reason = AbortReason.AUTH_FAILURE if status == Status.REJECTED else AbortReason.EXHAUSTED
        _abort(sock, reason)
        code = ExitCode.REJECTED if status == Status.REJECTED else ExitCode.EXHAUSTED
        return KeyExchangeResult(status, code, iterations=session.t, abort_reason=reason)

    while True:
        try:
            msg = read_message(sock)
        except ConnectionError:
            raise ProtocolError("peer closed before confirming synchrony") from None
        if msg.type == MsgType.PACKAGE:
            # peer had not finished yet; it will read our CONFIRM next
            continue
        if msg.type == MsgType.ABORT:
            return _from_peer_abort(session, msg.payload)
        if msg.type == MsgType.CONFIRM_SYNC and msg.payload == SEQ.pack(session.sync_iteration):
            break
        _abort(sock, AbortReason.PROTOCOL_ERROR)
        return KeyExchangeResult(status, ExitCode.PROTOCOL_ERROR, iterations=session.t,
                                 detail="CONFIRM_SYNC mismatch")

    key = derive_key(TrajectoryWalker.from_session(session), key_bits)
    return KeyExchangeResult(status, ExitCode.SYNCHRONIZED, key.hex, session.sync_iteration, session.t)


def run_peer(cfg: PeerConfig, listener: socket.socket | None = None) -> KeyExchangeResult:
    """Connect (initiator) or accept one connection (responder) and run the exchange.

    A pre-bound ``listener`` may be passed for the responder.
    """
    try:
        if cfg.role == "initiator":
            sock = socket.create_connection((cfg.host, cfg.port), timeout=cfg.timeout)
        else:
            own_listener = listener is None
            if own_listener:
                listener = socket.create_server((cfg.host, cfg.port))
            listener.settimeout(cfg.timeout)
            try:
                sock, _ = listener.accept()
            finally:
                if own_listener:
                    listener.close()
            sock.settimeout(cfg.timeout)
        with sock:
            try:
                return exchange(sock, cfg.role, cfg.session, cfg.key_bits)
            except FramingError as exc:
                _abort(sock, AbortReason.FRAME_ERROR)
                return KeyExchangeResult(None, ExitCode.PROTOCOL_ERROR, detail=str(exc))
    except ProtocolError as exc:
        return KeyExchangeResult(None, ExitCode.PROTOCOL_ERROR, detail=str(exc))
    except (OSError, ConnectionError) as exc:
        return KeyExchangeResult(None, ExitCode.TRANSPORT_ERROR, detail=str(exc))
