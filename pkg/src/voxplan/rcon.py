"""Source-RCON client: bit-exact packet codec, auth, command execution,
and throttled build-plan dispatch.

Wire layout (little-endian): i32 length, i32 request id, i32 type, body
bytes, 0x00 0x00. The length field covers everything after itself, so it
equals 4 + 4 + len(body) + 2.
"""

from __future__ import annotations

import socket
import struct
import time
from dataclasses import dataclass, field

from .plan import BuildPlan, render_commands

TYPE_RESPONSE = 0
TYPE_COMMAND = 2
TYPE_AUTH = 3

MAX_BODY = 1446  # safe single-packet command size
DEFAULT_PORT = 25575


class RconError(Exception):
    pass


class BodyTooLarge(RconError):
    pass


class Truncated(RconError):
    pass


class BadTerminator(RconError):
    pass


class NegativeLength(RconError):
    pass


class AuthFailed(RconError):
    pass


class RconConnectionError(RconError):
    pass


class RconTimeout(RconError):
    pass


class IdMismatch(RconError):
    pass


class ConnectionLost(RconError):
    pass


@dataclass(frozen=True)
class RconPacket:
    request_id: int
    packet_type: int
    body: str


def encode_packet(p: RconPacket) -> bytes:
    raw = p.body.encode("ascii")
    if len(raw) > MAX_BODY:
        raise BodyTooLarge(f"{len(raw)} > {MAX_BODY}")
    if b"\x00" in raw:
        raise ValueError("body must not contain NUL")
    length = 4 + 4 + len(raw) + 2
    return struct.pack("<iii", length, p.request_id, p.packet_type) + raw + b"\x00\x00"


def decode_packet(data: bytes) -> RconPacket:
    if len(data) < 4:
        raise Truncated(f"{len(data)} bytes, need 4 for length")
    (length,) = struct.unpack_from("<i", data, 0)
    if length < 10:
        raise NegativeLength(f"length field {length}")
    if len(data) < 4 + length:
        raise Truncated(f"{len(data)} bytes, declared {4 + length}")
    request_id, packet_type = struct.unpack_from("<ii", data, 4)
    body = data[12:4 + length - 2]
    if data[4 + length - 2:4 + length] != b"\x00\x00":
        raise BadTerminator("missing double-NUL terminator")
    return RconPacket(request_id, packet_type, body.decode("ascii"))


class Session:
    """Single-connection, strictly serialized RCON session."""

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._next_id = 1

    def _fresh_id(self) -> int:
        i = self._next_id
        self._next_id += 1
        return i

    def _send(self, packet: RconPacket) -> None:
        try:
            self._sock.sendall(encode_packet(packet))
        except OSError as e:
            raise ConnectionLost(str(e)) from e

    def _recv_packet(self) -> RconPacket:
        header = self._recv_exact(4)
        (length,) = struct.unpack("<i", header)
        if length < 10:
            raise NegativeLength(f"length field {length}")
        payload = self._recv_exact(length)
        return decode_packet(header + payload)

    def _recv_exact(self, n: int) -> bytes:
        buf = b""
        while len(buf) < n:
            try:
                chunk = self._sock.recv(n - len(buf))
            except socket.timeout as e:
                raise RconTimeout(str(e)) from e
            except OSError as e:
                raise ConnectionLost(str(e)) from e
            if not chunk:
                raise ConnectionLost("peer closed the connection")
            buf += chunk
        return buf

    def exec(self, command: str) -> str:
        """Send one command; gather response bodies for its id until the
        empty sentinel response arrives."""
        cmd_id = self._fresh_id()
        sentinel_id = self._fresh_id()
        self._send(RconPacket(cmd_id, TYPE_COMMAND, command))
        self._send(RconPacket(sentinel_id, TYPE_RESPONSE, ""))
        parts = []
        while True:
            resp = self._recv_packet()
            if resp.request_id == sentinel_id:
                return "".join(parts)
            if resp.request_id != cmd_id:
                raise IdMismatch(f"expected id {cmd_id}, got {resp.request_id}")
            parts.append(resp.body)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def connect_and_auth(host: str, port: int, password: str,
                     timeout: float = 5.0) -> Session:
    """TCP connect and authenticate. An auth response with request id -1
    signals a rejected password."""
    try:
        sock = socket.create_connection((host, port), timeout=timeout)
    except socket.timeout as e:
        raise RconTimeout(str(e)) from e
    except OSError as e:
        raise RconConnectionError(str(e)) from e
    sock.settimeout(timeout)
    session = Session(sock)
    auth_id = session._fresh_id()
    session._send(RconPacket(auth_id, TYPE_AUTH, password))
    while True:
        resp = session._recv_packet()
        if resp.request_id == -1:
            session.close()
            raise AuthFailed("server rejected the password")
        if resp.request_id == auth_id and resp.packet_type == TYPE_COMMAND:
            # Auth success arrives as a type-2 packet echoing our id; some
            # servers precede it with an empty type-0 packet.
            return session
        if resp.request_id == auth_id and resp.packet_type == TYPE_RESPONSE:
            continue
        session.close()
        raise IdMismatch(f"unexpected auth response id {resp.request_id}")


@dataclass
class CommandResult:
    index: int
    command: str
    ok: bool
    response: str = ""
    attempts: int = 1


@dataclass
class DispatchReport:
    results: list = field(default_factory=list)
    duration: float = 0.0
    aborted: bool = False

    @property
    def sent(self) -> int:
        return len(self.results)

    @property
    def failed(self) -> int:
        return sum(1 for r in self.results if not r.ok)


def apply_plan(session: Session, plan: BuildPlan, throttle: float = 20.0,
               max_retries: int = 3, max_consecutive_failures: int = 10,
               error_prefix: str = "Error",
               progress=None) -> DispatchReport:
    """Send the plan's vanilla commands in order at <= throttle cmd/s.

    Each command is retried up to max_retries times on failure (error
    response or lost exchange) before being marked failed; dispatch
    aborts after max_consecutive_failures consecutive failures. Commands
    are never reordered.
    """
    if throttle <= 0:
        raise ValueError("throttle must be positive")
    lines = render_commands(plan, "vanilla")
    report = DispatchReport()
    start = time.monotonic()
    interval = 1.0 / throttle
    next_slot = start
    consecutive = 0
    for i, line in enumerate(lines):
        wait = next_slot - time.monotonic()
        if wait > 0:
            time.sleep(wait)
        next_slot = max(next_slot + interval, time.monotonic())
        result = CommandResult(i, line, ok=False)
        for attempt in range(1, max_retries + 1):
            result.attempts = attempt
            try:
                resp = session.exec(line)
            except RconError as e:
                result.response = str(e)
                continue
            result.response = resp
            if not resp.startswith(error_prefix):
                result.ok = True
                break
        report.results.append(result)
        consecutive = 0 if result.ok else consecutive + 1
        if progress is not None:
            progress(report)
        if consecutive >= max_consecutive_failures:
            report.aborted = True
            break
    report.duration = time.monotonic() - start
    return report
