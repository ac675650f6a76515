"""Socket plumbing shared by workers, the dispatcher, and clients.

A FrameSocket owns one TCP connection and turns it into a bidirectional
message stream.  An RpcConnection layers request/response correlation on
top: it allocates request ids, runs a reader thread, and hands each
Result/Error back to the thread that sent the matching Eval, so one
connection can carry many in-flight requests.
"""

from __future__ import annotations

import itertools
import socket
import threading
from collections import deque
from concurrent.futures import Future
from concurrent.futures import TimeoutError as FutureTimeout
from typing import Optional

from qx.expr import Expr
from qx.wire import (
    Error,
    Eval,
    FrameDecoder,
    Hello,
    HelloOk,
    Message,
    Ping,
    Pong,
    Result,
    WIRE_VERSION,
    WireError,
    encode_message,
)

HANDSHAKE_TIMEOUT = 5.0
REQUEST_TIMEOUT = 30.0

_RECV_SIZE = 65536


class TransportError(Exception):
    """Connection-level failure: refused, reset, timed out, or shed load."""


class NoHealthyWorkers(TransportError):
    """Every worker in the pool is currently marked unhealthy."""


def parse_hostport(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise ValueError(f"expected HOST:PORT, got {text!r}")
    return host, int(port)


def format_addr(addr: tuple[str, int]) -> str:
    return f"{addr[0]}:{addr[1]}"


class FrameSocket:
    """One TCP connection carrying framed messages.

    ``send`` is thread-safe; ``recv`` must be called from a single reader.
    """

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._decoder = FrameDecoder()
        self._ready: deque[Message] = deque()
        self._send_lock = threading.Lock()
        self._closed = False

    @classmethod
    def connect(cls, addr: tuple[str, int], timeout: float = HANDSHAKE_TIMEOUT) -> "FrameSocket":
        try:
            sock = socket.create_connection(addr, timeout=timeout)
        except OSError as exc:
            raise TransportError(f"connect {format_addr(addr)}: {exc}") from exc
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        return cls(sock)

    def send(self, message: Message) -> None:
        data = encode_message(message)
        with self._send_lock:
            try:
                self._sock.sendall(data)
            except OSError as exc:
                raise TransportError(f"send: {exc}") from exc

    def recv(self, timeout: Optional[float]) -> Optional[Message]:
        """Next message, or None on clean EOF at a frame boundary.

        Raises TransportError on timeouts and resets, WireError when the
        peer sends an undecodable frame.
        """
        while not self._ready:
            try:
                self._sock.settimeout(timeout)
                chunk = self._sock.recv(_RECV_SIZE)
            except socket.timeout as exc:
                raise TransportError("recv: timed out") from exc
            except OSError as exc:
                raise TransportError(f"recv: {exc}") from exc
            if not chunk:
                if self._decoder.pending_bytes():
                    raise TransportError("recv: connection closed mid-frame")
                return None
            self._ready.extend(self._decoder.feed(chunk))
        return self._ready.popleft()

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            try:
                self._sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self._sock.close()


def client_handshake(fs: FrameSocket, timeout: float = HANDSHAKE_TIMEOUT) -> None:
    """Send Hello and require HelloOk; anything else is a transport failure."""
    fs.send(Hello(WIRE_VERSION))
    try:
        reply = fs.recv(timeout)
    except WireError as exc:
        raise TransportError(f"handshake: {exc}") from exc
    if isinstance(reply, HelloOk) and reply.version == WIRE_VERSION:
        return
    if isinstance(reply, Error) and reply.code == "version-mismatch":
        raise TransportError(f"handshake: {reply.detail}")
    raise TransportError(f"handshake: unexpected reply {reply!r}")


def connect_rpc(addr: tuple[str, int], timeout: float = HANDSHAKE_TIMEOUT) -> "RpcConnection":
    fs = FrameSocket.connect(addr, timeout)
    try:
        client_handshake(fs, timeout)
    except TransportError:
        fs.close()
        raise
    return RpcConnection(fs, addr)


class RpcConnection:
    """Client side of a handshaken connection, multiplexing many requests.

    Each request gets a fresh id from this connection's counter, so ids
    are renumbered at every hop; the reader thread routes each reply to
    the future registered under its id.
    """

    def __init__(self, fs: FrameSocket, addr: tuple[str, int]):
        self._fs = fs
        self.addr = addr
        self._ids = itertools.count(1)
        self._lock = threading.Lock()
        self._pending: dict[int, Future] = {}
        self._pings: deque[Future] = deque()
        self._dead: Optional[TransportError] = None
        self._reader = threading.Thread(
            target=self._read_loop, name=f"rpc-read-{format_addr(addr)}", daemon=True
        )
        self._reader.start()

    def _read_loop(self) -> None:
        try:
            while True:
                msg = self._fs.recv(None)
                if msg is None:
                    self._fail(TransportError(f"{format_addr(self.addr)}: connection closed"))
                    return
                self._route(msg)
        except (TransportError, WireError) as exc:
            if isinstance(exc, WireError):
                exc = TransportError(f"{format_addr(self.addr)}: {exc}")
            self._fail(exc)

    def _route(self, msg: Message) -> None:
        if isinstance(msg, Pong):
            with self._lock:
                fut = self._pings.popleft() if self._pings else None
            if fut is not None:
                fut.set_result(True)
            return
        if isinstance(msg, Ping):
            try:
                self._fs.send(Pong())
            except TransportError:
                pass
            return
        if isinstance(msg, (Result, Error)):
            with self._lock:
                fut = self._pending.pop(msg.id, None)
            if fut is not None:
                fut.set_result(msg)
            return
        # Hello/HelloOk/Eval after handshake: ignore rather than wedge.

    def _fail(self, exc: TransportError) -> None:
        with self._lock:
            if self._dead is None:
                self._dead = exc
            pending = list(self._pending.values()) + list(self._pings)
            self._pending.clear()
            self._pings.clear()
        for fut in pending:
            fut.set_exception(exc)
        self._fs.close()

    def _register(self) -> tuple[int, Future]:
        fut: Future = Future()
        with self._lock:
            if self._dead is not None:
                raise self._dead
            rid = next(self._ids)
            self._pending[rid] = fut
        return rid, fut

    def request(self, expr: Expr, fuel: Optional[int] = None,
                timeout: float = REQUEST_TIMEOUT) -> Message:
        """Send one Eval and wait for its Result or Error."""
        rid, fut = self._register()
        try:
            self._fs.send(Eval(rid, expr, fuel))
        except TransportError as exc:
            self._fail(exc)
            raise
        try:
            return fut.result(timeout)
        except TransportError:
            raise
        except (FutureTimeout, TimeoutError) as exc:
            with self._lock:
                self._pending.pop(rid, None)
            raise TransportError(
                f"{format_addr(self.addr)}: no reply within {timeout:g}s"
            ) from exc

    def ping(self, timeout: float = 2.0) -> bool:
        fut: Future = Future()
        with self._lock:
            if self._dead is not None:
                return False
            self._pings.append(fut)
        try:
            self._fs.send(Ping())
            return bool(fut.result(timeout))
        except (TransportError, FutureTimeout, TimeoutError):
            return False

    @property
    def alive(self) -> bool:
        with self._lock:
            return self._dead is None

    def close(self) -> None:
        self._fail(TransportError(f"{format_addr(self.addr)}: connection closed locally"))
