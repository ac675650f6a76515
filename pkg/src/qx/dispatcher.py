"""Dispatcher: owns a worker pool, schedules evals, retries on failure.

The pool walks its workers round-robin, skipping any marked unhealthy.
A transport failure (refused connection, reset, timeout) marks the
worker unhealthy and the request is retried on the next scheduled
worker; deterministic evaluation errors are returned immediately, since
re-running a pure program cannot change its outcome.  A background
probe re-admits unhealthy workers once they answer Ping again.

The same pool drives both deployment shapes: `DispatcherServer` runs it
behind a TCP listener as its own process, and clients can embed a
`WorkerPool` directly as a library.
"""

from __future__ import annotations

import socket
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from qx.expr import Expr
from qx.net import (
    HANDSHAKE_TIMEOUT,
    REQUEST_TIMEOUT,
    FrameSocket,
    NoHealthyWorkers,
    RpcConnection,
    TransportError,
    connect_rpc,
    format_addr,
)
from qx.wire import (
    Error,
    Eval,
    Hello,
    HelloOk,
    Message,
    Ping,
    Pong,
    Result,
    WIRE_VERSION,
    WireError,
)

PROBE_INTERVAL = 2.0
PROBE_TIMEOUT = 2.0
DEFAULT_RETRY_LIMIT = 2


@dataclass
class PoolConfig:
    workers: tuple[tuple[str, int], ...]
    retry_limit: int = DEFAULT_RETRY_LIMIT
    request_timeout: float = REQUEST_TIMEOUT
    per_worker_concurrency: int = 4
    probe_interval: float = PROBE_INTERVAL

    def __post_init__(self):
        if not self.workers:
            raise ValueError("worker pool needs at least one address")
        if self.retry_limit < 0:
            raise ValueError("retry limit must be >= 0")


@dataclass
class _WorkerSlot:
    addr: tuple[str, int]
    healthy: bool = True
    in_flight: int = 0
    conn: Optional[RpcConnection] = None
    connect_lock: threading.Lock = field(default_factory=threading.Lock)


class WorkerPool:
    """Round-robin scheduling with health-skip over a fixed worker list."""

    def __init__(self, config: PoolConfig):
        self.config = config
        self._slots = [_WorkerSlot(addr) for addr in config.workers]
        # Fresh pool: first schedule() must hand out worker 0, so the
        # cursor starts on the last slot.
        self._cursor = len(self._slots) - 1
        self._lock = threading.Lock()
        self._stopping = threading.Event()
        self._probe_thread = threading.Thread(
            target=self._probe_loop, name="pool-probe", daemon=True
        )
        self._probe_thread.start()

    # -- scheduling --------------------------------------------------

    def schedule(self) -> int:
        """Index of the next healthy worker after the cursor; advances it."""
        with self._lock:
            n = len(self._slots)
            for step in range(1, n + 1):
                idx = (self._cursor + step) % n
                if self._slots[idx].healthy:
                    self._cursor = idx
                    return idx
        raise NoHealthyWorkers("no healthy workers in the pool")

    def healthy_count(self) -> int:
        with self._lock:
            return sum(1 for s in self._slots if s.healthy)

    def mark_unhealthy(self, idx: int) -> None:
        slot = self._slots[idx]
        with self._lock:
            slot.healthy = False
            conn, slot.conn = slot.conn, None
        if conn is not None:
            conn.close()

    # -- connections -------------------------------------------------

    def _connection(self, idx: int) -> RpcConnection:
        slot = self._slots[idx]
        with slot.connect_lock:
            if slot.conn is not None and slot.conn.alive:
                return slot.conn
            slot.conn = connect_rpc(slot.addr, HANDSHAKE_TIMEOUT)
            return slot.conn

    # -- request path ------------------------------------------------

    def submit(self, expr: Expr, fuel: Optional[int] = None,
               timeout: Optional[float] = None) -> Message:
        """Evaluate on some healthy worker, retrying transport failures.

        Returns the worker's Result or deterministic Error; raises
        TransportError once the retry budget is spent, NoHealthyWorkers
        when nothing is schedulable.
        """
        if timeout is None:
            timeout = self.config.request_timeout
        attempts = self.config.retry_limit + 1
        last_failure: Optional[Exception] = None
        for _ in range(attempts):
            idx = self.schedule()
            slot = self._slots[idx]
            try:
                conn = self._connection(idx)
            except TransportError as exc:
                self.mark_unhealthy(idx)
                last_failure = exc
                continue
            with self._lock:
                slot.in_flight += 1
            try:
                reply = conn.request(expr, fuel, timeout)
            except TransportError as exc:
                self.mark_unhealthy(idx)
                last_failure = exc
                continue
            finally:
                with self._lock:
                    slot.in_flight -= 1
            if isinstance(reply, Error) and reply.code == "overloaded":
                # The worker shed load; try elsewhere without declaring
                # it dead.
                last_failure = TransportError(
                    f"{format_addr(slot.addr)}: {reply.detail}")
                continue
            return reply
        raise TransportError(f"retries exhausted: {last_failure}")

    # -- health probing ----------------------------------------------

    def _probe_loop(self) -> None:
        while not self._stopping.wait(self.config.probe_interval):
            for idx, slot in enumerate(self._slots):
                if self._stopping.is_set():
                    return
                if slot.healthy:
                    conn = slot.conn
                    if conn is not None and not conn.ping(PROBE_TIMEOUT):
                        self.mark_unhealthy(idx)
                else:
                    try:
                        conn = self._connection(idx)
                    except TransportError:
                        continue
                    if conn.ping(PROBE_TIMEOUT):
                        with self._lock:
                            slot.healthy = True
                    else:
                        self.mark_unhealthy(idx)

    def close(self) -> None:
        self._stopping.set()
        for slot in self._slots:
            if slot.conn is not None:
                slot.conn.close()

    def snapshot(self) -> list[tuple[str, bool, int]]:
        """(address, healthy, in-flight) per worker, for logs and tests."""
        with self._lock:
            return [(format_addr(s.addr), s.healthy, s.in_flight) for s in self._slots]


class DispatcherServer:
    """TCP front end exposing a WorkerPool to remote clients."""

    def __init__(self, pool: WorkerPool, host: str = "127.0.0.1", port: int = 0):
        self.pool = pool
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(64)
        self.address: tuple[str, int] = self._listener.getsockname()[:2]
        workers = len(pool.config.workers) * pool.config.per_worker_concurrency
        self._jobs = ThreadPoolExecutor(
            max_workers=max(8, workers), thread_name_prefix="dispatch"
        )
        self._stopping = threading.Event()
        self._accept_thread: threading.Thread | None = None
        self._conns: set[FrameSocket] = set()
        self._conns_lock = threading.Lock()

    def start(self) -> "DispatcherServer":
        self._accept_thread = threading.Thread(
            target=self._accept_loop, name=f"dispatch-accept-{self.address[1]}",
            daemon=True,
        )
        self._accept_thread.start()
        return self

    def _accept_loop(self) -> None:
        while not self._stopping.is_set():
            try:
                sock, _peer = self._listener.accept()
            except OSError:
                return
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            threading.Thread(
                target=self._serve_connection, args=(FrameSocket(sock),),
                name="dispatch-conn", daemon=True,
            ).start()

    def _serve_connection(self, fs: FrameSocket) -> None:
        with self._conns_lock:
            self._conns.add(fs)
        try:
            if not self._handshake(fs):
                return
            while not self._stopping.is_set():
                try:
                    msg = fs.recv(None)
                except WireError as exc:
                    if exc.kind == "bad-payload" and exc.recovered_id is not None:
                        fs.send(Error(exc.recovered_id, "parse-error", str(exc)))
                        continue
                    return
                if msg is None:
                    return
                self._handle(fs, msg)
        except TransportError:
            pass
        finally:
            fs.close()
            with self._conns_lock:
                self._conns.discard(fs)

    def _handshake(self, fs: FrameSocket) -> bool:
        try:
            msg = fs.recv(HANDSHAKE_TIMEOUT)
        except (TransportError, WireError):
            return False
        if isinstance(msg, Hello) and msg.version == WIRE_VERSION:
            fs.send(HelloOk(WIRE_VERSION))
            return True
        if isinstance(msg, Hello):
            fs.send(Error(0, "version-mismatch",
                          f"dispatcher speaks version {WIRE_VERSION}, client sent {msg.version}"))
        return False

    def _handle(self, fs: FrameSocket, msg: Message) -> None:
        if isinstance(msg, Ping):
            fs.send(Pong())
            return
        if isinstance(msg, Eval):
            self._jobs.submit(self._run_eval, fs, msg)
            return
        rid = getattr(msg, "id", None)
        if rid is not None:
            fs.send(Error(rid, "parse-error", f"unexpected message {type(msg).__name__}"))

    def _run_eval(self, fs: FrameSocket, msg: Eval) -> None:
        try:
            reply = self.pool.submit(msg.expr, msg.fuel)
        except TransportError as exc:
            reply = Error(msg.id, "overloaded", str(exc))
        else:
            if isinstance(reply, Result):
                reply = Result(msg.id, reply.value)
            else:
                reply = Error(msg.id, reply.code, reply.detail)
        try:
            fs.send(reply)
        except TransportError:
            pass

    def stop(self) -> None:
        self._stopping.set()
        self._listener.close()
        with self._conns_lock:
            conns = list(self._conns)
        for fs in conns:
            fs.close()
        self._jobs.shutdown(wait=False, cancel_futures=True)
        self.pool.close()

    def serve_forever(self) -> None:
        self.start()
        print(f"listening {format_addr(self.address)}", flush=True)
        try:
            self._accept_thread.join()
        except KeyboardInterrupt:
            self.stop()


def run_dispatcher(workers: list[tuple[str, int]], host: str, port: int,
                   retry_limit: int = DEFAULT_RETRY_LIMIT) -> None:
    pool = WorkerPool(PoolConfig(workers=tuple(workers), retry_limit=retry_limit))
    try:
        server = DispatcherServer(pool, host, port)
    except OSError as exc:
        print(f"qx-dispatch: cannot listen on {host}:{port}: {exc}", file=sys.stderr)
        raise SystemExit(2)
    server.serve_forever()
