"""Worker server: evaluates quotations received over the wire.

Each worker process listens on one TCP port, handshakes every
connection, and services Eval requests from a bounded thread pool.
Admission control keeps at most ``max_queue`` evals unfinished at once;
beyond that it sheds load with an ``overloaded`` error instead of
queueing without bound.
"""

from __future__ import annotations

import socket
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from qx.evaluator import DEFAULT_FUEL, EvalError, evaluate, value_to_expr
from qx.net import HANDSHAKE_TIMEOUT, FrameSocket, TransportError, format_addr
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


@dataclass(frozen=True)
class WorkerConfig:
    host: str = "127.0.0.1"
    port: int = 0
    fuel: int = DEFAULT_FUEL
    max_concurrent: int = 4
    max_queue: int = 128

    def __post_init__(self):
        if self.max_concurrent < 1:
            raise ValueError("max_concurrent must be >= 1")
        if self.max_queue < 1:
            raise ValueError("max_queue must be >= 1")


def evaluate_to_message(rid: int, expr, fuel: int) -> Message:
    """Run one evaluation and package the outcome as a reply message."""
    try:
        value = evaluate(expr, fuel=fuel)
        return Result(rid, value_to_expr(value))
    except EvalError as exc:
        return Error(rid, exc.code, exc.detail)


class WorkerServer:
    """Accepts connections and evaluates until stopped."""

    def __init__(self, config: WorkerConfig = WorkerConfig()):
        self.config = config
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((config.host, config.port))
        self._listener.listen(64)
        self.address: tuple[str, int] = self._listener.getsockname()[:2]
        self._pool = ThreadPoolExecutor(
            max_workers=config.max_concurrent, thread_name_prefix="worker-eval"
        )
        self._unfinished = 0
        self._admit_lock = threading.Lock()
        self._stopping = threading.Event()
        self._accept_thread: threading.Thread | None = None
        self._conns: set[FrameSocket] = set()
        self._conns_lock = threading.Lock()

    def start(self) -> "WorkerServer":
        self._accept_thread = threading.Thread(
            target=self._accept_loop, name=f"worker-accept-{self.address[1]}", daemon=True
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
                name="worker-conn", daemon=True,
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
                          f"worker speaks version {WIRE_VERSION}, client sent {msg.version}"))
        return False

    def _handle(self, fs: FrameSocket, msg: Message) -> None:
        if isinstance(msg, Ping):
            fs.send(Pong())
            return
        if isinstance(msg, Eval):
            with self._admit_lock:
                backlog = self._unfinished
                admitted = backlog < self.config.max_queue
                if admitted:
                    self._unfinished = backlog + 1
            if not admitted:
                fs.send(Error(msg.id, "overloaded",
                              f"{backlog} evals already queued"))
                return
            self._pool.submit(self._run_eval, fs, msg)
            return
        # A decodable but out-of-place message (stray Result, second Hello):
        # answer where an id exists so the peer is not left waiting.
        rid = getattr(msg, "id", None)
        if rid is not None:
            fs.send(Error(rid, "parse-error", f"unexpected message {type(msg).__name__}"))

    def _run_eval(self, fs: FrameSocket, msg: Eval) -> None:
        try:
            fuel = msg.fuel if msg.fuel is not None else self.config.fuel
            reply = evaluate_to_message(msg.id, msg.expr, fuel)
            fs.send(reply)
        except TransportError:
            pass  # requester went away; the result is discarded
        finally:
            with self._admit_lock:
                self._unfinished -= 1

    def stop(self) -> None:
        self._stopping.set()
        self._listener.close()
        with self._conns_lock:
            conns = list(self._conns)
        for fs in conns:
            fs.close()
        self._pool.shutdown(wait=False, cancel_futures=True)

    def serve_forever(self) -> None:
        """Run in the foreground until the process is terminated."""
        self.start()
        print(f"listening {format_addr(self.address)}", flush=True)
        try:
            self._accept_thread.join()
        except KeyboardInterrupt:
            self.stop()


def run_worker(config: WorkerConfig) -> None:
    try:
        server = WorkerServer(config)
    except OSError as exc:
        print(f"qx-worker: cannot listen on {config.host}:{config.port}: {exc}",
              file=sys.stderr)
        raise SystemExit(2)
    server.serve_forever()
