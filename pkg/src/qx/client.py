"""Client handles for evaluating quotations remotely or locally.

An RExecutor either talks to a dispatcher process (remote mode) or
embeds the dispatcher's pool logic and talks to workers directly
(embedded mode).  Both expose the same two calls: ``eval`` for one
expression, ``eval_batch`` for many with a concurrency window.
LocalExecutor runs the in-process evaluator behind the same interface.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

from qx.evaluator import DEFAULT_FUEL, ERROR_CODES, EvalError, evaluate, literal_value
from qx.expr import Expr
from qx.net import (
    REQUEST_TIMEOUT,
    RpcConnection,
    TransportError,
    connect_rpc,
    parse_hostport,
)
from qx.dispatcher import DEFAULT_RETRY_LIMIT, PoolConfig, WorkerPool
from qx.wire import Result

REMOTE_BATCH_WINDOW = 16


def _addr(value) -> tuple[str, int]:
    return parse_hostport(value) if isinstance(value, str) else tuple(value)


class RExecutor:
    """Remote evaluation handle.

    Pass ``dispatcher`` (``"host:port"``) to go through a dispatcher
    process, or ``workers`` (a list of ``"host:port"``) to embed the
    scheduling pool in this process.  ``eval`` returns the decoded value
    or raises EvalError/TransportError; ``eval_batch`` returns one entry
    per input, errors included in place, never aborting the batch.
    """

    def __init__(self, dispatcher=None, workers: Optional[Sequence] = None,
                 retry_limit: int = DEFAULT_RETRY_LIMIT,
                 timeout: float = REQUEST_TIMEOUT,
                 per_worker_concurrency: int = 4):
        if (dispatcher is None) == (workers is None):
            raise ValueError("pass exactly one of dispatcher= or workers=")
        if retry_limit < 0:
            raise ValueError("retry limit must be >= 0")
        self.timeout = timeout
        self.retry_limit = retry_limit
        self._pool: Optional[WorkerPool] = None
        self._dispatcher_addr: Optional[tuple[str, int]] = None
        self._conn: Optional[RpcConnection] = None
        self._conn_lock = threading.Lock()
        self._per_worker = per_worker_concurrency
        if workers is not None:
            self._pool = WorkerPool(PoolConfig(
                workers=tuple(_addr(w) for w in workers),
                retry_limit=retry_limit,
                request_timeout=timeout,
                per_worker_concurrency=per_worker_concurrency,
            ))
        else:
            self._dispatcher_addr = _addr(dispatcher)

    # -- single evaluation -------------------------------------------

    def eval(self, expr: Expr, fuel: Optional[int] = None):
        """Evaluate one expression remotely and return its value."""
        reply = self._request(expr, fuel)
        if isinstance(reply, Result):
            return literal_value(reply.value)
        if reply.code in ERROR_CODES:
            raise EvalError(reply.code, reply.detail)
        raise TransportError(f"{reply.code}: {reply.detail}")

    def _request(self, expr: Expr, fuel: Optional[int]):
        if self._pool is not None:
            return self._pool.submit(expr, fuel, self.timeout)
        last: Optional[TransportError] = None
        for _ in range(self.retry_limit + 1):
            try:
                conn = self._dispatcher_conn()
                return conn.request(expr, fuel, self.timeout)
            except TransportError as exc:
                self._drop_conn()
                last = exc
        raise TransportError(f"dispatcher unreachable after retries: {last}") from last

    def _dispatcher_conn(self) -> RpcConnection:
        with self._conn_lock:
            if self._conn is None or not self._conn.alive:
                self._conn = connect_rpc(self._dispatcher_addr)
            return self._conn

    def _drop_conn(self) -> None:
        with self._conn_lock:
            conn, self._conn = self._conn, None
        if conn is not None:
            conn.close()

    # -- batched evaluation ------------------------------------------

    def batch_window(self) -> int:
        if self._pool is not None:
            return max(1, self._pool.healthy_count() * self._per_worker)
        return REMOTE_BATCH_WINDOW

    def eval_batch(self, exprs: Sequence[Expr], fuel: Optional[int] = None) -> list:
        """Evaluate many expressions concurrently, preserving order.

        Each result slot holds the value, or the EvalError /
        TransportError instance that item ended with.
        """
        items = list(exprs)
        if not items:
            return []
        window = self.batch_window()

        def one(e: Expr):
            try:
                return self.eval(e, fuel)
            except (EvalError, TransportError) as exc:
                return exc

        with ThreadPoolExecutor(max_workers=window, thread_name_prefix="batch") as tp:
            return list(tp.map(one, items))

    def close(self) -> None:
        if self._pool is not None:
            self._pool.close()
        self._drop_conn()

    def __enter__(self) -> "RExecutor":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class LocalExecutor:
    """Same calls as RExecutor, evaluated in this process."""

    def __init__(self, fuel: Optional[int] = None):
        self.fuel = fuel

    def eval(self, expr: Expr, fuel: Optional[int] = None):
        budget = fuel if fuel is not None else (self.fuel or DEFAULT_FUEL)
        return evaluate(expr, fuel=budget)

    def eval_batch(self, exprs: Sequence[Expr], fuel: Optional[int] = None) -> list:
        out = []
        for e in exprs:
            try:
                out.append(self.eval(e, fuel))
            except EvalError as exc:
                out.append(exc)
        return out

    def close(self) -> None:
        pass
