"""Parametric sweeps: fan one template expression over a value list.

A sweep substitutes each value into the template's parameter hole and
drives the resulting tasks through an executor from a task queue.
Transport-failed tasks are requeued (safe because programs are pure, so
at-least-once delivery cannot change a result) up to a requeue budget;
deterministic evaluation errors are recorded as that index's outcome.
Also home to the speedup benchmark harness.
"""

from __future__ import annotations

import csv
import statistics
import threading
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from qx import programs
from qx.evaluator import EvalError, builtin_table
from qx.expr import Expr, UnliftableValue, free_vars, lift, substitute
from qx.net import NoHealthyWorkers, TransportError


@dataclass(frozen=True)
class SweepJob:
    template: Expr
    param: str
    values: tuple
    fuel: Optional[int] = None
    max_requeues: int = 2


def make_sweep(template: Expr, param: str, values: Sequence,
               fuel: Optional[int] = None, max_requeues: int = 2) -> SweepJob:
    """Validate and build a sweep; task i is template[param := values[i]]."""
    values = tuple(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    stray = free_vars(template) - {param} - set(builtin_table())
    if stray:
        raise ValueError(f"template has free variables besides the "
                         f"parameter: {', '.join(sorted(stray))}")
    for v in values:
        try:
            lift(v)
        except UnliftableValue as exc:
            raise ValueError(f"value {v!r} is not liftable: {exc}") from exc
    return SweepJob(template, param, values, fuel, max_requeues)


def sweep_tasks(job: SweepJob) -> list[Expr]:
    return [substitute(job.template, job.param, lift(v)) for v in job.values]


class TaskQueue:
    """Index-tracked work queue with bounded requeue.

    Every index lives in exactly one of pending / in-flight / completed;
    ``take`` blocks until work is available or everything is completed.
    """

    def __init__(self, tasks: Sequence[Expr], max_requeues: int):
        self._cond = threading.Condition()
        self._pending: list[tuple[int, Expr]] = list(enumerate(tasks))
        self._in_flight: dict[int, str] = {}
        self._completed: dict[int, object] = {}
        self._requeues: dict[int, int] = {}
        self._total = len(tasks)
        self.max_requeues = max_requeues

    def take(self, lane: str) -> Optional[tuple[int, Expr]]:
        """Next pending task, assigned to ``lane``; None once all done."""
        with self._cond:
            while True:
                if self._pending:
                    index, expr = self._pending.pop(0)
                    self._in_flight[index] = lane
                    return index, expr
                if len(self._completed) == self._total:
                    return None
                self._cond.wait()

    def complete(self, index: int, result) -> None:
        with self._cond:
            self._in_flight.pop(index, None)
            self._completed[index] = result
            self._cond.notify_all()

    def requeue(self, index: int, expr: Expr) -> bool:
        """Put a transport-failed task back; False once the budget is spent."""
        with self._cond:
            used = self._requeues.get(index, 0)
            if used >= self.max_requeues:
                return False
            self._requeues[index] = used + 1
            self._in_flight.pop(index, None)
            self._pending.append((index, expr))
            self._cond.notify_all()
            return True

    def abort_pending(self, exc: Exception) -> None:
        """Resolve everything unfinished with ``exc`` (pool gone)."""
        with self._cond:
            for index, _ in self._pending:
                self._completed[index] = exc
            self._pending.clear()
            for index in list(self._in_flight):
                self._completed.setdefault(index, exc)
            self._in_flight.clear()
            self._cond.notify_all()

    def results(self) -> list:
        with self._cond:
            assert len(self._completed) == self._total
            return [self._completed[i] for i in range(self._total)]

    def requeue_counts(self) -> dict[int, int]:
        with self._cond:
            return dict(self._requeues)


def run_sweep(job: SweepJob, executor, window: Optional[int] = None) -> list:
    """All task results, index-aligned with ``job.values``.

    Each slot holds the evaluated value or the EvalError/TransportError
    that exhausted that index.  Raises NoHealthyWorkers only when the
    whole pool has become unreachable.
    """
    queue = TaskQueue(sweep_tasks(job), job.max_requeues)
    if window is None:
        window = getattr(executor, "batch_window", lambda: 8)()
    window = max(1, min(window, len(job.values)))
    dead: list[Exception] = []

    def lane_loop(lane: str) -> None:
        while True:
            item = queue.take(lane)
            if item is None:
                return
            index, expr = item
            try:
                queue.complete(index, executor.eval(expr, fuel=job.fuel))
            except NoHealthyWorkers as exc:
                dead.append(exc)
                queue.abort_pending(exc)
                return
            except EvalError as exc:
                queue.complete(index, exc)
            except TransportError as exc:
                if not queue.requeue(index, expr):
                    queue.complete(index, exc)

    lanes = [threading.Thread(target=lane_loop, args=(f"lane-{i}",),
                              name=f"sweep-lane-{i}", daemon=True)
             for i in range(window)]
    for t in lanes:
        t.start()
    for t in lanes:
        t.join()
    if dead:
        raise dead[0]
    return queue.results()


def parse_value_list(text: str) -> list:
    """Comma-separated host values for the CLI, e.g. ``1,2.5,true,x``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if part == "true":
            out.append(True)
        elif part == "false":
            out.append(False)
        elif part == "unit":
            out.append(None)
        else:
            try:
                out.append(int(part))
            except ValueError:
                try:
                    out.append(float(part))
                except ValueError:
                    out.append(part)
    return out


# ------------------------------------------------------------ benchmark

@dataclass
class BenchRow:
    workers: int
    seconds: float
    speedup: float


def spin_job(item_count: int, spin_depth: int) -> SweepJob:
    """CPU-bound sweep: every item counts ``spin_depth`` steps to zero."""
    template = programs.spin_template()
    # Fuel: ~6 machine steps per countdown iteration, with headroom.
    fuel = 40 * spin_depth + 100_000
    return make_sweep(template, "n", [spin_depth] * item_count, fuel=fuel)


def benchmark_sweep(item_count: int, spin_depth: int,
                    worker_counts: Sequence[int], runs: int = 3,
                    progress: bool = False) -> list[BenchRow]:
    """Median sweep wall time per worker count; speedup vs 1 worker.

    Workers run as separate OS processes so the measurement reflects
    real process-level parallelism.
    """
    from qx.client import RExecutor
    from qx.launch import spawn_worker, stop_all

    job = spin_job(item_count, spin_depth)
    medians: dict[int, float] = {}
    for count in worker_counts:
        workers = [spawn_worker() for _ in range(count)]
        ex = RExecutor(workers=[w.addr_text for w in workers])
        try:
            times = []
            for run in range(runs):
                t0 = time.perf_counter()
                results = run_sweep(job, ex)
                elapsed = time.perf_counter() - t0
                bad = [r for r in results if isinstance(r, Exception)]
                if bad:
                    raise RuntimeError(f"benchmark task failed: {bad[0]}")
                times.append(elapsed)
                if progress:
                    print(f"workers={count} run={run + 1}/{runs} "
                          f"{elapsed:.3f}s", flush=True)
            medians[count] = statistics.median(times)
        finally:
            ex.close()
            stop_all(*workers)
    base = medians.get(1, min(medians.values()))
    return [BenchRow(c, medians[c], medians[c] and base / medians[c])
            for c in worker_counts]


def write_benchmark_csv(rows: Sequence[BenchRow], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["workers", "seconds", "speedup"])
        for row in rows:
            writer.writerow([row.workers, f"{row.seconds:.6f}", f"{row.speedup:.3f}"])
