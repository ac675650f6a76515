"""Spawn worker and dispatcher processes and discover their ports.

Servers print ``listening HOST:PORT`` on stdout once bound; these
helpers start them with ``--listen host:0``, read that line back, and
return a handle with the resolved address.  Used by the test suite, the
benchmark harness, and the demo scripts.
"""

from __future__ import annotations

import subprocess
import sys
import time
from dataclasses import dataclass
from typing import Optional

from qx.net import format_addr

_STARTUP_DEADLINE = 15.0


@dataclass
class Proc:
    process: subprocess.Popen
    address: tuple[str, int]

    @property
    def addr_text(self) -> str:
        return format_addr(self.address)

    def kill(self) -> None:
        if self.process.poll() is None:
            self.process.kill()
        self.process.wait()

    def terminate(self) -> None:
        if self.process.poll() is None:
            self.process.terminate()
            try:
                self.process.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.kill()


def _spawn(argv: list[str]) -> Proc:
    proc = subprocess.Popen(
        argv,
        stdout=subprocess.PIPE,
        stderr=subprocess.DEVNULL,
        text=True,
    )
    deadline = time.monotonic() + _STARTUP_DEADLINE
    line = ""
    while time.monotonic() < deadline:
        line = proc.stdout.readline()
        if line.startswith("listening "):
            host, _, port = line.split()[1].rpartition(":")
            return Proc(proc, (host, int(port)))
        if not line and proc.poll() is not None:
            break
    proc.kill()
    raise RuntimeError(f"server did not start: {argv!r} (last line {line!r})")


def spawn_worker(host: str = "127.0.0.1", fuel: Optional[int] = None,
                 concurrency: Optional[int] = None) -> Proc:
    argv = [sys.executable, "-m", "qx", "worker", "--listen", f"{host}:0"]
    if fuel is not None:
        argv += ["--fuel", str(fuel)]
    if concurrency is not None:
        argv += ["--concurrency", str(concurrency)]
    return _spawn(argv)


def spawn_dispatcher(workers: list[tuple[str, int]], host: str = "127.0.0.1") -> Proc:
    joined = ",".join(format_addr(w) for w in workers)
    argv = [sys.executable, "-m", "qx", "dispatch",
            "--listen", f"{host}:0", "--workers", joined]
    return _spawn(argv)


def spawn_cluster(n_workers: int, fuel: Optional[int] = None,
                  concurrency: Optional[int] = None) -> tuple[list[Proc], Proc]:
    """n workers plus a dispatcher over all of them."""
    workers = [spawn_worker(fuel=fuel, concurrency=concurrency) for _ in range(n_workers)]
    try:
        dispatcher = spawn_dispatcher([w.address for w in workers])
    except Exception:
        for w in workers:
            w.kill()
        raise
    return workers, dispatcher


def stop_all(*procs: Proc) -> None:
    for p in procs:
        p.terminate()
