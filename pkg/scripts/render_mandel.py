#!/usr/bin/env python3
"""Render the Mandelbrot set over worker processes and write a PPM.

Usage: python3 scripts/render_mandel.py [WORKERS] [OUT.ppm]
"""

import sys
import time

from qx.client import RExecutor
from qx.launch import spawn_worker, stop_all
from qx.mandel import MandelSpec, render_mandel


def main() -> None:
    n_workers = int(sys.argv[1]) if len(sys.argv) > 1 else 2
    out_path = sys.argv[2] if len(sys.argv) > 2 else "mandel.ppm"
    spec = MandelSpec()  # 100x100 around (-0.5, 0), 100 iterations

    workers = [spawn_worker() for _ in range(n_workers)]
    print(f"{n_workers} workers on "
          f"{', '.join(w.addr_text for w in workers)}")
    t0 = time.monotonic()
    try:
        with RExecutor(workers=[w.address for w in workers]) as executor:
            data = render_mandel(spec, executor, out_path)
    finally:
        stop_all(*workers)
    print(f"wrote {out_path}: {len(data)} bytes, "
          f"{spec.width}x{spec.height} in {time.monotonic() - t0:.2f}s")


if __name__ == "__main__":
    main()
