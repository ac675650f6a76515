#!/usr/bin/env python3
"""Spin up a local cluster and run the stock programs through it.

Starts two worker processes and a dispatcher, evaluates a handful of
expressions remotely (including a spliced host list), and shuts
everything down.
"""

import time

from qx import programs
from qx.client import RExecutor
from qx.expr import Lam, LitInt, Var, apply, lift, print_expr, substitute
from qx.launch import spawn_cluster, stop_all


def main() -> None:
    workers, dispatcher = spawn_cluster(2)
    print(f"dispatcher on {dispatcher.addr_text}, "
          f"workers on {', '.join(w.addr_text for w in workers)}")
    try:
        with RExecutor(dispatcher=dispatcher.addr_text) as remote:
            jobs = [
                ("1 + 2 + 3", programs.add_chain(), None),
                ("sum [1..100]", programs.sum_range(1, 100), None),
                ("primes [2..100]", programs.primes_upto(100), None),
                ("map fib [1..25]", programs.fib_over_range(1, 25), 50_000_000),
            ]
            for title, expr, fuel in jobs:
                t0 = time.monotonic()
                value = remote.eval(expr, fuel=fuel)
                print(f"{title:>18} -> {value}   "
                      f"({time.monotonic() - t0:.2f}s)")

            template = apply(Var("map"),
                             Lam("x", apply(Var("add"), Var("x"), LitInt(1))),
                             Var("xs"))
            spliced = substitute(template, "xs", lift((1, 2, 3, 4)))
            print(f"{'spliced template':>18} -> {remote.eval(spliced)}")
            print(f"{'as shipped':>18}    {print_expr(spliced)}")
    finally:
        stop_all(dispatcher, *workers)


if __name__ == "__main__":
    main()
