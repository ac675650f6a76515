#!/usr/bin/env python3
"""Emit the browser-side artifacts: a translated module and a form page.

Writes ``out/primes.js`` (the recursive primes program compiled to
ECMAScript, plus an RPC stub) and ``out/page.html`` (the static demo
page with the enhanced number-entry form).
"""

from pathlib import Path

from qx.expr import parse_expr
from qx.forms import demo_page
from qx.jsgen import emit_program

PRIMES_QX = Path(__file__).parent.parent / "tests" / "data" / "jsgen" / "primes.qx"


def main() -> None:
    out = Path("out")
    out.mkdir(exist_ok=True)

    js = emit_program(parse_expr(PRIMES_QX.read_text()), name="getPrimes",
                      rpc_stubs=[("getPrimesRemote", 0)])
    (out / "primes.js").write_text(js)
    print(f"wrote {out / 'primes.js'} ({len(js)} bytes)")

    page = demo_page()
    (out / "page.html").write_text(page)
    print(f"wrote {out / 'page.html'} ({len(page)} bytes)")


if __name__ == "__main__":
    main()
