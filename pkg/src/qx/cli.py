"""Command-line entry points.

``qx`` is the umbrella command (eval, sweep, mandel, bench, jsgen,
form, plus worker/dispatch so ``python -m qx`` can spawn servers);
``qx-worker`` and ``qx-dispatch`` are direct server entry points.

Exit codes: 0 success, 1 evaluation error (including unparseable
programs), 2 transport failure, 3 usage error.
"""

from __future__ import annotations

import sys

import click

from qx.evaluator import DEFAULT_FUEL, EvalError
from qx.expr import ParseError
from qx.net import TransportError, parse_hostport
from qx.wire import WireError

EXIT_OK = 0
EXIT_EVAL = 1
EXIT_TRANSPORT = 2
EXIT_USAGE = 3


def _fail(code: int, message: str) -> "SystemExit":
    print(message, file=sys.stderr)
    return SystemExit(code)


def _run(command, prog_name: str) -> None:
    try:
        command.main(args=sys.argv[1:], prog_name=prog_name, standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(130)
    except click.UsageError as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_EVAL)
    except ParseError as exc:
        raise _fail(EXIT_EVAL, f"parse error: {exc}")
    except EvalError as exc:
        raise _fail(EXIT_EVAL, f"evaluation error: {exc}")
    except (TransportError, WireError) as exc:
        raise _fail(EXIT_TRANSPORT, f"transport error: {exc}")
    sys.exit(EXIT_OK)


def _listen_option(fn):
    return click.option("--listen", "listen", required=True, metavar="HOST:PORT",
                        help="Address to bind.")(fn)


def _parse_listen(listen: str) -> tuple[str, int]:
    try:
        return parse_hostport(listen)
    except ValueError as exc:
        raise click.UsageError(str(exc))


def _parse_worker_list(text: str) -> list[tuple[str, int]]:
    addrs = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            addrs.append(parse_hostport(part))
        except ValueError as exc:
            raise click.UsageError(str(exc))
    if not addrs:
        raise click.UsageError("no worker addresses given")
    return addrs


@click.group()
def main_group():
    """Quotation execution tools."""


@main_group.command("worker")
@_listen_option
@click.option("--fuel", type=int, default=DEFAULT_FUEL, show_default=True,
              help="Default fuel budget per evaluation.")
@click.option("--concurrency", type=click.IntRange(min=1), default=4, show_default=True,
              help="Concurrent evaluations.")
def worker_cmd(listen: str, fuel: int, concurrency: int):
    """Run a worker server until terminated."""
    from qx.worker import WorkerConfig, run_worker
    host, port = _parse_listen(listen)
    if fuel < 1:
        raise click.UsageError("--fuel must be positive")
    run_worker(WorkerConfig(host=host, port=port, fuel=fuel, max_concurrent=concurrency))


@main_group.command("dispatch")
@_listen_option
@click.option("--workers", envvar="QX_WORKERS", required=True,
              metavar="HOST:PORT,HOST:PORT,...",
              help="Worker addresses (or env QX_WORKERS).")
def dispatch_cmd(listen: str, workers: str):
    """Run a dispatcher over a pool of workers until terminated."""
    from qx.dispatcher import run_dispatcher
    host, port = _parse_listen(listen)
    run_dispatcher(_parse_worker_list(workers), host, port)


def _make_executor(dispatcher: str | None, local: bool, fuel: int | None):
    from qx.client import LocalExecutor, RExecutor
    if local:
        return LocalExecutor(fuel=fuel)
    if dispatcher is None:
        raise click.UsageError("pass --dispatcher HOST:PORT or --local")
    return RExecutor(dispatcher=dispatcher)


@main_group.command("eval")
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("--dispatcher", metavar="HOST:PORT", default=None,
              help="Dispatcher address.")
@click.option("--local", is_flag=True, help="Evaluate in-process instead.")
@click.option("--fuel", type=int, default=None, help="Fuel budget override.")
def eval_cmd(source: str, dispatcher: str | None, local: bool, fuel: int | None):
    """Evaluate FILE.qx and print the canonical value text."""
    from qx.evaluator import value_to_expr
    from qx.expr import parse_expr, print_expr
    with open(source, encoding="utf-8") as fh:
        expr = parse_expr(fh.read())
    ex = _make_executor(dispatcher, local, fuel)
    try:
        value = ex.eval(expr, fuel=fuel)
    finally:
        ex.close()
    print(print_expr(value_to_expr(value)))


@main_group.command("sweep")
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("--param", required=True, help="Template variable to substitute.")
@click.option("--values", "values_text", required=True,
              help="Comma-separated parameter values.")
@click.option("--dispatcher", metavar="HOST:PORT", default=None)
@click.option("--local", is_flag=True)
@click.option("--fuel", type=int, default=None)
def sweep_cmd(source, param, values_text, dispatcher, local, fuel):
    """Fan FILE.qx over parameter values; print one result per line."""
    from qx.expr import parse_expr, print_expr
    from qx.evaluator import value_to_expr
    from qx.sweep import make_sweep, parse_value_list, run_sweep
    with open(source, encoding="utf-8") as fh:
        template = parse_expr(fh.read())
    try:
        job = make_sweep(template, param, parse_value_list(values_text), fuel=fuel)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    ex = _make_executor(dispatcher, local, fuel)
    try:
        results = run_sweep(job, ex)
    finally:
        ex.close()
    failures = 0
    for item in results:
        if isinstance(item, Exception):
            failures += 1
            print(f"error: {item}", file=sys.stderr)
        else:
            print(print_expr(value_to_expr(item)))
    if failures:
        raise _fail(EXIT_EVAL, f"{failures} of {len(results)} tasks failed")


def _parse_center(text: str) -> tuple[float, float]:
    try:
        cx, cy = (float(p) for p in text.split(","))
        return cx, cy
    except ValueError:
        raise click.UsageError(f"--center expects CX,CY, got {text!r}")


@main_group.command("mandel")
@click.option("--width", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--height", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--center", default="-0.5,0", show_default=True, metavar="CX,CY")
@click.option("--vieww", type=float, default=3.0, show_default=True,
              help="Viewport width in complex units.")
@click.option("--max-iter", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--rows-per-task", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--dispatcher", metavar="HOST:PORT", default=None)
@click.option("--local", is_flag=True)
def mandel_cmd(width, height, center, vieww, max_iter, rows_per_task, out,
               dispatcher, local):
    """Render the Mandelbrot set to a binary PPM via distributed rows."""
    from qx.mandel import MandelSpec, render_mandel
    if vieww <= 0:
        raise click.UsageError("--vieww must be positive")
    cx, cy = _parse_center(center)
    spec = MandelSpec(width=width, height=height, cx=cx, cy=cy, view_w=vieww,
                      max_iter=max_iter, rows_per_task=rows_per_task)
    ex = _make_executor(dispatcher, local, None)
    try:
        render_mandel(spec, ex, out)
    finally:
        ex.close()
    print(f"wrote {out}")


@main_group.command("bench")
@click.option("--items", type=click.IntRange(min=1), default=64, show_default=True)
@click.option("--spin", type=click.IntRange(min=1), default=200_000, show_default=True,
              help="Countdown depth per item.")
@click.option("--workers", "workers_text", default="1,2,4", show_default=True,
              help="Comma-separated worker counts.")
@click.option("--csv", "csv_path", required=True, type=click.Path(dir_okay=False))
@click.option("--runs", type=click.IntRange(min=1), default=3, show_default=True,
              help="Runs per worker count (median reported).")
def bench_cmd(items, spin, workers_text, csv_path, runs):
    """Measure sweep wall time against local worker processes."""
    from qx.sweep import benchmark_sweep, write_benchmark_csv
    try:
        counts = [int(p) for p in workers_text.split(",") if p.strip()]
    except ValueError:
        raise click.UsageError(f"--workers expects ints, got {workers_text!r}")
    if not counts or any(c < 1 for c in counts):
        raise click.UsageError("--workers needs positive counts")
    rows = benchmark_sweep(items, spin, counts, runs=runs, progress=True)
    write_benchmark_csv(rows, csv_path)
    print(f"wrote {csv_path}")


def _parse_rpc_decls(text: str) -> list[tuple[str, int]]:
    decls = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        name, sep, arity = part.partition(":")
        if not sep or not arity.isdigit():
            raise click.UsageError(f"--rpc expects name:arity, got {part!r}")
        decls.append((name, int(arity)))
    return decls


@main_group.command("jsgen")
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("--name", "binding", default="main", show_default=True,
              help="Name bound to the translated expression.")
@click.option("--rpc", "rpc_text", default="", metavar="NAME:ARITY,...",
              help="Server functions to expose as client stubs.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def jsgen_cmd(source, binding, rpc_text, out):
    """Translate FILE.qx to an ECMAScript program file."""
    from qx.expr import parse_expr
    from qx.jsgen import emit_program
    with open(source, encoding="utf-8") as fh:
        expr = parse_expr(fh.read())
    text = emit_program(expr, name=binding, rpc_stubs=_parse_rpc_decls(rpc_text))
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"wrote {out}")


@main_group.group("form")
def form_group():
    """Formlet demos."""


@form_group.command("demo")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def form_demo_cmd(out):
    """Render the composite enhanced-form demo page."""
    from qx.forms import demo_page
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(demo_page())
    print(f"wrote {out}")


def main() -> None:
    _run(main_group, "qx")


def worker_main() -> None:
    _run(worker_cmd, "qx-worker")


def dispatch_main() -> None:
    _run(dispatch_cmd, "qx-dispatch")


if __name__ == "__main__":
    main()
