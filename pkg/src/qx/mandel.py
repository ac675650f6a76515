"""Mandelbrot rendering by distributing row tiles as quotations.

The per-tile program is written in the expression language itself:
each task maps an escape-time recursion over a flat pixel-index range
and returns the counts as an int list.  Tiles are fanned out through
the sweep machinery with the starting row as the parameter, so worker
count and tile size can change without changing any pixel.

The pixel-to-plane mapping and the escape recurrence are:

    scale = viewW / width
    re = cx + (px + 0.5 - width  / 2) * scale
    im = cy - (py + 0.5 - height / 2) * scale
    esc(zr, zi, n) = maxIter                      if n >= maxIter
                   = n                            if zr^2 + zi^2 > 4
                   = esc(zr^2 - zi^2 + re, 2*zr*zi + im, n + 1)

with esc(0, 0, 0) as the pixel's count.
"""

from __future__ import annotations

from dataclasses import dataclass

from qx.expr import (
    App,
    Expr,
    If,
    Lam,
    Let,
    LetRec,
    LitFloat,
    LitInt,
    Var,
)
from qx.sweep import make_sweep, run_sweep


@dataclass(frozen=True)
class MandelSpec:
    width: int = 100
    height: int = 100
    cx: float = -0.5
    cy: float = 0.0
    view_w: float = 3.0
    max_iter: int = 100
    rows_per_task: int = 5

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("width and height must be >= 1")
        if self.view_w <= 0:
            raise ValueError("view_w must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.rows_per_task < 1:
            raise ValueError("rows_per_task must be >= 1")


def _ap(name: str, *args: Expr) -> Expr:
    e: Expr = Var(name)
    for a in args:
        e = App(e, a)
    return e


def _escape_loop(spec: MandelSpec) -> Expr:
    """letrec esc zr zi n = ... in esc 0.0 0.0 0, free in re/im."""
    zr, zi, n = Var("zr"), Var("zi"), Var("n")
    recurse = _ap(
        "esc",
        _ap("add", _ap("sub", _ap("mul", zr, zr), _ap("mul", zi, zi)), Var("re")),
        _ap("add", _ap("mul", _ap("mul", LitFloat(2.0), zr), zi), Var("im")),
        _ap("add", n, LitInt(1)),
    )
    body = If(
        _ap("ge", n, LitInt(spec.max_iter)),
        LitInt(spec.max_iter),
        If(
            _ap("gt", _ap("add", _ap("mul", zr, zr), _ap("mul", zi, zi)),
                LitFloat(4.0)),
            n,
            recurse,
        ),
    )
    return LetRec(
        "esc",
        Lam("zr", Lam("zi", Lam("n", body))),
        _ap("esc", LitFloat(0.0), LitFloat(0.0), LitInt(0)),
    )


def _pixel_expr(spec: MandelSpec) -> Expr:
    """Count for flat pixel index i (free), row-major over the image."""
    scale = LitFloat(spec.view_w / spec.width)
    half_w = LitFloat(spec.width / 2)
    half_h = LitFloat(spec.height / 2)
    re = _ap("add", LitFloat(spec.cx),
             _ap("mul",
                 _ap("sub",
                     _ap("add", _ap("toFloat", Var("px")), LitFloat(0.5)),
                     half_w),
                 scale))
    im = _ap("sub", LitFloat(spec.cy),
             _ap("mul",
                 _ap("sub",
                     _ap("add", _ap("toFloat", Var("py")), LitFloat(0.5)),
                     half_h),
                 scale))
    return Let(
        "px", _ap("mod", Var("i"), LitInt(spec.width)),
        Let(
            "py", _ap("div", Var("i"), LitInt(spec.width)),
            Let("re", re, Let("im", im, _escape_loop(spec))),
        ),
    )


def mandel_tile_template(spec: MandelSpec) -> Expr:
    """Tile program with the starting row as the free variable ``r``.

    Evaluates to the flat escape counts for rows r .. r+rowsPerTask-1
    (clamped to the image), left to right, top to bottom.
    """
    total = spec.width * spec.height
    chunk = spec.rows_per_task * spec.width
    return Let(
        "lo", _ap("mul", Var("r"), LitInt(spec.width)),
        Let(
            "hiRaw", _ap("add", Var("lo"), LitInt(chunk)),
            Let(
                "hi",
                If(_ap("gt", Var("hiRaw"), LitInt(total)),
                   LitInt(total), Var("hiRaw")),
                _ap("map",
                    Lam("i", _pixel_expr(spec)),
                    _ap("range", Var("lo"),
                        _ap("sub", Var("hi"), LitInt(1)))),
            ),
        ),
    )


def mandel_row_expr(spec: MandelSpec, row_start: int, row_count: int) -> Expr:
    """Closed program for one specific row band (mainly for tests)."""
    if row_start < 0 or row_count < 0 or row_start + row_count > spec.height:
        raise ValueError("row band out of bounds")
    banded = MandelSpec(spec.width, spec.height, spec.cx, spec.cy,
                        spec.view_w, spec.max_iter, rows_per_task=max(1, row_count))
    from qx.expr import substitute
    from qx.expr import lift
    return substitute(mandel_tile_template(banded), "r", lift(row_start))


def task_fuel(spec: MandelSpec) -> int:
    """Generous deterministic budget for one tile."""
    pixels = spec.rows_per_task * spec.width
    return 200_000 + pixels * (45 * spec.max_iter + 150)


def mandel_counts(spec: MandelSpec, executor) -> list[int]:
    """Escape counts for the whole image via distributed row tiles."""
    row_starts = list(range(0, spec.height, spec.rows_per_task))
    job = make_sweep(mandel_tile_template(spec), "r", row_starts,
                     fuel=task_fuel(spec))
    results = run_sweep(job, executor)
    for item in results:
        if isinstance(item, Exception):
            raise item
    counts: list[int] = []
    for tile in results:
        counts.extend(tile)
    if len(counts) != spec.width * spec.height:
        raise RuntimeError(f"expected {spec.width * spec.height} pixels, "
                           f"got {len(counts)}")
    bad = [c for c in counts if not 0 <= c <= spec.max_iter]
    if bad:
        raise RuntimeError(f"escape count out of range: {bad[0]}")
    return counts


def counts_to_ppm(counts: list[int], spec: MandelSpec) -> bytes:
    """Binary grayscale PPM (P6): v = floor(255 * count / maxIter)."""
    header = f"P6\n{spec.width} {spec.height}\n255\n".encode("ascii")
    body = bytearray()
    for c in counts:
        v = (255 * c) // spec.max_iter
        body += bytes((v, v, v))
    return header + bytes(body)


def render_mandel(spec: MandelSpec, executor, out_path: str) -> bytes:
    """Render and write the PPM; returns the bytes written."""
    data = counts_to_ppm(mandel_counts(spec, executor), spec)
    with open(out_path, "wb") as fh:
        fh.write(data)
    return data
