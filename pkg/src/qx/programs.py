"""Stock demo programs, built as ASTs.

These are the standard exercises for the platform: closed expressions
over the builtin library that every transport and backend must agree on.
"""

from qx.expr import App, Expr, If, Lam, LetRec, LitBool, LitInt, Var, apply


def _b(name: str, *args: Expr) -> Expr:
    return apply(Var(name), *args)


def add_chain() -> Expr:
    """1 + 2 + 3 (right-folded, as an infix reading associates)."""
    return _b("add", LitInt(1), _b("add", LitInt(2), LitInt(3)))


def sum_range(lo: int, hi: int) -> Expr:
    """sum [lo..hi]."""
    return _b("sum", _b("range", LitInt(lo), LitInt(hi)))


def fib_lam() -> Expr:
    """fib x = if x < 2 then 1 else fib(x-1) + fib(x-2)."""
    return Lam(
        "x",
        If(
            _b("lt", Var("x"), LitInt(2)),
            LitInt(1),
            _b(
                "add",
                App(Var("fib"), _b("sub", Var("x"), LitInt(1))),
                App(Var("fib"), _b("sub", Var("x"), LitInt(2))),
            ),
        ),
    )


def fib_fn() -> Expr:
    """The fib function as a closed expression (letrec returning itself)."""
    return LetRec("fib", fib_lam(), Var("fib"))


def fib_of(n: int) -> Expr:
    return LetRec("fib", fib_lam(), App(Var("fib"), LitInt(n)))


def fib_over_range(lo: int, hi: int) -> Expr:
    """map fib [lo..hi]."""
    return LetRec(
        "fib",
        fib_lam(),
        _b("map", Var("fib"), _b("range", LitInt(lo), LitInt(hi))),
    )


def primes_upto(n: int) -> Expr:
    """Trial-division primes: filter (\\x. all h in [2..x-1], x mod h > 0) [2..n]."""
    no_divisor = Lam(
        "x",
        _b(
            "foldl",
            Lam(
                "acc",
                Lam(
                    "h",
                    _b(
                        "and",
                        Var("acc"),
                        _b("gt", _b("mod", Var("x"), Var("h")), LitInt(0)),
                    ),
                ),
            ),
            LitBool(True),
            _b("range", LitInt(2), _b("sub", Var("x"), LitInt(1))),
        ),
    )
    return LetRec(
        "primes",
        Lam("n", _b("filter", no_divisor, _b("range", LitInt(2), Var("n")))),
        App(Var("primes"), LitInt(n)),
    )


def spin(iters: int) -> Expr:
    """CPU burner: iters iterations of a tail-recursive countdown."""
    return LetRec(
        "go",
        Lam(
            "n",
            If(
                _b("le", Var("n"), LitInt(0)),
                LitInt(0),
                App(Var("go"), _b("sub", Var("n"), LitInt(1))),
            ),
        ),
        App(Var("go"), LitInt(iters)),
    )


def spin_template() -> Expr:
    """Countdown with the iteration count left as the free variable n."""
    return LetRec(
        "go",
        Lam(
            "k",
            If(
                _b("le", Var("k"), LitInt(0)),
                LitInt(0),
                App(Var("go"), _b("sub", Var("k"), LitInt(1))),
            ),
        ),
        App(Var("go"), Var("n")),
    )
