"""Translate expressions into ECMAScript source text.

The mapping is compositional and deterministic: every expression form
has one fixed output shape, lists use the tagged-object encoding
(`{$: 1, $0: head, $1: tail}` cells ending in `{$: 0}`), builtins
resolve to a runtime namespace object ``RT`` emitted as a preamble, and
server-side functions can be exposed to the page as curried RPC stubs
over an abstract ``RT.rpc`` hook.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from qx.evaluator import builtin_table
from qx.expr import (
    App,
    Expr,
    If,
    Lam,
    Let,
    LetRec,
    ListLit,
    LitBool,
    LitFloat,
    LitInt,
    LitStr,
    LitUnit,
    Var,
)


class JsGenError(ValueError):
    """Translation failure: unbound name or module misuse."""


_JS_RESERVED = frozenset("""
    await break case catch class const continue debugger default delete do
    else enum export extends false finally for function if implements import
    in instanceof interface let new null package private protected public
    return static super switch this throw true try typeof var void while
    with yield
""".split())


def mangle(name: str) -> str:
    """JS-safe identifier: primes become $, reserved words gain $."""
    out = name.replace("'", "$")
    if out in _JS_RESERVED:
        out += "$"
    return out


_BUILTINS = frozenset(builtin_table())

_NIL = "{$: 0}"


def _cons_text(head: str, tail: str) -> str:
    return "{$: 1, $0: " + head + ", $1: " + tail + "}"


def translate(e: Expr, defined: frozenset[str] = frozenset()) -> str:
    """ECMAScript expression text for ``e``.

    ``defined`` are module-level names (earlier definitions, RPC stubs)
    that may appear free; anything else free and non-builtin is an
    error.
    """
    return _tr(e, frozenset(defined))


def _tr(e: Expr, scope: frozenset[str]) -> str:
    if isinstance(e, LitInt):
        return str(e.value)
    if isinstance(e, LitFloat):
        return repr(e.value)
    if isinstance(e, LitBool):
        return "true" if e.value else "false"
    if isinstance(e, LitStr):
        return json.dumps(e.value)
    if isinstance(e, LitUnit):
        return "null"
    if isinstance(e, Var):
        if e.name in scope:
            return mangle(e.name)
        if e.name in _BUILTINS:
            return f"RT.{e.name}"
        raise JsGenError(f"unbound name: {e.name}")
    if isinstance(e, Lam):
        body = _tr(e.body, scope | {e.param})
        return f"function ({mangle(e.param)}) {{ return {body}; }}"
    if isinstance(e, App):
        # A saturated application of the cons builtin is a list cell.
        if (isinstance(e.fn, App) and isinstance(e.fn.fn, Var)
                and e.fn.fn.name == "cons" and "cons" not in scope):
            return _cons_text(_tr(e.fn.arg, scope), _tr(e.arg, scope))
        fn = _tr(e.fn, scope)
        if isinstance(e.fn, Lam):
            fn = f"({fn})"
        return f"{fn}({_tr(e.arg, scope)})"
    if isinstance(e, If):
        return (f"({_tr(e.cond, scope)} ? {_tr(e.then_e, scope)}"
                f" : {_tr(e.else_e, scope)})")
    if isinstance(e, Let):
        body = _tr(e.body, scope | {e.name})
        return (f"(function ({mangle(e.name)}) {{ return {body}; }})"
                f"({_tr(e.bound, scope)})")
    if isinstance(e, LetRec):
        inner = scope | {e.name}
        bound = _tr(e.bound, inner)
        body = _tr(e.body, inner)
        return (f"(function () {{ var {mangle(e.name)} = {bound};"
                f" return {body}; }})()")
    if isinstance(e, ListLit):
        out = _NIL
        for item in reversed(e.items):
            out = _cons_text(_tr(item, scope), out)
        return out
    raise JsGenError(f"untranslatable node: {type(e).__name__}")


def encode_js_value(v) -> str:
    """ECMAScript literal text for a scalar or list value."""
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (tuple, list)):
        out = _NIL
        for item in reversed(v):
            out = _cons_text(encode_js_value(item), out)
        return out
    raise JsGenError(f"value of type {type(v).__name__} has no literal form")


def gen_rpc_stub(name: str, arity: int) -> str:
    """Curried stub forwarding its collected arguments to RT.rpc."""
    if arity < 0:
        raise JsGenError("stub arity must be >= 0")
    params = [f"a{i}" for i in range(arity)]
    call = f'RT.rpc({json.dumps(name)}, [{", ".join(params)}])'
    body = f"return {call};"
    for p in reversed(params[1:]):
        body = f"return function ({p}) {{ {body} }};"
    head = f"function ({params[0] if params else ''})"
    return f"var {mangle(name)} = {head} {{ {body} }};"


# The builtin runtime.  Numbers are ECMAScript doubles (the integer /
# float split of the source language collapses); list values are the
# tagged objects used throughout the page.
PREAMBLE = """\
// Runtime for translated quotations.  Lists are tagged objects:
// {$: 0} is empty, {$: 1, $0: head, $1: tail} is a cons cell.
var RT = (function () {
  var RT = {};
  RT.$trunc = function (x) { return (x < 0 ? Math.ceil(x) : Math.floor(x)); };
  RT.$err = function (m) { throw new Error(m); };
  RT.$eq = function (a, b) {
    return (a !== null && typeof a === "object"
      ? (b !== null && typeof b === "object"
        ? (a.$ === 0
          ? b.$ === 0
          : (b.$ === 1 ? (RT.$eq(a.$0, b.$0) ? RT.$eq(a.$1, b.$1) : false) : false))
        : false)
      : a === b);
  };
  RT.add = function (a) { return function (b) { return a + b; }; };
  RT.sub = function (a) { return function (b) { return a - b; }; };
  RT.mul = function (a) { return function (b) { return a * b; }; };
  RT.div = function (a) { return function (b) { return (a % 1 === 0 && b % 1 === 0 ? RT.$trunc(a / b) : a / b); }; };
  RT.mod = function (a) { return function (b) { return a % b; }; };
  RT.neg = function (a) { return -a; };
  RT.lt = function (a) { return function (b) { return a < b; }; };
  RT.le = function (a) { return function (b) { return a <= b; }; };
  RT.gt = function (a) { return function (b) { return a > b; }; };
  RT.ge = function (a) { return function (b) { return a >= b; }; };
  RT.eq = function (a) { return function (b) { return RT.$eq(a, b); }; };
  RT.ne = function (a) { return function (b) { return !RT.$eq(a, b); }; };
  RT.and = function (a) { return function (b) { return a && b; }; };
  RT.or = function (a) { return function (b) { return a || b; }; };
  RT.not = function (a) { return !a; };
  RT.toFloat = function (a) { return a; };
  RT.toInt = function (a) { return RT.$trunc(a); };
  RT.sqrt = function (a) { return Math.sqrt(a); };
  RT.abs = function (a) { return Math.abs(a); };
  RT.min = function (a) { return function (b) { return Math.min(a, b); }; };
  RT.max = function (a) { return function (b) { return Math.max(a, b); }; };
  RT.cons = function (h) { return function (t) { return {$: 1, $0: h, $1: t}; }; };
  RT.head = function (l) { return (l.$ === 1 ? l.$0 : RT.$err("head of empty list")); };
  RT.tail = function (l) { return (l.$ === 1 ? l.$1 : RT.$err("tail of empty list")); };
  RT.isEmpty = function (l) { return l.$ === 0; };
  RT.length = function (l) { return (l.$ === 0 ? 0 : 1 + RT.length(l.$1)); };
  RT.append = function (a) { return function (b) { return (a.$ === 0 ? b : {$: 1, $0: a.$0, $1: RT.append(a.$1)(b)}); }; };
  RT.map = function (f) { return function (l) { return (l.$ === 0 ? {$: 0} : {$: 1, $0: f(l.$0), $1: RT.map(f)(l.$1)}); }; };
  RT.filter = function (p) { return function (l) { return (l.$ === 0 ? {$: 0} : (p(l.$0) ? {$: 1, $0: l.$0, $1: RT.filter(p)(l.$1)} : RT.filter(p)(l.$1))); }; };
  RT.foldl = function (f) { return function (z) { return function (l) { return (l.$ === 0 ? z : RT.foldl(f)(f(z)(l.$0))(l.$1)); }; }; };
  RT.sum = function (l) { return RT.foldl(RT.add)(0)(l); };
  RT.range = function (lo) { return function (hi) { return (lo > hi ? {$: 0} : {$: 1, $0: lo, $1: RT.range(lo + 1)(hi)}); }; };
  // Remote-call hook.  Arguments arrive as values in the tagged
  // encoding; a host page is expected to marshal them onto the wire
  // protocol's Eval message and resolve with the decoded Result.
  RT.rpc = function (name, args) { throw new Error("RT.rpc not wired: " + name); };
  return RT;
})();
"""


@dataclass
class JsModule:
    """Preamble + ordered definitions + ordered RPC stubs."""

    definitions: list[tuple[str, str]] = field(default_factory=list)
    stubs: list[tuple[str, int]] = field(default_factory=list)

    def _names(self) -> set[str]:
        return {n for n, _ in self.definitions} | {n for n, _ in self.stubs}

    def add_stub(self, name: str, arity: int) -> None:
        if name in self._names():
            raise JsGenError(f"duplicate name: {name}")
        gen_rpc_stub(name, arity)  # validates arity
        self.stubs.append((name, arity))

    def add_definition(self, name: str, expr: Expr) -> None:
        if name in self._names():
            raise JsGenError(f"duplicate name: {name}")
        scope = frozenset(n for n, _ in self.definitions) | \
            frozenset(n for n, _ in self.stubs)
        self.definitions.append((name, translate(expr, scope)))

    def emit(self) -> str:
        parts = [PREAMBLE]
        for name, source in self.definitions:
            parts.append(f"var {mangle(name)} = {source};\n")
        for name, arity in self.stubs:
            parts.append(gen_rpc_stub(name, arity) + "\n")
        return "".join(parts)


def emit_program(expr: Expr, name: str = "main",
                 rpc_stubs: list[tuple[str, int]] | None = None) -> str:
    """Whole-file text: preamble, then ``var name = …;``, then stubs."""
    module = JsModule()
    for stub_name, arity in rpc_stubs or []:
        module.add_stub(stub_name, arity)
    module.add_definition(name, expr)
    return module.emit()
