"""Quotation-language AST and its canonical s-expression text encoding.

The same textual form serves as source format (``.qx`` files) and as the
wire payload for remote evaluation.  Printing is canonical: one unique
text per tree, floats rendered as the shortest decimal that round-trips
bit-for-bit.
"""

from __future__ import annotations

import math
import re
import struct
from dataclasses import dataclass

INT_MIN = -(1 << 63)
INT_MAX = (1 << 63) - 1

RESERVED_WORDS = frozenset(
    {
        "int", "float", "bool", "str", "unit", "var", "lam", "app",
        "let", "letrec", "if", "list", "true", "false",
    }
)

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")
_INT_RE = re.compile(r"-?[0-9]+\Z")
_FLOAT_RE = re.compile(r"-?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?\Z")


class ExprError(ValueError):
    """Invariant violation while constructing an AST node."""


class UnliftableValue(TypeError):
    """Raised by lift() for host values with no literal form."""


class ParseError(Exception):
    """Parse failure; carries the byte offset into the input."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte {offset})")
        self.message = message
        self.offset = offset


def is_ident(name: str) -> bool:
    return bool(_IDENT_RE.match(name)) and name not in RESERVED_WORDS


def _check_ident(name: str) -> None:
    if not isinstance(name, str) or not _IDENT_RE.match(name):
        raise ExprError(f"invalid identifier: {name!r}")
    if name in RESERVED_WORDS:
        raise ExprError(f"identifier is a reserved word: {name!r}")


@dataclass(frozen=True, slots=True)
class LitInt:
    value: int

    def __post_init__(self):
        if not isinstance(self.value, int) or isinstance(self.value, bool):
            raise ExprError(f"LitInt needs an int, got {type(self.value).__name__}")
        if not INT_MIN <= self.value <= INT_MAX:
            raise ExprError(f"integer literal out of signed 64-bit range: {self.value}")


@dataclass(frozen=True, slots=True, eq=False)
class LitFloat:
    value: float

    def __post_init__(self):
        if not isinstance(self.value, float):
            raise ExprError(f"LitFloat needs a float, got {type(self.value).__name__}")
        if not math.isfinite(self.value):
            raise ExprError(f"non-finite float literal: {self.value!r}")

    # Bit-pattern equality so 0.0 and -0.0 stay distinct (their canonical
    # texts differ, and canonical text must be unique per tree).
    def __eq__(self, other):
        if type(other) is not LitFloat:
            return NotImplemented
        return struct.pack("<d", self.value) == struct.pack("<d", other.value)

    def __hash__(self):
        return hash(struct.pack("<d", self.value))


@dataclass(frozen=True, slots=True)
class LitBool:
    value: bool

    def __post_init__(self):
        if not isinstance(self.value, bool):
            raise ExprError(f"LitBool needs a bool, got {type(self.value).__name__}")


@dataclass(frozen=True, slots=True)
class LitStr:
    value: str

    def __post_init__(self):
        if not isinstance(self.value, str):
            raise ExprError(f"LitStr needs a str, got {type(self.value).__name__}")
        try:
            self.value.encode("utf-8")
        except UnicodeEncodeError as exc:
            raise ExprError(f"string literal is not UTF-8 encodable: {exc}") from exc


@dataclass(frozen=True, slots=True)
class LitUnit:
    pass


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __post_init__(self):
        _check_ident(self.name)


@dataclass(frozen=True, slots=True)
class Lam:
    param: str
    body: "Expr"

    def __post_init__(self):
        _check_ident(self.param)


@dataclass(frozen=True, slots=True)
class App:
    fn: "Expr"
    arg: "Expr"


@dataclass(frozen=True, slots=True)
class Let:
    name: str
    bound: "Expr"
    body: "Expr"

    def __post_init__(self):
        _check_ident(self.name)


@dataclass(frozen=True, slots=True)
class LetRec:
    name: str
    bound: "Expr"
    body: "Expr"

    def __post_init__(self):
        _check_ident(self.name)
        if type(self.bound) is not Lam:
            raise ExprError("letrec binding must be a lam form")


@dataclass(frozen=True, slots=True)
class If:
    cond: "Expr"
    then_e: "Expr"
    else_e: "Expr"


@dataclass(frozen=True, slots=True)
class ListLit:
    items: tuple

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))


Expr = (
    LitInt | LitFloat | LitBool | LitStr | LitUnit
    | Var | Lam | App | Let | LetRec | If | ListLit
)

UNIT = LitUnit()


# --- tokenizer -------------------------------------------------------------

T_LP, T_RP, T_ATOM, T_STR, T_EOF = range(5)

_ATOM_END = set(" \t\r\n();\"")
_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}
_WS = set(" \t\r\n")


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


class TokenStream:
    """Tokens of the s-expression grammar, with byte offsets for errors.

    Shared by the expression parser and the wire-message parser.
    """

    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def next(self):
        tok = self.tokens[self.pos]
        if tok[0] != T_EOF:
            self.pos += 1
        return tok

    def peek(self):
        return self.tokens[self.pos]

    def error(self, message: str, tok=None) -> ParseError:
        if tok is None:
            tok = self.peek()
        return ParseError(message, _byte_offset(self.text, tok[2]))

    def expect_rparen(self, what: str):
        tok = self.next()
        if tok[0] != T_RP:
            raise self.error(f"expected ')' to close {what}", tok)

    def expect_eof(self):
        tok = self.peek()
        if tok[0] != T_EOF:
            raise self.error("trailing input after expression", tok)


def _tokenize(text: str):
    toks = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c in _WS:
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c == "(":
            toks.append((T_LP, "(", i))
            i += 1
        elif c == ")":
            toks.append((T_RP, ")", i))
            i += 1
        elif c == '"':
            value, i2 = _scan_string(text, i)
            toks.append((T_STR, value, i))
            i = i2
        else:
            start = i
            while i < n and text[i] not in _ATOM_END:
                i += 1
            if i == start:
                raise ParseError(f"unexpected character {c!r}", _byte_offset(text, i))
            toks.append((T_ATOM, text[start:i], start))
    toks.append((T_EOF, "", n))
    return toks


def _scan_string(text: str, start: int):
    out = []
    i = start + 1
    n = len(text)
    while True:
        if i >= n:
            raise ParseError("unterminated string literal", _byte_offset(text, start))
        c = text[i]
        if c == '"':
            return "".join(out), i + 1
        if c == "\\":
            if i + 1 >= n:
                raise ParseError("unterminated escape", _byte_offset(text, i))
            e = text[i + 1]
            if e in _ESCAPES:
                out.append(_ESCAPES[e])
                i += 2
            elif e == "u":
                hexs = text[i + 2 : i + 6]
                if len(hexs) != 4 or any(h not in "0123456789abcdefABCDEF" for h in hexs):
                    raise ParseError("bad \\u escape", _byte_offset(text, i))
                cp = int(hexs, 16)
                if 0xD800 <= cp <= 0xDFFF:
                    raise ParseError("surrogate code point in \\u escape", _byte_offset(text, i))
                out.append(chr(cp))
                i += 6
            else:
                raise ParseError(f"unknown escape \\{e}", _byte_offset(text, i))
        else:
            out.append(c)
            i += 1


# --- parser ----------------------------------------------------------------

def parse_expr(text: str) -> Expr:
    """Parse one expression; the whole input must be consumed."""
    ts = TokenStream(text)
    e = read_expr(ts)
    ts.expect_eof()
    return e


def read_expr(ts: TokenStream) -> Expr:
    """Read one expression from a token stream (used by the wire parser too)."""
    tok = ts.next()
    kind, value, _ = tok
    if kind == T_ATOM:
        if value == "unit":
            return UNIT
        raise ts.error(f"bare atom {value!r} is not an expression", tok)
    if kind == T_STR:
        raise ts.error("bare string is not an expression (use (str ...))", tok)
    if kind == T_RP:
        raise ts.error("unexpected ')'", tok)
    if kind == T_EOF:
        raise ts.error("unexpected end of input", tok)

    head_tok = ts.next()
    if head_tok[0] != T_ATOM:
        raise ts.error("expected a form keyword after '('", head_tok)
    head = head_tok[1]

    if head == "int":
        atom = _read_atom(ts, "int literal")
        if not _INT_RE.match(atom[1]):
            raise ts.error(f"bad integer literal {atom[1]!r}", atom)
        v = int(atom[1])
        if not INT_MIN <= v <= INT_MAX:
            raise ts.error(f"integer literal out of 64-bit range: {atom[1]}", atom)
        ts.expect_rparen("int")
        return LitInt(v)
    if head == "float":
        atom = _read_atom(ts, "float literal")
        if not _FLOAT_RE.match(atom[1]):
            raise ts.error(f"bad float literal {atom[1]!r}", atom)
        v = float(atom[1])
        if not math.isfinite(v):
            raise ts.error(f"float literal out of range: {atom[1]}", atom)
        ts.expect_rparen("float")
        return LitFloat(v)
    if head == "bool":
        atom = _read_atom(ts, "bool literal")
        if atom[1] not in ("true", "false"):
            raise ts.error(f"bad bool literal {atom[1]!r}", atom)
        ts.expect_rparen("bool")
        return LitBool(atom[1] == "true")
    if head == "str":
        tok = ts.next()
        if tok[0] != T_STR:
            raise ts.error("expected a string literal", tok)
        ts.expect_rparen("str")
        return LitStr(tok[1])
    if head == "var":
        name = _read_ident(ts)
        ts.expect_rparen("var")
        return Var(name)
    if head == "lam":
        name = _read_ident(ts)
        body = read_expr(ts)
        ts.expect_rparen("lam")
        return Lam(name, body)
    if head == "app":
        fn = read_expr(ts)
        arg = read_expr(ts)
        ts.expect_rparen("app")
        return App(fn, arg)
    if head == "let":
        name = _read_ident(ts)
        bound = read_expr(ts)
        body = read_expr(ts)
        ts.expect_rparen("let")
        return Let(name, bound, body)
    if head == "letrec":
        name = _read_ident(ts)
        bound_tok = ts.peek()
        bound = read_expr(ts)
        if type(bound) is not Lam:
            raise ts.error("letrec binding must be a lam form", bound_tok)
        body = read_expr(ts)
        ts.expect_rparen("letrec")
        return LetRec(name, bound, body)
    if head == "if":
        cond = read_expr(ts)
        then_e = read_expr(ts)
        else_e = read_expr(ts)
        ts.expect_rparen("if")
        return If(cond, then_e, else_e)
    if head == "list":
        items = []
        while ts.peek()[0] not in (T_RP, T_EOF):
            items.append(read_expr(ts))
        ts.expect_rparen("list")
        return ListLit(tuple(items))
    raise ts.error(f"unknown form {head!r}", head_tok)


def _read_atom(ts: TokenStream, what: str):
    tok = ts.next()
    if tok[0] != T_ATOM:
        raise ts.error(f"expected {what}", tok)
    return tok


def _read_ident(ts: TokenStream) -> str:
    tok = _read_atom(ts, "identifier")
    name = tok[1]
    if not _IDENT_RE.match(name):
        raise ts.error(f"bad identifier {name!r}", tok)
    if name in RESERVED_WORDS:
        raise ts.error(f"reserved word used as identifier: {name!r}", tok)
    return name


# --- printer ---------------------------------------------------------------

def format_float(v: float) -> str:
    # repr() is the shortest decimal that round-trips binary64 exactly and
    # always carries '.' or an exponent.
    return repr(v)


def escape_string(s: str) -> str:
    out = ['"']
    for c in s:
        if c == '"':
            out.append('\\"')
        elif c == "\\":
            out.append("\\\\")
        elif c == "\n":
            out.append("\\n")
        elif c == "\t":
            out.append("\\t")
        elif c == "\r":
            out.append("\\r")
        elif ord(c) < 0x20:
            out.append(f"\\u{ord(c):04x}")
        else:
            out.append(c)
    out.append('"')
    return "".join(out)


def print_expr(e: Expr) -> str:
    """Canonical text: single spaces, no comments, unique per tree."""
    parts = []
    _emit(e, parts.append)
    return "".join(parts)


def _emit(e: Expr, emit) -> None:
    cls = type(e)
    if cls is LitInt:
        emit(f"(int {e.value})")
    elif cls is LitFloat:
        emit(f"(float {format_float(e.value)})")
    elif cls is LitBool:
        emit("(bool true)" if e.value else "(bool false)")
    elif cls is LitStr:
        emit(f"(str {escape_string(e.value)})")
    elif cls is LitUnit:
        emit("unit")
    elif cls is Var:
        emit(f"(var {e.name})")
    elif cls is Lam:
        emit(f"(lam {e.param} ")
        _emit(e.body, emit)
        emit(")")
    elif cls is App:
        emit("(app ")
        _emit(e.fn, emit)
        emit(" ")
        _emit(e.arg, emit)
        emit(")")
    elif cls is Let:
        emit(f"(let {e.name} ")
        _emit(e.bound, emit)
        emit(" ")
        _emit(e.body, emit)
        emit(")")
    elif cls is LetRec:
        emit(f"(letrec {e.name} ")
        _emit(e.bound, emit)
        emit(" ")
        _emit(e.body, emit)
        emit(")")
    elif cls is If:
        emit("(if ")
        _emit(e.cond, emit)
        emit(" ")
        _emit(e.then_e, emit)
        emit(" ")
        _emit(e.else_e, emit)
        emit(")")
    elif cls is ListLit:
        if not e.items:
            emit("(list)")
        else:
            emit("(list ")
            last = len(e.items) - 1
            for i, item in enumerate(e.items):
                _emit(item, emit)
                if i != last:
                    emit(" ")
            emit(")")
    else:
        raise TypeError(f"not an Expr: {e!r}")


# --- structural operations -------------------------------------------------

def free_vars(e: Expr) -> set[str]:
    cls = type(e)
    if cls is Var:
        return {e.name}
    if cls is Lam:
        return free_vars(e.body) - {e.param}
    if cls is App:
        return free_vars(e.fn) | free_vars(e.arg)
    if cls is Let:
        return free_vars(e.bound) | (free_vars(e.body) - {e.name})
    if cls is LetRec:
        return (free_vars(e.bound) | free_vars(e.body)) - {e.name}
    if cls is If:
        return free_vars(e.cond) | free_vars(e.then_e) | free_vars(e.else_e)
    if cls is ListLit:
        out: set[str] = set()
        for item in e.items:
            out |= free_vars(item)
        return out
    return set()


def _fresh_name(base: str, avoid: set[str]) -> str:
    cand = base + "'"
    if cand not in avoid:
        return cand
    n = 2
    while True:
        cand = f"{base}'{n}"
        if cand not in avoid:
            return cand
        n += 1


def substitute(e: Expr, name: str, replacement: Expr) -> Expr:
    """Capture-avoiding substitution of free occurrences of `name`.

    Binders are alpha-renamed (x -> x', x'2, ...) only when the
    replacement would otherwise capture them, so the result is a
    deterministic function of its inputs.
    """
    cls = type(e)
    if cls is Var:
        return replacement if e.name == name else e
    if cls is App:
        return App(substitute(e.fn, name, replacement), substitute(e.arg, name, replacement))
    if cls is If:
        return If(
            substitute(e.cond, name, replacement),
            substitute(e.then_e, name, replacement),
            substitute(e.else_e, name, replacement),
        )
    if cls is ListLit:
        return ListLit(tuple(substitute(item, name, replacement) for item in e.items))
    if cls is Lam:
        if e.param == name or name not in free_vars(e.body):
            return e
        param, body = _avoid_capture(e.param, e.body, name, replacement)
        return Lam(param, substitute(body, name, replacement))
    if cls is Let:
        bound = substitute(e.bound, name, replacement)
        if e.name == name or name not in free_vars(e.body):
            return Let(e.name, bound, e.body)
        binder, body = _avoid_capture(e.name, e.body, name, replacement)
        return Let(binder, bound, substitute(body, name, replacement))
    if cls is LetRec:
        if e.name == name:
            return e
        in_bound = name in free_vars(e.bound)
        in_body = name in free_vars(e.body)
        if not in_bound and not in_body:
            return e
        binder, bound, body = e.name, e.bound, e.body
        if binder in free_vars(replacement):
            avoid = (free_vars(bound) | free_vars(body)) - {binder}
            avoid |= free_vars(replacement) | {name}
            new = _fresh_name(binder, avoid)
            bound = substitute(bound, binder, Var(new))
            body = substitute(body, binder, Var(new))
            binder = new
        return LetRec(
            binder,
            substitute(bound, name, replacement) if in_bound else bound,
            substitute(body, name, replacement) if in_body else body,
        )
    return e


def _avoid_capture(binder: str, body: Expr, name: str, replacement: Expr):
    # Caller guarantees name is free in body and binder != name.
    if binder not in free_vars(replacement):
        return binder, body
    avoid = (free_vars(body) - {binder}) | free_vars(replacement) | {name}
    new = _fresh_name(binder, avoid)
    return new, substitute(body, binder, Var(new))


def lift(v) -> Expr:
    """Turn a host scalar or (nested) list into a literal expression.

    Raises UnliftableValue for anything without a literal form: closures,
    non-finite floats, integers outside the 64-bit range, foreign types.
    """
    if v is None:
        return UNIT
    if isinstance(v, bool):
        return LitBool(v)
    if isinstance(v, int):
        if not INT_MIN <= v <= INT_MAX:
            raise UnliftableValue(f"integer out of 64-bit range: {v}")
        return LitInt(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            raise UnliftableValue(f"non-finite float: {v!r}")
        return LitFloat(v)
    if isinstance(v, str):
        return LitStr(v)
    if isinstance(v, (list, tuple)):
        return ListLit(tuple(lift(item) for item in v))
    raise UnliftableValue(f"value of type {type(v).__name__} has no literal form")


def apply(fn: Expr, *args: Expr) -> Expr:
    """Curried application chain: apply(f, a, b) = App(App(f, a), b)."""
    e = fn
    for a in args:
        e = App(e, a)
    return e


def is_literal(e: Expr) -> bool:
    """True for pure literal trees (the only shapes allowed in Result messages)."""
    cls = type(e)
    if cls in (LitInt, LitFloat, LitBool, LitStr, LitUnit):
        return True
    if cls is ListLit:
        return all(is_literal(item) for item in e.items)
    return False
