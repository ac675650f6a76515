"""Wire protocol: length-prefixed frames carrying textual messages.

A frame is a 4-byte big-endian payload length followed by that many
bytes of UTF-8 text; the text is one message s-expression reusing the
canonical expression grammar.  Both sides of every connection speak
protocol version 1.  The exact byte layout is documented in PROTOCOL.md.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field

from qx.expr import (
    Expr,
    ParseError,
    T_ATOM,
    T_LP,
    T_STR,
    TokenStream,
    escape_string,
    is_literal,
    print_expr,
    read_expr,
)
from qx.evaluator import ERROR_CODES

WIRE_VERSION = 1
MAX_FRAME = 16 * 1024 * 1024

MESSAGE_ERROR_CODES = frozenset(ERROR_CODES | {"parse-error", "version-mismatch", "overloaded"})

_ID_MAX = (1 << 64) - 1


class WireError(Exception):
    """Framing or payload failure.

    kind is one of truncated / oversize / bad-payload; offset is the byte
    position for bad payloads; recovered_id is the request id when one
    could be salvaged from a malformed request, so the peer can still be
    answered instead of dropped.
    """

    def __init__(self, kind: str, detail: str, offset: int | None = None,
                 recovered_id: int | None = None):
        assert kind in ("truncated", "oversize", "bad-payload"), kind
        at = f" (byte {offset})" if offset is not None else ""
        super().__init__(f"{kind}: {detail}{at}")
        self.kind = kind
        self.detail = detail
        self.offset = offset
        self.recovered_id = recovered_id


def _check_id(i) -> None:
    if not isinstance(i, int) or isinstance(i, bool) or not 0 <= i <= _ID_MAX:
        raise ValueError(f"request id must be an unsigned 64-bit int, got {i!r}")


@dataclass(frozen=True, slots=True)
class Hello:
    version: int


@dataclass(frozen=True, slots=True)
class HelloOk:
    version: int


@dataclass(frozen=True, slots=True)
class Eval:
    id: int
    expr: Expr
    fuel: int | None = None

    def __post_init__(self):
        _check_id(self.id)
        if self.fuel is not None and (not isinstance(self.fuel, int) or self.fuel < 1):
            raise ValueError(f"fuel override must be a positive int, got {self.fuel!r}")


@dataclass(frozen=True, slots=True)
class Result:
    id: int
    value: Expr

    def __post_init__(self):
        _check_id(self.id)
        if not is_literal(self.value):
            raise ValueError("Result values must be literal expressions")


@dataclass(frozen=True, slots=True)
class Error:
    id: int
    code: str
    detail: str

    def __post_init__(self):
        _check_id(self.id)
        if self.code not in MESSAGE_ERROR_CODES:
            raise ValueError(f"unknown error code {self.code!r}")


@dataclass(frozen=True, slots=True)
class Ping:
    pass


@dataclass(frozen=True, slots=True)
class Pong:
    pass


Message = Hello | HelloOk | Eval | Result | Error | Ping | Pong


# --- encoding ----------------------------------------------------------------

def encode_payload(m: Message) -> str:
    cls = type(m)
    if cls is Hello:
        return f"(hello {m.version})"
    if cls is HelloOk:
        return f"(hellook {m.version})"
    if cls is Eval:
        if m.fuel is None:
            return f"(eval {m.id} {print_expr(m.expr)})"
        return f"(eval {m.id} {print_expr(m.expr)} {m.fuel})"
    if cls is Result:
        return f"(result {m.id} {print_expr(m.value)})"
    if cls is Error:
        return f"(error {m.id} {m.code} {escape_string(m.detail)})"
    if cls is Ping:
        return "(ping)"
    if cls is Pong:
        return "(pong)"
    raise TypeError(f"not a Message: {m!r}")


def frame(payload: bytes) -> bytes:
    if len(payload) > MAX_FRAME:
        raise WireError("oversize", f"payload of {len(payload)} bytes exceeds {MAX_FRAME}")
    return struct.pack(">I", len(payload)) + payload


def encode_message(m: Message) -> bytes:
    return frame(encode_payload(m).encode("utf-8"))


# --- decoding ----------------------------------------------------------------

_RECOVER_RE = re.compile(r"^\s*\(\s*(?:eval|result|error)\s+([0-9]+)")


def _recover_id(text: str) -> int | None:
    m = _RECOVER_RE.match(text)
    if m:
        i = int(m.group(1))
        if i <= _ID_MAX:
            return i
    return None


def _bad(text: str, detail: str, offset: int = 0) -> WireError:
    return WireError("bad-payload", detail, offset=offset, recovered_id=_recover_id(text))


def decode_payload(text: str) -> Message:
    try:
        return _decode_payload(text)
    except ParseError as exc:
        raise _bad(text, exc.message, exc.offset) from exc


def _read_uint(ts: TokenStream, what: str, limit: int) -> int:
    tok = ts.next()
    if tok[0] != T_ATOM or not tok[1].isdigit():
        raise ts.error(f"expected {what}", tok)
    v = int(tok[1])
    if v > limit:
        raise ts.error(f"{what} out of range", tok)
    return v


def _decode_payload(text: str) -> Message:
    ts = TokenStream(text)
    tok = ts.next()
    if tok[0] != T_LP:
        raise ts.error("message must be a parenthesized form", tok)
    head_tok = ts.next()
    if head_tok[0] != T_ATOM:
        raise ts.error("expected message keyword", head_tok)
    head = head_tok[1]
    if head == "ping" or head == "pong":
        ts.expect_rparen(head)
        ts.expect_eof()
        return Ping() if head == "ping" else Pong()
    if head == "hello" or head == "hellook":
        version = _read_uint(ts, "protocol version", 1 << 31)
        ts.expect_rparen(head)
        ts.expect_eof()
        return Hello(version) if head == "hello" else HelloOk(version)
    if head == "eval":
        rid = _read_uint(ts, "request id", _ID_MAX)
        expr = read_expr(ts)
        fuel = None
        if ts.peek()[0] == T_ATOM:
            fuel = _read_uint(ts, "fuel", (1 << 63) - 1)
            if fuel < 1:
                raise ts.error("fuel must be positive")
        ts.expect_rparen("eval")
        ts.expect_eof()
        return Eval(rid, expr, fuel)
    if head == "result":
        rid = _read_uint(ts, "request id", _ID_MAX)
        value_tok = ts.peek()
        value = read_expr(ts)
        ts.expect_rparen("result")
        ts.expect_eof()
        if not is_literal(value):
            raise ts.error("result value must be a literal", value_tok)
        return Result(rid, value)
    if head == "error":
        rid = _read_uint(ts, "request id", _ID_MAX)
        code_tok = ts.next()
        if code_tok[0] != T_ATOM or code_tok[1] not in MESSAGE_ERROR_CODES:
            raise ts.error("unknown error code", code_tok)
        detail_tok = ts.next()
        if detail_tok[0] != T_STR:
            raise ts.error("expected error detail string", detail_tok)
        ts.expect_rparen("error")
        ts.expect_eof()
        return Error(rid, code_tok[1], detail_tok[1])
    raise ts.error(f"unknown message form {head!r}", head_tok)


def decode_message(data: bytes) -> Message:
    """Decode exactly one complete frame."""
    if len(data) < 4:
        raise WireError("truncated", f"{len(data)} bytes is too short for a frame header")
    (length,) = struct.unpack(">I", data[:4])
    if length > MAX_FRAME:
        raise WireError("oversize", f"declared payload of {length} bytes exceeds {MAX_FRAME}")
    if len(data) - 4 < length:
        raise WireError("truncated",
                        f"frame declares {length} payload bytes, got {len(data) - 4}")
    if len(data) - 4 > length:
        raise WireError("bad-payload", "trailing bytes after frame", offset=4 + length)
    try:
        text = data[4:].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise WireError("bad-payload", f"payload is not UTF-8: {exc}", offset=4 + exc.start)
    return decode_payload(text)


@dataclass
class FrameDecoder:
    """Incremental frame splitter: immune to arbitrary TCP re-chunking."""

    _buf: bytearray = field(default_factory=bytearray)

    def feed(self, data: bytes) -> list[Message]:
        self._buf.extend(data)
        out = []
        while True:
            if len(self._buf) < 4:
                return out
            (length,) = struct.unpack(">I", bytes(self._buf[:4]))
            if length > MAX_FRAME:
                raise WireError("oversize",
                                f"declared payload of {length} bytes exceeds {MAX_FRAME}")
            if len(self._buf) - 4 < length:
                return out
            payload = bytes(self._buf[4:4 + length])
            del self._buf[:4 + length]
            try:
                text = payload.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise WireError("bad-payload", f"payload is not UTF-8: {exc}",
                                offset=exc.start)
            out.append(decode_payload(text))

    def pending_bytes(self) -> int:
        return len(self._buf)
