"""Deterministic, fuel-limited, call-by-value evaluator.

Expressions are compiled once into nested tuples of integer opcodes and
then run on an explicit work stack, so language-level recursion depth is
bounded by fuel and memory, never by the native call stack (letrec
recursion to depth 10^5 must work).

Values are plain host data: int / float / bool / str / None / tuple,
plus Closure and Builtin for functions.  All typing is exact: bool is
not accepted where int is required and vice versa.  Integer arithmetic
wraps to signed 64-bit; float arithmetic is IEEE-754 binary64 in source
order, so results are bit-reproducible across runs and machines.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

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
    UnliftableValue,
    Var,
    lift,
)

DEFAULT_FUEL = 10_000_000

INT_MIN = -(1 << 63)
INT_MAX = (1 << 63) - 1
_MASK64 = (1 << 64) - 1
_BIAS = 1 << 63

ERROR_CODES = frozenset(
    {
        "unbound-var", "type-error", "div-zero", "fuel-exhausted",
        "arity-error", "empty-list", "unliftable-result",
    }
)


class EvalError(Exception):
    """Evaluation failure with a machine-readable code from a closed set."""

    def __init__(self, code: str, detail: str):
        assert code in ERROR_CODES, code
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


class Closure:
    __slots__ = ("param", "body", "env")

    def __init__(self, param, body, env):
        self.param = param
        self.body = body
        self.env = env

    def __repr__(self):
        return f"<closure {self.param}>"


class Builtin:
    __slots__ = ("name", "applied")

    def __init__(self, name, applied):
        self.name = name
        self.applied = applied

    def __repr__(self):
        return f"<builtin {self.name}/{len(self.applied)} applied>"


def _wrap(r: int) -> int:
    if INT_MIN <= r <= INT_MAX:
        return r
    return ((r + _BIAS) & _MASK64) - _BIAS


def _tname(v) -> str:
    t = type(v)
    if t is int:
        return "int"
    if t is float:
        return "float"
    if t is bool:
        return "bool"
    if t is str:
        return "str"
    if v is None:
        return "unit"
    if t is tuple:
        return "list"
    if t is Closure:
        return "closure"
    if t is Builtin:
        return "builtin"
    return t.__name__


def _type_err(op: str, *vals) -> EvalError:
    kinds = ", ".join(_tname(v) for v in vals)
    return EvalError("type-error", f"{op} not defined on ({kinds})")


# --- builtin semantics -------------------------------------------------------

def _p_add(a, b):
    ta = type(a)
    if ta is int and type(b) is int:
        r = a + b
        return r if INT_MIN <= r <= INT_MAX else _wrap(r)
    if ta is float and type(b) is float:
        return a + b
    raise _type_err("add", a, b)


def _p_sub(a, b):
    ta = type(a)
    if ta is int and type(b) is int:
        r = a - b
        return r if INT_MIN <= r <= INT_MAX else _wrap(r)
    if ta is float and type(b) is float:
        return a - b
    raise _type_err("sub", a, b)


def _p_mul(a, b):
    ta = type(a)
    if ta is int and type(b) is int:
        return _wrap(a * b)
    if ta is float and type(b) is float:
        return a * b
    raise _type_err("mul", a, b)


def _p_div(a, b):
    ta = type(a)
    if ta is int and type(b) is int:
        if b == 0:
            raise EvalError("div-zero", "integer division by zero")
        q = abs(a) // abs(b)
        return _wrap(-q if (a < 0) != (b < 0) else q)
    if ta is float and type(b) is float:
        if b == 0.0:
            # IEEE: x/±0 is ±inf by sign rule, 0/0 and nan/0 are nan.
            if a == 0.0 or a != a:
                return math.nan
            return math.copysign(math.inf, a) * math.copysign(1.0, b)
        return a / b
    raise _type_err("div", a, b)


def _p_mod(a, b):
    ta = type(a)
    if ta is int and type(b) is int:
        if b == 0:
            raise EvalError("div-zero", "integer modulo by zero")
        q = abs(a) // abs(b)
        if (a < 0) != (b < 0):
            q = -q
        return a - q * b
    if ta is float and type(b) is float:
        try:
            return math.fmod(a, b)
        except ValueError:
            return math.nan  # IEEE: fmod(x, 0) and fmod(inf, y) are nan
    raise _type_err("mod", a, b)


def _p_neg(a):
    ta = type(a)
    if ta is int:
        return _wrap(-a)
    if ta is float:
        return -a
    raise _type_err("neg", a)


_ORDERED = (int, float, str, bool)


def _p_lt(a, b):
    ta = type(a)
    if ta is int and type(b) is int:
        return a < b
    if ta is type(b) and ta in _ORDERED:
        return a < b
    raise _type_err("lt", a, b)


def _p_le(a, b):
    ta = type(a)
    if ta is int and type(b) is int:
        return a <= b
    if ta is type(b) and ta in _ORDERED:
        return a <= b
    raise _type_err("le", a, b)


def _p_gt(a, b):
    ta = type(a)
    if ta is int and type(b) is int:
        return a > b
    if ta is type(b) and ta in _ORDERED:
        return a > b
    raise _type_err("gt", a, b)


def _p_ge(a, b):
    ta = type(a)
    if ta is int and type(b) is int:
        return a >= b
    if ta is type(b) and ta in _ORDERED:
        return a >= b
    raise _type_err("ge", a, b)


def _values_eq(a, b) -> bool:
    ta = type(a)
    tb = type(b)
    if ta is tuple and tb is tuple:
        if len(a) != len(b):
            return False
        for x, y in zip(a, b):
            if not _values_eq(x, y):
                return False
        return True
    if ta is not tb:
        raise _type_err("eq", a, b)
    if ta is int or ta is bool or ta is str or ta is float:
        return a == b  # IEEE on floats: nan != nan, -0.0 == 0.0
    if a is None:
        return True
    raise _type_err("eq", a, b)


def _p_eq(a, b):
    return _values_eq(a, b)


def _p_ne(a, b):
    return not _values_eq(a, b)


def _p_and(a, b):
    if type(a) is bool and type(b) is bool:
        return a and b
    raise _type_err("and", a, b)


def _p_or(a, b):
    if type(a) is bool and type(b) is bool:
        return a or b
    raise _type_err("or", a, b)


def _p_not(a):
    if type(a) is bool:
        return not a
    raise _type_err("not", a)


def _p_to_float(a):
    if type(a) is int:
        return float(a)
    raise _type_err("toFloat", a)


def _p_to_int(a):
    if type(a) is float:
        if not math.isfinite(a):
            raise EvalError("type-error", f"toInt of non-finite float {a!r}")
        return _wrap(math.trunc(a))
    raise _type_err("toInt", a)


def _p_sqrt(a):
    if type(a) is float:
        return math.sqrt(a) if a >= 0.0 else math.nan
    raise _type_err("sqrt", a)


def _p_abs(a):
    if type(a) is float:
        return abs(a)
    raise _type_err("abs", a)


def _p_min(a, b):
    if type(a) is float and type(b) is float:
        if a != a or b != b:
            return math.nan
        return a if a <= b else b
    raise _type_err("min", a, b)


def _p_max(a, b):
    if type(a) is float and type(b) is float:
        if a != a or b != b:
            return math.nan
        return a if a >= b else b
    raise _type_err("max", a, b)


def _p_cons(x, xs):
    if type(xs) is tuple:
        return (x,) + xs
    raise _type_err("cons", x, xs)


def _p_head(xs):
    if type(xs) is tuple:
        if xs:
            return xs[0]
        raise EvalError("empty-list", "head of empty list")
    raise _type_err("head", xs)


def _p_tail(xs):
    if type(xs) is tuple:
        if xs:
            return xs[1:]
        raise EvalError("empty-list", "tail of empty list")
    raise _type_err("tail", xs)


def _p_is_empty(xs):
    if type(xs) is tuple:
        return len(xs) == 0
    raise _type_err("isEmpty", xs)


def _p_length(xs):
    if type(xs) is tuple:
        return len(xs)
    raise _type_err("length", xs)


def _p_append(a, b):
    if type(a) is tuple and type(b) is tuple:
        return a + b
    raise _type_err("append", a, b)


def _p_sum(xs):
    if type(xs) is not tuple:
        raise _type_err("sum", xs)
    if not xs:
        return 0
    first = type(xs[0])
    if first is int:
        total = 0
        for v in xs:
            if type(v) is not int:
                raise _type_err("sum element", v)
            total += v
        return _wrap(total)
    if first is float:
        total = 0.0
        for v in xs:
            if type(v) is not float:
                raise _type_err("sum element", v)
            total += v
        return total
    raise _type_err("sum element", xs[0])


# kinds: how the machine runs a saturated builtin
_K_SIMPLE = 0   # plain call, constant cost
_K_LISTY = 1    # plain call, charged per element of tuple arguments
_K_RANGE = 2    # charged for the list it is about to build
_K_MAP, _K_FILTER, _K_FOLD = 3, 4, 5  # drive the machine per element

# name -> (arity, kind, fn, name)
_TABLE: dict[str, tuple] = {}
for _name, _arity, _kind, _fn in [
    ("add", 2, _K_SIMPLE, _p_add),
    ("sub", 2, _K_SIMPLE, _p_sub),
    ("mul", 2, _K_SIMPLE, _p_mul),
    ("div", 2, _K_SIMPLE, _p_div),
    ("mod", 2, _K_SIMPLE, _p_mod),
    ("neg", 1, _K_SIMPLE, _p_neg),
    ("lt", 2, _K_SIMPLE, _p_lt),
    ("le", 2, _K_SIMPLE, _p_le),
    ("gt", 2, _K_SIMPLE, _p_gt),
    ("ge", 2, _K_SIMPLE, _p_ge),
    ("eq", 2, _K_LISTY, _p_eq),
    ("ne", 2, _K_LISTY, _p_ne),
    ("and", 2, _K_SIMPLE, _p_and),
    ("or", 2, _K_SIMPLE, _p_or),
    ("not", 1, _K_SIMPLE, _p_not),
    ("toFloat", 1, _K_SIMPLE, _p_to_float),
    ("toInt", 1, _K_SIMPLE, _p_to_int),
    ("sqrt", 1, _K_SIMPLE, _p_sqrt),
    ("abs", 1, _K_SIMPLE, _p_abs),
    ("min", 2, _K_SIMPLE, _p_min),
    ("max", 2, _K_SIMPLE, _p_max),
    ("cons", 2, _K_LISTY, _p_cons),
    ("head", 1, _K_SIMPLE, _p_head),
    ("tail", 1, _K_LISTY, _p_tail),
    ("isEmpty", 1, _K_SIMPLE, _p_is_empty),
    ("length", 1, _K_SIMPLE, _p_length),
    ("append", 2, _K_LISTY, _p_append),
    ("sum", 1, _K_LISTY, _p_sum),
    ("range", 2, _K_RANGE, None),
    ("map", 2, _K_MAP, None),
    ("filter", 2, _K_FILTER, None),
    ("foldl", 3, _K_FOLD, None),
]:
    _TABLE[_name] = (_arity, _kind, _fn, _name)

BUILTIN_NAMES = frozenset(_TABLE)


def builtin_table() -> dict[str, int]:
    """Builtin name to arity (the full fixed library)."""
    return {name: entry[0] for name, entry in _TABLE.items()}


def builtin_arity(name: str) -> int:
    return _TABLE[name][0]


# --- compiler ----------------------------------------------------------------
#
# Opcodes.  "Inline" codes can be evaluated directly by _ev_inline without
# touching the work stack; the compiler fuses them into single dispatches
# (a fully-applied arithmetic builtin over variables and constants costs
# one machine step, charged its real node count in fuel).

_C_CONST = 0
_C_VAR = 1
_C_PRIM_INLINE = 2   # (2, fn, argcodes, cost)
_C_CALL1 = 3         # (3, fname, argcode, cost)
_C_IF_INLINE = 4     # (4, condcode, then, else, cost, then_cost, else_cost)
_C_IF = 5            # (5, condcode, thencode, elsecode)
_C_APP = 6           # (6, fncode, argcode)
_C_LET = 7           # (7, name, boundcode, bodycode)
_C_LETREC = 8        # (8, name, param, lambodycode, bodycode)
_C_LAM = 9           # (9, param, bodycode)
_C_PRIM = 10         # (10, table_entry, argcodes)
_C_PRIM_PARTIAL = 11 # (11, name, argcodes)
_C_LIST = 12         # (12, itemcodes)
_C_PRIMVAR = 13      # (13, name)
_C_UNBOUND = 14      # (14, name)
_C_LET_INLINE = 15   # (15, name, boundcode, bodycode, cost)
_C_PRIM2 = 16        # (16, fn, is_var0, v0, is_var1, v1, cost)
_C_PRIM1 = 17        # (17, fn, is_var0, v0, cost)

_INLINE_OPS = frozenset({_C_CONST, _C_VAR, _C_PRIM_INLINE, _C_LAM, _C_PRIMVAR, _C_UNBOUND})


def _literal_const(e):
    cls = type(e)
    if cls is LitInt or cls is LitFloat or cls is LitBool or cls is LitStr:
        return e.value
    if cls is LitUnit:
        return None
    if cls is ListLit:
        return tuple(_literal_const(item) for item in e.items)
    raise ValueError(f"not a literal: {e!r}")


def _mk_tuple(*items):
    return items


def compile_expr(e: Expr):
    code, _inline, _cost = _compile(e, frozenset())
    return code


def _compile(e: Expr, scope: frozenset):
    """Returns (code, inlinable, ast_node_cost_when_inlinable)."""
    cls = type(e)
    if cls is LitInt or cls is LitFloat or cls is LitBool or cls is LitStr:
        return (_C_CONST, e.value), True, 1
    if cls is LitUnit:
        return (_C_CONST, None), True, 1
    if cls is Var:
        name = sys.intern(e.name)
        if name in scope:
            return (_C_VAR, name), True, 1
        if name in _TABLE:
            return (_C_PRIMVAR, name), True, 1
        return (_C_UNBOUND, name), True, 1
    if cls is ListLit:
        try:
            return (_C_CONST, _literal_const(e)), True, 1
        except ValueError:
            pass
        parts = [_compile(item, scope) for item in e.items]
        codes = tuple(p[0] for p in parts)
        if all(p[1] for p in parts):
            cost = 1 + sum(p[2] for p in parts)
            return (_C_PRIM_INLINE, _mk_tuple, codes, cost), True, cost
        return (_C_LIST, codes), False, 0
    if cls is Lam:
        param = sys.intern(e.param)
        body, _, _ = _compile(e.body, scope | {param})
        return (_C_LAM, param, body), True, 1
    if cls is If:
        cond, c_inl, c_cost = _compile(e.cond, scope)
        then_c, t_inl, t_cost = _compile(e.then_e, scope)
        else_c, el_inl, el_cost = _compile(e.else_e, scope)
        if c_inl:
            code = (_C_IF_INLINE, cond, then_c, else_c, c_cost + 1,
                    t_cost if t_inl else 0, el_cost if el_inl else 0)
            return code, False, 0
        return (_C_IF, cond, then_c, else_c), False, 0
    if cls is Let:
        name = sys.intern(e.name)
        bound, b_inl, b_cost = _compile(e.bound, scope)
        body, _, _ = _compile(e.body, scope | {name})
        if b_inl:
            return (_C_LET_INLINE, name, bound, body, b_cost + 1), False, 0
        return (_C_LET, name, bound, body), False, 0
    if cls is LetRec:
        name = sys.intern(e.name)
        inner = scope | {name}
        lam = e.bound
        param = sys.intern(lam.param)
        lam_body, _, _ = _compile(lam.body, inner | {param})
        body, _, _ = _compile(e.body, inner)
        return (_C_LETREC, name, param, lam_body, body), False, 0
    if cls is App:
        spine_args = []
        head = e
        while type(head) is App:
            spine_args.append(head.arg)
            head = head.fn
        spine_args.reverse()
        if type(head) is Var and head.name not in scope and head.name in _TABLE:
            return _compile_builtin_app(head.name, spine_args, scope)
        fn_code, _, _ = _compile(e.fn, scope)
        arg_code, a_inl, a_cost = _compile(e.arg, scope)
        if fn_code[0] == _C_VAR and a_inl:
            return (_C_CALL1, fn_code[1], arg_code, 2 + a_cost), False, 0
        return (_C_APP, fn_code, arg_code), False, 0
    raise TypeError(f"not an Expr: {e!r}")


def _compile_builtin_app(name: str, args: list, scope: frozenset):
    entry = _TABLE[name]
    arity = entry[0]
    n = len(args)
    name = sys.intern(name)
    if n < arity:
        codes = tuple(_compile(a, scope)[0] for a in args)
        return (_C_PRIM_PARTIAL, name, codes), False, 0
    sat, extra = args[:arity], args[arity:]
    parts = [_compile(a, scope) for a in sat]
    codes = tuple(p[0] for p in parts)
    # spine nodes: one App per argument plus the Var head
    base_cost = arity + 1 + sum(p[2] for p in parts)
    if entry[1] == _K_SIMPLE and all(p[1] for p in parts):
        # var/const operand shapes dominate hot loops; resolve them
        # without recursing through _ev_inline
        if arity == 2 and all(c[0] in (_C_VAR, _C_CONST) for c in codes):
            code = (_C_PRIM2, entry[2],
                    codes[0][0] == _C_VAR, codes[0][1],
                    codes[1][0] == _C_VAR, codes[1][1], base_cost)
        elif arity == 1 and codes[0][0] in (_C_VAR, _C_CONST):
            code = (_C_PRIM1, entry[2],
                    codes[0][0] == _C_VAR, codes[0][1], base_cost)
        else:
            code = (_C_PRIM_INLINE, entry[2], codes, base_cost)
        inl, cost = True, base_cost
    else:
        code = (_C_PRIM, entry, codes)
        inl, cost = False, 0
    for a in extra:
        arg_code, _, _ = _compile(a, scope)
        code = (_C_APP, code, arg_code)
        inl, cost = False, 0
    return code, inl, cost


# --- machine -----------------------------------------------------------------

def _ev_inline(code, env):
    op = code[0]
    if op == _C_PRIM2:
        if code[2]:
            name = code[3]
            f = env
            while f[0] != name:
                f = f[2]
            a = f[1]
        else:
            a = code[3]
        if code[4]:
            name = code[5]
            f = env
            while f[0] != name:
                f = f[2]
            b = f[1]
        else:
            b = code[5]
        return code[1](a, b)
    if op == _C_VAR:
        name = code[1]
        while env[0] != name:
            env = env[2]
        return env[1]
    if op == _C_CONST:
        return code[1]
    if op == _C_PRIM_INLINE:
        return code[1](*[_ev_inline(c, env) for c in code[2]])
    if op == _C_PRIM1:
        if code[2]:
            name = code[3]
            f = env
            while f[0] != name:
                f = f[2]
            a = f[1]
        else:
            a = code[3]
        return code[1](a)
    if op == _C_LAM:
        return Closure(code[1], code[2], env)
    if op == _C_PRIMVAR:
        return Builtin(code[1], ())
    raise EvalError("unbound-var", f"unbound variable: {code[1]}")


# work-stack continuation tags (0 is an EV frame)
_KC_CALL = 1
_KC_IF = 2
_KC_LET = 3
_KC_PRIMN = 4
_KC_PARTIAL = 5
_KC_LIST = 6
_KC_MAP = 7
_KC_FILTER = 8
_KC_FOLD = 9
_KC_CALLARG = 10


def _run_prim(work, vals, entry, args, fuel):
    """Execute a saturated builtin; returns remaining fuel.

    Simple builtins compute immediately; element-wise builtins charge fuel
    for the list they touch before doing the work; map/filter/foldl push
    continuation frames that drive one callee application per element.
    """
    kind = entry[1]
    if kind == _K_SIMPLE:
        vals.append(entry[2](*args))
        return fuel
    if kind == _K_LISTY:
        for a in args:
            if type(a) is tuple:
                fuel -= len(a)
        if fuel < 0:
            raise EvalError("fuel-exhausted", "step budget exceeded")
        vals.append(entry[2](*args))
        return fuel
    if kind == _K_RANGE:
        lo, hi = args
        if type(lo) is not int or type(hi) is not int:
            raise _type_err("range", lo, hi)
        n = hi - lo + 1
        if n <= 0:
            vals.append(())
            return fuel
        fuel -= n
        if fuel < 0:
            raise EvalError("fuel-exhausted", "step budget exceeded")
        vals.append(tuple(range(lo, hi + 1)))
        return fuel
    # higher-order: map / filter / foldl
    f = args[0]
    lst = args[-1]
    if type(lst) is not tuple:
        raise _type_err(entry[3], lst)
    if type(f) is not Closure and type(f) is not Builtin:
        raise _type_err(entry[3], f)
    fuel -= len(lst)
    if fuel < 0:
        raise EvalError("fuel-exhausted", "step budget exceeded")
    if kind == _K_MAP:
        work.append((_KC_MAP, f, lst, 0))
    elif kind == _K_FILTER:
        work.append((_KC_FILTER, f, lst, 0, []))
    else:
        vals.append(args[1])  # fold accumulator lives on the value stack
        work.append((_KC_FOLD, f, lst, 0))
    return fuel


def _apply_push(work, vals, fn, arg, fuel):
    """Apply fn to one argument; returns remaining fuel."""
    tf = type(fn)
    if tf is Closure:
        work.append((0, fn.body, [fn.param, arg, fn.env]))
        return fuel
    if tf is Builtin:
        applied = fn.applied + (arg,)
        entry = _TABLE[fn.name]
        if len(applied) < entry[0]:
            vals.append(Builtin(fn.name, applied))
            return fuel
        return _run_prim(work, vals, entry, applied, fuel)
    raise EvalError("arity-error", f"cannot apply a {_tname(fn)} to an argument")


def execute(code, fuel: int):
    """Run compiled code to a single value.  Raises EvalError."""
    work = [(0, code, None)]
    vals = []
    wpush = work.append
    wpop = work.pop
    vpush = vals.append
    vpop = vals.pop
    ev_inline = _ev_inline
    while work:
        item = wpop()
        fuel -= 1
        if fuel < 0:
            raise EvalError("fuel-exhausted", "step budget exceeded")
        tag = item[0]
        if tag == 0:
            code = item[1]
            op = code[0]
            if op == _C_PRIM2:
                fuel -= code[6] - 1
                if fuel < 0:
                    raise EvalError("fuel-exhausted", "step budget exceeded")
                env = item[2]
                if code[2]:
                    name = code[3]
                    f = env
                    while f[0] != name:
                        f = f[2]
                    a = f[1]
                else:
                    a = code[3]
                if code[4]:
                    name = code[5]
                    f = env
                    while f[0] != name:
                        f = f[2]
                    b = f[1]
                else:
                    b = code[5]
                vpush(code[1](a, b))
            elif op == _C_PRIM_INLINE:
                fuel -= code[3] - 1
                if fuel < 0:
                    raise EvalError("fuel-exhausted", "step budget exceeded")
                env = item[2]
                vpush(code[1](*[ev_inline(c, env) for c in code[2]]))
            elif op == _C_PRIM1:
                fuel -= code[4] - 1
                if fuel < 0:
                    raise EvalError("fuel-exhausted", "step budget exceeded")
                if code[2]:
                    name = code[3]
                    f = item[2]
                    while f[0] != name:
                        f = f[2]
                    a = f[1]
                else:
                    a = code[3]
                vpush(code[1](a))
            elif op == _C_VAR:
                name = code[1]
                env = item[2]
                while env[0] != name:
                    env = env[2]
                vpush(env[1])
            elif op == _C_CONST:
                vpush(code[1])
            elif op == _C_CALL1:
                fuel -= code[3] - 1
                if fuel < 0:
                    raise EvalError("fuel-exhausted", "step budget exceeded")
                env = item[2]
                name = code[1]
                frame = env
                while frame[0] != name:
                    frame = frame[2]
                fn = frame[1]
                arg = ev_inline(code[2], env)
                if type(fn) is Closure:
                    wpush((0, fn.body, [fn.param, arg, fn.env]))
                else:
                    fuel = _apply_push(work, vals, fn, arg, fuel)
            elif op == _C_IF_INLINE:
                fuel -= code[4] - 1
                if fuel < 0:
                    raise EvalError("fuel-exhausted", "step budget exceeded")
                env = item[2]
                c = ev_inline(code[1], env)
                if c is True:
                    branch, bcost = code[2], code[5]
                elif c is False:
                    branch, bcost = code[3], code[6]
                else:
                    raise EvalError("type-error", f"if condition must be bool, got {_tname(c)}")
                if bcost:
                    fuel -= bcost
                    if fuel < 0:
                        raise EvalError("fuel-exhausted", "step budget exceeded")
                    vpush(ev_inline(branch, env))
                else:
                    wpush((0, branch, env))
            elif op == _C_IF:
                env = item[2]
                wpush((_KC_IF, code[2], code[3], env))
                wpush((0, code[1], env))
            elif op == _C_APP:
                env = item[2]
                wpush((_KC_CALL,))
                wpush((0, code[2], env))
                wpush((0, code[1], env))
            elif op == _C_LET:
                env = item[2]
                wpush((_KC_LET, code[1], code[3], env))
                wpush((0, code[2], env))
            elif op == _C_LET_INLINE:
                fuel -= code[4] - 1
                if fuel < 0:
                    raise EvalError("fuel-exhausted", "step budget exceeded")
                env = item[2]
                wpush((0, code[3], [code[1], ev_inline(code[2], env), env]))
            elif op == _C_LETREC:
                frame = [code[1], None, item[2]]
                frame[1] = Closure(code[2], code[3], frame)
                wpush((0, code[4], frame))
            elif op == _C_LAM:
                vpush(Closure(code[1], code[2], item[2]))
            elif op == _C_PRIM:
                env = item[2]
                argcodes = code[2]
                wpush((_KC_PRIMN, code[1], len(argcodes)))
                for c in reversed(argcodes):
                    wpush((0, c, env))
            elif op == _C_PRIM_PARTIAL:
                env = item[2]
                argcodes = code[2]
                wpush((_KC_PARTIAL, code[1], len(argcodes)))
                for c in reversed(argcodes):
                    wpush((0, c, env))
            elif op == _C_LIST:
                env = item[2]
                itemcodes = code[1]
                wpush((_KC_LIST, len(itemcodes)))
                for c in reversed(itemcodes):
                    wpush((0, c, env))
            elif op == _C_PRIMVAR:
                vpush(Builtin(code[1], ()))
            else:
                raise EvalError("unbound-var", f"unbound variable: {code[1]}")
        elif tag == _KC_CALL:
            arg = vpop()
            fn = vpop()
            if type(fn) is Closure:
                wpush((0, fn.body, [fn.param, arg, fn.env]))
            else:
                fuel = _apply_push(work, vals, fn, arg, fuel)
        elif tag == _KC_PRIMN:
            entry = item[1]
            n = item[2]
            args = vals[-n:]
            del vals[-n:]
            if entry[1] == _K_SIMPLE:
                vpush(entry[2](*args))
            else:
                fuel = _run_prim(work, vals, entry, args, fuel)
        elif tag == _KC_IF:
            c = vpop()
            if c is True:
                wpush((0, item[1], item[3]))
            elif c is False:
                wpush((0, item[2], item[3]))
            else:
                raise EvalError("type-error", f"if condition must be bool, got {_tname(c)}")
        elif tag == _KC_LET:
            wpush((0, item[2], [item[1], vpop(), item[3]]))
        elif tag == _KC_MAP:
            f = item[1]
            lst = item[2]
            i = item[3]
            if i == len(lst):
                if i:
                    res = tuple(vals[-i:])
                    del vals[-i:]
                    vpush(res)
                else:
                    vpush(())
            else:
                wpush((_KC_MAP, f, lst, i + 1))
                fuel = _apply_push(work, vals, f, lst[i], fuel)
        elif tag == _KC_FILTER:
            f = item[1]
            lst = item[2]
            i = item[3]
            acc = item[4]
            if i:
                flag = vpop()
                if flag is True:
                    acc.append(lst[i - 1])
                elif flag is not False:
                    raise EvalError("type-error", f"filter predicate returned {_tname(flag)}")
            if i == len(lst):
                vpush(tuple(acc))
            else:
                wpush((_KC_FILTER, f, lst, i + 1, acc))
                fuel = _apply_push(work, vals, f, lst[i], fuel)
        elif tag == _KC_FOLD:
            f = item[1]
            lst = item[2]
            i = item[3]
            if i < len(lst):
                acc = vpop()
                wpush((_KC_FOLD, f, lst, i + 1))
                wpush((_KC_CALLARG, lst[i]))
                fuel = _apply_push(work, vals, f, acc, fuel)
            # else: accumulator on top of vals is the result
        elif tag == _KC_CALLARG:
            fuel = _apply_push(work, vals, vpop(), item[1], fuel)
        elif tag == _KC_PARTIAL:
            n = item[2]
            args = tuple(vals[-n:])
            del vals[-n:]
            vpush(Builtin(item[1], args))
        else:  # _KC_LIST
            n = item[1]
            if n:
                res = tuple(vals[-n:])
                del vals[-n:]
                vpush(res)
            else:
                vpush(())
    return vals[-1]


def evaluate(e: Expr, fuel: int = DEFAULT_FUEL):
    """Evaluate an expression to a host value under a fuel budget."""
    if fuel < 1:
        raise ValueError("fuel must be positive")
    return execute(compile_expr(e), fuel)


def value_to_expr(v) -> Expr:
    """Literal expression for a value; functions have none."""
    try:
        return lift(v)
    except UnliftableValue as exc:
        raise EvalError("unliftable-result", str(exc)) from exc


def literal_value(e: Expr):
    """Host value of a literal expression (inverse of value_to_expr)."""
    return _literal_const(e)


@dataclass(frozen=True)
class EvalConfig:
    fuel: int = DEFAULT_FUEL


class Evaluator:
    """Evaluator with a configured default fuel budget."""

    def __init__(self, config: EvalConfig = EvalConfig()):
        self.config = config

    def evaluate(self, e: Expr, fuel: int | None = None):
        return evaluate(e, self.config.fuel if fuel is None else fuel)
