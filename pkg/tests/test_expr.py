"""Parser, printer, and structural operations on expressions."""

import math
import struct

import pytest
from hypothesis import given, settings

import gen
from qx.expr import (
    App,
    ExprError,
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
    ParseError,
    UnliftableValue,
    Var,
    apply,
    free_vars,
    is_literal,
    lift,
    parse_expr,
    print_expr,
    substitute,
)


def _add(a, b):
    return apply(Var("add"), a, b)


class TestParse:
    def test_app_var_int(self):
        assert parse_expr("(app (var f) (int 1))") == App(Var("f"), LitInt(1))

    def test_lam_identity(self):
        assert parse_expr("(lam x (var x))") == Lam("x", Var("x"))

    def test_unbalanced_reports_end_offset(self):
        with pytest.raises(ParseError) as exc:
            parse_expr("(int 1")
        assert exc.value.offset == len("(int 1")

    def test_all_forms(self):
        src = """
        (let a (int 1)
          (letrec f (lam x (if (bool true) (var a) (app (var f) (var x))))
            (list (var a) (float 2.5) (str "hi") unit)))
        """
        e = parse_expr(src)
        assert type(e) is Let
        assert type(e.body) is LetRec
        assert e.body.body == ListLit(
            (Var("a"), LitFloat(2.5), LitStr("hi"), LitUnit())
        )

    def test_comments_and_whitespace(self):
        src = "; leading comment\n(app\t(var f)\r\n  (int 2) ; trailing\n)"
        assert parse_expr(src) == App(Var("f"), LitInt(2))

    def test_string_escapes(self):
        e = parse_expr(r'(str "a\"b\\c\nd\te\rfé")')
        assert e == LitStr('a"b\\c\nd\te\rfé')

    def test_negative_and_exponent_floats(self):
        assert parse_expr("(float -0.5)") == LitFloat(-0.5)
        assert parse_expr("(float 1e10)") == LitFloat(1e10)
        assert parse_expr("(float 2.5E-3)") == LitFloat(2.5e-3)

    def test_trailing_input_rejected(self):
        with pytest.raises(ParseError):
            parse_expr("(int 1) (int 2)")

    def test_letrec_requires_lam(self):
        with pytest.raises(ParseError) as exc:
            parse_expr("(letrec f (int 1) (var f))")
        assert "lam" in exc.value.message

    def test_reserved_word_as_identifier(self):
        with pytest.raises(ParseError):
            parse_expr("(var let)")
        with pytest.raises(ParseError):
            parse_expr("(lam if (var x))")

    def test_bad_tokens(self):
        for src in ["()", "(frob 1)", "(int x)", "(bool maybe)",
                    "(float nan)", "(int 1))", 'hello', '"str"']:
            with pytest.raises(ParseError):
                parse_expr(src)

    def test_int_range_enforced(self):
        parse_expr("(int 9223372036854775807)")
        parse_expr("(int -9223372036854775808)")
        with pytest.raises(ParseError):
            parse_expr("(int 9223372036854775808)")

    def test_byte_offset_counts_utf8_bytes(self):
        # the two-byte é shifts the error offset by one extra byte
        src = '(app (str "é") (frob))'
        with pytest.raises(ParseError) as exc:
            parse_expr(src)
        assert exc.value.offset == src.encode("utf-8").index(b"frob")

    def test_unterminated_string(self):
        with pytest.raises(ParseError):
            parse_expr('(str "abc)')

    def test_bad_unicode_escape(self):
        with pytest.raises(ParseError):
            parse_expr(r'(str "\u12")')
        with pytest.raises(ParseError):
            parse_expr(r'(str "\ud800")')


class TestPrint:
    def test_canonical_forms(self):
        assert print_expr(App(Var("f"), LitInt(1))) == "(app (var f) (int 1))"
        assert print_expr(LitFloat(0.1)) == "(float 0.1)"
        assert print_expr(ListLit((LitInt(1), LitInt(2)))) == "(list (int 1) (int 2))"
        assert print_expr(LitUnit()) == "unit"
        assert print_expr(ListLit(())) == "(list)"

    def test_floats_always_have_point_or_exponent(self):
        assert print_expr(LitFloat(1.0)) == "(float 1.0)"
        assert print_expr(LitFloat(1e300)) == "(float 1e+300)"
        assert print_expr(LitFloat(-0.0)) == "(float -0.0)"

    def test_string_escaping(self):
        e = LitStr('a"b\\c\nd\x01')
        assert print_expr(e) == '(str "a\\"b\\\\c\\nd\\u0001")'

    def test_nested(self):
        e = Let("x", LitInt(1), If(LitBool(True), Var("x"), LitInt(0)))
        assert print_expr(e) == "(let x (int 1) (if (bool true) (var x) (int 0)))"


class TestRoundTrip:
    @settings(max_examples=300, deadline=None)
    @given(gen.exprs())
    def test_parse_print_identity(self, e):
        assert parse_expr(print_expr(e)) == e

    @settings(max_examples=200, deadline=None)
    @given(gen.exprs())
    def test_print_is_fixed_point(self, e):
        text = print_expr(e)
        assert print_expr(parse_expr(text)) == text

    def test_float_bit_patterns_survive(self):
        for bits in [0, 1, (1 << 63) | 1, 0x7FEFFFFFFFFFFFFF, 0x3FF0000000000001]:
            v = struct.unpack("<d", struct.pack("<Q", bits))[0]
            if not math.isfinite(v):
                continue
            back = parse_expr(print_expr(LitFloat(v)))
            assert struct.pack("<d", back.value) == struct.pack("<d", v)

    def test_negative_zero_distinct_from_zero(self):
        assert LitFloat(-0.0) != LitFloat(0.0)
        assert print_expr(LitFloat(-0.0)) != print_expr(LitFloat(0.0))


class TestConstruction:
    def test_letrec_bound_must_be_lam(self):
        with pytest.raises(ExprError):
            LetRec("f", LitInt(1), Var("f"))

    def test_nonfinite_floats_rejected(self):
        for v in (math.inf, -math.inf, math.nan):
            with pytest.raises(ExprError):
                LitFloat(v)

    def test_int_range(self):
        with pytest.raises(ExprError):
            LitInt(1 << 63)
        with pytest.raises(ExprError):
            LitInt(True)

    def test_bad_identifiers(self):
        for name in ("", "1x", "a-b", "if", "true", "unit"):
            with pytest.raises(ExprError):
                Var(name)

    def test_primed_identifiers_ok(self):
        assert Var("x'").name == "x'"
        assert parse_expr("(var x'2)") == Var("x'2")


class TestFreeVars:
    def test_lam_binds(self):
        e = Lam("x", _add(Var("x"), Var("y")))
        assert free_vars(e) == {"y", "add"}

    def test_var(self):
        assert free_vars(Var("z")) == {"z"}

    def test_letrec_binds_in_bound_and_body(self):
        e = LetRec("f", Lam("x", App(Var("f"), Var("x"))), App(Var("f"), LitInt(1)))
        assert free_vars(e) == set()

    def test_let_bound_not_in_scope_of_itself(self):
        e = Let("x", Var("x"), Var("x"))
        assert free_vars(e) == {"x"}


class TestSubstitute:
    def test_direct_replacement(self):
        e = _add(Var("x"), LitInt(1))
        assert substitute(e, "x", LitInt(5)) == _add(LitInt(5), LitInt(1))

    def test_capture_forces_rename(self):
        e = Lam("x", Var("y"))
        assert substitute(e, "y", Var("x")) == Lam("x'", Var("x"))

    def test_bound_occurrence_untouched(self):
        e = Lam("x", Var("x"))
        assert substitute(e, "x", LitInt(9)) == e

    def test_rename_picks_smallest_free_suffix(self):
        # x' is already taken by the replacement, so the binder becomes x'2
        e = Lam("x", _add(Var("y"), Var("x")))
        r = _add(Var("x"), Var("x'"))
        out = substitute(e, "y", r)
        assert out == Lam("x'2", _add(r, Var("x'2")))

    def test_no_rename_without_capture(self):
        e = Lam("x", Var("y"))
        assert substitute(e, "y", LitInt(3)) == Lam("x", LitInt(3))

    def test_letrec_self_shadowing(self):
        e = LetRec("f", Lam("x", App(Var("f"), Var("x"))), Var("f"))
        assert substitute(e, "f", LitInt(1)) == e

    def test_letrec_binder_renamed_on_capture(self):
        e = LetRec("f", Lam("x", Var("g")), App(Var("f"), LitInt(0)))
        out = substitute(e, "g", Var("f"))
        assert out == LetRec("f'", Lam("x", Var("f")), App(Var("f'"), LitInt(0)))

    def test_let_bound_side_always_substituted(self):
        e = Let("x", Var("y"), Var("x"))
        out = substitute(e, "y", LitInt(7))
        assert out == Let("x", LitInt(7), Var("x"))

    @settings(max_examples=200, deadline=None)
    @given(gen.exprs(max_leaves=25), gen.idents(), gen.exprs(max_leaves=10))
    def test_untouched_when_not_free(self, e, x, r):
        if x not in free_vars(e):
            assert substitute(e, x, r) == e

    @settings(max_examples=200, deadline=None)
    @given(gen.exprs(max_leaves=25), gen.idents(), gen.exprs(max_leaves=10))
    def test_free_var_law(self, e, x, r):
        if x in free_vars(e):
            got = free_vars(substitute(e, x, r))
            assert got == (free_vars(e) - {x}) | free_vars(r)


class TestLift:
    def test_scalars(self):
        assert lift(5) == LitInt(5)
        assert lift(0.5) == LitFloat(0.5)
        assert lift(True) == LitBool(True)
        assert lift("hi") == LitStr("hi")
        assert lift(None) == LitUnit()

    def test_flat_list(self):
        assert lift([1, 2, 3, 4]) == ListLit(
            (LitInt(1), LitInt(2), LitInt(3), LitInt(4))
        )

    def test_nested_list(self):
        assert lift([[1], []]) == ListLit((ListLit((LitInt(1),)), ListLit(())))

    def test_functions_unliftable(self):
        with pytest.raises(UnliftableValue):
            lift(lambda x: x)

    def test_nonfinite_unliftable(self):
        with pytest.raises(UnliftableValue):
            lift(math.inf)
        with pytest.raises(UnliftableValue):
            lift(1 << 63)

    def test_is_literal(self):
        assert is_literal(lift([1, [2.5, "x"], None]))
        assert not is_literal(Var("x"))
        assert not is_literal(ListLit((Var("x"),)))
