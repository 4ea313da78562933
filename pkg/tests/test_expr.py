import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conflat.expr import (
    BinOp,
    Call,
    Const,
    ExprError,
    FUNCTIONS,
    Neg,
    Num,
    Var,
    depth,
    parse_expr,
    to_source,
    variables_used,
)
from conflat.jets import eval_jet


def value(src, dim, point):
    return float(eval_jet(parse_expr(src, dim), point, 0).value[0])


def test_basic_grammar_case():
    node = parse_expr("sin(u1)^2 + u2", 2)
    assert isinstance(node, BinOp) and node.op == "+"
    assert depth(node) == 3


def test_variable_out_of_range():
    with pytest.raises(ExprError, match="out of range") as err:
        parse_expr("u3", 2)
    assert err.value.offset == 0


def test_unbalanced_parenthesis_offset():
    with pytest.raises(ExprError) as err:
        parse_expr("u1*(", 2)
    assert err.value.offset == 4


def test_unknown_identifier():
    with pytest.raises(ExprError, match="unknown identifier"):
        parse_expr("frob(u1)", 1)
    with pytest.raises(ExprError, match="unknown identifier"):
        parse_expr("x", 1)


def test_empty_source_rejected():
    with pytest.raises(ExprError):
        parse_expr("", 1)
    with pytest.raises(ExprError):
        parse_expr("   ", 1)


def test_trailing_garbage():
    with pytest.raises(ExprError):
        parse_expr("u1 u1", 1)


def test_power_right_associative():
    assert value("2^3^2", 1, (0.0,)) == 512.0
    tree = parse_expr("2^3^2", 1)
    assert isinstance(tree.right, BinOp) and tree.right.op == "^"


def test_unary_minus_binds_below_power():
    # -u1^2 is -(u1^2)
    assert value("-u1^2", 1, (3.0,)) == -9.0
    assert value("u1^-2", 1, (2.0,)) == 0.25


def test_precedence_mul_over_add():
    assert value("2 + 3 * 4", 1, (0.0,)) == 14.0
    assert value("(2 + 3) * 4", 1, (0.0,)) == 20.0


def test_constants():
    assert value("pi", 1, (0.0,)) == pytest.approx(math.pi)
    assert value("e", 1, (0.0,)) == pytest.approx(math.e)


def test_scientific_literals():
    assert value("1e-3 + 2.5E+1", 1, (0.0,)) == pytest.approx(0.001 + 25.0)


def test_all_functions_parse():
    for fn in FUNCTIONS:
        node = parse_expr(f"{fn}(u1)", 1)
        assert isinstance(node, Call) and node.fn == fn


def test_variables_used():
    assert variables_used(parse_expr("u1 * sin(u3) - 2", 3)) == {0, 2}


def test_roundtrip_specific():
    for src in [
        "sin(u1)^2 + u2",
        "-(u1 * u2)",
        "u1 - (u2 - u1)",
        "(u1 + u2)^(u1 / 4)",
        "2^3^2",
        "-u1^2",
        "u1 / u2 / 2",
        "1 / sqrt(2)",
    ]:
        tree = parse_expr(src, 2)
        assert parse_expr(to_source(tree), 2) == tree


def _expr_strategy():
    leaves = st.one_of(
        st.builds(Num, st.floats(min_value=0.0, max_value=100.0, allow_nan=False)),
        st.builds(Var, st.integers(min_value=0, max_value=2)),
        st.builds(Const, st.sampled_from(["pi", "e"])),
    )

    def extend(children):
        return st.one_of(
            st.builds(Neg, children),
            st.builds(
                BinOp, st.sampled_from(["+", "-", "*", "/", "^"]), children, children
            ),
            st.builds(Call, st.sampled_from(list(FUNCTIONS)), children),
        )

    return st.recursive(leaves, extend, max_leaves=20)


@settings(max_examples=200, deadline=None)
@given(_expr_strategy())
def test_print_parse_roundtrip(tree):
    assert parse_expr(to_source(tree), 3) == tree
