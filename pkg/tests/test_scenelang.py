import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from exprgen import random_text, safe_text
from riemap import jets
from riemap.errors import (AsymmetricMetricError, DimensionMismatchError, LexError, ParseError,
                           SingularityError, UnknownIdentifierError, UnknownManifoldError)
from riemap.geometry import sectional_curvature
from riemap.jets import extract_partial, lift_point
from riemap.scene import parse_scene
from riemap.scenelang import BinOp, Call, Neg, Num, Var, eval_ast, eval_float, free_variables, parse_expression, to_text, tokenize


def kinds(text):
    return [(t.kind, t.text) for t in tokenize(text)[:-1]]


# -- lexer ---------------------------------------------------------------------


def test_tokenize_simple_expression():
    assert kinds("2*x + sin(y)") == [
        ("NUM", "2"), ("OP", "*"), ("IDENT", "x"), ("OP", "+"), ("IDENT", "sin"),
        ("LPAREN", "("), ("IDENT", "y"), ("RPAREN", ")"),
    ]


def test_scientific_literal():
    toks = tokenize("1e-3")
    assert len(toks) == 2 and toks[0].value == 0.001


def test_illegal_character_position():
    with pytest.raises(LexError) as info:
        tokenize("x @ y")
    assert (info.value.line, info.value.column) == (1, 3)


def test_comments_and_lines():
    toks = tokenize("# header\n  x # trailing\ny")
    assert [(t.text, t.line, t.column) for t in toks[:-1]] == [("x", 2, 3), ("y", 3, 1)]


# -- parser --------------------------------------------------------------------


def test_precedence_mul_over_add():
    assert parse_expression("a + b * c") == BinOp("+", Var("a"), BinOp("*", Var("b"), Var("c")))


def test_unary_minus_below_power():
    assert parse_expression("-x^2") == Neg(BinOp("^", Var("x"), Num(2.0)))


def test_power_is_right_associative():
    node = parse_expression("2^3^2")
    assert node == BinOp("^", Num(2.0), BinOp("^", Num(3.0), Num(2.0)))
    assert eval_float(node, {}) == 512.0


def test_subtraction_and_division_are_left_associative():
    assert eval_float(parse_expression("8 - 4 - 2"), {}) == 2.0
    assert eval_float(parse_expression("8 / 4 / 2"), {}) == 1.0


def test_negative_exponent():
    assert eval_float(parse_expression("2^-1"), {}) == 0.5


def test_pi_constant():
    assert eval_float(parse_expression("pi / 2"), {}) == math.pi / 2


@pytest.mark.parametrize("text", ["(x + 1", "x + 1)", "x +", "foo(x)", "x^y", "sin x", "sin(x, y)", "3 4"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_expression(text)


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as info:
        parse_expression("x + foo(1)")
    assert info.value.column == 5


# -- evaluation ------------------------------------------------------------------


def test_product_rule():
    x = lift_point([2.0, 3.0], 1)
    val = eval_ast(parse_expression("x*y"), {"x": x[0], "y": x[1]})
    assert val.value == 6.0
    assert extract_partial(val, (1, 0)) == 3.0 and extract_partial(val, (0, 1)) == 2.0


def test_pythagorean_identity():
    x = lift_point([0.7], 4)
    val = eval_ast(parse_expression("sin(x)^2 + cos(x)^2"), {"x": x[0]})
    assert abs(val.value - 1.0) < 1e-14
    assert np.max(np.abs(val.c[1:])) < 1e-14


def test_pole_reports_division():
    node = parse_expression("1/(1 - x)")
    x = lift_point([1.0], 2)
    with pytest.raises(SingularityError) as info:
        eval_ast(node, {"x": x[0]}, point=(1.0,))
    assert info.value.position == (1, 2)
    assert info.value.point == (1.0,)


# -- properties ------------------------------------------------------------------


@settings(max_examples=500, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 6))
def test_round_trip(seed, depth):
    node = parse_expression(random_text(np.random.default_rng(seed), depth))
    assert parse_expression(to_text(node)) == node


def _float_eval(text, env):
    # plain float64 evaluation with the numpy ufuncs
    py = text.replace("^", "**")
    scope = {fn: getattr(np, fn) for fn in ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh")}
    scope["atan"] = np.arctan
    return float(eval(py, scope, {k: np.float64(v) for k, v in env.items()}))


@settings(max_examples=500, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_order_zero_matches_float_evaluation(seed, xyz):
    text = safe_text(np.random.default_rng(seed), 5)
    env = dict(zip("xyz", xyz))
    want = _float_eval(text, env)
    jet_env = {k: jets.Jet.constant(v, 3, 0) for k, v in env.items()}
    got = eval_ast(parse_expression(text), jet_env)
    got = float(getattr(got, "value", got))
    assert abs(got - want) <= 1e-15 * abs(want), (text, got, want)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.lists(st.floats(-0.9, 0.9), min_size=3, max_size=3))
def test_first_partials_match_finite_differences(seed, xyz):
    text = safe_text(np.random.default_rng(seed), 6)
    node = parse_expression(text)
    assume(free_variables(node))
    x = lift_point(xyz, 1)
    val = eval_ast(node, {"x": x[0], "y": x[1], "z": x[2]})
    h = 1e-4
    for k in range(3):
        up, dn = list(xyz), list(xyz)
        up[k] += h
        dn[k] -= h
        fd = (eval_float(node, dict(zip("xyz", up))) - eval_float(node, dict(zip("xyz", dn)))) / (2 * h)
        alpha = tuple(int(i == k) for i in range(3))
        got = extract_partial(val, alpha)
        assert abs(got - fd) <= 1e-6 * max(1.0, abs(fd), abs(val.value)), (text, k, got, fd)


# -- scene loading ------------------------------------------------------------------


def test_minimal_scene():
    scene = parse_scene("manifold E2 { dim 2 coords x y metric [[1,0],[0,1]] }")
    assert list(scene.manifolds) == ["E2"]
    assert np.array_equal(scene.manifolds["E2"].metric_values([0.3, 0.4]), np.eye(2))


def test_map_arity_mismatch():
    text = """
    manifold A { dim 2 coords x y metric [[1,0],[0,1]] }
    manifold B { dim 2 coords a b metric [[1,0],[0,1]] }
    map f : A -> B { a = x  b = y  c = x }
    """
    with pytest.raises(DimensionMismatchError):
        parse_scene(text)


def test_metric_shape_mismatch():
    with pytest.raises(DimensionMismatchError):
        parse_scene("manifold A { dim 2 coords x y metric [[1,0,0],[0,1,0],[0,0,1]] }")


def test_asymmetric_metric():
    with pytest.raises(AsymmetricMetricError):
        parse_scene("manifold A { dim 2 coords x y metric [[1, x],[0, 1]] }")


def test_unknown_identifier_in_map():
    text = """
    manifold A { dim 1 coords t metric [[1]] }
    manifold B { dim 1 coords s metric [[1]] }
    map f : A -> B { s = t + w }
    """
    with pytest.raises(UnknownIdentifierError):
        parse_scene(text)


def test_unknown_manifold():
    text = "manifold A { dim 1 coords t metric [[1]] }\nmap f : A -> Nowhere { s = t }"
    with pytest.raises(UnknownManifoldError):
        parse_scene(text)


def test_scene_parse_error_position():
    with pytest.raises(ParseError) as info:
        parse_scene("manifold A {\n  dim two\n}")
    assert info.value.line == 2


def test_spaceform_conformal_metric():
    scene = parse_scene("spaceform S { dim 2 curvature 1 }")
    S = scene.manifolds["S"]
    x, y = 0.3, -0.5
    want = 1.0 / (1 + 0.25 * (x * x + y * y)) ** 2
    assert np.allclose(S.metric_values([x, y]), want * np.eye(2), rtol=1e-15)
    rng = np.random.default_rng(3)
    for _ in range(5):
        p = rng.uniform(-0.8, 0.8, 2)
        assert abs(sectional_curvature(S, p, [1, 0], [0, 1]) - 1.0) < 1e-10


def test_scene_digest_changes_with_text():
    a = parse_scene("manifold E { dim 1 coords t metric [[1]] }")
    b = parse_scene("manifold E { dim 1 coords t metric [[2]] }")
    assert a.digest != b.digest


def test_default_map_is_last_declared(entries):
    assert entries["g5"].scene.get_map().name == "composite"
