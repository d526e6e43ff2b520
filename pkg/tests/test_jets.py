import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riemap import jets
from riemap.errors import ConfigurationError, SingularityError, UsageError
from riemap.jets import Jet, extract_partial, jet_arithmetic, jet_elementary, lift_point, lift_variable


def coeffs(j):
    return {k: v for k, v in j.as_dict().items() if v != 0.0}


# -- lift_variable -----------------------------------------------------------


def test_lift_is_a_coordinate_jet():
    assert coeffs(lift_variable(3.0, 0, 2, 2)) == {(0, 0): 3.0, (1, 0): 1.0}


def test_lift_squared():
    y = lift_variable(0.0, 1, 2, 4)
    assert (y * y).coeff((0, 2)) == 1.0


def test_binomial_cube():
    h = lift_variable(2.0, 0, 1, 3)
    cube = h * h * h
    assert [cube.coeff((k,)) for k in range(4)] == [8.0, 12.0, 6.0, 1.0]


@pytest.mark.parametrize("args", [(0.0, 0, 1, 5), (0.0, 0, 9, 2), (0.0, 2, 2, 2), (0.0, 0, 0, 2)])
def test_lift_rejects_unsupported_sizes(args):
    with pytest.raises(ConfigurationError):
        lift_variable(*args)


# -- arithmetic ----------------------------------------------------------------


def test_difference_of_squares():
    x = lift_variable(0.0, 0, 1, 2)
    p = jet_arithmetic(1.0 + x, 1.0 - x, "mul")
    assert coeffs(p) == {(0,): 1.0, (2,): -1.0}


def test_geometric_series():
    x = lift_variable(0.0, 0, 1, 3)
    q = jet_arithmetic(Jet.constant(1.0, 1, 3), 1.0 - x, "div")
    assert np.allclose([q.coeff((k,)) for k in range(4)], [1, 1, 1, 1], atol=1e-15)


def test_cauchy_product_mixed_coefficient():
    x, y = (lift_variable(0.0, k, 2, 3) for k in range(2))
    assert jet_arithmetic(x * y, x, "mul").coeff((2, 1)) == 1.0


def test_division_by_vanishing_constant_term():
    x = lift_variable(0.0, 0, 1, 2)
    with pytest.raises(SingularityError):
        jet_arithmetic(Jet.constant(1.0, 1, 2), x, "div")


def test_unknown_operation():
    x = lift_variable(0.0, 0, 1, 2)
    with pytest.raises(UsageError):
        jet_arithmetic(x, x, "pow")


# -- elementary functions -------------------------------------------------------


def test_sine_maclaurin():
    s = jet_elementary("sin", lift_variable(0.0, 0, 1, 3))
    assert np.allclose([s.coeff((k,)) for k in range(4)], [0, 1, 0, -1 / 6], atol=1e-16)


def test_exp_of_constant():
    assert jet_elementary("exp", Jet.constant(0.0, 1, 4)).value == 1.0


def test_log1p_series_matches_finite_differences():
    x = lift_variable(0.0, 0, 1, 4)
    series = [jet_elementary("log", 1.0 + x).coeff((k,)) for k in range(5)]
    assert np.allclose(series, [0, 1, -1 / 2, 1 / 3, -1 / 4], atol=1e-15)
    # oracle: central differences of log(1 + t) at 0, h = 1e-3
    h = 1e-3
    f = lambda t: math.log1p(t)
    d1 = (f(h) - f(-h)) / (2 * h)
    d2 = (f(h) - 2 * f(0) + f(-h)) / h ** 2
    assert abs(series[1] - d1) < 1e-6
    assert abs(2 * series[2] - d2) < 1e-5


@pytest.mark.parametrize("fn,x0", [("log", 0.0), ("log", -1.0), ("sqrt", -0.5)])
def test_domain_violations(fn, x0):
    with pytest.raises(SingularityError):
        jet_elementary(fn, Jet.constant(x0, 1, 2))


def test_pow_const_needs_exponent():
    x = lift_variable(2.0, 0, 1, 2)
    assert jet_elementary("pow_const", x, 0.5).value == pytest.approx(math.sqrt(2))
    with pytest.raises(UsageError):
        jet_elementary("pow_const", x)


# -- extract_partial ---------------------------------------------------------------


def test_extract_mixed_partial_of_product():
    x, y = (lift_variable(1.5, k, 2, 2) for k in range(2))
    assert extract_partial(x * y, (1, 1)) == 1.0


def test_extract_fourth_derivative():
    x = lift_variable(0.0, 0, 1, 4)
    assert extract_partial(x * x * x * x, (4,)) == 24.0


def test_extract_sin_cos_mixed():
    x, y = (lift_variable(0.0, k, 2, 4) for k in range(2))
    assert extract_partial(jets.sin(x) * jets.cos(y), (1, 1)) == 0.0


def test_extract_above_order():
    x = lift_variable(0.0, 0, 1, 2)
    with pytest.raises(UsageError):
        extract_partial(x, (3,))


# -- tensor helpers ------------------------------------------------------------------


def test_inverse_of_matrix_jet():
    x = lift_point([0.3, -0.2], 3)
    M = jets.stack([jets.stack([2.0 + x[0], x[1]]), jets.stack([x[1], 1.0 + x[0] * x[0]])])
    prod = jets.jeinsum("ij,jk->ik", M, jets.inv(M))
    assert np.allclose(prod.c[..., 0], np.eye(2), atol=1e-14)
    assert np.allclose(prod.c[..., 1:], 0.0, atol=1e-13)


def test_composer_matches_direct_evaluation():
    x = lift_point([0.4], 4)
    inner = jets.stack([jets.sin(x[0]), x[0] * x[0]])
    y = lift_point(inner.value, 4)
    outer = jets.exp(y[0]) * y[1]
    composed = jets.Composer(inner, 4)(outer)
    direct = jets.exp(jets.sin(x[0])) * x[0] * x[0]
    assert np.allclose(composed.c, direct.c, atol=1e-13)


# -- properties ----------------------------------------------------------------------


def _poly_strategy():
    term = st.tuples(st.lists(st.integers(0, 4), min_size=3, max_size=3), st.floats(-3, 3))
    return st.lists(term, min_size=1, max_size=6)


def _poly_partial(terms, point, alpha):
    total = 0.0
    for exps, c in terms:
        v = c
        for e, a, x in zip(exps, alpha, point):
            if a > e:
                v = 0.0
                break
            v *= math.factorial(e) / math.factorial(e - a) * x ** (e - a)
        total += v
    return total


def _multi_indices(nv, order):
    import itertools
    return [a for a in itertools.product(range(order + 1), repeat=nv) if sum(a) <= order]


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 3), _poly_strategy(), st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_polynomials_are_exact(nv, raw_terms, point):
    terms = []
    for exps, c in raw_terms:
        exps = exps[:nv]
        while sum(exps) > 4:
            k = exps.index(max(exps))
            exps[k] -= 1
        terms.append((exps, c))
    point = point[:nv]
    x = lift_point(point, 4)
    p = Jet.constant(0.0, nv, 4)
    for exps, c in terms:
        m = Jet.constant(c, nv, 4)
        for k, e in enumerate(exps):
            for _ in range(e):
                m = m * x[k]
        p = p + m
    for alpha in _multi_indices(nv, 4):
        want = _poly_partial(terms, point, alpha)
        got = extract_partial(p, alpha)
        scale = max(1.0, sum(abs(c) for _, c in terms) * 50)
        assert abs(got - want) <= 1e-12 * scale


FUNCS = {
    "sin": (math.sin, (-3, 3)), "cos": (math.cos, (-3, 3)), "tan": (math.tan, (-1.2, 1.2)),
    "exp": (math.exp, (-2, 2)), "log": (math.log, (0.3, 3)), "sqrt": (math.sqrt, (0.3, 3)),
    "sinh": (math.sinh, (-2, 2)), "cosh": (math.cosh, (-2, 2)), "tanh": (math.tanh, (-2, 2)),
    "atan": (math.atan, (-3, 3)),
}


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(sorted(FUNCS)), st.floats(0, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_elementary_partials_match_finite_differences(fn, s, a, b):
    f, (lo, hi) = FUNCS[fn]
    # argument u(x, y) = u0 + a x + b x y, evaluated around (0.3, 0.2)
    u0 = lo + (hi - lo) * (0.1 + 0.8 * s)
    p = (0.3, 0.2)
    shift = u0 - (a * p[0] + b * p[0] * p[1])

    def g(x, y):
        return f(shift + a * x + b * x * y)

    x = lift_point(p, 2)
    jet = jet_elementary(fn, shift + a * x[0] + b * x[0] * x[1])
    h = 1e-4
    fd = {
        (1, 0): (g(p[0] + h, p[1]) - g(p[0] - h, p[1])) / (2 * h),
        (0, 1): (g(p[0], p[1] + h) - g(p[0], p[1] - h)) / (2 * h),
        (2, 0): (g(p[0] + h, p[1]) - 2 * g(*p) + g(p[0] - h, p[1])) / h ** 2,
        (1, 1): (g(p[0] + h, p[1] + h) - g(p[0] + h, p[1] - h) - g(p[0] - h, p[1] + h)
                 + g(p[0] - h, p[1] - h)) / (4 * h ** 2),
    }
    for alpha, want in fd.items():
        got = extract_partial(jet, alpha)
        assert abs(got - want) <= 1e-6 * max(1.0, abs(want)), (alpha, got, want)


def _random_jet(rng, nv=2, order=4):
    return Jet(rng.normal(size=jets.jet_space(nv, order).size), jets.jet_space(nv, order))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_ring_laws(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (_random_jet(rng) for _ in range(3))
    assert np.allclose((a + b).c, (b + a).c, rtol=0, atol=1e-14)
    assert np.allclose((a * b).c, (b * a).c, rtol=0, atol=1e-14)
    assert np.allclose(((a + b) + c).c, (a + (b + c)).c, rtol=0, atol=1e-14)
    assert np.allclose(((a * b) * c).c, (a * (b * c)).c, rtol=0, atol=1e-13)
    assert np.allclose((a * (b + c)).c, (a * b + a * c).c, rtol=0, atol=1e-13)


def test_mixed_orders_truncate_to_minimum():
    x4 = lift_variable(1.0, 0, 1, 4)
    x2 = lift_variable(1.0, 0, 1, 2)
    assert (x4 * x2).order == 2
