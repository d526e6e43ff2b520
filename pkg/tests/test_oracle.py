import numpy as np
import pytest

from conftest import points_for
from riemap.biharmonic import bitension, tension
from riemap.fdoracle import Oracle, fd_bitension, fd_tension, mp_eval, relative_error
from riemap.scenelang import parse_expression

import mpmath


def test_mp_eval_matches_float():
    node = parse_expression("sin(x)^2 * exp(y) / (2 + atan(x*y)) - sqrt(y)")
    with mpmath.workdps(30):
        v = mp_eval(node, {"x": mpmath.mpf("0.3"), "y": mpmath.mpf("0.7")})
    want = np.sin(0.3) ** 2 * np.exp(0.7) / (2 + np.arctan(0.21)) - np.sqrt(0.7)
    assert abs(float(v) - want) < 1e-15


def test_relative_error_floor():
    assert relative_error([1e-3], [0.0]) == 1e-3
    assert relative_error([2.0, 0.0], [1.0, 0.0]) == 1.0
    assert relative_error([1.5], [10.0], floor=1.0) == 0.85


def test_oracle_circle_closed_form(entries):
    # independent of the jets: |tau| = 1/r and |tau2| = 1/r^3 for the flat circle of radius 2
    F = entries["g3"].map
    t = 0.9
    assert abs(np.linalg.norm(fd_tension(F, [t])) - 0.5) < 1e-6
    assert abs(np.linalg.norm(fd_bitension(F, [t])) - 0.125) < 1e-5


def test_oracle_sphere_tension(entries):
    # unit sphere: tau = 2 H = -2 x
    F = entries["g4"].map
    p = [1.1, 0.3]
    assert relative_error(fd_tension(F, p), -2 * F(p)) < 1e-6


@pytest.mark.parametrize("name", ["g1", "g2", "g3", "g4", "g5", "g6"])
def test_jets_agree_with_oracle(entries, name):
    F = entries[name].map
    for p in points_for(F, 2, seed=11, corners=False):
        oracle = Oracle(F)
        assert relative_error(tension(F, p), oracle.tension(p)) < 1e-6
        assert relative_error(bitension(F, p), oracle.bitension(p)) < 1e-5


def test_oracle_step_convergence(entries):
    # halving h cuts the error roughly by four (central differences are second order)
    F = entries["g3"].map
    t = [0.4]
    exact = tension(F, t)
    e1 = np.linalg.norm(Oracle(F, h=2e-3, extrapolate=False).tension(t) - exact)
    e2 = np.linalg.norm(Oracle(F, h=1e-3, extrapolate=False).tension(t) - exact)
    assert 3.0 < e1 / e2 < 5.0


def test_extrapolation_removes_second_order_error(entries):
    F = entries["g6"].map
    p = [0.25, 0.4, 0.1]  # close to the pole of the chart
    exact = bitension(F, p)
    plain = relative_error(exact, Oracle(F, extrapolate=False).bitension(p))
    extrapolated = relative_error(exact, Oracle(F).bitension(p))
    assert plain > 1e-6 and extrapolated < 1e-7
