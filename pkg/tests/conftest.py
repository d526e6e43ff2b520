import numpy as np
import pytest

from riemap import gallery
from riemap.geometry import ChartManifold, euclidean
from riemap.rmap import SmoothMap
from riemap.sampling import SampleSpec, grid_sample
from riemap.scenelang import parse_expression


def manifold(name, coords, metric, domain):
    exprs = tuple(tuple(parse_expression(str(e)) for e in row) for row in metric)
    return ChartManifold(name, tuple(coords), exprs, tuple(domain))


def smooth_map(name, src, dst, comps):
    return SmoothMap(name, src, dst, tuple(parse_expression(c) for c in comps))


@pytest.fixture(scope="session")
def entries():
    return {name: gallery.builtin_scene(name) for name in gallery.registry()}


@pytest.fixture(scope="session")
def flat():
    return {
        "R1": euclidean("R1", ["t"], [(-3, 3)]),
        "R2": euclidean("R2", ["x", "y"], [(-1, 1)] * 2),
        "R3": euclidean("R3", ["x", "y", "z"], [(-1, 1)] * 3),
        "E2": euclidean("E2", ["a", "b"], [(-3, 3)] * 2),
        "E3": euclidean("E3", ["a", "b", "c"], [(-3, 3)] * 3),
    }


@pytest.fixture(scope="session")
def sphere_chart(flat):
    U = manifold("U", ["u", "v"], [["1", "0"], ["0", "sin(u)^2"]], [(0.2, np.pi - 0.2), (-3, 3)])
    return smooth_map("sphere", U, flat["E3"], ["sin(u)*cos(v)", "sin(u)*sin(v)", "cos(u)"])


def points_for(F, n=25, seed=42, corners=False):
    return grid_sample(SampleSpec(kind="random", n=n, seed=seed, corners=corners), F.source.domain)


def pytest_terminal_summary(terminalreporter):
    import sys
    acc = sys.modules.get("test_acceptance")
    if acc is None or not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acc.RESULTS):
        terminalreporter.write_line(acc.RESULTS[n])
