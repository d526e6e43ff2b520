"""Reproducible sample points inside a chart's coordinate box."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, asdict

import numpy as np

from .errors import ConfigurationError

MARGIN = 1e-3


@dataclass(frozen=True)
class SampleSpec:
    kind: str = "random"  # "random" or "grid"
    n: int = 25
    seed: int = 42
    k: int = 3
    corners: bool = True

    def describe(self) -> dict:
        d = asdict(self)
        if self.kind == "random":
            d.pop("k")
        else:
            d.pop("n")
            d.pop("seed")
        return d


def grid_sample(spec: SampleSpec, domain) -> list[np.ndarray]:
    """Points strictly inside ``domain`` (margin 1e-3 of each box width).

    Random points come from ``numpy.random.default_rng(seed)``.  With
    ``corners`` the 2^d corner-adjacent points are appended after the main
    set, in lexicographic corner order.
    """
    box = np.asarray(domain, dtype=float).reshape(-1, 2)
    width = box[:, 1] - box[:, 0]
    if np.any(width <= 0):
        raise ConfigurationError("sampling domain is empty")
    lo = box[:, 0] + MARGIN * width
    hi = box[:, 1] - MARGIN * width
    if spec.kind == "random":
        if spec.n < 1:
            raise ConfigurationError("random sampling needs n >= 1")
        rng = np.random.default_rng(spec.seed)
        pts = list(lo + (hi - lo) * rng.random((spec.n, len(box))))
    elif spec.kind == "grid":
        if spec.k < 1:
            raise ConfigurationError("grid sampling needs k >= 1")
        axes = [np.array([(a + b) / 2]) if spec.k == 1 else np.linspace(a, b, spec.k) for a, b in zip(lo, hi)]
        pts = [np.array(p) for p in itertools.product(*axes)]
    else:
        raise ConfigurationError(f"unknown sampling kind {spec.kind!r}")
    if spec.corners and spec.kind == "random":
        inset = 0.05 * width
        for corner in itertools.product((0, 1), repeat=len(box)):
            pts.append(np.where(np.array(corner) == 1, box[:, 1] - inset, box[:, 0] + inset))
    return pts
