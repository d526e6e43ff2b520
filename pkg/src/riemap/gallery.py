"""Built-in scenes with analytically known geometry.

Each entry ships as a scene file under ``riemap/scenes`` and carries its
expected values, each with a tolerance and a note on where the value comes
from.  ``run_entry`` reproduces every expected value with the main pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .biharmonic import bitension_verdicts, collect, conditions_verdicts, dichotomy_verdicts
from .errors import UsageError
from .report import Report
from .rmap import SmoothMap, compose_submersion_immersion
from .sampling import SampleSpec, grid_sample
from .scene import Scene, load_scene


@dataclass(frozen=True)
class Expected:
    """One expected outcome.

    ``kind`` is ``value`` (per-point residual equals ``value`` within ``tol``),
    ``lower`` (per-point residual at least ``value``), ``verdict`` (report
    verdict string) or ``label`` (per-point label string).
    """

    key: str
    kind: str
    value: float | str
    provenance: str
    tol: float = 0.0


@dataclass
class GalleryEntry:
    name: str
    title: str
    path: Path
    scene: Scene
    map: SmoothMap
    expected: list[Expected] = field(default_factory=list)
    composed_from: tuple[str, str] | None = None

    def points(self, spec: SampleSpec | None = None):
        spec = spec or self.scene.analysis.sample_spec()
        return grid_sample(spec, self.map.source.domain)


_HARMONIC_NOTE = "harmonic maps are biharmonic"

_SPECS: dict[str, dict] = {
    "g1": dict(
        title="identity R^2 -> R^2",
        map="identity",
        expected=[
            Expected("isometry", "value", 0.0, "identity is an isometry", 1e-12),
            Expected("tau", "value", 0.0, "all second derivatives vanish", 1e-10),
            Expected("tau2", "value", 0.0, _HARMONIC_NOTE, 1e-7),
            Expected("dichotomy", "verdict", "harmonic", "tau = 0"),
        ],
    ),
    "g2": dict(
        title="projection R^3 -> R^2",
        map="projection",
        expected=[
            Expected("isometry", "value", 0.0, "orthogonal projection is a Riemannian submersion", 1e-12),
            Expected("m1", "label", "1", "one-dimensional kernel"),
            Expected("tau", "value", 0.0, "linear map between flat spaces", 1e-10),
            Expected("mu_ker", "value", 0.0, "fibers are straight lines", 1e-10),
            Expected("tau2", "value", 0.0, _HARMONIC_NOTE, 1e-7),
            Expected("dichotomy", "verdict", "harmonic", "H2 = 0 and tau = 0"),
        ],
    ),
    "g3": dict(
        title="circle of radius 2 in the plane",
        map="circle",
        expected=[
            Expected("isometry", "value", 0.0, "arc-length parametrization", 1e-12),
            Expected("tau", "value", 0.5, "curvature 1/r of a circle, r = 2; hand calculus and oracle", 1e-9),
            Expected("tau2", "value", 0.125, "|phi''''| = 1/r^3 for the flat circle, r = 2; oracle", 1e-7),
            Expected("biharmonic", "verdict", "no", "tau2 != 0"),
        ],
    ),
    "g4": dict(
        title="unit sphere chart in R^3",
        map="sphere",
        expected=[
            Expected("isometry", "value", 0.0, "chart carries the induced metric", 1e-12),
            Expected("H2_norm", "value", 1.0, "mean curvature 1/r of the sphere, r = 1", 1e-9),
            Expected("pseudo_umbilical_operator", "value", 0.0, "spheres are totally umbilical", 1e-9),
            Expected("pseudo_umbilical_bilinear", "value", 0.0, "spheres are totally umbilical", 1e-9),
            Expected("nabla_perp_H2", "value", 0.0, "rank-one normal bundle with constant |H2|", 1e-9),
            Expected("biharmonic", "verdict", "no", "|tau2| = m2^2 |H2|^3 != 0 in flat space"),
        ],
    ),
    "g5": dict(
        title="U x R -> U -> R^3 composite (unit sphere)",
        compose=("projection", "sphere"),
        expected=[
            Expected("isometry", "value", 0.0, "composite of a Riemannian submersion and an isometric immersion", 1e-10),
            Expected("m1", "label", "1", "product fiber direction"),
            Expected("m2", "label", "2", "sphere directions"),
            Expected("mu_ker", "value", 0.0, "product fibers are totally geodesic", 1e-9),
            Expected("H2_norm", "value", 1.0, "H2 of the unit sphere", 1e-9),
            Expected("pseudo_umbilical_operator", "value", 0.0, "inherits umbilicity of the sphere", 1e-9),
            Expected("pseudo_umbilical_bilinear", "value", 0.0, "inherits umbilicity of the sphere", 1e-9),
            Expected("normal_condition", "lower", 2.0, "pseudo-umbilical reduction gives m2^2 |H2|^3 = 4 >= m2^2 |H2|^3 / 2"),
            Expected("biharmonic", "verdict", "no", "flat target with H2 != 0"),
            Expected("conditions_vs_bitension", "verdict", "agree", "both computations say not biharmonic"),
            Expected("nonpositive_curvature_contradiction", "verdict", "no", "c = 0 and not biharmonic"),
        ],
    ),
    "g6": dict(
        title="U x R -> small hypersphere of the unit 3-sphere",
        compose=("projection", "small_sphere"),
        expected=[
            Expected("isometry", "value", 0.0, "conformal radius rho = 2(sqrt 2 - 1) gives induced metric 1/2", 1e-10),
            Expected("m1", "label", "1", "product fiber direction"),
            Expected("mu_ker", "value", 0.0, "product fibers are totally geodesic", 1e-9),
            Expected("H2_norm_sq", "value", 1.0, "sphere of radius 1/sqrt 2 in S^3: |H|^2 = 1/R^2 - 1 = 1", 1e-7),
            Expected("pseudo_umbilical_operator", "value", 0.0, "geodesic spheres are umbilical", 1e-8),
            Expected("nabla_perp_H2", "value", 0.0, "constant |H2| in a rank-one normal bundle", 1e-8),
            Expected("tau2", "value", 0.0, "small hypersphere with |H|^2 = c is proper biharmonic", 1e-7),
            Expected("range_condition", "value", 0.0, "range condition holds", 1e-7),
            Expected("normal_condition", "value", 0.0, "normal condition holds", 1e-7),
            Expected("proper_biharmonic", "verdict", "yes", "tau != 0 and tau2 = 0"),
            Expected("dichotomy", "verdict", "equality c = |H2|^2", "equality branch with c = 1"),
        ],
    ),
}

NAMES = tuple(_SPECS)


def scene_path(name: str) -> Path:
    base = resources.files("riemap") / "scenes" / f"{name}.scene"
    return Path(str(base))


def registry() -> list[str]:
    return list(NAMES)


def builtin_scene(name: str) -> GalleryEntry:
    if name not in _SPECS:
        raise UsageError(f"unknown gallery scene {name!r}; available: {', '.join(NAMES)}")
    spec = _SPECS[name]
    path = scene_path(name)
    scene = load_scene(path)
    if "compose" in spec:
        f1, f2 = (scene.get_map(n) for n in spec["compose"])
        pts = grid_sample(SampleSpec(kind="random", n=5, seed=0, corners=False), f1.source.domain)
        F = compose_submersion_immersion(f1, f2, pts)
        composed = spec["compose"]
    else:
        F = scene.get_map(spec["map"])
        composed = None
    return GalleryEntry(name, spec["title"], path, scene, F, list(spec["expected"]), composed)


def run_entry(entry: GalleryEntry, spec: SampleSpec | None = None, tolerances: dict | None = None,
              workers: int = 1) -> Report:
    """Full pipeline on the entry's sample set, with every expected value checked."""
    tol = dict(entry.scene.analysis.tolerance_table())
    tol.update(tolerances or {})
    spec = spec or entry.scene.analysis.sample_spec()
    report = collect(entry.map, entry.points(spec), f"gallery-{entry.name}", tol, workers)
    report.scene_name = entry.name
    report.scene_digest = entry.scene.digest
    report.samples = spec.describe()
    bitension_verdicts(report)
    c = entry.map.target.curvature
    if c is not None:
        if all("range_condition" in r.residuals for r in report.records):
            conditions_verdicts(report)
        dichotomy_verdicts(report, c)
    report.check("isometry", "residual")
    report.check("tension_decomposition", "identity")
    report.info["title"] = entry.title
    if entry.composed_from:
        report.info["composed_from"] = list(entry.composed_from)
    apply_expectations(report, entry.expected)
    return report


def apply_expectations(report: Report, expected: list[Expected]) -> None:
    notes = {}
    for e in expected:
        notes[e.key] = e.provenance
        if e.kind in ("value", "lower"):
            name = f"expected_{e.key}"
            for r in report.records:
                if e.key not in r.residuals:
                    report.failures.append(f"{e.key} not computed at point {r.index}")
                    continue
                v = r.residuals[e.key]
                r.residuals[name] = abs(v - e.value) if e.kind == "value" else max(0.0, e.value - v)
            report.tolerances[name] = e.tol if e.kind == "value" else 1e-12
            report.check(name, name)
        elif e.kind == "verdict":
            got = report.verdicts.get(e.key)
            if got != e.value:
                report.failures.append(f"verdict {e.key}: expected {e.value!r}, got {got!r}")
        elif e.kind == "label":
            wrong = [r.index for r in report.records if r.labels.get(e.key) != e.value]
            if wrong:
                report.failures.append(f"label {e.key} != {e.value!r} at points {wrong}")
        else:
            raise UsageError(f"unknown expectation kind {e.kind!r}")
    report.info["expected"] = {
        e.key: {"kind": e.kind, "value": e.value, "tolerance": e.tol, "provenance": e.provenance}
        for e in expected
    }
