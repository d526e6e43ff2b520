"""Scene files: manifolds, space forms, maps and analysis settings.

::

    manifold NAME { dim N coords c1 ... cN metric [[e11, ...], ...] domain [lo, hi] x ... }
    spaceform NAME { dim N curvature C }
    map NAME : SRC -> DST { out1 = expr ... }
    analysis { jet_order 4 samples 25 seed 42 tol_rank 1e-7 tol_residual 1e-8 }
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    AsymmetricMetricError, DimensionMismatchError, ParseError, SceneError, SingularityError,
    UnknownIdentifierError, UnknownManifoldError,
)
from .geometry import ChartManifold, spaceform_model
from .report import DEFAULT_TOLERANCES
from .rmap import SmoothMap
from .sampling import SampleSpec, grid_sample
from .scenelang import CONSTANTS, FUNCTIONS, ExprParser, Token, constant_value, eval_float, free_variables, tokenize

SYMMETRY_TOL = 1e-12
SYMMETRY_SAMPLES = 5


@dataclass(frozen=True)
class AnalysisSettings:
    jet_order: int = 4
    samples: int = 25
    seed: int = 42
    grid: int | None = None
    tol_rank: float = 1e-7
    tol_residual: float = 1e-8
    tolerances: tuple[tuple[str, float], ...] = ()  # extra tol_NAME entries

    def sample_spec(self) -> SampleSpec:
        if self.grid is not None:
            return SampleSpec(kind="grid", k=self.grid)
        return SampleSpec(kind="random", n=self.samples, seed=self.seed)

    def tolerance_table(self) -> dict[str, float]:
        table = dict(DEFAULT_TOLERANCES)
        table["rank"] = self.tol_rank
        table["residual"] = self.tol_residual
        table.update(dict(self.tolerances))
        return table


@dataclass
class Scene:
    manifolds: dict[str, ChartManifold]
    maps: dict[str, SmoothMap]
    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)
    digest: str = ""
    name: str = "scene"
    text: str = ""

    @property
    def spaceforms(self) -> dict[str, float]:
        return {k: m.curvature for k, m in self.manifolds.items() if m.curvature is not None}

    def get_map(self, name: str | None = None) -> SmoothMap:
        if not self.maps:
            raise SceneError(f"scene {self.name!r} declares no map")
        if name is None:
            return list(self.maps.values())[-1]
        if name not in self.maps:
            raise UnknownIdentifierError(f"scene {self.name!r} has no map {name!r}; maps: {sorted(self.maps)}")
        return self.maps[name]

    def composition_pair(self) -> tuple[SmoothMap, SmoothMap] | None:
        """First pair (F1, F2) of declared maps with F1's target equal to F2's source."""
        for f1 in self.maps.values():
            for f2 in self.maps.values():
                if f1 is not f2 and f1.composed_from is None and f2.composed_from is None \
                        and f1.target.name == f2.source.name:
                    return f1, f2
        return None


class SceneParser(ExprParser):
    def __init__(self, tokens: list[Token]):
        super().__init__(tokens)
        self.manifolds: dict[str, ChartManifold] = {}
        self.maps: dict[str, SmoothMap] = {}
        self.analysis = AnalysisSettings()

    # -- helpers ---------------------------------------------------------------

    def name(self) -> Token:
        if self.tok.kind != "IDENT":
            raise self.error("expected a name")
        return self.advance()

    def keyword(self, allowed: str) -> Token:
        if self.tok.kind != "KEYWORD":
            raise self.error(f"expected {allowed}")
        return self.advance()

    def constant(self) -> float:
        start = self.tok
        node = self.expression()
        if free_variables(node):
            raise ParseError("expected a constant", start.line, start.column)
        return constant_value(node)

    def integer(self, what: str) -> int:
        t = self.tok
        v = self.constant()
        if v != int(v) or v < 0:
            raise ParseError(f"{what} must be a non-negative integer", t.line, t.column)
        return int(v)

    def interval(self) -> tuple[float, float]:
        self.expect("LBRACK", "[")
        lo = self.constant()
        self.expect("COMMA", ",")
        hi = self.constant()
        self.expect("RBRACK", "]")
        return lo, hi

    # -- blocks ------------------------------------------------------------------

    def scene(self):
        while self.tok.kind != "EOF":
            t = self.tok
            if t.kind != "KEYWORD" or t.text not in ("manifold", "spaceform", "map", "analysis"):
                raise self.error("expected manifold, spaceform, map or analysis")
            self.advance()
            getattr(self, f"block_{t.text}")(t)

    def _register(self, name_tok: Token, m: ChartManifold):
        if name_tok.text in self.manifolds:
            raise SceneError(f"manifold {name_tok.text!r} declared twice (line {name_tok.line})")
        self.manifolds[name_tok.text] = m

    def _coords(self) -> list[Token]:
        out = []
        while self.tok.kind == "IDENT":
            t = self.advance()
            if t.text in FUNCTIONS or t.text in CONSTANTS:
                raise ParseError(f"{t.text!r} is reserved and cannot name a coordinate", t.line, t.column)
            out.append(t)
        return out

    def _domain(self) -> list[tuple[float, float]]:
        box = [self.interval()]
        while self.tok.kind == "IDENT" and self.tok.text == "x":
            self.advance()
            box.append(self.interval())
        return box

    def block_manifold(self, kw: Token):
        name = self.name()
        self.expect("LBRACE", "{")
        dim = coords = metric = domain = None
        metric_tok = None
        while self.tok.kind != "RBRACE":
            t = self.keyword("dim, coords, metric or domain")
            if t.text == "dim":
                dim = self.integer("dim")
            elif t.text == "coords":
                coords = self._coords()
            elif t.text == "metric":
                metric_tok = t
                metric = self._metric()
            elif t.text == "domain":
                domain = self._domain()
            else:
                raise ParseError(f"unexpected {t.text!r} in manifold block", t.line, t.column)
        self.advance()
        if dim is None or coords is None or metric is None:
            raise ParseError(f"manifold {name.text!r} needs dim, coords and metric", name.line, name.column)
        if len(coords) != dim:
            raise DimensionMismatchError(f"manifold {name.text!r}: dim {dim} but {len(coords)} coordinates")
        names = [c.text for c in coords]
        if len(set(names)) != len(names):
            raise SceneError(f"manifold {name.text!r} repeats a coordinate name")
        if len(metric) != dim or any(len(row) != dim for row in metric):
            raise DimensionMismatchError(f"manifold {name.text!r}: metric is not {dim}x{dim} (line {metric_tok.line})")
        for row in metric:
            for e in row:
                unknown = free_variables(e) - set(names)
                if unknown:
                    pos = e.pos or (None, None)
                    raise UnknownIdentifierError(
                        f"manifold {name.text!r}: unknown identifier(s) {sorted(unknown)} in metric"
                        + ("" if pos[0] is None else f" at line {pos[0]}")
                    )
        domain = _check_domain(name.text, domain, dim)
        m = ChartManifold(name.text, tuple(names), tuple(tuple(r) for r in metric), domain)
        _check_symmetric(m)
        self._register(name, m)

    def _metric(self):
        self.expect("LBRACK", "[")
        rows = [self._row()]
        while self.tok.kind == "COMMA":
            self.advance()
            rows.append(self._row())
        self.expect("RBRACK", "]")
        return rows

    def _row(self):
        self.expect("LBRACK", "[")
        row = [self.expression()]
        while self.tok.kind == "COMMA":
            self.advance()
            row.append(self.expression())
        self.expect("RBRACK", "]")
        return row

    def block_spaceform(self, kw: Token):
        name = self.name()
        self.expect("LBRACE", "{")
        dim = curvature = coords = domain = None
        while self.tok.kind != "RBRACE":
            t = self.keyword("dim, curvature, coords or domain")
            if t.text == "dim":
                dim = self.integer("dim")
            elif t.text == "curvature":
                curvature = self.constant()
            elif t.text == "coords":
                coords = self._coords()
            elif t.text == "domain":
                domain = self._domain()
            else:
                raise ParseError(f"unexpected {t.text!r} in spaceform block", t.line, t.column)
        self.advance()
        if dim is None or curvature is None:
            raise ParseError(f"spaceform {name.text!r} needs dim and curvature", name.line, name.column)
        if dim < 1:
            raise DimensionMismatchError(f"spaceform {name.text!r}: dim must be positive")
        names = None
        if coords is not None:
            names = [c.text for c in coords]
            if len(names) != dim:
                raise DimensionMismatchError(f"spaceform {name.text!r}: dim {dim} but {len(names)} coordinates")
        if domain is not None:
            domain = _check_domain(name.text, domain, dim)
        self._register(name, spaceform_model(name.text, dim, curvature, names, domain))

    def block_map(self, kw: Token):
        name = self.name()
        if name.text in self.maps:
            raise SceneError(f"map {name.text!r} declared twice (line {name.line})")
        self.expect("COLON", ":")
        src_tok = self.name()
        self.expect("ARROW", "->")
        dst_tok = self.name()
        for t in (src_tok, dst_tok):
            if t.text not in self.manifolds:
                raise UnknownManifoldError(
                    f"map {name.text!r} refers to unknown manifold {t.text!r} at line {t.line}, column {t.column}"
                )
        src, dst = self.manifolds[src_tok.text], self.manifolds[dst_tok.text]
        self.expect("LBRACE", "{")
        outs: list[tuple[str, object]] = []
        while self.tok.kind != "RBRACE":
            out = self.name()
            self.expect("EQUALS", "=")
            expr = self.expression()
            unknown = free_variables(expr) - set(src.coords)
            if unknown:
                raise UnknownIdentifierError(
                    f"map {name.text!r}: unknown identifier(s) {sorted(unknown)} in component {out.text!r} "
                    f"(line {out.line}); source coordinates are {list(src.coords)}"
                )
            outs.append((out.text, expr))
        self.advance()
        labels = [o for o, _ in outs]
        if len(set(labels)) != len(labels):
            raise SceneError(f"map {name.text!r} assigns a component twice")
        if len(outs) != dst.dim:
            raise DimensionMismatchError(
                f"map {name.text!r} has {len(outs)} components but target {dst.name!r} has dimension {dst.dim}"
            )
        if set(labels) == set(dst.coords):
            lookup = dict(outs)
            exprs = tuple(lookup[c] for c in dst.coords)
        else:
            exprs = tuple(e for _, e in outs)
        self.maps[name.text] = SmoothMap(name.text, src, dst, exprs)

    def block_analysis(self, kw: Token):
        self.expect("LBRACE", "{")
        fields = {}
        extra = dict(self.analysis.tolerances)
        while self.tok.kind != "RBRACE":
            key = self.name()
            k = key.text
            if k in ("jet_order", "samples", "seed", "grid"):
                fields[k] = self.integer(k)
            elif k in ("tol_rank", "tol_residual"):
                fields[k] = self.constant()
            elif k.startswith("tol_") and k[4:] in DEFAULT_TOLERANCES:
                extra[k[4:]] = self.constant()
            else:
                raise ParseError(f"unknown analysis setting {k!r}", key.line, key.column)
        self.advance()
        if fields.get("jet_order", 4) not in (2, 3, 4):
            raise SceneError("jet_order must be 2, 3 or 4")
        self.analysis = replace(self.analysis, tolerances=tuple(sorted(extra.items())), **fields)


def _check_domain(name: str, domain, dim: int):
    if domain is None:
        return tuple((-1.0, 1.0) for _ in range(dim))
    if len(domain) != dim:
        raise DimensionMismatchError(f"{name!r}: domain has {len(domain)} intervals for dimension {dim}")
    for lo, hi in domain:
        if not lo < hi:
            raise SceneError(f"{name!r}: empty domain interval [{lo}, {hi}]")
    return tuple((float(lo), float(hi)) for lo, hi in domain)


def _check_symmetric(m: ChartManifold):
    n = m.dim
    pending = [(i, j) for i in range(n) for j in range(i + 1, n) if m.metric_exprs[i][j] != m.metric_exprs[j][i]]
    if not pending:
        return
    points = grid_sample(SampleSpec(kind="random", n=SYMMETRY_SAMPLES, seed=0, corners=False), m.domain)
    for p in points:
        env = dict(zip(m.coords, (float(x) for x in p)))
        for i, j in pending:
            try:
                a = eval_float(m.metric_exprs[i][j], env)
                b = eval_float(m.metric_exprs[j][i], env)
            except SingularityError as err:
                raise SceneError(f"manifold {m.name!r}: metric cannot be evaluated: {err}") from None
            if abs(a - b) > SYMMETRY_TOL * max(1.0, abs(a), abs(b)):
                raise AsymmetricMetricError(
                    f"manifold {m.name!r}: metric is not symmetric; entry ({i + 1},{j + 1}) differs from "
                    f"({j + 1},{i + 1}) at ({', '.join(f'{x:.6g}' for x in p)}): {a!r} vs {b!r}"
                )


def parse_scene(text: str, name: str = "scene") -> Scene:
    parser = SceneParser(tokenize(text))
    parser.scene()
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return Scene(parser.manifolds, parser.maps, parser.analysis, digest, name, text)


def load_scene(path) -> Scene:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as err:
        raise SceneError(f"cannot read scene file {path}: {err}") from None
    return parse_scene(text, path.stem)
