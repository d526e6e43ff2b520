"""Map-level geometry along a smooth map F: differential, the four-way
splitting, second fundamental form, shape operator, mean curvatures, and
pseudo-umbilicality."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import frames
from .errors import DomainError, GeometryError, HypothesisError, UsageError
from .geometry import ChartManifold, check_spd, christoffel_from_metric, mean_curvature_field
from .jets import Composer, Jet, inv, jeinsum, lift_point, stack
from .scenelang import Expr, eval_ast, substitute

DEFAULT_ORDER = 4


@dataclass(frozen=True)
class SmoothMap:
    name: str
    source: ChartManifold
    target: ChartManifold
    component_exprs: tuple[Expr, ...]
    composed_from: tuple[str, str] | None = None

    def __post_init__(self):
        if len(self.component_exprs) != self.target.dim:
            raise UsageError(
                f"map {self.name!r} has {len(self.component_exprs)} components "
                f"for a {self.target.dim}-dimensional target"
            )

    def jets(self, env: Jet, point=None) -> Jet:
        binding = {name: env[k] for k, name in enumerate(self.source.coords)}
        comps = []
        for e in self.component_exprs:
            v = eval_ast(e, binding, point)
            comps.append(v if isinstance(v, Jet) else Jet.constant(v, env.num_vars, env.order))
        return stack(comps)

    def __call__(self, p: Sequence[float]) -> np.ndarray:
        binding = {name: float(x) for name, x in zip(self.source.coords, p)}
        return np.array([float(eval_ast(e, binding, p)) for e in self.component_exprs])


#: A section along F: given the per-point context, returns a (n,) jet field.
FieldAlongMap = Callable[["MapAtPoint"], Jet]


class MapAtPoint:
    """Every jet-level quantity of a map around one source point.

    Built once per point; all derived fields are cached.  Fields are jets in
    the source coordinates, so covariant derivatives of derived fields such as
    ``H2`` or ``mu`` are exact up to the remaining jet order.
    """

    def __init__(self, F: SmoothMap, p: Sequence[float], order: int = DEFAULT_ORDER,
                 tol_rank: float = 1e-7):
        self.F = F
        self.p = np.asarray(p, dtype=float)
        self.order = order
        self.tol_rank = tol_rank
        self.m = F.source.dim
        self.n = F.target.dim
        x = lift_point(self.p, order)
        self.Fj = F.jets(x, self.p)
        self.q = self.Fj.value
        self.J = self.Fj.grad()  # J[g, i] = d_i F^g
        self.g1 = F.source.metric_jets(x, self.p)
        check_spd(self.g1.value, self.p)
        self.g1inv = inv(self.g1)
        self.gamma1 = christoffel_from_metric(self.g1)
        y = lift_point(self.q, order)
        g2y = F.target.metric_jets(y, self.q)
        check_spd(g2y.value, self.q)
        self.gamma2y = christoffel_from_metric(g2y)
        compose = Composer(self.Fj, order)
        self.g2 = compose(g2y)
        self.gamma2 = compose(self.gamma2y)
        self._split()

    # -- splitting ------------------------------------------------------------

    def _split(self):
        g1v, g2v, J0 = self.g1.value, self.g2.value, self.J.value
        L1 = frames.cholesky_factor(g1v, self.p)
        L2 = frames.cholesky_factor(g2v, self.q)
        weighted = L2.T @ J0 @ np.linalg.inv(L1.T)
        self.singular_values = np.linalg.svd(weighted, compute_uv=False)
        self.m2 = frames.decide_rank(self.singular_values, self.tol_rank, self.p)
        self.m1 = self.m - self.m2
        self.normal_rank = self.n - self.m2
        self.adjoint_matrix = jeinsum("ij,gj,gh->ih", self.g1inv, self.J, self.g2)
        hcols = frames.pivot_columns(self.adjoint_matrix.value, g1v, self.m2)
        self.E = frames.gram_schmidt(self.adjoint_matrix[:, hcols], self.g1)
        self.PH = frames.orthonormal_projector(self.E, self.g1)
        self.PV = frames.identity_jet(self.m, self.PH) - self.PH
        self.Et = frames.complement_frame(self.PH, self.g1, self.m1)
        rcols = frames.pivot_columns(J0, g2v, self.m2)
        self.R = frames.gram_schmidt(self.J[:, rcols], self.g2)
        self.PR = frames.orthonormal_projector(self.R, self.g2)
        self.PN = frames.identity_jet(self.n, self.PR) - self.PR
        self.N = frames.complement_frame(self.PR, self.g2, self.normal_rank)

    def zeros(self, shape, order: int | None = None) -> Jet:
        return Jet.constant(np.zeros(shape), self.m, self.order if order is None else order)

    # -- values ----------------------------------------------------------------

    @property
    def horizontal_basis(self) -> np.ndarray:
        return self.E.value

    @property
    def vertical_basis(self) -> np.ndarray:
        return self.Et.value

    @property
    def range_basis(self) -> np.ndarray:
        return self.R.value

    @property
    def normal_basis(self) -> np.ndarray:
        return self.N.value

    def g1_at(self) -> np.ndarray:
        return self.g1.value

    def g2_at(self) -> np.ndarray:
        return self.g2.value

    def differential(self, X) -> np.ndarray:
        return self.J.value @ np.asarray(X, float)

    def isometry_residual(self) -> float:
        """Spectral norm of ``(F_* E)^T g2 (F_* E) - I`` on the horizontal space."""
        if self.m2 == 0:
            return 0.0
        FE = self.J.value @ self.E.value
        M = FE.T @ self.g2.value @ FE - np.eye(self.m2)
        return float(np.linalg.norm(M, 2))

    def is_riemannian(self, tol: float) -> bool:
        return self.isometry_residual() < tol

    def g2_norm(self, v) -> float:
        v = np.asarray(v, float)
        return float(np.sqrt(max(v @ self.g2.value @ v, 0.0)))

    def g1_norm(self, v) -> float:
        v = np.asarray(v, float)
        return float(np.sqrt(max(v @ self.g1.value @ v, 0.0)))

    # -- fields ------------------------------------------------------------------

    @cached_property
    def sff(self) -> Jet:
        """``B[g, i, j] = (nabla F_*)(d_i, d_j)^g``."""
        hess = self.J.grad()
        return (hess + jeinsum("gab,ai,bj->gij", self.gamma2, self.J, self.J)
                - jeinsum("kij,gk->gij", self.gamma1, self.J))

    @cached_property
    def tau(self) -> Jet:
        return jeinsum("ij,gij->g", self.g1inv, self.sff)

    @cached_property
    def H2(self) -> Jet:
        if self.m2 == 0 or self.normal_rank == 0:
            return self.zeros((self.n,), self.sff.order)
        return (1.0 / self.m2) * jeinsum("ir,jr,gij->g", self.E, self.E, self.sff)

    @cached_property
    def mu_ker(self) -> Jet:
        """Mean curvature of the vertical distribution (a horizontal field)."""
        if self.m1 == 0:
            return self.zeros((self.m,), self.sff.order)
        return mean_curvature_field(self.Et, self.PH, self.gamma1, self.g1)

    def push(self, v) -> Jet | np.ndarray:
        """``F_* v`` for a source vector field (jet or constant)."""
        return jeinsum("gi,i->g", self.J, v)

    def nabla_F(self, sigma: Jet) -> Jet:
        """Pullback covariant derivative of a section along F.

        ``sigma`` has shape ``(*lead, n)``; the result has shape
        ``(m, *lead, n)`` with the derivative index first.
        """
        lead = sigma.shape[:-1]
        flat = sigma.reshape(-1, self.n)
        d = flat.grad()  # d[L, g, i]
        conn = jeinsum("gab,ai,Lb->iLg", self.gamma2, self.J, flat)
        out = d.transpose(2, 0, 1) + conn
        return out.reshape((self.m,) + lead + (self.n,))

    def nabla_source(self, v: Jet) -> Jet:
        """``(nabla v)[i, k] = d_i v^k + Gamma^k_il v^l`` for a vector field."""
        return v.grad().transpose(1, 0) + jeinsum("kil,l->ik", self.gamma1, v)

    def shape_operator_field(self, V: Jet) -> Jet:
        """``A_V F_* d_i`` for each source index i, shape ``(m, n)``."""
        if self.normal_rank == 0:
            return self.zeros((self.m, self.n), max(V.order - 1, 0))
        return -jeinsum("gh,ih->ig", self.PR, self.nabla_F(V))

    def normal_connection_field(self, V: Jet) -> Jet:
        """``nabla^perp_{d_i} V``, shape ``(m, n)``."""
        return jeinsum("gh,ih->ig", self.PN, self.nabla_F(V))

    def adjoint_values(self, W) -> np.ndarray:
        return self.adjoint_matrix.value @ np.asarray(W, float)


def at_point(F: SmoothMap, p: Sequence[float], order: int = DEFAULT_ORDER, tol_rank: float = 1e-7) -> MapAtPoint:
    return MapAtPoint(F, p, order, tol_rank)


# -- pointwise operations ------------------------------------------------------


@dataclass
class FrameSplit:
    kernel: np.ndarray  # (m, m1) g1-orthonormal
    horizontal: np.ndarray  # (m, m2) g1-orthonormal
    range: np.ndarray  # (n, m2) g2-orthonormal
    normal: np.ndarray  # (n, n - m2) g2-orthonormal
    singular_values: np.ndarray

    @property
    def m1(self) -> int:
        return self.kernel.shape[1]

    @property
    def m2(self) -> int:
        return self.horizontal.shape[1]

    def projector(self, which: str, metric: np.ndarray) -> np.ndarray:
        B = getattr(self, which)
        return B @ B.T @ metric


def differential(F: SmoothMap, p: Sequence[float], X) -> np.ndarray:
    ctx = MapAtPoint(F, p, order=1)
    return ctx.differential(X)


def frame_split(F: SmoothMap, p: Sequence[float], tol_rank: float = 1e-7) -> FrameSplit:
    ctx = MapAtPoint(F, p, order=1, tol_rank=tol_rank)
    return FrameSplit(ctx.vertical_basis, ctx.horizontal_basis, ctx.range_basis,
                      ctx.normal_basis, ctx.singular_values)


def adjoint(F: SmoothMap, p: Sequence[float], W, tol_residual: float = 1e-8) -> np.ndarray:
    """Horizontal preimage of ``W`` in range F_*, via ``g1^-1 J^T g2``."""
    ctx = MapAtPoint(F, p, order=1)
    W = np.asarray(W, float)
    leak = ctx.PN.value @ W
    if ctx.g2_norm(leak) > tol_residual * max(1.0, ctx.g2_norm(W)):
        raise DomainError(f"vector has a normal component of size {ctx.g2_norm(leak):.3g}")
    return ctx.adjoint_values(W)


def second_fundamental_form(F: SmoothMap, p: Sequence[float], X, Y) -> np.ndarray:
    ctx = MapAtPoint(F, p, order=2)
    return np.einsum("gij,i,j->g", ctx.sff.value, np.asarray(X, float), np.asarray(Y, float))


def shape_operator(F: SmoothMap, p: Sequence[float], V: FieldAlongMap, X,
                   tol_residual: float = 1e-8, ctx: MapAtPoint | None = None):
    """Split ``nabla_{F_*X} V`` into ``-A_V F_*X`` and ``nabla^perp_X V``.

    Returns ``(A_V F_* X, nabla^perp_X V)``.
    """
    ctx = ctx or MapAtPoint(F, p)
    Vj = V(ctx)
    v0 = Vj.value
    if ctx.g2_norm(ctx.PR.value @ v0) > tol_residual * max(1.0, ctx.g2_norm(v0)):
        raise DomainError("field is not normal to range F_*")
    X = np.asarray(X, float)
    A = X @ ctx.shape_operator_field(Vj).value
    perp = X @ ctx.normal_connection_field(Vj).value
    return A, perp


def normal_field(coeffs) -> FieldAlongMap:
    """Constant-coefficient combination of the normal frame fields."""
    coeffs = np.asarray(coeffs, float)

    def field(ctx: MapAtPoint) -> Jet:
        return jeinsum("gr,r->g", ctx.N, coeffs)

    return field


def mean_curvature_H2(F: SmoothMap, p: Sequence[float], tol_residual: float = 1e-8,
                      ctx: MapAtPoint | None = None) -> np.ndarray:
    ctx = ctx or MapAtPoint(F, p, order=2)
    res = ctx.isometry_residual()
    if res >= tol_residual:
        raise HypothesisError(
            f"map {F.name!r} is not Riemannian at {tuple(ctx.p)} (isometry residual {res:.3g})"
        )
    return ctx.H2.value


@dataclass
class PseudoUmbilicalEntry:
    operator_residual: float  # |A_H2 F_* X - lambda F_* X| over unit horizontal X
    bilinear_residual: float  # |g2(B(X, Y), H2) - g1(X, Y) |H2|^2| over unit X, Y
    lam: float
    tol: float

    @property
    def operator_pass(self) -> bool:
        return self.operator_residual < self.tol

    @property
    def bilinear_pass(self) -> bool:
        return self.bilinear_residual < self.tol

    @property
    def pseudo_umbilical(self) -> bool:
        return self.operator_pass and self.bilinear_pass


def pseudo_umbilical_residual(F: SmoothMap, p: Sequence[float], tol_residual: float = 1e-8,
                              ctx: MapAtPoint | None = None) -> PseudoUmbilicalEntry:
    ctx = ctx or MapAtPoint(F, p)
    g2 = ctx.g2.value
    H2 = ctx.H2.value
    lam = float(H2 @ g2 @ H2)
    E = ctx.E.value
    if ctx.m2 == 0:
        return PseudoUmbilicalEntry(0.0, 0.0, lam, tol_residual)
    A = ctx.shape_operator_field(ctx.H2).value  # (m, n)
    AE = E.T @ A  # rows: A_H2 F_* e_r
    diff = AE - lam * (ctx.J.value @ E).T
    L2 = np.linalg.cholesky(g2)
    op = float(np.linalg.norm(L2.T @ diff.T, 2))
    Bee = np.einsum("gij,ir,js->rsg", ctx.sff.value, E, E)
    bil = np.einsum("rsg,gh,h->rs", Bee, g2, H2) - lam * np.eye(ctx.m2)
    return PseudoUmbilicalEntry(op, float(np.linalg.norm(bil, 2)), lam, tol_residual)


def charts_compatible(a: ChartManifold, b: ChartManifold) -> bool:
    return a is b or (a.dim == b.dim and a.metric_exprs == b.metric_exprs and a.coords == b.coords)


def compose_submersion_immersion(F1: SmoothMap, F2: SmoothMap, points: Sequence[Sequence[float]] | None = None,
                                 tol_residual: float = 1e-8, check: bool = True) -> SmoothMap:
    """``F2 o F1`` by substituting F1's components into F2's expressions.

    With ``check`` the hypotheses are verified at ``points`` of F1's source:
    F1 a Riemannian submersion, F2 an isometric immersion.
    """
    if not charts_compatible(F1.target, F2.source):
        raise UsageError(
            f"cannot compose: target {F1.target.name!r} of {F1.name!r} is not the source "
            f"{F2.source.name!r} of {F2.name!r}"
        )
    if check:
        if points is None:
            from .sampling import SampleSpec, grid_sample
            points = grid_sample(SampleSpec(kind="random", n=5, seed=0, corners=False), F1.source.domain)
        for p in points:
            c1 = MapAtPoint(F1, p, order=1)
            if c1.normal_rank != 0 or not c1.is_riemannian(tol_residual):
                raise HypothesisError(f"{F1.name!r} is not a Riemannian submersion at {tuple(p)}")
            c2 = MapAtPoint(F2, F1(p), order=1)
            if c2.m1 != 0 or not c2.is_riemannian(tol_residual):
                raise HypothesisError(f"{F2.name!r} is not an isometric immersion at {tuple(F1(p))}")
    mapping = dict(zip(F2.source.coords, F1.component_exprs))
    exprs = tuple(substitute(e, mapping) for e in F2.component_exprs)
    return SmoothMap(f"{F2.name}_o_{F1.name}", F1.source, F2.target, exprs, (F1.name, F2.name))


def composition_sff_residual(F1: SmoothMap, F2: SmoothMap, composite: SmoothMap, p, X, Y) -> float:
    """``|(nabla (F2 F1)_*)(X,Y) - F2_*((nabla F1_*)(X,Y)) - (nabla F2_*)(F1_* X, F1_* Y)|``."""
    c = MapAtPoint(composite, p, order=2)
    c1 = MapAtPoint(F1, p, order=2)
    c2 = MapAtPoint(F2, F1(p), order=2)
    X, Y = np.asarray(X, float), np.asarray(Y, float)
    lhs = np.einsum("gij,i,j->g", c.sff.value, X, Y)
    inner = np.einsum("gij,i,j->g", c1.sff.value, X, Y)
    X1, Y1 = c1.J.value @ X, c1.J.value @ Y
    rhs = c2.J.value @ inner + np.einsum("gij,i,j->g", c2.sff.value, X1, Y1)
    return c.g2_norm(lhs - rhs)


def require_riemannian(ctx: MapAtPoint, tol: float):
    res = ctx.isometry_residual()
    if res >= tol:
        raise HypothesisError(
            f"map {ctx.F.name!r} is not Riemannian at {tuple(ctx.p)} (isometry residual {res:.3g})"
        )


def verify_riemannian(F: SmoothMap, points, tolerances: dict | None = None, workers: int = 1):
    """Isometry residual of F_* on the horizontal space at every sample point.

    The residual is the largest ``|g2(F_*X, F_*Y) - g1(X, Y)|`` over unit
    horizontal X, Y (a spectral norm); the check passes below tol_residual.
    """
    from .report import DEFAULT_TOLERANCES, PointRecord, Report, run_points

    tol = dict(DEFAULT_TOLERANCES, **(tolerances or {}))

    def one(i, p):
        ctx = MapAtPoint(F, p, order=1, tol_rank=tol["rank"])
        rec = PointRecord(i, [float(x) for x in ctx.p])
        rec.residuals["isometry"] = ctx.isometry_residual()
        rec.labels.update({"m1": str(ctx.m1), "m2": str(ctx.m2)})
        return rec

    report = Report("check", map_name=F.name, tolerances=tol)
    report.records = run_points(one, points, workers)
    report.check("isometry", "residual")
    report.verdicts["riemannian"] = "yes" if report.max_of("isometry") < tol["residual"] else "no"
    return report


def verify_thm31(F1: SmoothMap, F2: SmoothMap, points, tolerances: dict | None = None, workers: int = 1):
    """Composite of a Riemannian submersion and an isometric immersion.

    Records at each point of F1's source: the composite's isometry residual,
    its pseudo-umbilical residuals, F2's pseudo-umbilical residuals at F1(p),
    and the composition identity for the second fundamental form over a
    g1-orthonormal frame.
    """
    from .report import DEFAULT_TOLERANCES, PointRecord, Report, run_points

    tol = dict(DEFAULT_TOLERANCES, **(tolerances or {}))
    comp = compose_submersion_immersion(F1, F2, points, tol["residual"])

    def one(i, p):
        ctx = MapAtPoint(comp, p, tol_rank=tol["rank"])
        rec = PointRecord(i, [float(x) for x in ctx.p])
        rec.residuals["isometry"] = ctx.isometry_residual()
        pu = pseudo_umbilical_residual(comp, p, tol["residual"], ctx=ctx)
        rec.residuals["pseudo_umbilical_operator"] = pu.operator_residual
        rec.residuals["pseudo_umbilical_bilinear"] = pu.bilinear_residual
        pu2 = pseudo_umbilical_residual(F2, F1(p), tol["residual"])
        rec.residuals["F2_pseudo_umbilical_operator"] = pu2.operator_residual
        rec.residuals["F2_pseudo_umbilical_bilinear"] = pu2.bilinear_residual
        frame = np.concatenate([ctx.E.value, ctx.Et.value], axis=1)
        worst = 0.0
        for a in range(frame.shape[1]):
            for b in range(a, frame.shape[1]):
                worst = max(worst, composition_sff_residual(F1, F2, comp, p, frame[:, a], frame[:, b]))
        rec.residuals["composition_sff"] = worst
        rec.labels.update({"m1": str(ctx.m1), "m2": str(ctx.m2)})
        return rec

    report = Report("verify-3.1", map_name=comp.name, tolerances=tol)
    report.records = run_points(one, points, workers)
    report.check("isometry", "identity")
    report.check("composition_sff", "curvature")
    f2_pu = (report.max_of("F2_pseudo_umbilical_operator") < tol["residual"]
             and report.max_of("F2_pseudo_umbilical_bilinear") < tol["residual"])
    report.verdicts["F2_pseudo_umbilical"] = "yes" if f2_pu else "no"
    if f2_pu:
        report.check("pseudo_umbilical_operator", "residual")
        report.check("pseudo_umbilical_bilinear", "residual")
    comp_pu = (report.max_of("pseudo_umbilical_operator") < tol["residual"]
               and report.max_of("pseudo_umbilical_bilinear") < tol["residual"])
    report.verdicts["composite_pseudo_umbilical"] = "yes" if comp_pu else "no"
    report.info["composed_from"] = [F1.name, F2.name]
    return report


__all__ = [
    "SmoothMap", "MapAtPoint", "FrameSplit", "FieldAlongMap", "at_point", "differential",
    "frame_split", "adjoint", "second_fundamental_form", "shape_operator", "normal_field",
    "mean_curvature_H2", "PseudoUmbilicalEntry", "pseudo_umbilical_residual",
    "compose_submersion_immersion", "composition_sff_residual", "require_riemannian",
    "verify_riemannian", "verify_thm31",
    "GeometryError",
]
