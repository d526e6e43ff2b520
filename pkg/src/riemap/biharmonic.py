"""Tension and bitension fields, and the space-form decomposition of the
bitension of a Riemannian map into its range and normal conditions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, HypothesisError
from .geometry import riemann_from_christoffel
from .jets import Jet, jeinsum
from .report import DEFAULT_TOLERANCES, PointRecord, Report, run_points
from .rmap import FieldAlongMap, MapAtPoint, SmoothMap, pseudo_umbilical_residual


def _ctx(F: SmoothMap, p, ctx: MapAtPoint | None, order: int = 4) -> MapAtPoint:
    return ctx if ctx is not None else MapAtPoint(F, p, order=order)


def tension(F: SmoothMap, p: Sequence[float], ctx: MapAtPoint | None = None) -> np.ndarray:
    return _ctx(F, p, ctx, order=2).tau.value


def hessian_along(ctx: MapAtPoint, sigma: Jet) -> Jet:
    """Second covariant derivative ``(nabla^2 sigma)[i, j, g]`` of a section along F."""
    if sigma.order < 2:
        raise ConfigurationError(
            f"section jet has order {sigma.order}; second derivatives need jet order 4 for the map"
        )
    first = ctx.nabla_F(sigma)  # [j, g]
    second = ctx.nabla_F(first)  # [i, j, g]
    return second - jeinsum("kij,kg->ijg", ctx.gamma1, first)


def _trace_metric(ctx: MapAtPoint, trace: str) -> np.ndarray:
    if trace == "full":
        return ctx.g1inv.value
    if trace == "horizontal":
        E = ctx.E.value
        return E @ E.T
    if trace == "vertical":
        V = ctx.Et.value
        return V @ V.T
    raise ConfigurationError(f"unknown trace {trace!r}")


def rough_laplacian_along_map(F: SmoothMap, sigma: FieldAlongMap, p: Sequence[float],
                              ctx: MapAtPoint | None = None, trace: str = "full") -> np.ndarray:
    """``-tr nabla^2 sigma``; the positive-spectrum rough Laplacian."""
    ctx = _ctx(F, p, ctx)
    hess = hessian_along(ctx, sigma(ctx)).value
    return -np.einsum("ij,ijg->g", _trace_metric(ctx, trace), hess)


def curvature_tensor_at_target(ctx: MapAtPoint) -> np.ndarray:
    """``R[l, k, a, b]`` of the target at F(p): ``(R(X,Y)Z)^l = R[l,k,a,b] X^a Y^b Z^k``."""
    return riemann_from_christoffel(ctx.gamma2y)


def _riemann_trace(ctx: MapAtPoint, tau: np.ndarray, R: np.ndarray | None = None) -> np.ndarray:
    R = curvature_tensor_at_target(ctx) if R is None else R
    J = ctx.J.value
    return np.einsum("ij,lkab,ai,b,kj->l", ctx.g1inv.value, R, J, tau, J)


def _spaceform_trace(ctx: MapAtPoint, tau: np.ndarray, c: float) -> np.ndarray:
    J, g2 = ctx.J.value, ctx.g2.value
    h = ctx.g1inv.value
    # c (g2(tau, J_j) J_i - g2(J_i, J_j) tau) traced with g1^{ij}
    a = np.einsum("ij,b,bc,cj,ai->a", h, tau, g2, J, J)
    b = np.einsum("ij,ai,ab,bj->", h, J, g2, J) * tau
    return c * (a - b)


def bitension(F: SmoothMap, p: Sequence[float], ctx: MapAtPoint | None = None,
              curvature: str = "riemann") -> np.ndarray:
    """``tau_2 = tr nabla^2 tau - tr R(F_* . , tau) F_* .``"""
    ctx = _ctx(F, p, ctx)
    hess = hessian_along(ctx, ctx.tau).value
    lap = np.einsum("ij,ijg->g", ctx.g1inv.value, hess)
    tau = ctx.tau.value
    if curvature == "riemann":
        curv = _riemann_trace(ctx, tau)
    elif curvature == "spaceform":
        c = F.target.curvature
        if c is None:
            raise HypothesisError(f"target {F.target.name!r} is not a declared space form")
        curv = _spaceform_trace(ctx, tau, c)
    else:
        raise ConfigurationError(f"unknown curvature source {curvature!r}")
    return lap - curv


@dataclass
class CurvatureTrace:
    direct: np.ndarray
    closed_form: np.ndarray
    difference: float


def curvature_trace_term(F: SmoothMap, p: Sequence[float], tau=None, c: float | None = None,
                         ctx: MapAtPoint | None = None) -> CurvatureTrace:
    """Both sides of the curvature-trace identity for a Riemannian map into a space form."""
    c = F.target.curvature if c is None else c
    if c is None:
        raise HypothesisError(f"target {F.target.name!r} is not a declared space form")
    ctx = _ctx(F, p, ctx, order=3)
    tau = ctx.tau.value if tau is None else np.asarray(tau, float)
    direct = _spaceform_trace(ctx, tau, c)
    closed = (ctx.m1 * c * (ctx.m2 - 1)) * (ctx.J.value @ ctx.mu_ker.value) - (ctx.m2 ** 2 * c) * ctx.H2.value
    return CurvatureTrace(direct, closed, ctx.g2_norm(direct - closed))


def _normal_hessian(ctx: MapAtPoint, V: Jet) -> Jet:
    """``(nabla^perp)^2 V [i, j, g]`` for a normal section V."""
    U = jeinsum("gh,jh->jg", ctx.PN, ctx.nabla_F(V))  # nabla^perp_j V
    return jeinsum("gh,ijh->ijg", ctx.PN, ctx.nabla_F(U)) - jeinsum("kij,kg->ijg", ctx.gamma1, U)


def normal_laplacian(F: SmoothMap, V: FieldAlongMap, p: Sequence[float], ctx: MapAtPoint | None = None,
                     tol_residual: float = 1e-8) -> np.ndarray:
    """Horizontal-trace normal Laplacian ``-sum_r (nabla^perp)^2 V (e_r, e_r)``."""
    ctx = _ctx(F, p, ctx)
    Vj = V(ctx)
    if Vj.order < 2:
        raise ConfigurationError("normal_laplacian needs jet order 4 for the map")
    v0 = Vj.value
    if ctx.g2_norm(ctx.PR.value @ v0) > tol_residual * max(1.0, ctx.g2_norm(v0)):
        raise DomainError("field is not normal to range F_*")
    hess = _normal_hessian(ctx, Vj).value
    return -np.einsum("ij,ijg->g", _trace_metric(ctx, "horizontal"), hess)


# -- the space-form decomposition ------------------------------------------------


@dataclass
class BitensionBreakdown:
    tau: np.ndarray
    tau2_full: np.ndarray
    tau2_range: np.ndarray
    tau2_normal: np.ndarray
    curvature_term: np.ndarray
    vertical_trace_remainder: np.ndarray
    tau2_horizontal_range: np.ndarray | None = None
    tau2_horizontal_normal: np.ndarray | None = None
    range_condition: np.ndarray | None = None
    normal_condition: np.ndarray | None = None
    terms: dict[str, np.ndarray] = field(default_factory=dict)


def condition_terms(ctx: MapAtPoint, c: float) -> dict[str, np.ndarray]:
    """Every named term of the range and normal biharmonicity conditions.

    Traces run over the horizontal orthonormal frame.  Second derivatives
    are the Gamma-corrected covariant ones, i.e. what a frame geodesic at
    the point would produce.
    """
    m1, m2 = ctx.m1, ctx.m2
    E = ctx.E  # jet frame (m, m2)
    e = E.value
    h = e @ e.T
    B, mu, H2 = ctx.sff, ctx.mu_ker, ctx.H2
    J0 = ctx.J.value
    PR, PN = ctx.PR.value, ctx.PN.value
    gamma1 = ctx.gamma1

    # trace A_{B(., mu)} F_* .
    V = jeinsum("gab,ar,b->rg", B, E, mu)
    dV = ctx.nabla_F(V).value  # [c, r, g]
    T1 = -PR @ np.einsum("cr,crg->g", e, dV)

    # trace F_*(nabla^2 mu)
    dmu = ctx.nabla_source(mu)  # [j, k]
    d2mu = (dmu.grad().transpose(2, 0, 1) + jeinsum("kil,jl->ijk", gamma1, dmu)
            - jeinsum("lij,lk->ijk", gamma1, dmu)).value
    T2 = J0 @ np.einsum("ij,ijk->k", h, d2mu)

    # W = *F_* A_{H2} F_* as a (1,1) tensor W[k, j]
    dH = ctx.nabla_F(H2)  # [j, g]
    W = -jeinsum("kg,gh,jh->kj", ctx.adjoint_matrix, ctx.PR, dH)
    dW = (W.grad().transpose(2, 0, 1) + jeinsum("kil,lj->ikj", gamma1, W)
          - jeinsum("kl,lij->ikj", W, gamma1)).value  # [i, k, j]
    T3 = J0 @ np.einsum("ij,ikj->k", h, dW)

    # trace A_{nabla^perp H2} F_* .
    U = jeinsum("ir,gh,ih->rg", E, ctx.PN, dH)
    dU = ctx.nabla_F(U).value
    T4 = -PR @ np.einsum("cr,crg->g", e, dU)

    T5 = m1 * c * (m2 - 1) * (J0 @ mu.value)

    # trace nabla^perp (nabla F_*)(., mu) with Z_j = B(d_j, mu)
    Z = jeinsum("gjb,b->jg", B, mu)
    dZ = (ctx.nabla_F(Z) - jeinsum("kij,kg->ijg", gamma1, Z)).value
    T6 = PN @ np.einsum("ij,ijg->g", h, dZ)

    B0 = B.value
    T7 = np.einsum("gab,ar,cr,cb->g", B0, e, e, dmu.value)
    W0 = W.value
    T8 = np.einsum("gab,ar,br->g", B0, e, W0 @ e)

    lapH = -np.einsum("ij,ijg->g", h, _normal_hessian(ctx, H2).value)
    T9 = m2 * lapH
    T10 = m2 ** 2 * c * H2.value

    range_condition = m1 * T1 - m1 * T2 - m2 * T3 - m2 * T4 - T5
    normal_condition = m1 * T6 + m1 * T7 + m2 * T8 - T9 - T10
    return {
        "trace_A_B_mu": T1, "trace_F_hess_mu": T2, "trace_F_nabla_W": T3,
        "trace_A_perp_H2": T4, "curvature_mu": T5, "trace_perp_B_mu": T6,
        "trace_B_nabla_mu": T7, "trace_B_W": T8, "m2_normal_laplacian_H2": T9,
        "m2sq_c_H2": T10, "normal_laplacian_H2": lapH, "range_condition": range_condition, "normal_condition": normal_condition,
    }


def bitension_breakdown(F: SmoothMap, p: Sequence[float], ctx: MapAtPoint | None = None) -> BitensionBreakdown:
    ctx = _ctx(F, p, ctx)
    tau = ctx.tau.value
    hess = hessian_along(ctx, ctx.tau).value
    lap = np.einsum("ij,ijg->g", ctx.g1inv.value, hess)
    curv = _riemann_trace(ctx, tau)
    tau2 = lap - curv
    vert = np.einsum("ij,ijg->g", _trace_metric(ctx, "vertical"), hess)
    PR, PN = ctx.PR.value, ctx.PN.value
    horiz = tau2 - vert  # the vertical directions carry no curvature term
    out = BitensionBreakdown(tau, tau2, PR @ tau2, PN @ tau2, curv, vert, PR @ horiz, PN @ horiz)
    c = F.target.curvature
    if c is not None and ctx.m2 > 0:
        terms = condition_terms(ctx, c)
        out.terms = terms
        out.range_condition = terms["range_condition"]
        out.normal_condition = terms["normal_condition"]
    return out


# -- sampled verification ----------------------------------------------------------


def _vec(v: np.ndarray) -> list[float]:
    return [float(x) for x in v]


def _ortho_frame(ctx: MapAtPoint) -> np.ndarray:
    return np.concatenate([ctx.E.value, ctx.Et.value], axis=1)


def parallel_residual(ctx: MapAtPoint) -> float:
    """Frobenius norm of ``nabla^perp H2`` over a g1-orthonormal source frame."""
    perp = ctx.normal_connection_field(ctx.H2).value  # [i, g]
    L2 = np.linalg.cholesky(ctx.g2.value)
    return float(np.linalg.norm(L2.T @ (_ortho_frame(ctx).T @ perp).T))


def point_record(F: SmoothMap, idx: int, p, tolerances: dict, bitension_terms: bool = True,
                 order: int | None = None) -> PointRecord:
    """All per-point quantities used by the tension, bitension and verification reports.

    Quantities whose definition needs a Riemannian map (the tension
    decomposition, H2, pseudo-umbilicality) are only recorded at points
    where the isometry residual is below the residual tolerance.  Without
    bitension terms the jet order may be lowered to 2, which drops the
    pseudo-umbilical residuals (they differentiate H2).
    """
    if order is None:
        order = 4 if bitension_terms else 3
    if bitension_terms and order < 4:
        raise ConfigurationError("bitension quantities need jet order 4")
    ctx = MapAtPoint(F, p, order=order, tol_rank=tolerances["rank"])
    rec = PointRecord(idx, _vec(ctx.p))
    rec.labels.update({"m1": str(ctx.m1), "m2": str(ctx.m2)})
    n = ctx.g2_norm
    iso = ctx.isometry_residual()
    riem = iso < tolerances["residual"]
    rec.labels["riemannian"] = "yes" if riem else "no"
    rec.residuals["isometry"] = iso
    tau = ctx.tau.value
    rec.residuals["tau"] = n(tau)
    rec.vectors["tau"] = _vec(tau)
    c = F.target.curvature
    if riem:
        H2, mu = ctx.H2.value, ctx.mu_ker.value
        split = tau + ctx.m1 * (ctx.J.value @ mu) - ctx.m2 * H2
        h2sq = float(H2 @ ctx.g2.value @ H2)
        rec.residuals.update({
            "tension_decomposition": n(split),
            "mu_ker": ctx.g1_norm(mu),
            "H2_norm": float(np.sqrt(h2sq)),
            "H2_norm_sq": h2sq,
        })
        if ctx.order >= 3:
            pu = pseudo_umbilical_residual(F, p, tolerances["residual"], ctx=ctx)
            rec.residuals["pseudo_umbilical_operator"] = pu.operator_residual
            rec.residuals["pseudo_umbilical_bilinear"] = pu.bilinear_residual
        rec.vectors["H2"] = _vec(H2)
        if bitension_terms:
            rec.residuals["nabla_perp_H2"] = parallel_residual(ctx)
        if c is not None:
            rec.residuals["H2_norm_sq_minus_c"] = abs(h2sq - c)
            rec.residuals["equality_condition"] = abs(h2sq - c) * float(np.sqrt(h2sq))
    if not bitension_terms:
        return rec
    bd = bitension_breakdown(F, p, ctx)
    rec.residuals.update({
        "tau2": n(bd.tau2_full),
        "tau2_range": n(bd.tau2_range),
        "tau2_normal": n(bd.tau2_normal),
        "tau2_split": n(bd.tau2_full - bd.tau2_range - bd.tau2_normal),
        "vertical_trace_remainder": n(bd.vertical_trace_remainder),
    })
    rec.vectors["tau2"] = _vec(bd.tau2_full)
    if c is None:
        return rec
    rec.residuals["bitension_spaceform_vs_riemann"] = n(bitension(F, p, ctx, curvature="spaceform") - bd.tau2_full)
    if not riem:
        return rec
    rec.residuals["curvature_identity"] = curvature_trace_term(F, p, bd.tau, ctx=ctx).difference
    if bd.range_condition is None:
        return rec
    rec.residuals.update({
        "range_condition": n(bd.range_condition),
        "normal_condition": n(bd.normal_condition),
        "range_condition_vs_tau2_range": n(bd.range_condition - bd.tau2_range),
        "normal_condition_vs_tau2_normal": n(bd.normal_condition + bd.tau2_normal),
        "range_condition_vs_horizontal_tau2_range": n(bd.range_condition - bd.tau2_horizontal_range),
        "normal_condition_vs_horizontal_tau2_normal": n(bd.normal_condition + bd.tau2_horizontal_normal),
    })
    for name, v in bd.terms.items():
        if name not in ("range_condition", "normal_condition"):
            rec.residuals[f"term_{name}"] = n(v)
    # the pseudo-umbilical reduction: sum_r B(e_r, W e_r) against m2 |H2|^2 H2
    h2sq = rec.residuals["H2_norm_sq"]
    rec.residuals["pseudo_umbilical_reduction"] = n(bd.terms["trace_B_W"] - ctx.m2 * h2sq * ctx.H2.value)
    rec.vectors.update({"range_condition": _vec(bd.range_condition), "normal_condition": _vec(bd.normal_condition)})
    return rec


def _require_spaceform(F: SmoothMap):
    if F.target.curvature is None:
        raise HypothesisError(
            f"target {F.target.name!r} of {F.name!r} is not a declared space form; "
            "declare it with a spaceform block"
        )


def _all_below(records, name: str, t: float) -> bool:
    return all(r.residuals[name] < t for r in records if name in r.residuals)


def collect(F: SmoothMap, points, command: str, tolerances: dict | None = None, workers: int = 1,
            bitension_terms: bool = True, order: int | None = None) -> Report:
    tol = dict(DEFAULT_TOLERANCES, **(tolerances or {}))
    report = Report(command, map_name=F.name, tolerances=tol)
    report.records = run_points(lambda i, p: point_record(F, i, p, tol, bitension_terms, order), points, workers)
    if F.target.curvature is not None:
        report.info["curvature"] = F.target.curvature
    return report


def _non_riemannian(report: Report) -> list[int]:
    return [r.index for r in report.records if r.labels.get("riemannian") == "no"]


def tension_report(F: SmoothMap, points, tolerances=None, workers: int = 1, order: int | None = None) -> Report:
    report = collect(F, points, "tension", tolerances, workers, bitension_terms=False, order=order)
    report.check("tension_decomposition", "identity")
    harmonic = _all_below(report.records, "tau", report.tolerances["harmonic"])
    report.verdicts["harmonic"] = "yes" if harmonic else "no"
    bad = _non_riemannian(report)
    if bad:
        report.info["tension_decomposition_skipped_at"] = bad
    return report


def bitension_verdicts(report: Report) -> None:
    tol = report.tolerances
    recs = report.records
    harmonic = _all_below(recs, "tau", tol["harmonic"])
    biharmonic = _all_below(recs, "tau2", tol["order4"])
    report.verdicts["harmonic"] = "yes" if harmonic else "no"
    report.verdicts["biharmonic"] = "yes" if biharmonic else "no"
    report.verdicts["proper_biharmonic"] = "yes" if biharmonic and not harmonic else "no"


def bitension_report(F: SmoothMap, points, tolerances=None, workers: int = 1) -> Report:
    report = collect(F, points, "bitension", tolerances, workers)
    report.check("tau2_split", "identity")
    if F.target.curvature is not None:
        report.check("bitension_spaceform_vs_riemann", "curvature")
        report.check("curvature_identity", "curvature")
    bitension_verdicts(report)
    if report.verdicts["harmonic"] == "yes" and report.verdicts["biharmonic"] == "no":
        report.failures.append("harmonic map with nonzero bitension")
    return report


def conditions_verdicts(report: Report) -> None:
    """Biharmonicity by the range/normal conditions vs by the direct bitension."""
    report.check("isometry", "residual")
    report.check("curvature_identity", "curvature")
    report.check("range_condition_vs_horizontal_tau2_range", "order4")
    report.check("normal_condition_vs_horizontal_tau2_normal", "order4")
    bad = _non_riemannian(report)
    if bad:
        report.failures.append(f"map is not Riemannian at points {bad}")
        report.verdicts["conditions_vs_bitension"] = VERDICT_NOT_MET
        return
    t = report.tolerances["order4"]
    recs = report.records
    if not all("range_condition" in r.residuals for r in recs):
        report.verdicts["conditions_vs_bitension"] = VERDICT_NOT_MET
        report.info["conditions_note"] = "range of F_* is trivial; the conditions are vacuous"
        return
    by_conditions = _all_below(recs, "range_condition", t) and _all_below(recs, "normal_condition", t)
    by_bitension = _all_below(recs, "tau2", t)
    report.verdicts["biharmonic_by_conditions"] = "yes" if by_conditions else "no"
    report.verdicts["biharmonic_by_bitension"] = "yes" if by_bitension else "no"
    report.verdicts["conditions_vs_bitension"] = "agree" if by_conditions == by_bitension else "disagree"
    if by_conditions != by_bitension:
        report.failures.append("range/normal conditions and direct bitension disagree on biharmonicity")


def thm41_verify(F: SmoothMap, points, tolerances: dict | None = None, workers: int = 1) -> Report:
    """Range/normal biharmonicity conditions next to the direct bitension.

    The map counts as biharmonic by the conditions when both condition
    residuals are below the order4 tolerance, and by the bitension when
    ``|tau_2|`` is.  Disagreement between the two verdicts is a failure.
    """
    _require_spaceform(F)
    report = collect(F, points, "verify-4.1", tolerances, workers)
    bitension_verdicts(report)
    conditions_verdicts(report)
    return report


VERDICT_HARMONIC = "harmonic"
VERDICT_EQUALITY = "equality c = |H2|^2"
VERDICT_INCONSISTENT = "inconsistent-with-theorem"
VERDICT_NOT_MET = "hypotheses-not-met"


def dichotomy_verdicts(report: Report, c: float) -> None:
    report.check("isometry", "residual")
    tol = report.tolerances
    recs = report.records
    bad = _non_riemannian(report)
    if bad:
        report.verdicts["dichotomy"] = VERDICT_NOT_MET
        report.verdicts["nonpositive_curvature_contradiction"] = "no"
        report.failures.append(f"map is not Riemannian at points {bad}")
        return
    res_tol = tol["residual"]
    geometric = {
        "pseudo_umbilical": _all_below(recs, "pseudo_umbilical_operator", res_tol)
        and _all_below(recs, "pseudo_umbilical_bilinear", res_tol),
        "minimal_fibers": _all_below(recs, "mu_ker", res_tol),
        "parallel_H2": _all_below(recs, "nabla_perp_H2", res_tol),
    }
    harmonic = _all_below(recs, "tau", tol["harmonic"])
    biharmonic = _all_below(recs, "tau2", tol["order4"])
    for k, v in geometric.items():
        report.verdicts[k] = "yes" if v else "no"
    report.verdicts["harmonic"] = "yes" if harmonic else "no"
    report.verdicts["biharmonic"] = "yes" if biharmonic else "no"
    report.verdicts["geometric_hypotheses"] = "met" if all(geometric.values()) else "not met"
    met = all(geometric.values()) and biharmonic
    if harmonic:
        verdict = VERDICT_HARMONIC
    elif not met:
        verdict = VERDICT_NOT_MET
    elif _all_below(recs, "H2_norm_sq_minus_c", tol["order4"]):
        verdict = VERDICT_EQUALITY
    else:
        verdict = VERDICT_INCONSISTENT
        report.failures.append("proper biharmonic map meets the hypotheses but |H2|^2 != c")
    report.verdicts["dichotomy"] = verdict
    contradiction = met and not harmonic and c <= 0
    report.verdicts["nonpositive_curvature_contradiction"] = "yes" if contradiction else "no"
    if contradiction:
        report.failures.append("proper biharmonic pseudo-umbilical map into c <= 0 (implementation bug)")
    # with minimal fibers and parallel H2 the two conditions simplify
    report.verdicts["reduced_conditions_apply"] = (
        "yes" if geometric["minimal_fibers"] and geometric["parallel_H2"] else "no"
    )


def thm42_classify(F: SmoothMap, points, tolerances: dict | None = None, workers: int = 1) -> Report:
    """Harmonic-or-equality dichotomy for pseudo-umbilical biharmonic maps.

    Hypotheses are pseudo-umbilicality, minimal fibers and parallel H2; the
    dichotomy only applies when the map is also biharmonic at every point.
    """
    _require_spaceform(F)
    report = collect(F, points, "classify", tolerances, workers)
    dichotomy_verdicts(report, F.target.curvature)
    return report
