"""Intrinsic chart geometry: metric, Levi-Civita connection, curvature, and
second fundamental forms / mean curvatures of distributions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import frames
from .errors import ConstantRankError, GeometryError, UsageError
from .jets import Jet, inv, jeinsum, lift_point, stack
from .scenelang import BinOp, Expr, Num, Var, eval_ast

SPD_FLOOR = 1e-10


@dataclass(frozen=True)
class ChartManifold:
    """A manifold given by one coordinate chart and a metric in expressions.

    ``curvature`` is set only for space-form models; it records the constant
    sectional curvature the model was built for.
    """

    name: str
    coords: tuple[str, ...]
    metric_exprs: tuple[tuple[Expr, ...], ...]
    domain: tuple[tuple[float, float], ...]
    curvature: float | None = None
    source_text: str | None = field(default=None, compare=False)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def contains(self, point: Sequence[float]) -> bool:
        return all(lo <= x <= hi for x, (lo, hi) in zip(point, self.domain))

    def metric_jets(self, env: Jet, point=None) -> Jet:
        """Metric entries evaluated with coordinates bound to ``env`` (shape (dim,))."""
        binding = {name: env[k] for k, name in enumerate(self.coords)}
        rows = []
        for row in self.metric_exprs:
            entries = []
            for e in row:
                v = eval_ast(e, binding, point)
                entries.append(v if isinstance(v, Jet) else Jet.constant(v, env.num_vars, env.order))
            rows.append(stack(entries))
        return stack(rows)

    def metric_values(self, point: Sequence[float]) -> np.ndarray:
        binding = {name: float(x) for name, x in zip(self.coords, point)}
        return np.array([[float(eval_ast(e, binding, point)) for e in row] for row in self.metric_exprs])


def euclidean(name: str, coords: Sequence[str], domain=None) -> ChartManifold:
    n = len(coords)
    metric = tuple(tuple(Num(1.0 if i == j else 0.0) for j in range(n)) for i in range(n))
    domain = tuple(domain) if domain is not None else tuple((-1.0, 1.0) for _ in range(n))
    return ChartManifold(name, tuple(coords), metric, domain)


def conformal_factor_expr(coords: Sequence[str], c: float) -> Expr:
    """``1 / (1 + (c/4) |x|^2)^2`` as an expression tree."""
    sq = None
    for name in coords:
        term = BinOp("^", Var(name), Num(2.0))
        sq = term if sq is None else BinOp("+", sq, term)
    denom = BinOp("+", Num(1.0), BinOp("*", Num(c / 4.0), sq))
    return BinOp("/", Num(1.0), BinOp("^", denom, Num(2.0)))


def spaceform_model(name: str, dim: int, c: float, coords: Sequence[str] | None = None,
                    domain=None) -> ChartManifold:
    """Conformal chart of the space form of curvature ``c``.

    The metric is ``delta_ij / (1 + (c/4)|x|^2)^2``; for ``c < 0`` the chart
    is the ball ``|x|^2 < -4/c`` and the default box is shrunk to fit inside.
    """
    coords = tuple(coords) if coords else tuple(f"x{k + 1}" for k in range(dim))
    if len(coords) != dim:
        raise UsageError(f"space form {name!r} declares dim {dim} but {len(coords)} coordinates")
    factor = conformal_factor_expr(coords, c)
    metric = tuple(tuple(factor if i == j else Num(0.0) for j in range(dim)) for i in range(dim))
    if domain is None:
        half = 1.0 if c >= 0 else min(1.0, 0.9 * 2.0 / np.sqrt(-c * dim))
        domain = tuple((-half, half) for _ in range(dim))
    return ChartManifold(name, coords, metric, tuple(domain), curvature=float(c))


# -- metric and connection ----------------------------------------------------


def check_spd(g: np.ndarray, point=None) -> None:
    if not np.allclose(g, g.T, rtol=0, atol=1e-12):
        raise GeometryError("metric is not symmetric", point)
    if np.linalg.eigvalsh(g).min() <= SPD_FLOOR:
        raise GeometryError("metric is not positive definite", point)


def metric_at(m: ChartManifold, p: Sequence[float], order: int) -> Jet:
    g = m.metric_jets(lift_point(p, order), point=p)
    check_spd(g.value, p)
    return g


def christoffel_from_metric(g: Jet) -> Jet:
    """``Gamma[k, i, j]`` from a metric jet; the order drops by one."""
    dg = g.grad()  # dg[i, j, l] = d_l g_ij
    ginv = inv(g.truncate(dg.order))
    # lowered[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    lowered = dg.transpose(1, 2, 0) + dg.transpose(1, 0, 2) - dg.transpose(2, 0, 1)
    lowered = 0.5 * lowered
    return jeinsum("kl,lij->kij", ginv, lowered)


def christoffel(m: ChartManifold, p: Sequence[float], order: int) -> Jet:
    return christoffel_from_metric(metric_at(m, p, order + 1))


def riemann_from_christoffel(gamma: Jet) -> np.ndarray:
    """``R[l, k, i, j]`` at the base point, with
    ``R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``."""
    if gamma.order < 1:
        raise UsageError("curvature needs Christoffel symbols of order >= 1")
    dgam = gamma.grad().value  # dgam[l, j, k, i] = d_i Gamma^l_jk
    G = gamma.value
    term = np.einsum("ljki->lkij", dgam) - np.einsum("likj->lkij", dgam)
    term += np.einsum("lim,mjk->lkij", G, G) - np.einsum("ljm,mik->lkij", G, G)
    return term


def riemann_curvature(m: ChartManifold, p: Sequence[float], X, Y, Z) -> np.ndarray:
    R = riemann_from_christoffel(christoffel(m, p, 1))
    return np.einsum("lkij,i,j,k->l", R, X, Y, Z)


def spaceform_curvature(c: float, g: np.ndarray, X, Y, Z) -> np.ndarray:
    X, Y, Z = (np.asarray(v, dtype=float) for v in (X, Y, Z))
    return c * ((Y @ g @ Z) * X - (X @ g @ Z) * Y)


def sectional_curvature(m: ChartManifold, p: Sequence[float], X, Y) -> float:
    g = m.metric_values(p)
    X, Y = np.asarray(X, float), np.asarray(Y, float)
    num = riemann_curvature(m, p, X, Y, Y) @ g @ X
    den = (X @ g @ X) * (Y @ g @ Y) - (X @ g @ Y) ** 2
    return float(num / den)


def covariant_derivative(gamma: Jet, A, B: Jet):
    """``(nabla_A B)^k = A^i d_i B^k + Gamma^k_ij A^i B^j`` as a jet field."""
    dB = B.grad()  # dB[k, i]
    return jeinsum("i,ki->k", A, dB) + jeinsum("kij,i,j->k", gamma, A, B)


# -- distributions --------------------------------------------------------------


@dataclass(frozen=True)
class DistributionField:
    """A distribution on a chart manifold given by spanning vector fields.

    ``spanning(env)`` returns a jet matrix whose columns span the
    distribution near the base point of ``env``.  With ``complement=True`` the
    field denotes the metric-orthogonal complement of that span instead.
    """

    manifold: ChartManifold
    spanning: Callable[[Jet], Jet]
    rank: int | None = None
    complement: bool = False
    tol_rank: float = 1e-7

    @classmethod
    def constant(cls, manifold: ChartManifold, vectors, rank: int | None = None) -> "DistributionField":
        vecs = np.asarray(vectors, dtype=float).reshape(manifold.dim, -1)
        return cls(manifold, lambda env: Jet.constant(vecs, env.num_vars, env.order), rank)

    def orthogonal(self) -> "DistributionField":
        return DistributionField(self.manifold, self.spanning, None if self.rank is None
                                 else self.manifold.dim - self.rank, not self.complement, self.tol_rank)


@dataclass
class DistributionAtPoint:
    """Jet-level data of a distribution around one point."""

    span: Jet  # independent spanning fields of the distribution, (d, q)
    proj: Jet  # projector onto the distribution
    perp: Jet  # projector onto the orthogonal complement
    gamma: Jet
    metric: Jet

    @property
    def rank(self) -> int:
        return self.span.shape[1]


def distribution_at(D: DistributionField, p: Sequence[float], order: int = 3) -> DistributionAtPoint:
    m = D.manifold
    env = lift_point(p, order)
    g = m.metric_jets(env, point=p)
    check_spd(g.value, p)
    gamma = christoffel_from_metric(g)
    S = D.spanning(env)
    gv = g.value
    L = frames.cholesky_factor(gv, p)
    s = np.linalg.svd(L.T @ S.value, compute_uv=False) if S.shape[1] else np.zeros(0)
    q = frames.decide_rank(s, D.tol_rank, p)
    cols = frames.pivot_columns(S.value, gv, q)
    base_span = S[:, cols]
    base_proj = frames.projector(base_span, g)
    eye = frames.identity_jet(m.dim, base_proj)
    if D.complement:
        q = m.dim - q
        proj = eye - base_proj
        cols = frames.pivot_columns(proj.value, gv, q)
        span = proj[:, cols]
    else:
        proj, span = base_proj, base_span
    if D.rank is not None and q != D.rank:
        raise ConstantRankError(f"distribution rank {q} differs from declared rank {D.rank}", p)
    return DistributionAtPoint(span, proj, eye - proj, gamma, g)


def distribution_sff(m: ChartManifold, V: DistributionField, p: Sequence[float], E, F,
                     which: str) -> np.ndarray:
    """Second-fundamental-form-type tensors of a distribution at ``p``.

    ``E`` and ``F`` are constant vectors or jet vector fields around ``p``.
    ``which`` selects ``A_unsym`` (H(nabla_{VE} VF)), ``B_sym``, the
    integrability tensor ``I_integrability``, or ``B_horizontal`` (the
    symmetrized form of the orthogonal complement, valued in V).
    """
    if V.manifold is not m:
        raise UsageError("distribution belongs to a different manifold")
    dat = distribution_at(V, p)
    g = dat.metric
    E, F = (_vector_field(v, g) for v in (E, F))
    if which == "B_horizontal":
        down, up = dat.perp, dat.proj
    else:
        down, up = dat.proj, dat.perp
    VE = jeinsum("ij,j->i", down, E)
    VF = jeinsum("ij,j->i", down, F)
    nEF = covariant_derivative(dat.gamma, VE, VF)
    nFE = covariant_derivative(dat.gamma, VF, VE)
    a_ef = jeinsum("ij,j->i", up, nEF).value
    a_fe = jeinsum("ij,j->i", up, nFE).value
    if which == "A_unsym":
        return a_ef
    if which in ("B_sym", "B_horizontal"):
        return 0.5 * (a_ef + a_fe)
    if which == "I_integrability":
        bracket = (nEF - nFE)  # torsion-free: [VE, VF] = nabla_VE VF - nabla_VF VE
        return a_ef - a_fe - jeinsum("ij,j->i", up, bracket).value
    raise UsageError(f"unknown second fundamental form kind {which!r}")


def _vector_field(v, like: Jet) -> Jet:
    if isinstance(v, Jet):
        if v.num_vars != like.num_vars or v.order < like.order:
            raise UsageError("vector field jet does not match the base point expansion")
        return v.truncate(like.order)
    return Jet.constant(np.asarray(v, float), like.num_vars, like.order)


def mean_curvature_field(span: Jet, perp: Jet, gamma: Jet, metric: Jet) -> Jet:
    """``(1/q) sum_rs (G^-1)^rs perp(nabla_{v_r} v_s)`` as a jet field.

    Works for any spanning set ``span`` (d, q); no orthonormal frame needed.
    """
    d, q = span.shape
    gram = jeinsum("ar,ab,bs->rs", span, metric, span)
    gram_inv = inv(gram)
    dspan = span.grad()  # dspan[k, s, i] = d_i v_s^k
    nab = jeinsum("ir,ksi->krs", span, dspan) + jeinsum("kij,ir,js->krs", gamma, span, span)
    trace = jeinsum("rs,krs->k", gram_inv, nab)
    return (1.0 / q) * jeinsum("kl,l->k", perp, trace)


def distribution_mean_curvature(m: ChartManifold, D: DistributionField, p: Sequence[float]):
    """Mean curvature vector of ``D`` at ``p``; returns ``(vector, trivial)``.

    ``trivial`` is True when the distribution has rank zero, in which case the
    vector is zero.
    """
    if D.manifold is not m:
        raise UsageError("distribution belongs to a different manifold")
    dat = distribution_at(D, p)
    if dat.rank == 0:
        return np.zeros(m.dim), True
    mu = mean_curvature_field(dat.span, dat.perp, dat.gamma, dat.metric)
    return mu.value, False
