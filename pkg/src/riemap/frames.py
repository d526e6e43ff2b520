"""Small dense linear algebra on jet matrices: ranks, pivots, frames, projectors."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import GeometryError, RankAmbiguityError
from .jets import Jet, inv, jeinsum, sqrt, stack


def decide_rank(singular_values: np.ndarray, tol_rank: float, point=None) -> int:
    """Count singular values above ``tol_rank * max``.

    Values within a decade of the threshold make the decision unreliable and
    raise :class:`RankAmbiguityError`.
    """
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0 or s.max() == 0.0:
        return 0
    thr = tol_rank * s.max()
    if np.any((s >= thr / 10) & (s <= thr * 10)):
        raise RankAmbiguityError(
            f"singular values {s.tolist()} too close to rank threshold {thr:.3g}", point
        )
    return int(np.sum(s > thr))


def cholesky_factor(g: np.ndarray, point=None) -> np.ndarray:
    try:
        return np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise GeometryError("metric is not positive definite", point) from None


def pivot_columns(values: np.ndarray, metric: np.ndarray, rank: int) -> list[int]:
    """Indices of ``rank`` well-conditioned columns of ``values``.

    Columns are compared in the inner product of ``metric`` (pivoted QR of
    ``L^T values``).  The selection is made at the base point and then frozen,
    so the resulting frame is smooth around it.
    """
    if rank == 0:
        return []
    weighted = cholesky_factor(metric).T @ values
    _, _, piv = scipy.linalg.qr(weighted, pivoting=True, mode="economic")
    return sorted(int(k) for k in piv[:rank])


def gram_schmidt(columns: Jet, metric: Jet) -> Jet:
    """Modified Gram-Schmidt on jet columns ``(d, r)`` in the metric ``(d, d)``."""
    d, r = columns.shape
    basis: list[Jet] = []
    for k in range(r):
        v = columns[:, k]
        for e in basis:
            v = v - jeinsum("i,ij,j->", v, metric, e) * e
        norm2 = jeinsum("i,ij,j->", v, metric, v)
        if norm2.value <= 0:
            raise GeometryError("Gram-Schmidt met a dependent column")
        basis.append(v * (1.0 / sqrt(norm2)))
    if not basis:
        return Jet(np.zeros((d, 0, columns.space.size)), columns.space)
    return stack(basis, axis=1)


def projector(span: Jet, metric: Jet) -> Jet:
    """Metric-orthogonal projector onto the column span of ``span`` (d, r)."""
    d = span.shape[0]
    if span.shape[1] == 0:
        return Jet(np.zeros((d, d, span.space.size)), span.space)
    gram = jeinsum("ai,ab,bj->ij", span, metric, span)
    return jeinsum("ar,rs,bs,bc->ac", span, inv(gram), span, metric)


def orthonormal_projector(frame: Jet, metric: Jet) -> Jet:
    """Projector ``E E^T g`` for a metric-orthonormal frame ``E``."""
    d = frame.shape[0]
    if frame.shape[1] == 0:
        return Jet(np.zeros((d, d, frame.space.size)), frame.space)
    return jeinsum("ar,br,bc->ac", frame, frame, metric)


def identity_jet(d: int, like: Jet) -> Jet:
    return Jet.constant(np.eye(d), like.num_vars, like.order)


def complement_frame(proj: Jet, metric: Jet, rank: int) -> Jet:
    """Orthonormal frame of the range of ``I - proj`` with ``rank`` columns."""
    d = proj.shape[0]
    comp = identity_jet(d, proj) - proj
    cols = pivot_columns(comp.value, metric.value, rank)
    if not cols:
        return Jet(np.zeros((d, 0, comp.space.size)), comp.space)
    return gram_schmidt(comp[:, cols], metric)
