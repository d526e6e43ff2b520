"""Independent finite-difference oracle for tension and bitension.

Nothing here touches the jet engine: expressions are evaluated by a separate
tree walker in mpmath arithmetic, and every derivative is a nested central
difference.  Working precision (30 digits) keeps cancellation in the nested
quotients far below the O(h^2) truncation error.

The nested quotients form an even function of the step, so one Richardson
step ``(4 T(h/2) - T(h)) / 3`` removes the h^2 term.  This is on by default:
near coordinate singularities (the poles of a sphere chart) the plain
second-order error at h = 1e-3 reaches a few 1e-6.
"""

from __future__ import annotations

from typing import Sequence

import mpmath
import numpy as np

from .rmap import SmoothMap
from .scenelang import BinOp, Call, Expr, Neg, Num, Var

DPS = 30
STEP = 1e-3

_MP_FUNCS = {
    "sin": mpmath.sin, "cos": mpmath.cos, "tan": mpmath.tan, "exp": mpmath.exp,
    "log": mpmath.log, "sqrt": mpmath.sqrt, "sinh": mpmath.sinh, "cosh": mpmath.cosh,
    "tanh": mpmath.tanh, "atan": mpmath.atan,
}


def mp_eval(node: Expr, env: dict):
    if isinstance(node, Num):
        return mpmath.mpf(node.value)
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -mp_eval(node.operand, env)
    if isinstance(node, Call):
        return _MP_FUNCS[node.fn](mp_eval(node.arg, env))
    a = mp_eval(node.left, env)
    if node.op == "^":
        e = mp_eval(node.right, {})
        return a ** int(e) if e == int(e) else mpmath.power(a, e)
    b = mp_eval(node.right, env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    return a / b


class Oracle:
    def __init__(self, F: SmoothMap, h: float = STEP, dps: int = DPS, extrapolate: bool = True):
        self.F = F
        self.h = mpmath.mpf(h)
        self.dps = dps
        self.extrapolate = extrapolate
        self.m, self.n = F.source.dim, F.target.dim

    # -- primitive evaluations --------------------------------------------------

    def _map(self, x):
        env = dict(zip(self.F.source.coords, x))
        return [mp_eval(e, env) for e in self.F.component_exprs]

    def _metric(self, manifold, x):
        env = dict(zip(manifold.coords, x))
        return mpmath.matrix([[mp_eval(e, env) for e in row] for row in manifold.metric_exprs])

    # -- differencing ------------------------------------------------------------

    def _shift(self, x, i, s):
        y = list(x)
        y[i] = y[i] + s * self.h
        return y

    def _d(self, f, x, i):
        """Central difference of a list-valued ``f`` along coordinate ``i``."""
        a, b = f(self._shift(x, i, 1)), f(self._shift(x, i, -1))
        return [(u - v) / (2 * self.h) for u, v in zip(_flat(a), _flat(b))]

    def _christoffel(self, manifold, x):
        d = len(x)
        g = self._metric(manifold, x)
        ginv = g ** -1
        dg = [self._metric_flat_d(manifold, x, l) for l in range(d)]  # dg[l][i*d + j]
        G = [[[mpmath.mpf(0)] * d for _ in range(d)] for _ in range(d)]
        for k in range(d):
            for i in range(d):
                for j in range(d):
                    s = 0
                    for l in range(d):
                        s += ginv[k, l] * (dg[i][j * d + l] + dg[j][i * d + l] - dg[l][i * d + j])
                    G[k][i][j] = s / 2
        return G

    def _metric_flat_d(self, manifold, x, l):
        return self._d(lambda y: _flat(self._metric(manifold, y).tolist()), x, l)

    def _jacobian(self, x):
        cols = [self._d(self._map, x, i) for i in range(self.m)]
        return [[cols[i][g] for i in range(self.m)] for g in range(self.n)]

    # -- tension --------------------------------------------------------------------

    def tension_mp(self, x):
        m, n, h = self.m, self.n, self.h
        F0 = self._map(x)
        J = self._jacobian(x)
        hess = [[None] * m for _ in range(m)]
        for i in range(m):
            for j in range(m):
                if i == j:
                    a, b = self._map(self._shift(x, i, 1)), self._map(self._shift(x, i, -1))
                    hess[i][j] = [(u - 2 * c + v) / h ** 2 for u, c, v in zip(a, F0, b)]
                elif j > i:
                    pp = self._map(self._shift(self._shift(x, i, 1), j, 1))
                    pm = self._map(self._shift(self._shift(x, i, 1), j, -1))
                    mp_ = self._map(self._shift(self._shift(x, i, -1), j, 1))
                    mm = self._map(self._shift(self._shift(x, i, -1), j, -1))
                    hess[i][j] = [(a - b - c + d) / (4 * h ** 2) for a, b, c, d in zip(pp, pm, mp_, mm)]
                else:
                    hess[i][j] = hess[j][i]
        g1inv = self._metric(self.F.source, x) ** -1
        G1 = self._christoffel(self.F.source, x)
        G2 = self._christoffel(self.F.target, F0)
        tau = []
        for g in range(n):
            s = 0
            for i in range(m):
                for j in range(m):
                    b = hess[i][j][g]
                    for a in range(n):
                        for c in range(n):
                            b += G2[g][a][c] * J[a][i] * J[c][j]
                    for k in range(m):
                        b -= G1[k][i][j] * J[g][k]
                    s += g1inv[i, j] * b
            tau.append(s)
        return tau

    def _nabla_tau(self, x):
        """``(nabla^F_j tau)^g`` flattened as ``[j * n + g]``."""
        tau = self.tension_mp(x)
        F0 = self._map(x)
        J = self._jacobian(x)
        G2 = self._christoffel(self.F.target, F0)
        out = []
        for j in range(self.m):
            dt = self._d(self.tension_mp, x, j)
            for g in range(self.n):
                s = dt[g]
                for a in range(self.n):
                    for b in range(self.n):
                        s += G2[g][a][b] * J[a][j] * tau[b]
                out.append(s)
        return out

    def bitension_mp(self, x):
        m, n = self.m, self.n
        F0 = self._map(x)
        J = self._jacobian(x)
        tau = self.tension_mp(x)
        N = self._nabla_tau(x)
        dN = [self._d(self._nabla_tau, x, i) for i in range(m)]
        G1 = self._christoffel(self.F.source, x)
        G2 = self._christoffel(self.F.target, F0)
        g1inv = self._metric(self.F.source, x) ** -1
        R = self._riemann(F0)
        out = []
        for g in range(n):
            s = 0
            for i in range(m):
                for j in range(m):
                    v = dN[i][j * n + g]
                    for a in range(n):
                        for b in range(n):
                            v += G2[g][a][b] * J[a][i] * N[j * n + b]
                    for k in range(m):
                        v -= G1[k][i][j] * N[k * n + g]
                    # curvature R(J_i, tau) J_j
                    for a in range(n):
                        for b in range(n):
                            for k in range(n):
                                v -= R[g][k][a][b] * J[a][i] * tau[b] * J[k][j]
                    s += g1inv[i, j] * v
            out.append(s)
        return out

    def _riemann(self, y):
        """``R[l][k][a][b]`` with ``R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``."""
        n = self.n
        G = self._christoffel(self.F.target, y)
        dG = [self._d(lambda z: _flat(self._christoffel(self.F.target, z)), y, a) for a in range(n)]

        def dgam(a, l, b, k):  # d_a Gamma^l_bk
            return dG[a][(l * n + b) * n + k]

        R = [[[[0] * n for _ in range(n)] for _ in range(n)] for _ in range(n)]
        for l in range(n):
            for k in range(n):
                for a in range(n):
                    for b in range(n):
                        v = dgam(a, l, b, k) - dgam(b, l, a, k)
                        for s in range(n):
                            v += G[l][a][s] * G[s][b][k] - G[l][b][s] * G[s][a][k]
                        R[l][k][a][b] = v
        return R

    # -- public -----------------------------------------------------------------------

    def _run(self, fn, p):
        with mpmath.workdps(self.dps):
            x = [mpmath.mpf(float(v)) for v in p]
            coarse = fn(x)
            if not self.extrapolate:
                return np.array([float(v) for v in coarse])
            h = self.h
            self.h = h / 2
            try:
                fine = fn(x)
            finally:
                self.h = h
            return np.array([float((4 * b - a) / 3) for a, b in zip(coarse, fine)])

    def tension(self, p: Sequence[float]) -> np.ndarray:
        return self._run(self.tension_mp, p)

    def bitension(self, p: Sequence[float]) -> np.ndarray:
        return self._run(self.bitension_mp, p)


def _flat(a):
    if isinstance(a, (list, tuple)):
        out = []
        for v in a:
            out.extend(_flat(v))
        return out
    return [a]


def fd_tension(F: SmoothMap, p, h: float = STEP, extrapolate: bool = True) -> np.ndarray:
    return Oracle(F, h, extrapolate=extrapolate).tension(p)


def fd_bitension(F: SmoothMap, p, h: float = STEP, extrapolate: bool = True) -> np.ndarray:
    return Oracle(F, h, extrapolate=extrapolate).bitension(p)


def relative_error(value, reference, floor: float = 1.0) -> float:
    """``|value - reference| / max(|reference|, floor)`` in the Euclidean norm."""
    value, reference = np.asarray(value, float), np.asarray(reference, float)
    return float(np.linalg.norm(value - reference) / max(np.linalg.norm(reference), floor))
