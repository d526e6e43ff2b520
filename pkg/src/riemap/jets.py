"""Truncated multivariate Taylor arithmetic (forward-mode jets).

A :class:`Jet` stores, for every multi-index ``alpha`` with ``|alpha| <= order``,
the coefficient ``d^alpha f / alpha!`` at a base point.  Coefficients live in a
dense trailing axis ordered graded-lexicographically, so the coefficients of
order ``<= k`` always form a prefix of the coefficient vector.  That prefix
property is what makes mixed-order arithmetic cheap: combining jets of
different orders simply truncates to the smaller one.

Jets carry an arbitrary leading array shape, so a metric is a single ``Jet``
of shape ``(n, n)`` rather than a nested list of scalars.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, SingularityError, UsageError

MAX_ORDER = 4
MAX_VARS = 8


def _multi_indices(num_vars: int, order: int) -> list[tuple[int, ...]]:
    out = []
    for degree in range(order + 1):
        block = []
        for combo in combinations_with_replacement(range(num_vars), degree):
            alpha = [0] * num_vars
            for k in combo:
                alpha[k] += 1
            block.append(tuple(alpha))
        # graded lex: within a degree, larger powers of earlier variables first
        block.sort(reverse=True)
        out.extend(block)
    return out


class JetSpace:
    """Index tables for jets with a fixed variable count and order."""

    def __init__(self, num_vars: int, order: int):
        self.num_vars = num_vars
        self.order = order
        self.indices = _multi_indices(num_vars, order)
        self.rank = {alpha: i for i, alpha in enumerate(self.indices)}
        self.size = len(self.indices)
        self.degrees = np.array([sum(a) for a in self.indices])
        self.factorials = np.array(
            [math.prod(math.factorial(k) for k in a) for a in self.indices], dtype=float
        )
        pi, pj, pk = [], [], []
        for i, a in enumerate(self.indices):
            for j, b in enumerate(self.indices):
                if sum(a) + sum(b) <= order:
                    pi.append(i)
                    pj.append(j)
                    pk.append(self.rank[tuple(x + y for x, y in zip(a, b))])
        self.pair_i = np.array(pi, dtype=np.intp)
        self.pair_j = np.array(pj, dtype=np.intp)
        collect = np.zeros((len(pk), self.size))
        collect[np.arange(len(pk)), pk] = 1.0
        self.collect = collect

    def prefix(self, order: int) -> int:
        """Number of coefficients with total degree <= order."""
        return math.comb(self.num_vars + order, order)

    def derivative_table(self, var: int) -> tuple[np.ndarray, np.ndarray]:
        """Source indices and factors mapping a jet to its ``var`` partial.

        The result lives in the space of one lower order.
        """
        lower = jet_space(self.num_vars, self.order - 1)
        src, fac = [], []
        for alpha in lower.indices:
            up = list(alpha)
            up[var] += 1
            src.append(self.rank[tuple(up)])
            fac.append(up[var])
        return np.array(src, dtype=np.intp), np.array(fac, dtype=float)


@lru_cache(maxsize=None)
def jet_space(num_vars: int, order: int) -> JetSpace:
    if not 0 <= order <= MAX_ORDER:
        raise ConfigurationError(f"jet order must be in [0, {MAX_ORDER}], got {order}")
    if not 1 <= num_vars <= MAX_VARS:
        raise ConfigurationError(f"jet variable count must be in [1, {MAX_VARS}], got {num_vars}")
    return JetSpace(num_vars, order)


@lru_cache(maxsize=None)
def _derivative_table(num_vars: int, order: int, var: int):
    return jet_space(num_vars, order).derivative_table(var)


class Jet:
    """Array of truncated Taylor expansions sharing one base point."""

    __slots__ = ("c", "space")
    __array_priority__ = 1000

    def __init__(self, coeffs, space: JetSpace):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1] != space.size:
            raise UsageError(
                f"coefficient axis has length {coeffs.shape[-1]}, expected {space.size}"
            )
        self.c = coeffs
        self.space = space

    # -- construction -------------------------------------------------------

    @classmethod
    def constant(cls, value, num_vars: int, order: int) -> "Jet":
        sp = jet_space(num_vars, order)
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (sp.size,))
        c[..., 0] = value
        return cls(c, sp)

    # -- basic properties ---------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.c.shape[:-1]

    @property
    def order(self) -> int:
        return self.space.order

    @property
    def num_vars(self) -> int:
        return self.space.num_vars

    @property
    def value(self):
        v = self.c[..., 0]
        return float(v) if v.ndim == 0 else v.copy()

    def __len__(self) -> int:
        return self.shape[0]

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, num_vars={self.num_vars}, order={self.order})"

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        if any(k is Ellipsis for k in key):
            key = key + (slice(None),)
        return Jet(self.c[key], self.space)

    def coeff(self, alpha: Sequence[int]):
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.num_vars:
            raise UsageError(f"multi-index {alpha} has wrong length for {self.num_vars} variables")
        if sum(alpha) > self.order:
            return 0.0 if self.c.ndim == 1 else np.zeros(self.shape)
        v = self.c[..., self.space.rank[alpha]]
        return float(v) if v.ndim == 0 else v.copy()

    def as_dict(self) -> dict[tuple[int, ...], float]:
        """Nonzero coefficients of a scalar jet keyed by multi-index."""
        if self.shape:
            raise UsageError("as_dict is only defined for scalar jets")
        return {a: float(v) for a, v in zip(self.space.indices, self.c) if v != 0.0}

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        sp = jet_space(self.num_vars, order)
        return Jet(self.c[..., : sp.size], sp)

    def d(self, var: int) -> "Jet":
        """Partial derivative in variable ``var``; the order drops by one."""
        if self.order == 0:
            raise UsageError("cannot differentiate an order-0 jet")
        src, fac = _derivative_table(self.num_vars, self.order, var)
        return Jet(self.c[..., src] * fac, jet_space(self.num_vars, self.order - 1))

    def grad(self) -> "Jet":
        """All first partials stacked on a new trailing (index) axis."""
        parts = [self.d(k).c for k in range(self.num_vars)]
        sp = jet_space(self.num_vars, self.order - 1)
        return Jet(np.stack(parts, axis=-2), sp)

    def partial(self, alpha: Sequence[int]):
        return extract_partial(self, alpha)

    # -- shape manipulation -------------------------------------------------

    def transpose(self, *axes) -> "Jet":
        nd = len(self.shape)
        axes = tuple(range(nd))[::-1] if not axes else axes
        return Jet(np.transpose(self.c, tuple(axes) + (nd,)), self.space)

    @property
    def T(self) -> "Jet":
        return self.transpose()

    def sum(self, axis=None) -> "Jet":
        nd = len(self.shape)
        if axis is None:
            axis = tuple(range(nd))
        elif isinstance(axis, int):
            axis = (axis % nd,)
        else:
            axis = tuple(a % nd for a in axis)
        return Jet(self.c.sum(axis=axis), self.space)

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Jet(self.c.reshape(tuple(shape) + (self.space.size,)), self.space)

    # -- arithmetic ---------------------------------------------------------

    def _align(self, other: "Jet") -> tuple[np.ndarray, np.ndarray, JetSpace]:
        if other.num_vars != self.num_vars:
            raise UsageError(
                f"jets over {self.num_vars} and {other.num_vars} variables cannot be combined"
            )
        if other.order == self.order:
            return self.c, other.c, self.space
        a, b = self.truncate(other.order), other.truncate(self.order)
        return a.c, b.c, a.space

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b, sp = self._align(other)
            return Jet(a + b, sp)
        other = np.asarray(other, dtype=float)
        shape = np.broadcast_shapes(self.shape, other.shape)
        c = np.broadcast_to(self.c, shape + (self.space.size,)).copy()
        c[..., 0] += other
        return Jet(c, self.space)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.space)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b, sp = self._align(other)
            prod = a[..., sp.pair_i] * b[..., sp.pair_j]
            return Jet(prod @ sp.collect, sp)
        return Jet(self.c * np.asarray(other, dtype=float)[..., None], self.space)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        other = np.asarray(other, dtype=float)
        if np.any(other == 0.0):
            raise SingularityError("division by zero constant")
        return Jet(self.c / other[..., None], self.space)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, exponent):
        if isinstance(exponent, Jet):
            raise UsageError("jet exponents must be constants")
        return pow_const(self, float(exponent))

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)


# -- constructors ----------------------------------------------------------


def lift_variable(value: float, var_index: int, num_vars: int, order: int) -> Jet:
    """Jet of the coordinate function ``x_var_index`` at ``value``."""
    sp = jet_space(num_vars, order)
    if not 0 <= var_index < num_vars:
        raise ConfigurationError(f"variable index {var_index} out of range for {num_vars} variables")
    c = np.zeros(sp.size)
    c[0] = value
    if order >= 1:
        unit = [0] * num_vars
        unit[var_index] = 1
        c[sp.rank[tuple(unit)]] = 1.0
    return Jet(c, sp)


def lift_point(point: Sequence[float], order: int) -> Jet:
    """Coordinate jets of every variable at ``point``, as one shape-(n,) jet."""
    n = len(point)
    sp = jet_space(n, order)
    c = np.zeros((n, sp.size))
    c[:, 0] = point
    if order >= 1:
        for k in range(n):
            unit = [0] * n
            unit[k] = 1
            c[k, sp.rank[tuple(unit)]] = 1.0
    return Jet(c, sp)


def as_jet(x, like: Jet) -> Jet:
    if isinstance(x, Jet):
        return x
    return Jet.constant(x, like.num_vars, like.order)


# -- named scalar operations ------------------------------------------------


def jet_arithmetic(a: Jet, b: Jet, op: str) -> Jet:
    if a.num_vars != b.num_vars or a.order != b.order:
        raise UsageError("jet_arithmetic operands must share num_vars and order")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise UsageError(f"unknown jet operation {op!r}")


def extract_partial(a: Jet, alpha: Sequence[int]):
    """``d^alpha f`` at the base point, i.e. ``alpha! * coeff(alpha)``."""
    alpha = tuple(int(v) for v in alpha)
    if len(alpha) != a.num_vars:
        raise UsageError(f"multi-index {alpha} has wrong length for {a.num_vars} variables")
    if sum(alpha) > a.order:
        raise UsageError(f"|alpha| = {sum(alpha)} exceeds jet order {a.order}")
    k = a.space.rank[alpha]
    v = a.c[..., k] * a.space.factorials[k]
    return float(v) if np.ndim(v) == 0 else v


# -- univariate composition -------------------------------------------------


def _compose_series(a: Jet, coeffs: np.ndarray) -> Jet:
    """Evaluate ``sum_k coeffs[..., k] * (a - a0)^k`` by Horner's rule.

    ``coeffs[..., k]`` must be ``f^(k)(a0) / k!`` for the scalar function f.
    """
    h = Jet(a.c.copy(), a.space)
    h.c[..., 0] = 0.0
    n = a.order
    acc = Jet(np.zeros(a.c.shape), a.space)
    acc.c[..., 0] = coeffs[..., n]
    for k in range(n - 1, -1, -1):
        acc = acc * h
        acc.c[..., 0] += coeffs[..., k]
    return acc


def _univariate(a0: np.ndarray, order: int) -> Jet:
    """The identity function expanded around ``a0`` (one variable)."""
    sp = jet_space(1, order)
    c = np.zeros(np.shape(a0) + (sp.size,))
    c[..., 0] = a0
    if order >= 1:
        c[..., 1] = 1.0
    return Jet(c, sp)


_INV_FACT = np.array([1.0 / math.factorial(k) for k in range(MAX_ORDER + 1)])


def _cyclic(derivs: list[np.ndarray], order: int) -> np.ndarray:
    cols = [derivs[k % 4] * _INV_FACT[k] for k in range(order + 1)]
    return np.stack(cols, axis=-1)


def _check_finite(a: Jet, name: str):
    if not np.all(np.isfinite(a.c[..., 0])):
        raise SingularityError(f"{name} of a non-finite value")


def sin(a):
    if not isinstance(a, Jet):
        return math.sin(a)
    a0 = a.c[..., 0]
    s, c = np.sin(a0), np.cos(a0)
    return _compose_series(a, _cyclic([s, c, -s, -c], a.order))


def cos(a):
    if not isinstance(a, Jet):
        return math.cos(a)
    a0 = a.c[..., 0]
    s, c = np.sin(a0), np.cos(a0)
    return _compose_series(a, _cyclic([c, -s, -c, s], a.order))


def exp(a):
    if not isinstance(a, Jet):
        return math.exp(a)
    e = np.exp(a.c[..., 0])
    return _compose_series(a, e[..., None] * _INV_FACT[: a.order + 1])


def sinh(a):
    if not isinstance(a, Jet):
        return math.sinh(a)
    a0 = a.c[..., 0]
    s, c = np.sinh(a0), np.cosh(a0)
    return _compose_series(a, _cyclic([s, c, s, c], a.order))


def cosh(a):
    if not isinstance(a, Jet):
        return math.cosh(a)
    a0 = a.c[..., 0]
    s, c = np.sinh(a0), np.cosh(a0)
    return _compose_series(a, _cyclic([c, s, c, s], a.order))


def log(a):
    if not isinstance(a, Jet):
        if a <= 0:
            raise SingularityError("log of a non-positive value")
        return math.log(a)
    a0 = a.c[..., 0]
    if np.any(a0 <= 0):
        raise SingularityError("log of a non-positive value")
    cols = [np.log(a0)]
    for k in range(1, a.order + 1):
        cols.append((-1.0) ** (k - 1) / (k * a0**k))
    return _compose_series(a, np.stack(cols, axis=-1))


def reciprocal(a: Jet) -> Jet:
    a0 = a.c[..., 0]
    if np.any(a0 == 0.0):
        raise SingularityError("division by a jet with zero constant term")
    _check_finite(a, "reciprocal")
    cols = [(-1.0) ** k / a0 ** (k + 1) for k in range(a.order + 1)]
    return _compose_series(a, np.stack(cols, axis=-1))


def pow_const(a, p: float):
    """``a ** p`` for a constant exponent."""
    if not isinstance(a, Jet):
        if float(p).is_integer():
            if a == 0 and p < 0:
                raise SingularityError("zero raised to a negative power")
            return float(a) ** int(p)
        if a <= 0:
            raise SingularityError("non-integer power of a non-positive value")
        return float(a) ** p
    if float(p).is_integer():
        n = int(p)
        if n < 0:
            out = reciprocal(_int_power(a, -n))
        else:
            out = _int_power(a, n)
        # repeated squaring can be an ulp off the library power
        out.c[..., 0] = np.power(a.c[..., 0], float(n))
        return out
    a0 = a.c[..., 0]
    if np.any(a0 <= 0):
        raise SingularityError("non-integer power of a non-positive value")
    cols = [np.sqrt(a0) if p == 0.5 else np.power(a0, p)]
    binom = 1.0
    for k in range(1, a.order + 1):
        binom *= (p - k + 1) / k
        cols.append(binom * np.power(a0, p - k))
    return _compose_series(a, np.stack(cols, axis=-1))


def _int_power(a: Jet, n: int) -> Jet:
    result = None
    base = a
    while n:
        if n & 1:
            result = base if result is None else result * base
        n >>= 1
        if n:
            base = base * base
    if result is None:
        return Jet.constant(np.ones(a.shape), a.num_vars, a.order)
    return result


def sqrt(a):
    if not isinstance(a, Jet):
        if a <= 0:
            raise SingularityError("sqrt of a non-positive value")
        return math.sqrt(a)
    return pow_const(a, 0.5)


def _series_of(fn, a: Jet) -> np.ndarray:
    return fn(_univariate(a.c[..., 0], a.order)).c


def tan(a):
    if not isinstance(a, Jet):
        if math.cos(a) == 0.0:
            raise SingularityError("tan at a pole")
        return math.tan(a)
    coeffs = _series_of(lambda x: sin(x) / cos(x), a)
    coeffs[..., 0] = np.tan(a.c[..., 0])
    return _compose_series(a, coeffs)


def tanh(a):
    if not isinstance(a, Jet):
        return math.tanh(a)
    coeffs = _series_of(lambda x: sinh(x) / cosh(x), a)
    coeffs[..., 0] = np.tanh(a.c[..., 0])
    return _compose_series(a, coeffs)


def atan(a):
    if not isinstance(a, Jet):
        return math.atan(a)
    a0 = a.c[..., 0]
    deriv = _series_of(lambda x: reciprocal(1.0 + x * x), a)
    cols = [np.arctan(a0)] + [deriv[..., k - 1] / k for k in range(1, a.order + 1)]
    return _compose_series(a, np.stack(cols, axis=-1))


ELEMENTARY = {
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "sinh": sinh,
    "cosh": cosh,
    "tanh": tanh,
    "atan": atan,
}


def jet_elementary(fn: str, a: Jet, exponent: float | None = None) -> Jet:
    if fn == "pow_const":
        if exponent is None:
            raise UsageError("pow_const needs an exponent")
        return pow_const(a, exponent)
    try:
        f = ELEMENTARY[fn]
    except KeyError:
        raise UsageError(f"unknown elementary function {fn!r}") from None
    return f(a)


# -- tensor algebra over jets ----------------------------------------------


def _free_letter(used: str) -> str:
    for ch in "ZYXWVUTSRQPONMLKJIHGFEDCBA":
        if ch not in used:
            return ch
    raise UsageError("einsum subscripts exhausted")


def _contract2(sa: str, a, sb: str, b, out: str):
    ja, jb = isinstance(a, Jet), isinstance(b, Jet)
    if not ja and not jb:
        return np.einsum(f"{sa},{sb}->{out}", a, b)
    z = _free_letter(sa + sb + out)
    if ja and not jb:
        return Jet(np.einsum(f"{sa}{z},{sb}->{out}{z}", a.c, b), a.space)
    if jb and not ja:
        return Jet(np.einsum(f"{sa},{sb}{z}->{out}{z}", a, b.c), b.space)
    ac, bc, sp = a._align(b)
    prod = np.einsum(f"{sa}{z},{sb}{z}->{out}{z}", ac[..., sp.pair_i], bc[..., sp.pair_j])
    return Jet(prod @ sp.collect, sp)


def jeinsum(subscripts: str, *operands):
    """``numpy.einsum`` over a mix of jets and constant arrays.

    Operands are contracted pairwise from left to right.  Only explicit
    ``'in,in->out'`` subscripts are supported.
    """
    lhs, out = subscripts.replace(" ", "").split("->")
    subs = lhs.split(",")
    if len(subs) != len(operands):
        raise UsageError("subscript count does not match operand count")
    ops = [o if isinstance(o, Jet) else np.asarray(o, dtype=float) for o in operands]
    acc, acc_sub = ops[0], subs[0]
    for k in range(1, len(ops)):
        needed = set(out) | set("".join(subs[k + 1:]))
        merged = "".join(dict.fromkeys(acc_sub + subs[k]))
        keep = "".join(ch for ch in merged if ch in needed)
        acc = _contract2(acc_sub, acc, subs[k], ops[k], keep)
        acc_sub = keep
    if acc_sub != out:
        if isinstance(acc, Jet):
            z = _free_letter(acc_sub + out)
            acc = Jet(np.einsum(f"{acc_sub}{z}->{out}{z}", acc.c), acc.space)
        else:
            acc = np.einsum(f"{acc_sub}->{out}", acc)
    return acc


def matmul(a, b):
    """Matrix (or matrix-vector) product where either side may be a jet."""
    sa = "ij" if np.ndim(a.c if isinstance(a, Jet) else a) - isinstance(a, Jet) == 2 else "j"
    nb = np.ndim(b.c if isinstance(b, Jet) else b) - isinstance(b, Jet)
    sb = "jk" if nb == 2 else "j"
    out = sa.replace("j", "") + sb.replace("j", "")
    return jeinsum(f"{sa},{sb}->{out}", a, b)


def stack(jets: Sequence[Jet], axis: int = 0) -> Jet:
    order = min(j.order for j in jets)
    jets = [j.truncate(order) for j in jets]
    nd = len(jets[0].shape)
    if axis < 0:
        axis += nd + 1
    return Jet(np.stack([j.c for j in jets], axis=axis), jets[0].space)


def inv(a: Jet) -> Jet:
    """Inverse of a jet matrix via the terminating Neumann series.

    With ``A = A0 + N`` and ``N`` nilpotent (no constant term),
    ``A^-1 = sum_k (-A0^-1 N)^k A0^-1`` stops after ``order`` terms.
    """
    a0 = a.c[..., 0]
    if not np.all(np.isfinite(a0)):
        raise SingularityError("inverse of a non-finite matrix")
    try:
        a0inv = np.linalg.inv(a0)
    except np.linalg.LinAlgError:
        raise SingularityError("inverse of a singular matrix") from None
    nil = Jet(a.c.copy(), a.space)
    nil.c[..., 0] = 0.0
    step = -jeinsum("ij,jk->ik", a0inv, nil)
    acc = Jet.constant(a0inv, a.num_vars, a.order)
    for _ in range(a.order):
        acc = jeinsum("ij,jk->ik", step, acc) + a0inv
    return acc


class Composer:
    """Substitute jets ``inner`` (shape ``(n,)``, in x) into jets in y.

    ``outer`` jets must be expanded around ``inner.value``.  The monomial
    table ``(inner - inner.value)^beta`` is built once and reused, so
    composing a metric and its Christoffel symbols costs one matrix product
    each.
    """

    def __init__(self, inner: Jet, order: int):
        if len(inner.shape) != 1:
            raise UsageError("inner jet must have shape (n,)")
        self.inner = inner
        self.n = inner.shape[0]
        self.order = min(order, inner.order)
        ysp = jet_space(self.n, order)
        h = Jet(inner.c.copy(), inner.space)
        h.c[..., 0] = 0.0
        rows = [None] * ysp.size
        rows[0] = Jet.constant(1.0, inner.num_vars, inner.order)
        for idx, beta in enumerate(ysp.indices[1:], start=1):
            k = next(i for i, b in enumerate(beta) if b > 0)
            prev = list(beta)
            prev[k] -= 1
            rows[idx] = rows[ysp.rank[tuple(prev)]] * h[k]
        self.table = np.stack([r.c for r in rows])
        self.ysp = ysp

    def __call__(self, outer: Jet) -> Jet:
        if outer.num_vars != self.n:
            raise UsageError("outer jet variable count does not match inner dimension")
        order = min(outer.order, self.order)
        ky = jet_space(self.n, order).size
        xsp = jet_space(self.inner.num_vars, order)
        table = self.table[:ky, : xsp.size]
        return Jet(outer.c[..., :ky] @ table, xsp)
