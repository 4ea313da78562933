"""Truncated multivariate jets: values plus all partial derivatives.

A :class:`Jet` stores the Taylor coefficients ``c_alpha = d^alpha f / alpha!``
of a function at a point, for every multi-index ``alpha`` with
``|alpha| <= order``.  Arithmetic propagates coefficients exactly (truncated
convolution for products, univariate series composition for the elementary
functions), so extracted derivatives are exact to machine rounding — no
finite differences anywhere in the forward path.

Coefficients carry a trailing batch axis, so one expression-tree walk
evaluates a whole sample set at once.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable

import numpy as np

from .expr import BinOp, Call, Const, CONSTANTS, Expr, Neg, Num, Var

__all__ = ["Jet", "JetSpace", "jet_space", "eval_jet", "eval_jet_batch",
           "JetDomainError", "EvalDomainError"]


class JetDomainError(ValueError):
    """A jet operation left the domain of an elementary function."""

    def __init__(self, fn: str, bad_index: int):
        super().__init__(f"domain error in {fn}")
        self.fn = fn
        self.bad_index = bad_index  # batch index of the first offending point


class EvalDomainError(ValueError):
    """Domain error during expression evaluation, with the offending point."""

    def __init__(self, fn: str, point):
        pt = tuple(float(x) for x in np.atleast_1d(point))
        super().__init__(f"domain error: {fn} evaluated outside its domain at point {pt}")
        self.fn = fn
        self.point = pt


def _multi_indices(n: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices with |alpha| <= order, sorted by (degree, lex).

    The sort guarantees that the indices of order k-1 form a prefix of the
    indices of order k, so truncation is a slice.
    """
    by_degree: list[list[tuple[int, ...]]] = [[(0,) * n]]
    for _ in range(order):
        prev = by_degree[-1]
        nxt = set()
        for alpha in prev:
            for i in range(n):
                beta = list(alpha)
                beta[i] += 1
                nxt.add(tuple(beta))
        by_degree.append(sorted(nxt))
    out: list[tuple[int, ...]] = []
    for group in by_degree:
        out.extend(sorted(group))
    return out


class JetSpace:
    """Index bookkeeping for jets with ``n`` variables at a given order.

    Precomputes the truncated-product plan (flat index triples) and the
    per-variable differentiation plan.  Instances are cached; use
    :func:`jet_space`.
    """

    def __init__(self, n: int, order: int):
        if n < 1:
            raise ValueError("need at least one variable")
        if order < 0:
            raise ValueError("order must be nonnegative")
        self.n = n
        self.order = order
        self.indices = _multi_indices(n, order)
        self.size = len(self.indices)
        self.index_of = {alpha: k for k, alpha in enumerate(self.indices)}
        self.degree = np.array([sum(a) for a in self.indices])
        # size of the order-k prefix, for truncation by slicing
        self.prefix_size = [int(np.sum(self.degree <= k)) for k in range(order + 1)]
        self._mul_plan = None
        self._diff_plans: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._fact = np.array([math.prod(math.factorial(a) for a in alpha)
                               for alpha in self.indices])

    def mul_plan(self):
        if self._mul_plan is None:
            ia, ib, ic = [], [], []
            for ka, alpha in enumerate(self.indices):
                for kb, beta in enumerate(self.indices):
                    if sum(alpha) + sum(beta) > self.order:
                        continue
                    gamma = tuple(a + b for a, b in zip(alpha, beta))
                    ia.append(ka)
                    ib.append(kb)
                    ic.append(self.index_of[gamma])
            self._mul_plan = (np.array(ia), np.array(ib), np.array(ic))
        return self._mul_plan

    def diff_plan(self, i: int):
        """Gather plan mapping coefficients of f to coefficients of df/du_i."""
        if i not in self._diff_plans:
            target = jet_space(self.n, self.order - 1)
            src = np.empty(target.size, dtype=int)
            mult = np.empty(target.size)
            for k, beta in enumerate(target.indices):
                alpha = list(beta)
                alpha[i] += 1
                src[k] = self.index_of[tuple(alpha)]
                mult[k] = beta[i] + 1
            self._diff_plans[i] = (src, mult)
        return self._diff_plans[i]


@lru_cache(maxsize=None)
def jet_space(n: int, order: int) -> JetSpace:
    return JetSpace(n, order)


def _as_batch(values, width: int | None = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1:
        raise ValueError("batch values must be scalars or 1-D arrays")
    if width is not None and arr.shape[0] == 1 and width > 1:
        arr = np.broadcast_to(arr, (width,)).copy()
    return arr


class Jet:
    """Taylor coefficients of a function at a (batch of) point(s).

    ``coeffs`` has shape ``(space.size, m)`` where ``m`` is the batch width.
    Entry 0 is the plain value; entry for multi-index alpha holds
    ``d^alpha f / alpha!``.
    """

    __slots__ = ("space", "coeffs")

    def __init__(self, space: JetSpace, coeffs: np.ndarray):
        self.space = space
        self.coeffs = coeffs

    # -- construction -------------------------------------------------------

    @staticmethod
    def constant(space: JetSpace, values, width: int | None = None) -> "Jet":
        vals = _as_batch(values, width)
        coeffs = np.zeros((space.size, vals.shape[0]))
        coeffs[0] = vals
        return Jet(space, coeffs)

    @staticmethod
    def variable(space: JetSpace, i: int, values) -> "Jet":
        vals = _as_batch(values)
        coeffs = np.zeros((space.size, vals.shape[0]))
        coeffs[0] = vals
        if space.order >= 1:
            unit = tuple(1 if j == i else 0 for j in range(space.n))
            coeffs[space.index_of[unit]] = 1.0
        return Jet(space, coeffs)

    # -- inspection ---------------------------------------------------------

    @property
    def order(self) -> int:
        return self.space.order

    @property
    def width(self) -> int:
        return self.coeffs.shape[1]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    def partial(self, alpha: Iterable[int]) -> np.ndarray:
        """Derivative d^alpha f (not the Taylor coefficient)."""
        alpha = tuple(alpha)
        k = self.space.index_of[alpha]
        return self.coeffs[k] * self.space._fact[k]

    def gradient(self) -> np.ndarray:
        """First partials, shape (n, m)."""
        out = np.empty((self.space.n, self.width))
        for i in range(self.space.n):
            unit = tuple(1 if j == i else 0 for j in range(self.space.n))
            out[i] = self.coeffs[self.space.index_of[unit]]
        return out

    def truncate(self, order: int) -> "Jet":
        if order == self.order:
            return self
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        target = jet_space(self.space.n, order)
        return Jet(target, self.coeffs[: target.size])

    def d(self, i: int) -> "Jet":
        """Partial derivative jet, one order lower."""
        if self.order < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        src, mult = self.space.diff_plan(i)
        target = jet_space(self.space.n, self.order - 1)
        return Jet(target, self.coeffs[src] * mult[:, None])

    def copy(self) -> "Jet":
        return Jet(self.space, self.coeffs.copy())

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "Jet | None":
        if isinstance(other, Jet):
            return other
        if isinstance(other, (int, float, np.floating, np.integer, np.ndarray)):
            return Jet.constant(self.space, other, width=None)
        return None

    @staticmethod
    def _align(a: "Jet", b: "Jet") -> tuple["Jet", "Jet"]:
        if a.space.n != b.space.n:
            raise ValueError("jets over different variable counts")
        k = min(a.order, b.order)
        return a.truncate(k), b.truncate(k)

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        a, b = Jet._align(self, other)
        return Jet(a.space, a.coeffs + b.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.coeffs)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        a, b = Jet._align(self, other)
        return Jet(a.space, a.coeffs - b.coeffs)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other.__sub__(self)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet(self.space, self.coeffs * float(other))
        if isinstance(other, np.ndarray):
            return Jet(self.space, self.coeffs * _as_batch(other)[None, :])
        if not isinstance(other, Jet):
            return NotImplemented
        a, b = Jet._align(self, other)
        k = a.order
        if k == 0:
            return Jet(a.space, a.coeffs * b.coeffs)
        if k == 1:
            # c = a0*b + a*b0 - a0*b0*e0
            out = a.coeffs[0] * b.coeffs + a.coeffs * b.coeffs[0]
            out[0] -= a.coeffs[0] * b.coeffs[0]
            return Jet(a.space, out)
        ia, ib, ic = a.space.mul_plan()
        m = max(a.width, b.width)
        out = np.zeros((a.space.size, m))
        np.add.at(out, ic, a.coeffs[ia] * b.coeffs[ib])
        return Jet(a.space, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet(self.space, self.coeffs / float(other))
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other * self.reciprocal()

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) or (
            isinstance(p, float) and p.is_integer()
        ):
            return self._int_pow(int(p))
        raise TypeError("jet ** non-integer: use jet_pow for general exponents")

    def _int_pow(self, p: int) -> "Jet":
        if p == 0:
            return Jet.constant(self.space, np.ones(self.width))
        if p < 0:
            return self._int_pow(-p).reciprocal()
        result = self
        for _ in range(p - 1):
            result = result * self
        return result

    def reciprocal(self) -> "Jet":
        b0 = self.value
        if np.any(b0 == 0.0):
            raise JetDomainError("division", int(np.flatnonzero(b0 == 0.0)[0]))
        k = self.order
        series = np.empty((k + 1, self.width))
        series[0] = 1.0 / b0
        for m in range(1, k + 1):
            series[m] = -series[m - 1] / b0
        return _compose(self, series)

    # -- comparisons on values are intentionally not defined ---------------

    def __repr__(self):
        return f"Jet(n={self.space.n}, order={self.order}, value={self.value!r})"


def _compose(u: Jet, series: np.ndarray) -> Jet:
    """Evaluate sum_m series[m] * (u - u0)^m, truncated to u's order.

    ``series[m]`` must hold the m-th Taylor coefficient (derivative over m!)
    of the outer function at the point u0 = u.value.
    """
    k = u.order
    uhat = u.copy()
    uhat.coeffs[0] = 0.0
    result = Jet.constant(u.space, series[k], width=u.width)
    for m in range(k - 1, -1, -1):
        result = result * uhat
        result.coeffs[0] += series[m]
    return result


# ---------------------------------------------------------------------------
# elementary functions


def _check_positive(fn: str, u0: np.ndarray) -> None:
    bad = ~(u0 > 0.0)
    if np.any(bad):
        raise JetDomainError(fn, int(np.flatnonzero(bad)[0]))


def _cyclic_series(u0: np.ndarray, k: int, f0, f1, f2, f3) -> np.ndarray:
    cycle = (f0(u0), f1(u0), f2(u0), f3(u0))
    out = np.empty((k + 1, u0.shape[0]))
    for m in range(k + 1):
        out[m] = cycle[m % 4] / math.factorial(m)
    return out


def jet_sin(u: Jet) -> Jet:
    u0 = u.value
    series = _cyclic_series(u0, u.order, np.sin, np.cos,
                            lambda x: -np.sin(x), lambda x: -np.cos(x))
    return _compose(u, series)


def jet_cos(u: Jet) -> Jet:
    u0 = u.value
    series = _cyclic_series(u0, u.order, np.cos, lambda x: -np.sin(x),
                            lambda x: -np.cos(x), np.sin)
    return _compose(u, series)


def jet_exp(u: Jet) -> Jet:
    e = np.exp(u.value)
    series = np.stack([e / math.factorial(m) for m in range(u.order + 1)])
    return _compose(u, series)


def jet_log(u: Jet) -> Jet:
    u0 = u.value
    _check_positive("log", u0)
    k = u.order
    series = np.empty((k + 1, u.width))
    series[0] = np.log(u0)
    for m in range(1, k + 1):
        series[m] = ((-1.0) ** (m - 1)) / (m * u0**m)
    return _compose(u, series)


def jet_sqrt(u: Jet) -> Jet:
    u0 = u.value
    _check_positive("sqrt", u0)
    k = u.order
    s = np.sqrt(u0)
    series = np.empty((k + 1, u.width))
    c = 1.0  # binom(1/2, m)
    series[0] = s
    for m in range(1, k + 1):
        c *= (0.5 - (m - 1)) / m
        series[m] = s * c / u0**m
    return _compose(u, series)


def jet_sinh(u: Jet) -> Jet:
    u0 = u.value
    series = _cyclic_series(u0, u.order, np.sinh, np.cosh, np.sinh, np.cosh)
    return _compose(u, series)


def jet_cosh(u: Jet) -> Jet:
    u0 = u.value
    series = _cyclic_series(u0, u.order, np.cosh, np.sinh, np.cosh, np.sinh)
    return _compose(u, series)


def jet_tan(u: Jet) -> Jet:
    return jet_sin(u) / jet_cos(u)


def jet_tanh(u: Jet) -> Jet:
    return jet_sinh(u) / jet_cosh(u)


def jet_atan(u: Jet) -> Jet:
    # f' = 1/(1+u^2); Taylor of f' at u0 from (1+u0^2) b_m + 2 u0 b_{m-1} + b_{m-2} = [m=0]
    u0 = u.value
    k = u.order
    q = 1.0 + u0**2
    series = np.empty((k + 1, u.width))
    series[0] = np.arctan(u0)
    if k >= 1:
        b_prev2 = np.zeros(u.width)
        b_prev1 = np.zeros(u.width)
        for m in range(0, k):
            rhs = (1.0 if m == 0 else 0.0) - 2.0 * u0 * b_prev1 - b_prev2
            b = rhs / q
            series[m + 1] = b / (m + 1)
            b_prev2, b_prev1 = b_prev1, b
    return _compose(u, series)


def jet_pow(base: Jet, expo: Jet) -> Jet:
    """General power.  Integer constant exponents work for any base; other
    exponents require a strictly positive base."""
    nonconst = np.any(expo.coeffs[1:] != 0.0) if expo.order >= 1 else False
    p0 = expo.value
    if not nonconst and np.all(p0 == p0[0]) and float(p0[0]).is_integer():
        return base._int_pow(int(p0[0]))
    _check_positive("power with non-integer exponent", base.value)
    return jet_exp(expo * jet_log(base))


_FUNCTION_TABLE = {
    "sin": jet_sin,
    "cos": jet_cos,
    "tan": jet_tan,
    "exp": jet_exp,
    "log": jet_log,
    "sqrt": jet_sqrt,
    "sinh": jet_sinh,
    "cosh": jet_cosh,
    "tanh": jet_tanh,
    "atan": jet_atan,
}


# ---------------------------------------------------------------------------
# expression evaluation


def _eval_node(node: Expr, variables: list[Jet], space: JetSpace, width: int) -> Jet:
    if isinstance(node, Num):
        return Jet.constant(space, node.value, width)
    if isinstance(node, Const):
        return Jet.constant(space, CONSTANTS[node.name], width)
    if isinstance(node, Var):
        return variables[node.index]
    if isinstance(node, Neg):
        return -_eval_node(node.arg, variables, space, width)
    if isinstance(node, Call):
        return _FUNCTION_TABLE[node.fn](_eval_node(node.arg, variables, space, width))
    if isinstance(node, BinOp):
        left = _eval_node(node.left, variables, space, width)
        right = _eval_node(node.right, variables, space, width)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            return left / right
        if node.op == "^":
            return jet_pow(left, right)
    raise TypeError(f"not an Expr node: {node!r}")


def eval_jet_batch(e: Expr, points: np.ndarray, order: int) -> Jet:
    """Evaluate ``e`` with all partials through ``order`` at many points.

    Parameters
    ----------
    e : Expr
    points : array of shape (n, m) — m points in n variables
    order : truncation order (>= 0)
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ValueError("points must have shape (n, m)")
    n, m = points.shape
    space = jet_space(n, order)
    variables = [Jet.variable(space, i, points[i]) for i in range(n)]
    try:
        return _eval_node(e, variables, space, m)
    except JetDomainError as err:
        raise EvalDomainError(err.fn, points[:, err.bad_index]) from err


def eval_jet(e: Expr, point, order: int) -> Jet:
    """Single-point version of :func:`eval_jet_batch` (batch width 1)."""
    pt = np.atleast_1d(np.asarray(point, dtype=float))
    return eval_jet_batch(e, pt[:, None], order)
