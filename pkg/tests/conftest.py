import math
from functools import lru_cache

import numpy as np
import pytest

from conflat.expr import parse_expr
from conflat.jets import eval_jet

# 7-point stencils: exact on degree-6 polynomials, so truncation is O(h^{7-k})
_OFFSETS = np.arange(-3, 4)


@lru_cache(maxsize=None)
def _stencil(order: int) -> np.ndarray:
    V = np.array(
        [[k**m / math.factorial(m) for k in _OFFSETS] for m in range(len(_OFFSETS))]
    )
    e = np.zeros(len(_OFFSETS))
    e[order] = 1.0
    return np.linalg.solve(V, e)


def _fd_once(f, point, alpha, h):
    point = np.asarray(point, dtype=float)

    def recurse(i: int, pt: np.ndarray, w: float) -> float:
        if i == len(alpha):
            return w * f(pt)
        if alpha[i] == 0:
            return recurse(i + 1, pt, w)
        weights = _stencil(alpha[i])
        acc = 0.0
        for k, wk in zip(_OFFSETS, weights):
            if wk == 0.0:
                continue
            shifted = pt.copy()
            shifted[i] += k * h
            acc += recurse(i + 1, shifted, w * wk / h ** alpha[i])
        return acc

    return recurse(0, point, 1.0)


def fd_partial(f, point, alpha, h=None):
    """Tensor-product central finite-difference estimate of d^alpha f.

    Independent oracle for the jet engine: never reuses jet arithmetic.
    The stencils are 4th-order accurate; third derivatives additionally get
    one Richardson step to keep the oracle's own truncation error below the
    comparison tolerance.
    """
    total = sum(alpha)
    if total <= 2:
        return _fd_once(f, point, alpha, 1e-4 if h is None else h)
    h = 8e-3 if h is None else h
    coarse = _fd_once(f, point, alpha, h)
    fine = _fd_once(f, point, alpha, h / 2.0)
    return (16.0 * fine - coarse) / 15.0


def expr_value_fn(src: str, dim: int):
    node = parse_expr(src, dim)

    def f(pt):
        return float(eval_jet(node, pt, 0).value[0])

    return f


def random_expr_source(rng: np.random.Generator, dim: int, depth: int) -> str:
    """Domain-safe random expression over u1..u<dim>."""
    if depth == 0 or rng.random() < 0.25:
        kind = rng.integers(0, 3)
        if kind == 0:
            return f"u{rng.integers(1, dim + 1)}"
        if kind == 1:
            return f"{rng.uniform(0.2, 2.0):.4f}"
        return "pi" if rng.random() < 0.5 else "e"
    sub = lambda: random_expr_source(rng, dim, depth - 1)  # noqa: E731
    choice = rng.integers(0, 10)
    if choice == 0:
        return f"({sub()}) + ({sub()})"
    if choice == 1:
        return f"({sub()}) - ({sub()})"
    if choice == 2:
        return f"sin({sub()}) * cos({sub()})"
    if choice == 3:
        return f"({sub()}) / (2.5 + cos({sub()}))"
    if choice == 4:
        return f"exp(0.4 * sin({sub()}))"
    if choice == 5:
        return f"log(1.5 + 0.5 * sin({sub()}))"
    if choice == 6:
        return f"sqrt(2.0 + cos({sub()}))"
    if choice == 7:
        return f"tanh({sub()})"
    if choice == 8:
        return f"atan({sub()})"
    return f"(1.2 + 0.5 * sin({sub()}))^2"


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
