"""Shared plumbing: chart-indexed fields, maps, sampling, jet linear algebra.

Everything downstream manipulates two kinds of objects over a coordinate
chart:

* symmetric 2-tensor fields (metrics, second fundamental forms, duals),
* maps from the chart into an ambient vector space (lightcone maps, normals).

Both come in an expression-backed flavor (closed forms parsed from strings)
and a callable-backed flavor (derived quantities assembled with jet
arithmetic, e.g. a dual metric or a numerically-computed unit normal).  The
common interface is a single method ``jets(points, order)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Protocol, Sequence

import numpy as np

from .expr import Expr, parse_expr
from .jets import Jet, eval_jet_batch, jet_sqrt

Box = Sequence[tuple[float, float]]


# ---------------------------------------------------------------------------
# sampling


_LATTICE_ALPHAS = np.sqrt(np.array([2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0]))


def lattice(box: Box, count: int, margin: float = 0.05) -> np.ndarray:
    """Deterministic shifted rank-1 lattice inside the box, shape (n, count).

    Points are pulled ``margin`` (fraction of each side) away from the
    boundary so that derivative checks stay interior.
    """
    n = len(box)
    if n > len(_LATTICE_ALPHAS):
        raise ValueError("lattice supports at most 8 dimensions")
    j = np.arange(count)[:, None]
    frac = (0.5 / count + j * (_LATTICE_ALPHAS[None, :n] % 1.0)) % 1.0
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    pts = lo + (margin + frac * (1.0 - 2.0 * margin)) * (hi - lo)
    return pts.T


def default_sample_count(n: int) -> int:
    return 10 ** min(n, 3)


def as_points(points) -> np.ndarray:
    """Coerce a point, list of points, or (n, m) array to shape (n, m)."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError("points must be 1-D (single point) or (n, m)")
    return arr


# ---------------------------------------------------------------------------
# field / map protocols


class TensorField(Protocol):
    """Symmetric 2-tensor field over an n-dimensional chart."""

    n: int

    def jets(self, points: np.ndarray, order: int) -> list[list[Jet]]: ...


class ChartMap(Protocol):
    """Map from an n-dimensional chart into R^ambient."""

    n: int
    ambient: int

    def jets(self, points: np.ndarray, order: int) -> list[Jet]: ...


@dataclass
class ExprTensorField:
    """Tensor field whose components are closed-form expressions."""

    n: int
    comps: list[list[Expr]]

    @classmethod
    def from_strings(cls, rows: Sequence[Sequence[str]], n: int) -> "ExprTensorField":
        comps = [[parse_expr(src, n) for src in row] for row in rows]
        return cls(n, comps)

    def jets(self, points: np.ndarray, order: int) -> list[list[Jet]]:
        points = as_points(points)
        cache: dict[int, Jet] = {}
        out: list[list[Jet | None]] = [[None] * self.n for _ in range(self.n)]
        for i in range(self.n):
            for j in range(self.n):
                node = self.comps[i][j]
                key = id(node)
                if key not in cache:
                    cache[key] = eval_jet_batch(node, points, order)
                out[i][j] = cache[key]
        return out  # type: ignore[return-value]


@dataclass
class CallableTensorField:
    """Tensor field produced by a jet program (derived quantity)."""

    n: int
    fn: Callable[[np.ndarray, int], list[list[Jet]]]
    name: str = "derived"

    def jets(self, points: np.ndarray, order: int) -> list[list[Jet]]:
        return self.fn(as_points(points), order)


@dataclass
class ExprMap:
    """Chart map with closed-form component expressions."""

    n: int
    comps: list[Expr]

    @classmethod
    def from_strings(cls, srcs: Sequence[str], n: int) -> "ExprMap":
        return cls(n, [parse_expr(s, n) for s in srcs])

    @property
    def ambient(self) -> int:
        return len(self.comps)

    def jets(self, points: np.ndarray, order: int) -> list[Jet]:
        points = as_points(points)
        return [eval_jet_batch(c, points, order) for c in self.comps]


@dataclass
class CallableMap:
    """Chart map produced by a jet program."""

    n: int
    ambient: int
    fn: Callable[[np.ndarray, int], list[Jet]]
    name: str = "derived"

    def jets(self, points: np.ndarray, order: int) -> list[Jet]:
        return self.fn(as_points(points), order)


def map_values(m: ChartMap, points: np.ndarray) -> np.ndarray:
    """Component values, shape (ambient, npts)."""
    return np.stack([j.value for j in m.jets(points, 0)])


def map_jacobian(m: ChartMap, points: np.ndarray) -> np.ndarray:
    """d(map), shape (ambient, n, npts)."""
    jets = m.jets(points, 1)
    return np.stack([j.gradient() for j in jets])


def tensor_values(f: TensorField, points: np.ndarray) -> np.ndarray:
    """Component values, shape (n, n, npts)."""
    jets = f.jets(points, 0)
    n = f.n
    m = jets[0][0].width
    out = np.empty((n, n, m))
    for i in range(n):
        for j in range(n):
            out[i, j] = jets[i][j].value
    return out


# ---------------------------------------------------------------------------
# jet linear algebra (small matrices of jets)


def jet_zero_like(j: Jet) -> Jet:
    return Jet(j.space, np.zeros_like(j.coeffs))


def invert_spd_jets(g: list[list[Jet]]) -> list[list[Jet]]:
    """Inverse of a symmetric positive-definite jet matrix.

    Gauss-Jordan without pivoting: valid because all leading minors of an
    SPD matrix are positive, which the callers guarantee by checking
    positive-definiteness of the value part first.
    """
    n = len(g)
    a = [[g[i][j].copy() for j in range(n)] for i in range(n)]
    width = g[0][0].width
    inv = [
        [Jet.constant(g[0][0].space, 1.0 if i == j else 0.0, width) for j in range(n)]
        for i in range(n)
    ]
    for col in range(n):
        piv = a[col][col].reciprocal()
        for j in range(n):
            a[col][j] = a[col][j] * piv
            inv[col][j] = inv[col][j] * piv
        for row in range(n):
            if row == col:
                continue
            factor = a[row][col]
            if np.all(factor.coeffs == 0.0):
                continue
            for j in range(n):
                a[row][j] = a[row][j] - factor * a[col][j]
                inv[row][j] = inv[row][j] - factor * inv[col][j]
    return inv


def invert_sym2_jets(b: list[list[Jet]]) -> list[list[Jet]]:
    """Explicit inverse of a symmetric 2x2 jet matrix (possibly indefinite)."""
    det = b[0][0] * b[1][1] - b[0][1] * b[0][1]
    idet = det.reciprocal()
    return [
        [b[1][1] * idet, -(b[0][1] * idet)],
        [-(b[0][1] * idet), b[0][0] * idet],
    ]


# ---------------------------------------------------------------------------
# Minkowski pairing on jet vectors


def mink_dot_jets(a: Sequence[Jet], b: Sequence[Jet]) -> Jet:
    """Lorentzian pairing -a0*b0 + sum_i ai*bi of two jet vectors."""
    out = -(a[0] * b[0])
    for i in range(1, len(a)):
        out = out + a[i] * b[i]
    return out


def mink_cross_jets(rows: list[list[Jet]]) -> list[Jet]:
    """Minkowski-orthogonal complement of d-1 jet vectors in d dimensions.

    Computes the Euclidean generalized cross product via a division-free
    subset recursion over maximal minors, then raises the index with the
    signature (-,+,...,+).  The result pairs to zero with every row.
    """
    k = len(rows)  # number of vectors
    d = k + 1  # ambient dimension
    if any(len(r) != d for r in rows):
        raise ValueError("need d-1 vectors of length d")
    space = rows[0][0].space
    width = rows[0][0].width
    # minors[frozenset of columns] = determinant of rows[0:len(S)] on columns S
    minors: dict[frozenset, Jet] = {frozenset(): Jet.constant(space, 1.0, width)}
    for r in range(k):
        new: dict[frozenset, Jet] = {}
        for cols in combinations(range(d), r + 1):
            acc: Jet | None = None
            for pos, c in enumerate(cols):
                sub = frozenset(cols) - {c}
                term = rows[r][c] * minors[frozenset(sub)]
                # expansion along the last row: sign (-1)^{(r) + pos}
                if (r + pos) % 2 == 1:
                    term = -term
                acc = term if acc is None else acc + term
            new[frozenset(cols)] = acc  # type: ignore[assignment]
        minors = new
    all_cols = frozenset(range(d))
    out: list[Jet] = []
    for a in range(d):
        minor = minors[all_cols - {a}]
        if a % 2 == 1:
            minor = -minor
        out.append(minor)
    out[0] = -out[0]  # raise the timelike index
    return out


def normalize_spacelike_jets(v: list[Jet]) -> list[Jet]:
    """Scale a jet vector to unit (spacelike) Minkowski norm."""
    norm = jet_sqrt(mink_dot_jets(v, v))
    inv = norm.reciprocal()
    return [c * inv for c in v]

