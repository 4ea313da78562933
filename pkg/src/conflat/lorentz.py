"""Linear algebra of Lorentz-Minkowski space and the four-model dictionary.

Vectors live in R^{n+2} with the pairing <v,w> = -v0 w0 + sum_i vi wi.
The four models are the upper/lower lightcones Q+/Q-, the hyperboloid
H^{n+1} (<z,z> = -1, z0 > 0) and the de Sitter space S^{n+1}_1 (<z,z> = 1).
Conversions use the fixed 1/sqrt(2) normalizations

    f = (x - y)/sqrt(2),   nu = (x + y)/sqrt(2),
    x = (f + nu)/sqrt(2),  y = -(f - nu)/sqrt(2),

which are exact linear inverses of each other.  No alternative conventions
are configurable: every cross-check in the package depends on these
constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import ChartMap, as_points, map_jacobian
from .jets import Jet

SQRT2 = math.sqrt(2.0)

MODEL_TOL = 1e-10
PAIRING_TOL = 1e-8
RANK_TOL = 1e-8

Q_PLUS = "Q+"
Q_MINUS = "Q-"
HYPERBOLIC = "H"
DE_SITTER = "S1"


class ModelError(ValueError):
    pass


def mink_inner(v, w) -> np.ndarray | float:
    """Lorentzian pairing with signature (-, +, ..., +) on the leading axis."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape[0] != w.shape[0]:
        raise ValueError("dimension mismatch")
    out = -v[0] * w[0] + np.sum(v[1:] * w[1:], axis=0)
    return out


def model_residual(z, model: str) -> np.ndarray | float:
    """Distance from the defining constraints of the tagged model."""
    z = np.asarray(z, dtype=float)
    q = mink_inner(z, z)
    if model == Q_PLUS:
        return np.maximum(np.abs(q), np.where(z[0] > 0.0, 0.0, np.inf))
    if model == Q_MINUS:
        return np.maximum(np.abs(q), np.where(z[0] < 0.0, 0.0, np.inf))
    if model == HYPERBOLIC:
        return np.maximum(np.abs(q + 1.0), np.where(z[0] > 0.0, 0.0, np.inf))
    if model == DE_SITTER:
        return np.abs(q - 1.0)
    raise ModelError(f"unknown model tag {model!r}")


@dataclass
class ModelPoint:
    """A Minkowski vector together with the model it is asserted to lie in."""

    vec: np.ndarray
    model: str

    def __post_init__(self):
        self.vec = np.asarray(self.vec, dtype=float)

    def validate(self, tol: float = MODEL_TOL) -> None:
        res = float(np.max(model_residual(self.vec, self.model)))
        if not res <= tol:
            raise ModelError(
                f"vector does not satisfy the {self.model} constraints "
                f"(residual {res:.3e})"
            )


def _vec(z) -> np.ndarray:
    return z.vec if isinstance(z, ModelPoint) else np.asarray(z, dtype=float)


def to_hyperbolic_pair(x, y, tol: float = PAIRING_TOL):
    """(x, y) in Q+ x Q- with <x,y> = 1  ->  (f, nu) in H^{n+1} x S^{n+1}_1."""
    xv, yv = _vec(x), _vec(y)
    pairing = mink_inner(xv, yv)
    if np.any(np.abs(pairing - 1.0) > tol):
        raise ModelError(
            f"pairing violated: <x,y> = {np.max(np.abs(pairing)):.6g} != 1"
        )
    f = (xv - yv) / SQRT2
    nu = (xv + yv) / SQRT2
    return f, nu


def to_lightcone_pair(f, nu, tol: float = PAIRING_TOL):
    """(f, nu) with <f,f> = -1, <nu,nu> = 1, <f,nu> = 0  ->  (x, y)."""
    fv, nv = _vec(f), _vec(nu)
    ortho = mink_inner(fv, nv)
    if np.any(np.abs(ortho) > tol):
        raise ModelError(f"orthogonality violated: <f,nu> = {np.max(np.abs(ortho)):.6g}")
    if np.any(np.abs(mink_inner(fv, fv) + 1.0) > tol) or np.any(fv[0] <= 0.0):
        raise ModelError("f does not have the causal character of a hyperboloid point")
    if np.any(np.abs(mink_inner(nv, nv) - 1.0) > tol):
        raise ModelError("nu is not a unit spacelike vector")
    x = (fv + nv) / SQRT2
    y = -(fv - nv) / SQRT2
    return x, y


def project_to_sphere_section(z) -> np.ndarray:
    """Canonical projection of a lightcone vector to the z0 = +-1 section.

    Scales z to first component +1 on Q+ and -1 on Q-; idempotent on its
    image and removes any conformal factor.
    """
    zv = _vec(z)
    z0 = zv[0]
    if np.any(np.abs(z0) < 1e-300):
        raise ModelError("vanishing time component; no sphere-section projection")
    return zv / np.abs(z0)


# ---------------------------------------------------------------------------
# Gauss maps and numerical rank


def gauss_map_jets(m: ChartMap, points: np.ndarray, order: int) -> list[Jet]:
    """Jets of the sphere-section projection of a lightcone chart map."""
    jets = m.jets(points, order)
    z0 = jets[0].value
    if np.any(np.abs(z0) < 1e-300):
        raise ModelError("vanishing time component; Gauss map undefined")
    sign = np.where(z0 >= 0.0, 1.0, -1.0)
    denom = jets[0] * sign
    inv = denom.reciprocal()
    return [c * inv for c in jets]


def gauss_map_values(m: ChartMap, points) -> np.ndarray:
    points = as_points(points)
    return np.stack([j.value for j in gauss_map_jets(m, points, 0)])


def gauss_map_jacobian(m: ChartMap, points) -> np.ndarray:
    """Differential of the Gauss map, shape (ambient, n, npts)."""
    points = as_points(points)
    jets = gauss_map_jets(m, points, 1)
    return np.stack([j.gradient() for j in jets])


def numerical_rank(jac: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Rank of each differential in a (rows, cols, npts) stack.

    A singular value counts while it exceeds tol times the largest one.
    """
    mats = np.moveaxis(jac, -1, 0)
    s = np.linalg.svd(mats, compute_uv=False)
    top = s[:, :1]
    safe = np.where(top > 0.0, top, 1.0)
    return np.sum(s > tol * safe, axis=1)


def rank_from_gram(gram: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Rank through a Gram matrix (eigenvalues are squared singular values).

    Gram entries computed from pairings carry absolute rounding noise near
    machine epsilon, so the squared threshold is floored at 1e-13 relative to
    the top eigenvalue.
    """
    mats = np.moveaxis(gram, -1, 0)
    lam = np.clip(np.linalg.eigvalsh(mats), 0.0, None)
    top = lam[:, -1:]
    safe = np.where(top > 0.0, top, 1.0)
    return np.sum(lam > max(tol**2, 1e-13) * safe, axis=1)


def immersion_rank(m: ChartMap, point, tol: float = RANK_TOL) -> int:
    """Numerical rank of the differential of a chart map at one point."""
    jac = map_jacobian(m, as_points(point))
    return int(numerical_rank(jac, tol)[0])


def gauss_map_rank(m: ChartMap, points, tol: float = RANK_TOL) -> np.ndarray:
    return numerical_rank(gauss_map_jacobian(m, points), tol)
