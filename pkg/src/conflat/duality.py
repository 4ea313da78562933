"""The intrinsic dual of a conformally flat metric and its verification.

For a metric g with Schouten tensor A (n >= 3) the dual metric is

    gv_ij = sum_{a,b} A_ia g^{ab} A_bj,

the operator form is hat_A^i_j = sum_a g^{ia} A_aj, and a point is parabolic
when hat_A degenerates there.  The dual is again conformally flat away from
parabolic points, has the same Schouten tensor, reciprocal Schouten spectrum,
and the construction is an involution.  ``verify_duality`` checks all four
statements numerically on a sample set.

Dual-metric components are produced as derived jet quantities (the Schouten
tensor and the inverse metric composed with jet arithmetic), so curvature
*of the dual* is computed to the same jet exactness as curvature of the
input — no symbolic closed form and no resampling error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .curvature import (
    CertificateReport,
    CurvatureJets,
    JET_IDENTITY_TOL,
    conformal_flatness_certificate,
    spd_mask,
)
from .fields import CallableTensorField, TensorField, as_points
from .jets import Jet

PARABOLIC_DET_FACTOR = 1e-10


class NotConformallyFlatError(ValueError):
    """Input metric failed the conformal-flatness certificate."""

    def __init__(self, report: CertificateReport):
        super().__init__(
            f"metric is not conformally flat: {report.mode} residual "
            f"{report.max_residual:.3e} at {report.worst_point}"
        )
        self.report = report


def _schouten_and_metric(metric: TensorField, points: np.ndarray):
    cj = CurvatureJets(metric, points, order=0)
    n = metric.n
    m = points.shape[1]
    g = np.empty((n, n, m))
    ginv = np.empty((n, n, m))
    A = np.empty((n, n, m))
    for i in range(n):
        for j in range(n):
            g[i, j] = cj.g[i][j].value
            ginv[i, j] = cj.ginv[i][j].value
            A[i, j] = cj.schouten[i][j].value
    return g, ginv, A


def hat_a_batch(metric: TensorField, points) -> np.ndarray:
    """Operator hat_A^i_j = g^{ia} A_aj at each sample, shape (n, n, m)."""
    if metric.n < 3:
        raise ValueError("the duality operator requires n >= 3")
    points = as_points(points)
    _, ginv, A = _schouten_and_metric(metric, points)
    return np.einsum("ian,ajn->ijn", ginv, A)


def hat_A(metric: TensorField, point) -> np.ndarray:
    """Â at one point, shape (n, n); g-self-adjoint by construction."""
    return hat_a_batch(metric, point)[..., 0]


def dual_metric_field(metric: TensorField) -> CallableTensorField:
    """The dual metric gv = A g^{-1} A as a derived (jet-backed) tensor field."""
    if metric.n < 3:
        raise ValueError("the dual metric requires n >= 3")
    n = metric.n

    def fn(points: np.ndarray, order: int) -> list[list[Jet]]:
        cj = CurvatureJets(metric, points, order=order)
        A, ginv = cj.schouten, cj.ginv
        tmp = [[None] * n for _ in range(n)]
        for i in range(n):
            for b in range(n):
                acc = None
                for a in range(n):
                    term = A[i][a] * ginv[a][b]
                    acc = term if acc is None else acc + term
                tmp[i][b] = acc
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                acc = None
                for b in range(n):
                    term = tmp[i][b] * A[b][j]
                    acc = term if acc is None else acc + term
                out[i][j] = acc
                out[j][i] = acc
        return out

    return CallableTensorField(n, fn, name="dual-metric")


def is_parabolic(
    det_hat: np.ndarray, eig_hat: np.ndarray, factor: float = PARABOLIC_DET_FACTOR
) -> np.ndarray:
    """Scale-invariant degeneracy flag: |det Â| <= factor * max|eig Â|^n.

    Uses <= so the zero operator (e.g. a flat metric) is flagged.  Growing
    the factor never converts a parabolic flag back to regular.
    """
    n = eig_hat.shape[0]
    scale = np.max(np.abs(eig_hat), axis=0) ** n
    return np.abs(det_hat) <= factor * scale


@dataclass
class DualityReport:
    """Pointwise duality data."""

    point: tuple[float, ...]
    hat_a: np.ndarray  # (n, n) operator matrix
    dual: np.ndarray  # (n, n) dual metric gv
    det_hat: float
    eigenvalues: np.ndarray  # spectrum of Â with respect to g, ascending
    parabolic: bool

    @property
    def regular(self) -> bool:
        return not self.parabolic

    def degenerate_directions(self, rel_tol: float = 1e-8) -> int:
        """Number of near-null eigendirections of Â (by eigenvalue magnitude)."""
        scale = float(np.max(np.abs(self.eigenvalues)))
        if scale == 0.0:
            return len(self.eigenvalues)
        return int(np.sum(np.abs(self.eigenvalues) <= rel_tol * scale))


def dualize_batch(metric: TensorField, points):
    """Dual metric and operator data at each sample."""
    points = as_points(points)
    g, ginv, A = _schouten_and_metric(metric, points)
    hat = np.einsum("ian,ajn->ijn", ginv, A)
    dual = np.einsum("ian,abn,bjn->ijn", A, ginv, A)
    m = points.shape[1]
    det_hat = np.empty(m)
    eigs = np.empty((metric.n, m))
    for k in range(m):
        det_hat[k] = np.linalg.det(hat[..., k])
        eigs[:, k] = scipy.linalg.eigh(A[..., k], g[..., k], eigvals_only=True)
    parab = is_parabolic(det_hat, eigs)
    return g, dual, hat, det_hat, eigs, parab


def dual_metric(metric: TensorField, point) -> DualityReport:
    """Dual metric at one point, with the parabolic flag."""
    points = as_points(point)
    _, dual, hat, det_hat, eigs, parab = dualize_batch(metric, points)
    return DualityReport(
        point=tuple(float(x) for x in points[:, 0]),
        hat_a=hat[..., 0],
        dual=dual[..., 0],
        det_hat=float(det_hat[0]),
        eigenvalues=eigs[:, 0],
        parabolic=bool(parab[0]),
    )


@dataclass
class CheckResult:
    passed: bool
    residual: float
    worst_point: tuple[float, ...] | None
    tol: float

    def __bool__(self) -> bool:
        return self.passed


@dataclass
class DualityVerdict:
    checks: dict[str, CheckResult]
    n_samples: int
    n_parabolic: int
    parabolic_points: list[tuple[float, ...]] = field(default_factory=list)
    # diagnostic only (no pass/fail semantics): how the dual behaves at the
    # excluded samples — (point, |det Â|, largest dual-metric entry)
    parabolic_dual_behavior: list[tuple[tuple[float, ...], float, float]] = field(
        default_factory=list
    )
    input_certificate: CertificateReport | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())


def _check(name, res: np.ndarray, pts: np.ndarray, tol: float) -> CheckResult:
    k = int(np.argmax(res))
    return CheckResult(
        passed=bool(res[k] <= tol),
        residual=float(res[k]),
        worst_point=tuple(float(x) for x in pts[:, k]),
        tol=tol,
    )


def verify_duality(
    metric: TensorField,
    samples,
    tol: float = 1e-7,
    certificate_samples=None,
    certificate_tol: float = JET_IDENTITY_TOL,
) -> DualityVerdict:
    """Verify the duality identities at the metric level on a sample set.

    Checks, at all non-parabolic samples:

    a. ``schouten_invariance`` — the Schouten tensor of the dual metric
       (computed by treating the dual as a metric, via jet composition)
       equals the Schouten tensor of the input;
    b. ``eigen_inversion`` — the spectrum of Â with respect to the dual is
       the elementwise reciprocal of the spectrum with respect to g;
    c. ``involution`` — A gv^{-1} A returns the original metric;
    d. ``dual_conformal_flatness`` — the dual passes the conformal-flatness
       certificate.

    Parabolic samples are excluded and reported.  Raises
    NotConformallyFlatError when the input itself fails its certificate.
    """
    samples = as_points(samples)
    cert = conformal_flatness_certificate(
        metric, certificate_samples if certificate_samples is not None else samples,
        tol=certificate_tol,
    )
    if not cert.certified:
        raise NotConformallyFlatError(cert)

    g, dual, hat, det_hat, eigs, parab = dualize_batch(metric, samples)
    _, ginv, A = _schouten_and_metric(metric, samples)
    regular = ~parab
    # the dual must additionally be positive definite to be treated as a metric
    regular &= spd_mask(dual)
    if not np.any(regular):
        raise ValueError("all samples are parabolic; nothing to verify")
    pts = samples[:, regular]
    m = pts.shape[1]

    gv = dual[..., regular]
    gr = g[..., regular]
    Ar = A[..., regular]
    eig_g = eigs[:, regular]

    # (a) Schouten tensor of the dual, via the jet-backed dual field
    dual_field = dual_metric_field(metric)
    cj = CurvatureJets(dual_field, pts, order=0)
    res_a = np.zeros(m)
    for i in range(metric.n):
        for j in range(metric.n):
            res_a = np.maximum(res_a, np.abs(cj.schouten[i][j].value - Ar[i, j]))

    # (b) reciprocal spectra
    eig_dual = np.empty_like(eig_g)
    for k in range(m):
        eig_dual[:, k] = scipy.linalg.eigh(
            Ar[..., k], gv[..., k], eigvals_only=True
        )
    recip = np.sort(1.0 / eig_g, axis=0)
    res_b = np.max(
        np.abs(np.sort(eig_dual, axis=0) - recip) / np.maximum(np.abs(recip), 1e-30),
        axis=0,
    )

    # (c) involution at the metric level
    gv_inv = np.moveaxis(np.linalg.inv(np.moveaxis(gv, -1, 0)), 0, -1)
    back = np.einsum("ian,abn,bjn->ijn", Ar, gv_inv, Ar)
    res_c = np.max(np.abs(back - gr), axis=(0, 1))

    # (d) the dual is itself conformally flat
    cert_dual = conformal_flatness_certificate(dual_field, pts, tol=tol)
    res_d = CheckResult(
        cert_dual.certified, cert_dual.max_residual, cert_dual.worst_point, tol
    )

    checks = {
        "schouten_invariance": _check("a", res_a, pts, tol),
        "eigen_inversion": _check("b", res_b, pts, tol),
        "involution": _check("c", res_c, pts, tol),
        "dual_conformal_flatness": res_d,
    }
    n_parab = int(np.sum(~regular))
    excluded = np.flatnonzero(~regular)[:16]
    return DualityVerdict(
        checks=checks,
        n_samples=samples.shape[1],
        n_parabolic=n_parab,
        parabolic_points=[
            tuple(float(x) for x in samples[:, k]) for k in excluded
        ],
        parabolic_dual_behavior=[
            (
                tuple(float(x) for x in samples[:, k]),
                float(np.abs(det_hat[k])),
                float(np.max(np.abs(dual[..., k]))),
            )
            for k in excluded
        ],
        input_certificate=cert,
    )
