"""The n = 2 theory: holomorphic seeds, trace condition, frame realization.

A holomorphic function phi on a plane/disc chart produces the traceless
Codazzi tensor B = 2 Re(phi dz^2); adding a base tensor with
Trace_I(-II_K) = K gives a candidate second fundamental form.  When the
trace condition K + Trace_I(II) = 0 and the Codazzi equation hold, the pair
(g, II) integrates to a surface in the 3-lightcone; ``realize_in_q3`` does
the integration with a classical 4th-order scheme and reports raw residuals
(no re-orthonormalization, so constraint drift is a genuine error signal).

``flat_duality_check`` verifies the two-dimensional duality: for flat g and
traceless Codazzi II, the dual metric II g^{-1} II is flat on its regular
set and II stays traceless Codazzi with respect to it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvature import (
    ChartMetric,
    CurvatureJets,
    codazzi_residual,
    gaussian_curvature,
    spd_mask,
)
from .expr import Expr, parse_expr
from .fields import (
    Box,
    CallableTensorField,
    TensorField,
    as_points,
    invert_spd_jets,
    lattice,
    tensor_values,
)
from .jets import Jet, eval_jet_batch, jet_log, jet_space

CR_TOL = 1e-8
CR_PRECONDITION = 1e-6
INTEGRABILITY_TOL = 1e-6


class CauchyRiemannError(ValueError):
    pass


class IntegrabilityError(ValueError):
    pass


class RealizationDriftError(RuntimeError):
    """Constraint drift exceeded the declared bound (step too large)."""

    def __init__(self, drift: float, bound: float, result: "RealizationResult"):
        super().__init__(
            f"constraint drift {drift:.3e} exceeds the bound {bound:.3e}; "
            "reduce the step"
        )
        self.result = result


@dataclass
class HoloSeed:
    """Real/imaginary expression pair for phi(z), z = u1 + i u2."""

    re: Expr
    im: Expr
    box: Box

    @classmethod
    def from_strings(cls, re_src: str, im_src: str, box: Box | None = None) -> "HoloSeed":
        box = box or [(-0.8, 0.8)] * 2
        return cls(parse_expr(re_src, 2), parse_expr(im_src, 2), box)

    def values(self, points) -> np.ndarray:
        points = as_points(points)
        return np.stack(
            [
                eval_jet_batch(self.re, points, 0).value,
                eval_jet_batch(self.im, points, 0).value,
            ]
        )

    def cr_residual(self, points) -> np.ndarray:
        """|d1 Re - d2 Im| + |d2 Re + d1 Im| per sample."""
        points = as_points(points)
        gre = eval_jet_batch(self.re, points, 1).gradient()
        gim = eval_jet_batch(self.im, points, 1).gradient()
        return np.abs(gre[0] - gim[1]) + np.abs(gre[1] + gim[0])

    def default_samples(self, count: int = 100) -> np.ndarray:
        return lattice(self.box, count)


def holomorphic_form_field(seed: HoloSeed) -> CallableTensorField:
    """B = phi dz^2 + conjugate as a tensor field.

    With phi = a + ib and dz^2 = du^2 - dv^2 + 2i du dv this is the matrix
    [[2a, -2b], [-2b, -2a]]: traceless for any conformal chart metric, and
    Codazzi exactly when phi is holomorphic.
    """

    def fn(points: np.ndarray, order: int) -> list[list[Jet]]:
        a = eval_jet_batch(seed.re, points, order)
        b = eval_jet_batch(seed.im, points, order)
        b11 = a * 2.0
        b12 = b * (-2.0)
        b22 = a * (-2.0)
        return [[b11, b12], [b12, b22]]

    return CallableTensorField(2, fn, name="holomorphic-quadratic-form")


def codazzi_from_holomorphic(
    seed: HoloSeed, metric: ChartMetric, points
) -> np.ndarray:
    """B values at the samples, shape (2, 2, m); checks the CR residual."""
    points = as_points(points)
    cr = seed.cr_residual(points)
    if np.max(cr) > CR_PRECONDITION:
        raise CauchyRiemannError(
            f"Cauchy-Riemann residual {np.max(cr):.3e} > {CR_PRECONDITION}"
        )
    return tensor_values(holomorphic_form_field(seed), points)


# ---------------------------------------------------------------------------
# base second forms and the trace condition


def _conformal_factor_jets(metric: TensorField, points: np.ndarray, order: int) -> Jet:
    """log-conformal factor of a conformal-to-flat chart metric.

    Requires g = e^{2 sigma} delta; verified on the values.
    """
    g = metric.jets(points, order)
    off = np.max(np.abs(g[0][1].value))
    diag = np.max(np.abs(g[0][0].value - g[1][1].value))
    if off > 1e-12 or diag > 1e-12:
        raise ValueError("metric is not conformal to the flat chart metric")
    return jet_log(g[0][0]) * 0.5


def spherical_base_form(metric: ChartMetric) -> CallableTensorField:
    """Codazzi base tensor with Trace_I(-II_K) = K for a conformal chart metric.

    Writes e^{2 sigma} delta = e^{2 sigma_hat} g_round over the stereographic
    chart and takes the second fundamental form of the isometric embedding
    e^{sigma_hat} (1, p), which is Codazzi for every conformal factor and
    reduces to -(K/2) g when K is constant.
    """
    round_metric = ChartMetric.from_strings(
        [["4 / (1 + u1^2 + u2^2)^2", "0"], ["0", "4 / (1 + u1^2 + u2^2)^2"]],
        metric.box,
    )

    def fn(points: np.ndarray, order: int) -> list[list[Jet]]:
        sp = jet_space(2, order + 2)
        uvars = [Jet.variable(sp, i, points[i]) for i in range(2)]
        s2 = uvars[0] * uvars[0] + uvars[1] * uvars[1]
        sigma = _conformal_factor_jets(metric, points, order + 2)
        sigma_hat = sigma + jet_log((1.0 + s2) * 0.5)
        rj = CurvatureJets(round_metric, points, order=order)
        dsig = [sigma_hat.d(i) for i in range(2)]
        # |d sigma_hat|^2 in the round metric
        lam = (1.0 + s2) * (1.0 + s2) * 0.25
        grad2 = lam * (dsig[0] * dsig[0] + dsig[1] * dsig[1])
        out = [[None, None], [None, None]]
        for i in range(2):
            for j in range(i, 2):
                hess = dsig[i].d(j)
                for k in range(2):
                    hess = hess - rj.gamma[k][i][j] * dsig[k]
                val = (
                    rj.g[i][j] * ((1.0 - grad2) * 0.5)
                    + dsig[i] * dsig[j]
                    - hess
                )
                out[i][j] = -val
                out[j][i] = -val
        return out

    return CallableTensorField(2, fn, name="spherical-base-form")


def constant_base_form(metric: ChartMetric, k0: float) -> CallableTensorField:
    """The centered base -(K/2) g; Codazzi only for constant curvature K = k0."""

    def fn(points: np.ndarray, order: int) -> list[list[Jet]]:
        g = metric.jets(points, order)
        return [[g[i][j] * (-k0 / 2.0) for j in range(2)] for i in range(2)]

    return CallableTensorField(2, fn, name="centered-base-form")


def _sum_fields(a: CallableTensorField, b: CallableTensorField) -> CallableTensorField:
    def fn(points: np.ndarray, order: int) -> list[list[Jet]]:
        ja = a.jets(points, order)
        jb = b.jets(points, order)
        return [[ja[i][j] + jb[i][j] for j in range(2)] for i in range(2)]

    return CallableTensorField(2, fn, name=f"{a.name}+{b.name}")


def trace_condition_residual(
    metric: TensorField, ii_field: TensorField, points
) -> np.ndarray:
    """|K + Trace_I(II)| per sample."""
    points = as_points(points)
    K = gaussian_curvature(metric, points)
    cj = CurvatureJets(metric, points, order=0)
    ii = tensor_values(ii_field, points)
    ginv = np.empty_like(ii)
    for i in range(2):
        for j in range(2):
            ginv[i, j] = cj.ginv[i][j].value
    return np.abs(K + np.einsum("ijm,ijm->m", ginv, ii))


@dataclass
class SeedFormReport:
    field: CallableTensorField
    base_kind: str  # "zero", "centered", "spherical"
    cr_residual: float
    trace_residual: float
    codazzi_residual: float


def second_form_from_seed(
    seed: HoloSeed,
    metric: ChartMetric,
    ii_base: CallableTensorField | None = None,
    probe_count: int = 60,
) -> SeedFormReport:
    """II = B + II_K with K + Trace_I(II) = 0.

    The default base is -(K/2) g when the Gaussian curvature is constant on
    the chart (zero for flat charts); otherwise the spherical embedding base
    is used, which is Codazzi for every conformal factor.  A supplied
    ``ii_base`` overrides the default and is validated against the trace
    condition.
    """
    probe = lattice(metric.box, probe_count)
    cr = float(np.max(seed.cr_residual(probe)))
    if cr > CR_PRECONDITION:
        raise CauchyRiemannError(f"Cauchy-Riemann residual {cr:.3e}")
    K = gaussian_curvature(metric, probe)
    k0 = float(np.mean(K))
    if ii_base is not None:
        base = ii_base
        kind = "supplied"
    elif np.max(np.abs(K - k0)) <= 1e-10:
        if abs(k0) <= 1e-12:
            base = None
            kind = "zero"
        else:
            base = constant_base_form(metric, k0)
            kind = "centered"
    else:
        base = spherical_base_form(metric)
        kind = "spherical"
    bfield = holomorphic_form_field(seed)
    field = bfield if base is None else _sum_fields(bfield, base)
    field.name = f"II[{kind}]"
    trace_res = float(np.max(trace_condition_residual(metric, field, probe)))
    if trace_res > 1e-8:
        raise IntegrabilityError(
            f"trace condition violated by the base tensor: {trace_res:.3e}"
        )
    cod = float(np.max(codazzi_residual(metric, field, probe)))
    return SeedFormReport(
        field=field,
        base_kind=kind,
        cr_residual=cr,
        trace_residual=trace_res,
        codazzi_residual=cod,
    )


# ---------------------------------------------------------------------------
# realization in the 3-lightcone


@dataclass
class RealizationResult:
    """Integrated frame data on a rectangular grid.

    ``x``, ``y`` have shape (N1+1, N2+1, 4); ``xi`` has shape
    (N1+1, N2+1, 2, 4).  ``residuals`` holds the four residual families:
    constraint drift, path dependence, I-reconstruction, II-reconstruction
    (plus the III-reconstruction diagnostic).
    """

    h: tuple[float, float]
    axes: tuple[np.ndarray, np.ndarray]
    x: np.ndarray
    y: np.ndarray
    xi: np.ndarray
    residuals: dict[str, float]


def _christoffel_values(metric: TensorField, points: np.ndarray):
    """(g, ginv, gamma) value arrays without the curvature part."""
    from .curvature import christoffel_jets

    g = metric.jets(points, 1)
    ginv = invert_spd_jets(g)
    gamma_j = christoffel_jets(g, ginv)
    n = metric.n
    m = points.shape[1]
    gv = np.empty((n, n, m))
    giv = np.empty((n, n, m))
    gam = np.empty((n, n, n, m))
    for i in range(n):
        for j in range(n):
            gv[i, j] = g[i][j].value
            giv[i, j] = ginv[i][j].value
            for k in range(n):
                gam[k, i, j] = gamma_j[k][i][j].value
    return gv, giv, gam


class _FrameSystem:
    """Right-hand side of the first-order frame system.

    State rows per grid point: [x, y, xi_1, xi_2] in L^4.  The coefficients
    come from <d_i d_j x, y> = II_ij, <d_i d_j x, x> = -g_ij and
    d_i y = -II_ik g^{kj} xi_j.
    """

    def __init__(self, metric: TensorField, ii_field: TensorField):
        self.metric = metric
        self.ii = ii_field

    def coefficients(self, points: np.ndarray):
        g, ginv, gamma = _christoffel_values(self.metric, points)
        ii = tensor_values(self.ii, points)
        return g, ginv, gamma, ii

    def rhs(self, coeffs, state: np.ndarray, axis: int) -> np.ndarray:
        g, ginv, gamma, ii = coeffs
        x = state[:, 0, :]
        y = state[:, 1, :]
        xi = state[:, 2:4, :]
        out = np.empty_like(state)
        out[:, 0, :] = xi[:, axis, :]
        shape_rows = np.einsum("km,klm,mla->ma", ii[axis], ginv, xi)
        out[:, 1, :] = -shape_rows
        for j in range(2):
            out[:, 2 + j, :] = (
                np.einsum("km,mka->ma", gamma[:, axis, j, :], xi)
                + ii[axis, j][:, None] * x
                - g[axis, j][:, None] * y
            )
        return out

    def rk4_step(self, points: np.ndarray, state: np.ndarray, axis: int, h: float):
        """One classical step of size h along the chart axis, batched."""
        mid = points.copy()
        mid[axis] += h / 2.0
        end = points.copy()
        end[axis] += h
        c0 = self.coefficients(points)
        cm = self.coefficients(mid)
        c1 = self.coefficients(end)
        k1 = self.rhs(c0, state, axis)
        k2 = self.rhs(cm, state + (h / 2.0) * k1, axis)
        k3 = self.rhs(cm, state + (h / 2.0) * k2, axis)
        k4 = self.rhs(c1, state + h * k3, axis)
        return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _initial_state(metric: TensorField, base_point: np.ndarray) -> np.ndarray:
    """Base-node frame: x0, y0 on the standard null pair, xi from Cholesky."""
    x0 = np.array([1.0, 1.0, 0.0, 0.0])
    y0 = np.array([-0.5, 0.5, 0.0, 0.0])
    spacelike = np.array([[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]])
    g0 = tensor_values(metric, base_point)[..., 0]
    L = np.linalg.cholesky(g0)
    xi0 = L @ spacelike
    state = np.empty((1, 4, 4))
    state[0, 0] = x0
    state[0, 1] = y0
    state[0, 2] = xi0[0]
    state[0, 3] = xi0[1]
    return state


def _fd4(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """4th-order central first derivative along a grid axis (interior only)."""
    v = np.moveaxis(values, axis, 0)
    out = (-v[4:] + 8.0 * v[3:-1] - 8.0 * v[1:-3] + v[:-4]) / (12.0 * h)
    return np.moveaxis(out, 0, axis)


def realize_in_q3(
    metric: ChartMetric,
    ii_field: TensorField,
    h: float,
    box: Box | None = None,
    drift_bound: float = 1e-6,
    check_integrability: bool = True,
) -> RealizationResult:
    """Integrate (g, II) to a pair (x, y) in the 3-lightcone over a grid.

    Sweeps the u1-axis spine first, then all u2-fibers in lockstep; the
    frame is never re-orthonormalized, so the reported constraint drift
    measures genuine violation of the defining pair conditions.  Raises
    RealizationDriftError (with the result attached) when the drift exceeds
    ``drift_bound``, and IntegrabilityError when the trace or Codazzi
    precondition fails on the grid.
    """
    if metric.n != 2:
        raise ValueError("realization is the n = 2 operation")
    box = box or metric.box
    (a1, b1), (a2, b2) = box
    n1 = max(1, round((b1 - a1) / h))
    n2 = max(1, round((b2 - a2) / h))
    h1 = (b1 - a1) / n1
    h2 = (b2 - a2) / n2
    u1 = a1 + h1 * np.arange(n1 + 1)
    u2 = a2 + h2 * np.arange(n2 + 1)
    grid_pts = np.vstack([np.repeat(u1, n2 + 1), np.tile(u2, n1 + 1)])

    if check_integrability:
        # the integrability conditions, checked on the grid nodes themselves
        probe = grid_pts if grid_pts.shape[1] <= 4096 else lattice(box, 400)
        tr = np.max(trace_condition_residual(metric, ii_field, probe))
        cod = np.max(codazzi_residual(metric, ii_field, probe))
        if tr > INTEGRABILITY_TOL or cod > INTEGRABILITY_TOL:
            raise IntegrabilityError(
                f"integrability preconditions failed: trace {tr:.3e}, "
                f"Codazzi {cod:.3e} (tol {INTEGRABILITY_TOL})"
            )

    system = _FrameSystem(metric, ii_field)
    X = np.empty((n1 + 1, n2 + 1, 4))
    Y = np.empty((n1 + 1, n2 + 1, 4))
    XI = np.empty((n1 + 1, n2 + 1, 2, 4))

    def record(i_slice, j, state):
        X[i_slice, j] = state[:, 0, :]
        Y[i_slice, j] = state[:, 1, :]
        XI[i_slice, j] = state[:, 2:4, :]

    # spine along u1 at u2 = a2
    state = _initial_state(metric, np.array([[a1], [a2]]))
    spine_states = [state[0].copy()]
    for i in range(n1):
        pts = np.array([[u1[i]], [a2]])
        state = system.rk4_step(pts, state, 0, h1)
        spine_states.append(state[0].copy())
    column = np.stack(spine_states)  # (n1+1, 4, 4)
    record(slice(None), 0, column)

    # fibers along u2, all columns at once
    for j in range(n2):
        pts = np.vstack([u1, np.full(n1 + 1, u2[j])])
        column = system.rk4_step(pts, column, 1, h2)
        record(slice(None), j + 1, column)

    # ----- residual families -----
    def pair_all(a, b):
        return -a[..., 0] * b[..., 0] + np.sum(a[..., 1:] * b[..., 1:], axis=-1)

    drift_null_x = float(np.max(np.abs(pair_all(X, X))))
    drift_null_y = float(np.max(np.abs(pair_all(Y, Y))))
    drift_pairing = float(np.max(np.abs(pair_all(X, Y) - 1.0)))
    orth_x = max(
        float(np.max(np.abs(pair_all(XI[:, :, i], X)))) for i in range(2)
    )
    orth_y = max(
        float(np.max(np.abs(pair_all(XI[:, :, i], Y)))) for i in range(2)
    )
    drift = max(drift_null_x, drift_null_y, drift_pairing)

    gvals = tensor_values(metric, grid_pts).reshape(2, 2, n1 + 1, n2 + 1)
    iivals = tensor_values(ii_field, grid_pts).reshape(2, 2, n1 + 1, n2 + 1)
    i_rec = 0.0
    for i in range(2):
        for j in range(2):
            got = pair_all(XI[:, :, i], XI[:, :, j])
            i_rec = max(i_rec, float(np.max(np.abs(got - gvals[i, j]))))

    # II reconstruction from 4th-order differences of y (interior nodes)
    ii_rec = 0.0
    iii_rec = 0.0
    if n1 >= 4 and n2 >= 4:
        dy1 = _fd4(Y, 0, h1)[:, 2:-2]  # (n1-3, n2-3, 4)
        dy2 = _fd4(Y, 1, h2)[2:-2, :]
        dys = (dy1, dy2)
        xi_in = XI[2:-2, 2:-2]
        ii_in = iivals[:, :, 2:-2, 2:-2]
        g_in = gvals[:, :, 2:-2, 2:-2]
        ginv_in = np.moveaxis(
            np.linalg.inv(np.moveaxis(g_in, (0, 1), (-2, -1))), (-2, -1), (0, 1)
        )
        ghat = np.einsum("ik...,kl...,jl...->ij...", ii_in, ginv_in, ii_in)
        for j in range(2):
            for i in range(2):
                got = -pair_all(xi_in[:, :, i], dys[j])
                ii_rec = max(ii_rec, float(np.max(np.abs(got - ii_in[i, j]))))
            for jj in range(2):
                got = pair_all(dys[j], dys[jj])
                iii_rec = max(iii_rec, float(np.max(np.abs(got - ghat[j, jj]))))

    # path dependence: far corner reached both ways
    state_a = _initial_state(metric, np.array([[a1], [a2]]))
    state_b = state_a.copy()
    for i in range(n1):
        state_a = system.rk4_step(np.array([[u1[i]], [a2]]), state_a, 0, h1)
    for j in range(n2):
        state_a = system.rk4_step(np.array([[b1], [u2[j]]]), state_a, 1, h2)
    for j in range(n2):
        state_b = system.rk4_step(np.array([[a1], [u2[j]]]), state_b, 1, h2)
    for i in range(n1):
        state_b = system.rk4_step(np.array([[u1[i]], [b2]]), state_b, 0, h1)
    path_dep = float(np.max(np.abs(state_a - state_b)))

    residuals = {
        "constraint_drift": drift,
        "null_x": drift_null_x,
        "null_y": drift_null_y,
        "pairing": drift_pairing,
        "orthogonality_x": orth_x,
        "orthogonality_y": orth_y,
        "path_dependence": path_dep,
        "first_form_reconstruction": i_rec,
        "second_form_reconstruction": ii_rec,
        "third_form_reconstruction": iii_rec,
    }
    result = RealizationResult(
        h=(h1, h2), axes=(u1, u2), x=X, y=Y, xi=XI, residuals=residuals
    )
    if drift > drift_bound:
        raise RealizationDriftError(drift, drift_bound, result)
    return result


# ---------------------------------------------------------------------------
# flat duality


def dual_of_second_form(metric: TensorField, ii_field: TensorField) -> CallableTensorField:
    """gv = II g^{-1} II as a derived tensor field (the n = 2 dual)."""

    def fn(points: np.ndarray, order: int) -> list[list[Jet]]:
        g = metric.jets(points, order)
        ginv = invert_spd_jets(g)
        ii = ii_field.jets(points, order)
        tmp = [[None] * 2 for _ in range(2)]
        for i in range(2):
            for b in range(2):
                acc = None
                for a in range(2):
                    term = ii[i][a] * ginv[a][b]
                    acc = term if acc is None else acc + term
                tmp[i][b] = acc
        out = [[None] * 2 for _ in range(2)]
        for i in range(2):
            for j in range(i, 2):
                acc = None
                for b in range(2):
                    term = tmp[i][b] * ii[b][j]
                    acc = term if acc is None else acc + term
                out[i][j] = acc
                out[j][i] = acc
        return out

    return CallableTensorField(2, fn, name="second-form-dual")


@dataclass
class FlatDualityReport:
    flat_input_residual: float
    input_trace_residual: float
    input_codazzi_residual: float
    dual_gauss_curvature: float
    dual_trace_residual: float
    dual_codazzi_residual: float
    n_regular: int
    n_degenerate: int
    degenerate_points: list[tuple[float, float]]

    def passed(self, tol: float = 1e-6) -> bool:
        return (
            self.dual_gauss_curvature <= tol
            and self.dual_trace_residual <= tol
            and self.dual_codazzi_residual <= tol
        )


def flat_duality_check(
    metric: ChartMetric, ii_field: TensorField, samples=None
) -> FlatDualityReport:
    """Flat g + traceless Codazzi II: the dual II g^{-1} II is flat again.

    At samples where the dual is nondegenerate, checks that its Gaussian
    curvature vanishes and that II is traceless Codazzi with respect to it.
    Degenerate samples are reported; raises if every sample is degenerate.
    """
    if samples is None:
        samples = lattice(metric.box, 100)
    samples = as_points(samples)

    K = gaussian_curvature(metric, samples)
    flat_res = float(np.max(np.abs(K)))
    if flat_res > 1e-8:
        raise ValueError(f"input metric is not flat: |K| reaches {flat_res:.3e}")
    cj = CurvatureJets(metric, samples, order=0)
    ii = tensor_values(ii_field, samples)
    ginv = np.empty_like(ii)
    for i in range(2):
        for j in range(2):
            ginv[i, j] = cj.ginv[i][j].value
    in_trace = float(np.max(np.abs(np.einsum("ijm,ijm->m", ginv, ii))))
    in_cod = float(np.max(codazzi_residual(metric, ii_field, samples)))

    dual_field = dual_of_second_form(metric, ii_field)
    dual_vals = tensor_values(dual_field, samples)
    regular = spd_mask(dual_vals)
    degenerate = [
        (float(samples[0, k]), float(samples[1, k]))
        for k in np.flatnonzero(~regular)[:16]
    ]
    if not np.any(regular):
        raise ValueError("dual metric is degenerate at every sample")
    pts = samples[:, regular]

    k_dual = gaussian_curvature(dual_field, pts)
    dual_k = float(np.max(np.abs(k_dual)))
    dj = dual_field.jets(pts, 0)
    dvals = np.empty((2, 2, pts.shape[1]))
    for i in range(2):
        for j in range(2):
            dvals[i, j] = dj[i][j].value
    dinv = np.moveaxis(np.linalg.inv(np.moveaxis(dvals, -1, 0)), 0, -1)
    ii_reg = ii[..., regular]
    dual_trace = float(np.max(np.abs(np.einsum("ijm,ijm->m", dinv, ii_reg))))
    dual_cod = float(np.max(codazzi_residual(dual_field, ii_field, pts)))

    return FlatDualityReport(
        flat_input_residual=flat_res,
        input_trace_residual=in_trace,
        input_codazzi_residual=in_cod,
        dual_gauss_curvature=dual_k,
        dual_trace_residual=dual_trace,
        dual_codazzi_residual=dual_cod,
        n_regular=int(np.sum(regular)),
        n_degenerate=int(np.sum(~regular)),
        degenerate_points=degenerate,
    )
