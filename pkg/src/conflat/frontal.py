"""Spacelike pairs of lightcone maps: forms, Gauss equation, gallery.

A pair (x, y) of chart maps into the upper/lower lightcones is *spacelike*
when <x,x> = <y,y> = 0, <x,y> = 1 and the 1-forms <dx,y>, <dy,x> vanish.
The fundamental forms are

    I = <dx,dx>,    II = -<dx,dy> (symmetrized),    III = <dy,dy>,

matching the frontal-bundle sign convention used throughout (for the unit
sphere section, II = -g/2 and the intrinsic Schouten tensor equals -II).

The gallery provides the named example pairs; ``conformal_change``
implements the rescaled sphere embedding together with both computational
routes to its dual; ``gcf_from_frontal`` extracts the intrinsic data and
cross-checks it against the duality machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .curvature import (
    ChartMetric,
    CurvatureJets,
    check_positive_definite,
    codazzi_residual,
    spd_mask,
)
from .duality import is_parabolic
from .expr import parse_expr, to_source
from .fields import (
    Box,
    CallableMap,
    CallableTensorField,
    ChartMap,
    ExprMap,
    as_points,
    invert_sym2_jets,
    lattice,
    map_jacobian,
    map_values,
    mink_cross_jets,
    mink_dot_jets,
    normalize_spacelike_jets,
)
from .jets import Jet, eval_jet_batch, jet_cos, jet_sin, jet_space, jet_sqrt
from .lorentz import (
    SQRT2,
    mink_inner,
    numerical_rank,
    rank_from_gram,
    RANK_TOL,
)

PAIR_TOL = 1e-8
FORM_PRECONDITION_TOL = 1e-6


class InvalidPairError(ValueError):
    pass


@dataclass
class FrontalPair:
    """Paired chart maps into Q^{n+1}_+ and Q^{n+1}_-."""

    name: str
    n: int
    box: Box
    xmap: ChartMap
    ymap: ChartMap
    params: dict = dc_field(default_factory=dict)

    def default_samples(self, count: int = 50) -> np.ndarray:
        return lattice(self.box, count)

    def exchanged(self) -> "FrontalPair":
        """Swap the roles of x and y (the defining conditions are symmetric)."""
        return FrontalPair(
            name=f"{self.name}-exchanged",
            n=self.n,
            box=self.box,
            xmap=self.ymap,
            ymap=self.xmap,
            params=dict(self.params),
        )


def pair_residuals(pair: FrontalPair, points) -> np.ndarray:
    """The five defining residuals per sample, shape (5, m).

    Rows: |<x,x>|, |<y,y>|, |<x,y> - 1|, max_i |<d_i x, y>|, max_i |<d_i y, x>|.
    """
    points = as_points(points)
    xj = pair.xmap.jets(points, 1)
    yj = pair.ymap.jets(points, 1)
    xv = np.stack([j.value for j in xj])
    yv = np.stack([j.value for j in yj])
    dx = np.stack([j.gradient() for j in xj])  # (amb, n, m)
    dy = np.stack([j.gradient() for j in yj])
    eta = np.ones(xv.shape[0])
    eta[0] = -1.0
    out = np.empty((5, points.shape[1]))
    out[0] = np.abs(np.einsum("am,am,a->m", xv, xv, eta))
    out[1] = np.abs(np.einsum("am,am,a->m", yv, yv, eta))
    out[2] = np.abs(np.einsum("am,am,a->m", xv, yv, eta) - 1.0)
    out[3] = np.max(np.abs(np.einsum("aim,am,a->im", dx, yv, eta)), axis=0)
    out[4] = np.max(np.abs(np.einsum("aim,am,a->im", dy, xv, eta)), axis=0)
    return out


@dataclass
class FormTriple:
    """First, second and third fundamental forms at a point."""

    point: tuple[float, ...]
    first: np.ndarray
    second: np.ndarray
    third: np.ndarray
    compat_asym: float  # raw asymmetry of <dx,dy>; vanishes for valid pairs


def _forms_arrays(pair: FrontalPair, points: np.ndarray):
    xj = pair.xmap.jets(points, 1)
    yj = pair.ymap.jets(points, 1)
    dx = np.stack([j.gradient() for j in xj])
    dy = np.stack([j.gradient() for j in yj])
    eta = np.ones(dx.shape[0])
    eta[0] = -1.0
    first = np.einsum("aim,ajm,a->ijm", dx, dx, eta)
    cross = np.einsum("aim,ajm,a->ijm", dx, dy, eta)
    third = np.einsum("aim,ajm,a->ijm", dy, dy, eta)
    asym = np.max(np.abs(cross - np.swapaxes(cross, 0, 1)), axis=(0, 1))
    second = -0.5 * (cross + np.swapaxes(cross, 0, 1))
    return first, second, third, asym


def fundamental_forms_batch(pair: FrontalPair, points):
    points = as_points(points)
    res = pair_residuals(pair, points)
    if np.max(res) > FORM_PRECONDITION_TOL:
        raise InvalidPairError(
            f"pair residuals reach {np.max(res):.3e} > {FORM_PRECONDITION_TOL}"
        )
    return _forms_arrays(pair, points)


def fundamental_forms(pair: FrontalPair, point) -> FormTriple:
    points = as_points(point)
    first, second, third, asym = fundamental_forms_batch(pair, points)
    return FormTriple(
        point=tuple(float(v) for v in points[:, 0]),
        first=first[..., 0],
        second=second[..., 0],
        third=third[..., 0],
        compat_asym=float(asym[0]),
    )


# -- forms as derived tensor fields (for intrinsic curvature of I or III) ----


def _pairing_field(
    pair: FrontalPair, left: str, right: str, sign: float, name: str
) -> CallableTensorField:
    def fn(points: np.ndarray, order: int) -> list[list[Jet]]:
        maps = {"x": pair.xmap, "y": pair.ymap}
        lj = maps[left].jets(points, order + 1)
        rj = lj if right == left else maps[right].jets(points, order + 1)
        n = pair.n
        dl = [[c.d(i) for c in lj] for i in range(n)]
        dr = dl if right == left else [[c.d(i) for c in rj] for i in range(n)]
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                if right == left and j < i:
                    out[i][j] = out[j][i]
                    continue
                val = mink_dot_jets(dl[i], dr[j])
                if right != left:
                    # symmetrize the mixed pairing
                    val = (val + mink_dot_jets(dl[j], dr[i])) * 0.5
                out[i][j] = val * sign
        return out

    return CallableTensorField(pair.n, fn, name=name)


def first_form_field(pair: FrontalPair) -> CallableTensorField:
    return _pairing_field(pair, "x", "x", 1.0, f"{pair.name}:I")


def second_form_field(pair: FrontalPair) -> CallableTensorField:
    return _pairing_field(pair, "x", "y", -1.0, f"{pair.name}:II")


def third_form_field(pair: FrontalPair) -> CallableTensorField:
    return _pairing_field(pair, "y", "y", 1.0, f"{pair.name}:III")


# ---------------------------------------------------------------------------
# front vs frontal


@dataclass
class FrontTestResult:
    verdict: str  # "front" or "frontal_only"
    stacked_rank: int
    x_rank: int
    y_rank: int
    n: int

    @property
    def is_front(self) -> bool:
        return self.verdict == "front"


def front_test(pair: FrontalPair, point, tol: float = RANK_TOL) -> FrontTestResult:
    """Front iff the stacked differential (dx; dy) has full rank n."""
    points = as_points(point)
    jx = map_jacobian(pair.xmap, points)[..., 0]
    jy = map_jacobian(pair.ymap, points)[..., 0]
    stacked = np.vstack([jx, jy])
    rank = int(numerical_rank(stacked[..., None], tol)[0])
    return FrontTestResult(
        verdict="front" if rank == pair.n else "frontal_only",
        stacked_rank=rank,
        x_rank=int(numerical_rank(jx[..., None], tol)[0]),
        y_rank=int(numerical_rank(jy[..., None], tol)[0]),
        n=pair.n,
    )


# ---------------------------------------------------------------------------
# Gauss equation for the induced bundle connection


def gauss_equation_residual(pair: FrontalPair, points) -> np.ndarray:
    """Residual of the curvature identity of the induced connection.

    The bundle E = {x, y}^perp carries the connection D = (flat ambient
    derivative, projected to E).  An orthonormal frame of E is built by
    Gram-Schmidt from the projected coordinate vectors d_i x, everything as
    order-2 jets, so the curvature of D is exact to rounding.  Returns, per
    sample, the maximum over frame indices of

        |<R^D(d_i, d_j) e_k, e_l>  -  (<dx_j,e_k><dy_i,e_l> - <dx_j,e_l><dy_i,e_k>
                                       + <dy_j,e_k><dx_i,e_l> - <dy_j,e_l><dx_i,e_k>)|.
    """
    points = as_points(points)
    n = pair.n
    first, _, _, _ = _forms_arrays(pair, points)
    check_positive_definite(first, points)

    # order 3 so the frame (one projection below the maps) still carries
    # two derivatives for the curvature of D
    xj = pair.xmap.jets(points, 3)
    yj = pair.ymap.jets(points, 3)
    amb = len(xj)

    gram = [
        [mink_dot_jets(xj, xj), mink_dot_jets(xj, yj)],
        [mink_dot_jets(xj, yj), mink_dot_jets(yj, yj)],
    ]
    gram_inv = invert_sym2_jets(gram)

    def project(v: list[Jet]) -> list[Jet]:
        px = mink_dot_jets(v, xj)
        py = mink_dot_jets(v, yj)
        cx = gram_inv[0][0] * px + gram_inv[0][1] * py
        cy = gram_inv[1][0] * px + gram_inv[1][1] * py
        return [v[a] - (cx * xj[a] + cy * yj[a]) for a in range(amb)]

    # orthonormal frame from projected coordinate vectors
    frame: list[list[Jet]] = []
    for i in range(n):
        v = project([c.d(i) for c in xj])
        for e in frame:
            coef = mink_dot_jets(v, e)
            v = [v[a] - coef * e[a] for a in range(amb)]
        norm_inv = jet_sqrt(mink_dot_jets(v, v)).reciprocal()
        frame.append([c * norm_inv for c in v])

    dxv = np.stack([c.gradient() for c in xj])  # order-1 gradients: (amb, n, m)
    dyv = np.stack([c.gradient() for c in yj])
    ev = np.stack([np.stack([c.value for c in e]) for e in frame])  # (n, amb, m)
    eta = np.ones(amb)
    eta[0] = -1.0
    xi_e = np.einsum("aim,kam,a->ikm", dxv, ev, eta)  # <d_i x, e_k>
    ze_e = np.einsum("aim,kam,a->ikm", dyv, ev, eta)

    # D_i e_k as jets (order 1), then curvature values
    de = [[project([c.d(i) for c in frame[k]]) for k in range(n)] for i in range(n)]
    m = points.shape[1]
    res = np.zeros(m)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(n):
                # R^D(d_i,d_j) e_k = D_i D_j e_k - D_j D_i e_k
                dd_ij = project([c.d(i) for c in de[j][k]])
                dd_ji = project([c.d(j) for c in de[i][k]])
                curv = np.stack([a.value - b.value for a, b in zip(dd_ij, dd_ji)])
                for l in range(n):
                    lhs = np.einsum("am,am,a->m", curv, ev[l], eta)
                    rhs = (
                        xi_e[j, k] * ze_e[i, l]
                        - xi_e[j, l] * ze_e[i, k]
                        + ze_e[j, k] * xi_e[i, l]
                        - ze_e[j, l] * xi_e[i, k]
                    )
                    res = np.maximum(res, np.abs(lhs - rhs))
    return res


# ---------------------------------------------------------------------------
# sphere chart helpers (stereographic)


def sq_norm_src(n: int, prefix: str = "u") -> str:
    return " + ".join(f"{prefix}{i}^2" for i in range(1, n + 1))


def sphere_chart_sources(n: int) -> list[str]:
    """Inverse stereographic parameterization p: R^n -> S^n in R^{n+1}."""
    sq = f"({sq_norm_src(n)})"
    comps = [f"2*u{i} / (1 + {sq})" for i in range(1, n + 1)]
    comps.append(f"(1 - {sq}) / (1 + {sq})")
    return comps


def round_metric_source(n: int) -> str:
    return f"4 / (1 + {sq_norm_src(n)})^2"


def _sphere_subchart_sources(nvars: int, total_dim: int) -> list[str]:
    """Stereographic S^{nvars} chart written over the first nvars of
    total_dim chart variables (the remaining variables are unused)."""
    sq = "(" + " + ".join(f"u{i}^2" for i in range(1, nvars + 1)) + ")"
    comps = [f"2*u{i} / (1 + {sq})" for i in range(1, nvars + 1)]
    comps.append(f"(1 - {sq}) / (1 + {sq})")
    return comps


# ---------------------------------------------------------------------------
# gallery


def _sphere_section(n: int, params: dict) -> FrontalPair:
    box = params.get("box", [(-0.7, 0.7)] * n)
    p = sphere_chart_sources(n)
    x = ExprMap.from_strings(["1"] + p, n)
    y = ExprMap.from_strings(["-1/2"] + [f"({c}) / 2" for c in p], n)
    return FrontalPair("sphere_section", n, box, x, y, params)


def _equatorial_nonfront(n: int, params: dict) -> FrontalPair:
    """The spacelike frontal that is not a front: x and y depend only on a
    point of the equatorial (n-1)-sphere, so (x, y) has rank n-1."""
    if n < 2:
        raise ValueError("equatorial_nonfront needs n >= 2")
    box = params.get("box", [(-0.7, 0.7)] * n)
    q = _sphere_subchart_sources(n - 1, n)  # S^{n-1} in R^n, ignores u_n
    x = ExprMap.from_strings(
        ["1/sqrt(2)"] + [f"({c}) / sqrt(2)" for c in q] + ["0"], n
    )
    y = ExprMap.from_strings(
        ["-1/sqrt(2)"] + [f"({c}) / sqrt(2)" for c in q] + ["0"], n
    )
    return FrontalPair("equatorial_nonfront", n, box, x, y, params)


def _sublightcone(n: int, params: dict) -> FrontalPair:
    """Immersed hypersurface of the lightcone that is nowhere spacelike.

    The last chart variable moves along the null rays, so the induced Gram
    matrix <dx,dx> is degenerate everywhere and no dual satisfying the
    1-form conditions exists; the stored y satisfies the three order-0
    conditions only.  Documented negative control.
    """
    if n < 2:
        raise ValueError("sublightcone needs n >= 2")
    box = params.get("box", [(-0.7, 0.7)] * (n - 1) + [(-0.4, 0.4)])
    q = _sphere_subchart_sources(n - 1, n)
    r = f"exp(u{n})"
    x = ExprMap.from_strings([r] + [f"{r} * ({c})" for c in q] + ["0"], n)
    rinv = f"exp(-u{n})"
    y = ExprMap.from_strings(
        [f"-{rinv}/2"] + [f"{rinv} * ({c}) / 2" for c in q] + ["0"], n
    )
    return FrontalPair("sublightcone", n, box, x, y, params)


def conformal_dual_map(sigma_src: str, n: int) -> CallableMap:
    """Explicit dual of the rescaled sphere section e^sigma (1, p).

    Implements, with jet arithmetic over the round metric of the
    stereographic chart,

        y = (e^{-sigma}/2) [ (-1, p) - |d sigma|^2 (1, p) - 2 (0, alpha) ],

    where |d sigma|^2 and alpha = g^{jk} sigma_j p_k are taken in the round
    metric.  Evaluating to order r consumes sigma to order r + 1.
    """
    sigma = parse_expr(sigma_src, n) if isinstance(sigma_src, str) else sigma_src
    p_exprs = [parse_expr(c, n) for c in sphere_chart_sources(n)]

    def fn(points: np.ndarray, order: int) -> list[Jet]:
        sp = jet_space(n, order + 1)
        uvars = [Jet.variable(sp, i, points[i]) for i in range(n)]
        s2 = None
        for uv in uvars:
            term = uv * uv
            s2 = term if s2 is None else s2 + term
        lam = (1.0 + s2) * (1.0 + s2) * 0.25  # inverse round metric factor
        sj = eval_jet_batch(sigma, points, order + 1)
        pj = [eval_jet_batch(c, points, order + 1) for c in p_exprs]
        dsig = [sj.d(j) for j in range(n)]
        grad2 = None
        for j in range(n):
            term = dsig[j] * dsig[j]
            grad2 = term if grad2 is None else grad2 + term
        grad2 = lam * grad2  # |d sigma|^2 in the round metric
        alphas = []
        for a in range(n + 1):
            acc = None
            for j in range(n):
                term = dsig[j] * pj[a].d(j)
                acc = term if acc is None else acc + term
            alphas.append(lam * acc)
        import conflat.jets as _jets

        pref = _jets.jet_exp(-sj) * 0.5
        comps = [pref * (-1.0 - grad2)]
        for a in range(n + 1):
            comps.append(pref * (pj[a] * (1.0 - grad2) - 2.0 * alphas[a]))
        return comps

    return CallableMap(n, n + 2, fn, name="conformal-dual")


def _conformal_graph(n: int, params: dict) -> FrontalPair:
    sigma_src = params.get("sigma", "0")
    box = params.get("box", [(-0.7, 0.7)] * n)
    sigma = parse_expr(sigma_src, n)
    p = sphere_chart_sources(n)
    es = f"exp({to_source(sigma)})"
    x = ExprMap.from_strings([es] + [f"{es} * ({c})" for c in p], n)
    y = conformal_dual_map(to_source(sigma), n)
    return FrontalPair("conformal_graph", n, box, x, y, dict(params, sigma=sigma_src))


def clifford_ball_immersion(n: int, r: float, rho: float) -> CallableMap:
    """Product hypersurface S^2(r) x S^{n-2}(s) mapped into H^{n+1}.

    The product sits in the unit sphere S^{n+1}; stereographic projection
    (regular on it, since the last coordinate stays below s < 1) followed by
    a Euclidean scaling places it in the open unit ball, and the
    ball-to-hyperboloid map ((1+|u|^2), 2u)/(1-|u|^2) lands it in H^{n+1}.
    The composition is a conformal transformation of the sphere, so the
    image is still a generalized Clifford torus up to conformal change.

    Only n = 4 is wired up (two angle pairs); the chart is
    (t1, t2) x (t3, t4) spherical angles on the two factors.
    """
    if n != 4:
        raise ValueError("clifford_ball is implemented for n = 4")
    if not (0.0 < r < 1.0 and 0.0 < rho < 1.0):
        raise ValueError("need 0 < r < 1 and 0 < rho < 1")
    s = math.sqrt(1.0 - r * r)
    lam = rho * math.sqrt((1.0 - s) / (1.0 + s))  # |u| <= rho after scaling

    def fn(points: np.ndarray, order: int) -> list[Jet]:
        sp = jet_space(4, order)
        t = [Jet.variable(sp, i, points[i]) for i in range(4)]
        a = [jet_sin(t[0]) * jet_cos(t[1]), jet_sin(t[0]) * jet_sin(t[1]), jet_cos(t[0])]
        b = [jet_sin(t[2]) * jet_cos(t[3]), jet_sin(t[2]) * jet_sin(t[3]), jet_cos(t[2])]
        w = [ai * r for ai in a] + [bi * s for bi in b]
        inv_den = (w[5] + 1.0).reciprocal()  # stereographic from the south pole
        u = [w[i] * inv_den * lam for i in range(5)]
        u2 = None
        for ui in u:
            term = ui * ui
            u2 = term if u2 is None else u2 + term
        ball = (1.0 - u2).reciprocal()
        comps = [(1.0 + u2) * ball]
        comps.extend(ui * ball * 2.0 for ui in u)
        return comps

    return CallableMap(4, 6, fn, name="clifford-ball-immersion")


def frontal_pair_from_hypersurface(
    fmap: ChartMap, name: str, box: Box, params: dict | None = None
) -> FrontalPair:
    """Lightcone pair of a hypersurface f in H^{n+1} with numerical normal.

    The unit normal is produced as a jet program (generalized Minkowski
    cross product of f and its partials, normalized), so x = (f + nu)/sqrt2
    and y = -(f - nu)/sqrt2 carry exact jets of any order.  Evaluating the
    pair to order r consumes f to order r + 1.
    """
    n = fmap.n
    amb = fmap.ambient

    def normal_from(fj: list[Jet], order: int) -> list[Jet]:
        rows = [[c.truncate(order) for c in fj]]
        rows.extend([c.d(i) for c in fj] for i in range(n))
        return normalize_spacelike_jets(mink_cross_jets(rows))

    def x_fn(points: np.ndarray, order: int) -> list[Jet]:
        fj = fmap.jets(points, order + 1)
        nu = normal_from(fj, order)
        return [(c.truncate(order) + nc) * (1.0 / SQRT2) for c, nc in zip(fj, nu)]

    def y_fn(points: np.ndarray, order: int) -> list[Jet]:
        fj = fmap.jets(points, order + 1)
        nu = normal_from(fj, order)
        return [(nc - c.truncate(order)) * (1.0 / SQRT2) for c, nc in zip(fj, nu)]

    return FrontalPair(
        name,
        n,
        box,
        CallableMap(n, amb, x_fn, name=f"{name}:x"),
        CallableMap(n, amb, y_fn, name=f"{name}:y"),
        params or {},
    )


def _clifford_ball(n: int, params: dict) -> FrontalPair:
    r = params.get("r", 1.0 / SQRT2)
    rho = params.get("rho", 0.45)
    box = params.get(
        "box", [(0.5, 2.6), (0.2, 6.0), (0.5, 2.6), (0.2, 6.0)]
    )
    fmap = clifford_ball_immersion(n, r, rho)
    return frontal_pair_from_hypersurface(
        fmap, "clifford_ball", box, dict(params, r=r, rho=rho)
    )


_GALLERY: dict[str, dict] = {
    "sphere_section": {
        "builder": _sphere_section,
        "default_n": 2,
        "dims": "n >= 2",
        "params": {"box": "chart box, optional"},
        "summary": "canonical unit-sphere section x = (1, p), y = (-1, p)/2",
    },
    "equatorial_nonfront": {
        "builder": _equatorial_nonfront,
        "default_n": 2,
        "dims": "n >= 2",
        "params": {"box": "chart box, optional"},
        "summary": "spacelike frontal with rank n-1 image; not a front",
    },
    "sublightcone": {
        "builder": _sublightcone,
        "default_n": 2,
        "dims": "n >= 2",
        "params": {"box": "chart box, optional"},
        "summary": "immersed but nowhere-spacelike hypersurface (negative control)",
    },
    "conformal_graph": {
        "builder": _conformal_graph,
        "default_n": 2,
        "dims": "n >= 2",
        "params": {"sigma": "conformal factor expression (default 0)", "box": "optional"},
        "summary": "rescaled sphere section e^sigma (1, p) with explicit dual",
    },
    "clifford_ball": {
        "builder": _clifford_ball,
        "default_n": 4,
        "dims": "n = 4",
        "params": {"r": "first factor radius (default 1/sqrt 2)", "rho": "ball scale < 1"},
        "summary": "generalized Clifford torus moved into H^{n+1}, numerical normal",
    },
}


def gallery_names() -> list[str]:
    return sorted(_GALLERY)


def gallery_schema() -> dict[str, dict]:
    return {
        name: {k: v for k, v in info.items() if k != "builder"}
        for name, info in sorted(_GALLERY.items())
    }


def gallery(name: str, n: int | None = None, params: dict | None = None) -> FrontalPair:
    """Construct a named example pair."""
    if name not in _GALLERY:
        raise ValueError(f"unknown gallery member {name!r}; know {gallery_names()}")
    info = _GALLERY[name]
    return info["builder"](n or info["default_n"], dict(params or {}))


# ---------------------------------------------------------------------------
# conformal change of the sphere section, both routes


@dataclass
class ConformalChangeReport:
    n: int
    sigma: str
    pair: FrontalPair
    points: np.ndarray
    route_disagreement: float  # explicit dual vs Laplace-Beltrami route
    ii_pairing: np.ndarray  # <dx~, dy~> symmetrized == Schouten of e^{2s} g
    ii_closed: np.ndarray  # ((1-|ds|^2)/2) g + ds x ds - Hess s
    ii_agreement: float
    ii_codazzi: float  # Codazzi residual of II w.r.t. the induced metric
    pair_residual: float

    @property
    def ii_frontal(self) -> np.ndarray:
        """Second fundamental form in the frontal sign convention (= -A)."""
        return -self.ii_pairing


def _laplace_route_dual(
    xmap: ChartMap, induced: ChartMetric, points: np.ndarray
) -> np.ndarray:
    """Dual via y = -(1/n) Lap x - (<Lap x, Lap x>/(2 n^2)) x.

    Lap is the Laplace-Beltrami operator of the induced metric applied to
    the components; for n = 2 this is the classical -Lap x/2 - <...>/8
    normalization.
    """
    n = induced.n
    cj = CurvatureJets(induced, points, order=0)
    xj = xmap.jets(points, 2)
    m = points.shape[1]
    amb = len(xj)
    lap = np.zeros((amb, m))
    for a in range(amb):
        d1 = [xj[a].d(i) for i in range(n)]
        acc = np.zeros(m)
        for i in range(n):
            gi = d1[i].gradient()  # gi[j] = d_j d_i x^a
            for j in range(n):
                corr = np.zeros(m)
                for k in range(n):
                    corr += cj.gamma[k][i][j].value * d1[k].value
                acc += cj.ginv[i][j].value * (gi[j] - corr)
        lap[a] = acc
    xv = np.stack([c.value for c in xj])
    lap2 = mink_inner(lap, lap)
    return -lap / n - (lap2 / (2.0 * n * n))[None, :] * xv


def conformal_change(
    sigma_src: str, n: int, samples=None, box: Box | None = None
) -> ConformalChangeReport:
    """Rescaled sphere section with dual computed two independent ways.

    Builds x~ = e^sigma (1, p) over the stereographic chart, its explicit
    dual (the closed-form route), the Laplace-Beltrami route to the same
    dual, and the two independent computations of the second fundamental
    form; returns all cross-agreement residuals.
    """
    box = box or [(-0.7, 0.7)] * n
    pair = _conformal_graph(n, {"sigma": sigma_src, "box": box})
    if samples is None:
        samples = lattice(box, 25)
    samples = as_points(samples)

    # induced metric is e^{2 sigma} times the round metric of the chart
    factor = f"exp(2 * ({sigma_src})) * ({round_metric_source(n)})"
    rows = [[factor if i == j else "0" for j in range(n)] for i in range(n)]
    induced = ChartMetric.from_strings(rows, box)

    y_explicit = map_values(pair.ymap, samples)
    y_laplace = _laplace_route_dual(pair.xmap, induced, samples)
    route_dis = float(np.max(np.abs(y_explicit - y_laplace)))

    res = pair_residuals(pair, samples)
    _, second, _, _ = _forms_arrays(pair, samples)
    ii_pairing = -second  # <dx,dy> symmetrized

    # closed form over the round metric
    sigma = parse_expr(sigma_src, n)
    sj = eval_jet_batch(sigma, samples, 2)
    round_metric = ChartMetric.from_strings(
        [[round_metric_source(n) if i == j else "0" for j in range(n)] for i in range(n)],
        box,
    )
    rj = CurvatureJets(round_metric, samples, order=0)
    m = samples.shape[1]
    grad = sj.gradient()
    hess = np.empty((n, n, m))
    d1 = [sj.d(i) for i in range(n)]
    for i in range(n):
        gi = d1[i].gradient()
        for j in range(n):
            corr = np.zeros(m)
            for k in range(n):
                corr += rj.gamma[k][i][j].value * grad[k]
            hess[i, j] = gi[j] - corr
    ground = np.empty((n, n, m))
    ginv = np.empty((n, n, m))
    for i in range(n):
        for j in range(n):
            ground[i, j] = rj.g[i][j].value
            ginv[i, j] = rj.ginv[i][j].value
    grad2 = np.einsum("ijm,im,jm->m", ginv, grad, grad)
    ii_closed = (
        0.5 * (1.0 - grad2)[None, None, :] * ground
        + np.einsum("im,jm->ijm", grad, grad)
        - hess
    )
    ii_agree = float(np.max(np.abs(ii_pairing - ii_closed)))

    cod = codazzi_residual(induced, second_form_field(pair), samples)

    return ConformalChangeReport(
        n=n,
        sigma=sigma_src,
        pair=pair,
        points=samples,
        route_disagreement=route_dis,
        ii_pairing=ii_pairing,
        ii_closed=ii_closed,
        ii_agreement=ii_agree,
        ii_codazzi=float(np.max(cod)),
        pair_residual=float(np.max(res)),
    )


# ---------------------------------------------------------------------------
# intrinsic data extraction


@dataclass
class GcfRecord:
    """Intrinsic record of a pair: g = I, A = -II, parabolic set, cross-checks."""

    n: int
    points: np.ndarray
    first: np.ndarray
    second: np.ndarray
    third: np.ndarray
    regular: np.ndarray  # I positive definite
    parabolic: np.ndarray  # regular points where II (= -A) degenerates
    schouten_vs_second: float | None  # max |A_intrinsic + II| over regular samples
    third_vs_dual: float | None  # max |III - A g^{-1} A|
    schouten_vs_second_samples: np.ndarray | None  # per regular sample
    third_vs_dual_samples: np.ndarray | None
    ricci_relation: float  # Ricci-vs-trace identity residual
    scalar_relation: float
    gauss_curv_vs_trace: float | None  # n = 2: |K + Tr_I II|
    rank_gplus: np.ndarray
    rank_gminus: np.ndarray
    rank_consistent: bool  # dG+ rank == rank I and dG- rank == rank III
    joint_full_rank_matches_regularity: bool
    fraction_checked: float


def gcf_from_frontal(pair: FrontalPair, samples) -> GcfRecord:
    """Extract (g, A) = (I, -II) and verify the intrinsic/extrinsic bridge."""
    from .lorentz import gauss_map_jacobian

    samples = as_points(samples)
    n = pair.n
    first, second, third, _ = fundamental_forms_batch(pair, samples)
    regular = spd_mask(first)
    if not np.any(regular):
        raise InvalidPairError("no samples with nondegenerate first fundamental form")
    pts = samples[:, regular]
    m = pts.shape[1]

    f_field = first_form_field(pair)
    cj = CurvatureJets(f_field, pts, order=0)
    g = first[..., regular]
    ii = second[..., regular]
    iii = third[..., regular]
    ginv = np.empty((n, n, m))
    ricci = np.empty((n, n, m))
    for i in range(n):
        for j in range(n):
            ginv[i, j] = cj.ginv[i][j].value
            ricci[i, j] = cj.ricci[i][j].value
    scal = cj.scalar.value

    trace_ii = np.einsum("ijm,ijm->m", ginv, ii)
    ric_pred = -trace_ii[None, None, :] * g - (n - 2) * ii
    ric_res = float(np.max(np.abs(ricci - ric_pred)))
    scal_res = float(np.max(np.abs(scal + 2.0 * (n - 1) * trace_ii)))

    schouten_res = None
    dual_res = None
    schouten_samples = None
    dual_samples = None
    parabolic = np.zeros(samples.shape[1], dtype=bool)
    if n >= 3:
        a_vals = np.empty((n, n, m))
        for i in range(n):
            for j in range(n):
                a_vals[i, j] = cj.schouten[i][j].value
        schouten_samples = np.max(np.abs(a_vals + ii), axis=(0, 1))
        schouten_res = float(np.max(schouten_samples))
        dual = np.einsum("iam,abm,bjm->ijm", a_vals, ginv, a_vals)
        dual_samples = np.max(np.abs(iii - dual), axis=(0, 1))
        dual_res = float(np.max(dual_samples))
        hat = np.einsum("iam,ajm->ijm", ginv, a_vals)
        det_hat = np.linalg.det(np.moveaxis(hat, -1, 0))
        eig_hat = np.moveaxis(np.linalg.eigvals(np.moveaxis(hat, -1, 0)), 0, -1)
        parabolic[regular] = is_parabolic(det_hat, np.abs(eig_hat))
    else:
        # n = 2 analogue: -A is played by II itself
        hat = np.einsum("iam,ajm->ijm", ginv, ii)
        det_hat = np.linalg.det(np.moveaxis(hat, -1, 0))
        eig_hat = np.moveaxis(np.linalg.eigvals(np.moveaxis(hat, -1, 0)), 0, -1)
        parabolic[regular] = is_parabolic(det_hat, np.abs(eig_hat))

    gauss_vs_trace = None
    if n == 2:
        gauss_vs_trace = float(np.max(np.abs(scal / 2.0 + trace_ii)))

    rank_gp = numerical_rank(gauss_map_jacobian(pair.xmap, pts))
    rank_gm = numerical_rank(gauss_map_jacobian(pair.ymap, pts))
    rank_first = rank_from_gram(g)
    rank_third = rank_from_gram(iii)
    rank_ok = bool(np.all(rank_gp == rank_first) and np.all(rank_gm == rank_third))
    joint_full = (rank_gp == n) & (rank_gm == n)
    joint_ok = bool(np.all(joint_full == ~parabolic[regular]))

    return GcfRecord(
        n=n,
        points=samples,
        first=first,
        second=second,
        third=third,
        regular=regular,
        parabolic=parabolic,
        schouten_vs_second=schouten_res,
        third_vs_dual=dual_res,
        schouten_vs_second_samples=schouten_samples,
        third_vs_dual_samples=dual_samples,
        ricci_relation=ric_res,
        scalar_relation=scal_res,
        gauss_curv_vs_trace=gauss_vs_trace,
        rank_gplus=rank_gp,
        rank_gminus=rank_gm,
        rank_consistent=rank_ok,
        joint_full_rank_matches_regularity=joint_ok,
        fraction_checked=float(np.mean(regular)),
    )


# ---------------------------------------------------------------------------
# export


def pair_point_cloud(pair: FrontalPair, points) -> list[dict]:
    """Sampled pair as JSON-ready rows: chart point, x, y, f, nu."""
    points = as_points(points)
    xv = map_values(pair.xmap, points)
    yv = map_values(pair.ymap, points)
    f = (xv - yv) / SQRT2
    nu = (xv + yv) / SQRT2
    rows = []
    for k in range(points.shape[1]):
        rows.append(
            {
                "point": [float(v) for v in points[:, k]],
                "x": [float(v) for v in xv[:, k]],
                "y": [float(v) for v in yv[:, k]],
                "f": [float(v) for v in f[:, k]],
                "nu": [float(v) for v in nu[:, k]],
            }
        )
    return rows
