import numpy as np
import pytest

from conflat.curvature import (
    ChartMetric,
    DegenerateMetricError,
    christoffel,
    codazzi_residual,
    conformal_flatness_certificate,
    curvature_batch,
    curvature_pack,
    flat_metric,
    gaussian_curvature,
    hyperbolic_metric,
    metric_compatibility_residual,
    pack_symmetry_residuals,
    polar_flat_metric,
    product_spheres_metric,
    round_sphere_metric,
    schouten_field,
)
from conflat.fields import ExprTensorField, lattice


def test_christoffel_flat_chart():
    m = flat_metric(3)
    assert np.max(np.abs(christoffel(m, (0.2, -0.4, 0.1)))) == 0.0


def test_christoffel_polar_closed_form():
    m = polar_flat_metric()
    G = christoffel(m, (2.0, 0.5))
    assert G[0, 1, 1] == pytest.approx(-2.0, abs=1e-12)
    assert G[1, 0, 1] == pytest.approx(0.5, abs=1e-12)
    assert G[1, 1, 0] == pytest.approx(0.5, abs=1e-12)
    # lower-index symmetry and metric compatibility
    assert np.max(np.abs(G - np.swapaxes(G, 1, 2))) == 0.0
    res = metric_compatibility_residual(m, (2.0, 0.5))
    assert np.max(res) <= 1e-10


def test_christoffel_sphere_origin():
    m = round_sphere_metric(2)
    assert np.max(np.abs(christoffel(m, (0.0, 0.0)))) == 0.0


def test_degenerate_metric_rejected():
    m = ChartMetric.from_strings([["u1", "0"], ["0", "1"]], [(-1.0, 1.0), (-1.0, 1.0)])
    with pytest.raises(DegenerateMetricError):
        christoffel(m, (-0.5, 0.0))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_sphere_pack_closed_form(n):
    m = round_sphere_metric(n)
    pts = m.default_samples(30)
    batch = curvature_batch(m, pts)
    assert np.max(np.abs(batch.scalar - n * (n - 1))) <= 1e-8
    assert np.max(np.abs(batch.schouten - batch.metric / 2.0)) <= 1e-8


@pytest.mark.parametrize("n", [3, 4, 5])
def test_hyperbolic_pack_closed_form(n):
    m = hyperbolic_metric(n)
    pts = m.default_samples(30)
    batch = curvature_batch(m, pts)
    assert np.max(np.abs(batch.scalar + n * (n - 1))) <= 1e-8
    assert np.max(np.abs(batch.schouten + batch.metric / 2.0)) <= 1e-8


def test_flat_pack_all_zero():
    for n in (2, 3, 4):
        pack = curvature_pack(flat_metric(n), tuple([0.1] * n))
        assert np.max(np.abs(pack.riemann)) == 0.0
        assert np.max(np.abs(pack.ricci)) == 0.0
        assert pack.scalar == 0.0


def test_schouten_absent_for_surfaces():
    pack = curvature_pack(round_sphere_metric(2), (0.1, 0.2))
    assert pack.schouten is None
    assert pack.weyl is None


def test_weyl_absent_below_dim_four():
    pack = curvature_pack(round_sphere_metric(3), (0.1, 0.2, 0.0))
    assert pack.schouten is not None
    assert pack.weyl is None


def test_pack_invariants_on_generic_metric():
    m = ChartMetric.from_strings(
        [
            ["1 + u2^2", "u1 * u2 / 4", "0", "0"],
            ["u1 * u2 / 4", "2 + sin(u1)", "0", "0"],
            ["0", "0", "1.5 + u3^2 / 2", "u3 * u4 / 8"],
            ["0", "0", "u3 * u4 / 8", "1 + cos(u4)^2"],
        ],
        [(-0.5, 0.5)] * 4,
    )
    batch = curvature_batch(m, lattice(m.box, 25))
    res = pack_symmetry_residuals(batch)
    for name in ("antisym_first", "antisym_last", "pair_exchange", "ricci_symmetry"):
        assert np.max(res[name]) <= 1e-10, name
    assert np.max(res["first_bianchi"]) <= 1e-10
    assert np.max(res["weyl_trace"]) <= 1e-9


def test_scalar_rescales_under_constant_conformal_factor():
    sigma = 0.37
    base = ChartMetric.conformally_flat("sin(u1) * u2", 3, [(-0.5, 0.5)] * 3)
    scaled = ChartMetric.conformally_flat(
        f"sin(u1) * u2 + {sigma}", 3, [(-0.5, 0.5)] * 3
    )
    pts = lattice(base.box, 20)
    s0 = curvature_batch(base, pts).scalar
    s1 = curvature_batch(scaled, pts).scalar
    np.testing.assert_allclose(s1, np.exp(-2 * sigma) * s0, rtol=0, atol=1e-10)


def test_gaussian_curvature_closed_form():
    # K = -e^{-2 sigma} * flat_laplacian(sigma) for e^{2 sigma} delta
    m = ChartMetric.conformally_flat("u1^3 - 2*u1*u2^2", 2, [(-0.8, 0.8)] * 2)
    pts = lattice(m.box, 40)
    K = gaussian_curvature(m, pts)
    lap = 6.0 * pts[0] - 4.0 * pts[0]
    sigma = pts[0] ** 3 - 2.0 * pts[0] * pts[1] ** 2
    np.testing.assert_allclose(K, -np.exp(-2 * sigma) * lap, rtol=0, atol=1e-8)


def test_sphere_gaussian_curvature_is_one():
    m = round_sphere_metric(2)
    K = gaussian_curvature(m, m.default_samples(25))
    np.testing.assert_allclose(K, 1.0, rtol=0, atol=1e-10)


# ---------------------------------------------------------------------------
# Codazzi residual


def test_codazzi_of_metric_is_zero():
    m = ChartMetric.conformally_flat("u1 * u2", 3, [(-0.5, 0.5)] * 3)
    res = codazzi_residual(m, ExprTensorField(3, m.comps), lattice(m.box, 15))
    assert np.max(res) <= 1e-12


def test_codazzi_of_schouten_for_conformally_flat_3_metric():
    m = ChartMetric.conformally_flat("u1 * u2", 3, [(-0.5, 0.5)] * 3)
    res = codazzi_residual(m, schouten_field(m), lattice(m.box, 20))
    assert np.max(res) <= 1e-8


def test_codazzi_detects_non_codazzi_tensor():
    flat = flat_metric(2)
    pts = np.array([[0.3], [0.4]])
    # T = u2 du1 x du1 has antisymmetric part of norm exactly 1
    t = ExprTensorField.from_strings([["u2", "0"], ["0", "0"]], 2)
    res = codazzi_residual(flat, t, pts)
    assert res[0] == pytest.approx(1.0, abs=1e-14)
    # T = u1 du1 x du1 has totally symmetric gradient: genuinely Codazzi
    t2 = ExprTensorField.from_strings([["u1", "0"], ["0", "0"]], 2)
    assert np.max(codazzi_residual(flat, t2, pts)) <= 1e-14


# ---------------------------------------------------------------------------
# certificate


def test_certificate_dim2_unconditional():
    m = ChartMetric.conformally_flat("exp(u1) * u2", 2, [(-0.5, 0.5)] * 2)
    cert = conformal_flatness_certificate(m)
    assert cert.certified and cert.mode == "dim2-unconditional"


def test_certificate_flat_dim3():
    cert = conformal_flatness_certificate(flat_metric(3))
    assert cert.certified and cert.max_residual == 0.0


def test_certificate_conformal_dim4():
    m = ChartMetric.conformally_flat("sin(u1) * u2", 4, [(-0.4, 0.4)] * 4)
    cert = conformal_flatness_certificate(m, m.default_samples(200))
    assert cert.certified
    assert cert.max_residual <= 1e-8
    assert cert.n_samples == 200


def test_certificate_rejects_product_spheres():
    m = product_spheres_metric()
    cert = conformal_flatness_certificate(m, m.default_samples(50))
    assert not cert.certified
    assert cert.max_residual > 0.1
    assert cert.worst_point is not None


def test_certificate_reports_worst_point_inside_box():
    m = ChartMetric.conformally_flat("u1^2", 4, [(-0.4, 0.4)] * 4)
    cert = conformal_flatness_certificate(m, m.default_samples(64))
    for coord, (lo, hi) in zip(cert.worst_point, m.box):
        assert lo <= coord <= hi
