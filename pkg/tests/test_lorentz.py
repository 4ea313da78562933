import numpy as np
import pytest

from conflat.fields import ExprMap, map_values
from conflat.frontal import gallery, first_form_field
from conflat.fields import tensor_values
from conflat.lorentz import (
    DE_SITTER,
    HYPERBOLIC,
    ModelError,
    ModelPoint,
    Q_MINUS,
    Q_PLUS,
    SQRT2,
    gauss_map_jacobian,
    gauss_map_values,
    immersion_rank,
    mink_inner,
    model_residual,
    numerical_rank,
    project_to_sphere_section,
    rank_from_gram,
    to_hyperbolic_pair,
    to_lightcone_pair,
)


def test_inner_timelike_axis():
    e0 = np.array([1.0, 0.0, 0.0, 0.0])
    assert mink_inner(e0, e0) == -1.0


def test_inner_null_vector():
    v = np.array([1.0, 1.0, 0.0, 0.0])
    assert mink_inner(v, v) == 0.0


def test_sphere_section_dual_pairing():
    # (1, p) . (-1, p)/2 = 1 for |p| = 1
    rng = np.random.default_rng(3)
    p = rng.normal(size=3)
    p /= np.linalg.norm(p)
    x = np.concatenate([[1.0], p])
    y = np.concatenate([[-1.0], p]) / 2.0
    assert mink_inner(x, y) == pytest.approx(1.0, abs=1e-15)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        mink_inner(np.ones(3), np.ones(4))


def test_model_point_validation():
    ModelPoint(np.array([1.0, 1.0, 0.0]), Q_PLUS).validate()
    ModelPoint(np.array([-1.0, 1.0, 0.0]), Q_MINUS).validate()
    ModelPoint(np.array([1.0, 0.0, 0.0]), HYPERBOLIC).validate()
    ModelPoint(np.array([0.0, 1.0, 0.0]), DE_SITTER).validate()
    with pytest.raises(ModelError):
        ModelPoint(np.array([1.0, 0.5, 0.0]), Q_PLUS).validate()
    with pytest.raises(ModelError):
        ModelPoint(np.array([-1.0, 1.0, 0.0]), Q_PLUS).validate()


def test_to_hyperbolic_pair_closed_form():
    p = np.array([0.6, 0.8])
    x = np.concatenate([[1.0], p])
    y = np.concatenate([[-1.0], p]) / 2.0
    f, nu = to_hyperbolic_pair(x, y)
    np.testing.assert_allclose(f, np.concatenate([[3.0], p]) / (2.0 * SQRT2), atol=1e-15)
    np.testing.assert_allclose(nu, np.concatenate([[1.0], 3.0 * p]) / (2.0 * SQRT2), atol=1e-15)
    assert mink_inner(f, f) == pytest.approx(-1.0, abs=1e-12)
    assert mink_inner(nu, nu) == pytest.approx(1.0, abs=1e-12)
    assert mink_inner(f, nu) == pytest.approx(0.0, abs=1e-12)


def test_to_lightcone_pair_basis_case():
    f = np.array([1.0, 0.0, 0.0, 0.0])
    nu = np.array([0.0, 1.0, 0.0, 0.0])
    x, y = to_lightcone_pair(f, nu)
    np.testing.assert_allclose(x, np.array([1.0, 1.0, 0.0, 0.0]) / SQRT2)
    np.testing.assert_allclose(y, np.array([-1.0, 1.0, 0.0, 0.0]) / SQRT2)
    assert mink_inner(x, x) == pytest.approx(0.0, abs=1e-14)
    assert mink_inner(y, y) == pytest.approx(0.0, abs=1e-14)
    assert mink_inner(x, y) == pytest.approx(1.0, abs=1e-14)
    assert x[0] > 0 > y[0]


def test_round_trip_both_directions():
    rng = np.random.default_rng(11)
    for _ in range(20):
        p = rng.normal(size=4)
        p /= np.linalg.norm(p)
        scale = np.exp(rng.normal() * 0.3)
        x = scale * np.concatenate([[1.0], p])
        y = np.concatenate([[-1.0], p]) / (2.0 * scale)
        f, nu = to_hyperbolic_pair(x, y)
        x2, y2 = to_lightcone_pair(f, nu)
        np.testing.assert_allclose(x2, x, rtol=0, atol=1e-12)
        np.testing.assert_allclose(y2, y, rtol=0, atol=1e-12)
        f2, nu2 = to_hyperbolic_pair(x2, y2)
        np.testing.assert_allclose(f2, f, rtol=0, atol=1e-12)
        np.testing.assert_allclose(nu2, nu, rtol=0, atol=1e-12)


def test_pairing_precondition_enforced():
    p = np.array([0.6, 0.8])
    x = np.concatenate([[1.0], p])
    y_bad = np.concatenate([[-1.0], p]) / 2.0 + np.array([0.0, 0.0, 0.1])
    with pytest.raises(ModelError):
        to_hyperbolic_pair(x, y_bad, tol=1e-8)


def test_orthogonality_precondition_enforced():
    f = np.array([1.0, 0.0, 0.0])
    nu = np.array([0.1, 1.0, 0.0])  # <f, nu> = -0.1
    with pytest.raises(ModelError, match="orthogonality"):
        to_lightcone_pair(f, nu)


def test_projection_idempotent_and_strips_conformal_factor():
    p = np.array([0.0, 0.6, 0.8])
    z = 3.7 * np.concatenate([[1.0], p])
    g = project_to_sphere_section(z)
    np.testing.assert_allclose(g, np.concatenate([[1.0], p]), atol=1e-15)
    np.testing.assert_allclose(project_to_sphere_section(g), g, atol=1e-15)
    zm = 2.2 * np.concatenate([[-1.0], p])
    gm = project_to_sphere_section(zm)
    assert gm[0] == pytest.approx(-1.0)


def test_gauss_map_of_section_is_fixed_point():
    P = gallery("sphere_section", 2)
    pts = P.default_samples(9)
    G = gauss_map_values(P.xmap, pts)
    xv = map_values(P.xmap, pts)
    np.testing.assert_allclose(G, xv, atol=1e-14)  # already on the section
    np.testing.assert_allclose(G[0], 1.0, atol=1e-14)
    np.testing.assert_allclose(np.sum(G[1:] ** 2, axis=0), 1.0, atol=1e-12)


def test_gauss_map_removes_conformal_factor():
    P = gallery("conformal_graph", 2, {"sigma": "0.4*u1 - 0.2*u2"})
    S = gallery("sphere_section", 2)
    pts = P.default_samples(9)
    np.testing.assert_allclose(
        gauss_map_values(P.xmap, pts), map_values(S.xmap, pts), atol=1e-12
    )


def test_immersion_rank_sphere_section():
    P = gallery("sphere_section", 2)
    assert immersion_rank(P.xmap, (0.2, -0.1)) == 2


def test_nonfront_stacked_rank_deficit():
    P = gallery("equatorial_nonfront", 3)
    pts = P.default_samples(6)
    for k in range(pts.shape[1]):
        assert immersion_rank(P.xmap, pts[:, k]) == 2  # n - 1


def test_sublightcone_gauss_map_degenerates_everywhere():
    P = gallery("sublightcone", 2)
    pts = P.default_samples(16)
    ranks = numerical_rank(gauss_map_jacobian(P.xmap, pts))
    assert np.all(ranks == 1)  # n - 1 < n at every sample
    # but the map itself is an immersion
    assert immersion_rank(P.xmap, pts[:, 3]) == 2


def test_rank_equality_gauss_map_vs_gram():
    for name, n in [
        ("sphere_section", 2),
        ("sphere_section", 3),
        ("equatorial_nonfront", 2),
        ("sublightcone", 2),
        ("conformal_graph", 2),
    ]:
        P = gallery(name, n)
        pts = P.default_samples(50)
        rk_map = numerical_rank(gauss_map_jacobian(P.xmap, pts))
        gram = tensor_values(first_form_field(P), pts)
        rk_gram = rank_from_gram(gram)
        assert np.array_equal(rk_map, rk_gram), name


def test_vanishing_time_component_rejected():
    m = ExprMap.from_strings(["u1", "1", "0", "0"], 2)
    with pytest.raises(ModelError):
        gauss_map_values(m, np.array([[0.0], [0.0]]))
