import numpy as np
import pytest

from conflat.curvature import round_sphere_metric
from conflat.fields import CallableMap, map_values
from conflat.frontal import (
    FrontalPair,
    InvalidPairError,
    conformal_change,
    first_form_field,
    front_test,
    fundamental_forms,
    fundamental_forms_batch,
    gallery,
    gallery_names,
    gauss_equation_residual,
    gcf_from_frontal,
    pair_point_cloud,
    pair_residuals,
    second_form_field,
    third_form_field,
)
from conflat.jets import Jet

# located once with a minimizer on det I; x drops rank here while (x, y)
# stays an immersion
CLIFFORD_FOLD = (0.8049439331880355, 2.178066569426976,
                 1.9876318281213055, 3.695345830351556)


def test_gallery_names_stable():
    assert gallery_names() == [
        "clifford_ball",
        "conformal_graph",
        "equatorial_nonfront",
        "sphere_section",
        "sublightcone",
    ]


def test_gallery_unknown_name():
    with pytest.raises(ValueError, match="unknown gallery"):
        gallery("moebius")


def test_gallery_invalid_params():
    with pytest.raises(ValueError):
        gallery("clifford_ball", params={"rho": 1.5})
    with pytest.raises(ValueError):
        gallery("clifford_ball", n=3)


@pytest.mark.parametrize(
    "name,n",
    [
        ("sphere_section", 2),
        ("sphere_section", 3),
        ("equatorial_nonfront", 2),
        ("equatorial_nonfront", 3),
        ("conformal_graph", 2),
        ("clifford_ball", 4),
    ],
)
def test_gallery_pair_residuals(name, n):
    pair = gallery(name, n)
    res = pair_residuals(pair, pair.default_samples(30))
    assert np.max(res) <= 1e-8


def test_sublightcone_fails_one_form_not_order_zero():
    pair = gallery("sublightcone", 2)
    res = pair_residuals(pair, pair.default_samples(20))
    assert np.max(res[:3]) <= 1e-10  # null/pairing conditions hold
    assert np.max(res[3]) > 0.5  # the radial direction violates <dx, y> = 0


def test_perturbed_pairing_detected():
    pair = gallery("sphere_section", 2)
    eps = 1e-3

    def bad_y(points, order):
        jets = pair.ymap.jets(points, order)
        jets[-1] = jets[-1] + Jet.constant(jets[-1].space, eps, jets[-1].width)
        return jets

    broken = FrontalPair(
        "broken", 2, pair.box, pair.xmap, CallableMap(2, 4, bad_y)
    )
    res = pair_residuals(broken, broken.default_samples(10))
    assert np.max(res[2]) > 1e-5  # <x,y> = 1 broken proportionally to eps
    with pytest.raises(InvalidPairError):
        fundamental_forms_batch(broken, broken.default_samples(10))


def test_sphere_section_forms_closed_form():
    pair = gallery("sphere_section", 2)
    p = (0.2, -0.3)
    g = round_sphere_metric(2).values(p)[..., 0]
    forms = fundamental_forms(pair, p)
    np.testing.assert_allclose(forms.first, g, atol=1e-12)
    np.testing.assert_allclose(forms.second, -g / 2.0, atol=1e-12)
    np.testing.assert_allclose(forms.third, g / 4.0, atol=1e-12)
    assert forms.compat_asym <= 1e-14


def test_second_form_matches_minus_intrinsic_schouten():
    pair = gallery("sphere_section", 3)
    rec = gcf_from_frontal(pair, pair.default_samples(30))
    assert rec.schouten_vs_second <= 1e-8
    assert rec.third_vs_dual <= 1e-8


def test_gauss_equation_on_valid_pairs():
    for name, n in [("sphere_section", 2), ("sphere_section", 3), ("clifford_ball", 4)]:
        pair = gallery(name, n)
        res = gauss_equation_residual(pair, pair.default_samples(20))
        assert np.max(res) <= 1e-6, name


def test_gauss_equation_negative_control():
    # y replaced by the dual of a different map: the identity must fail hard
    s = gallery("sphere_section", 2)
    g = gallery("conformal_graph", 2, {"sigma": "0.3*u1"})
    mismatched = FrontalPair("mismatched", 2, s.box, s.xmap, g.ymap)
    res = gauss_equation_residual(mismatched, mismatched.default_samples(12))
    assert np.min(res) > 1e-2


def test_front_classification():
    assert front_test(gallery("sphere_section", 2), (0.2, -0.3)).is_front
    nf = front_test(gallery("equatorial_nonfront", 2), (0.2, -0.3))
    assert nf.verdict == "frontal_only"
    assert nf.stacked_rank == 1


def test_front_test_exchange_invariant():
    pair = gallery("sphere_section", 3)
    p = (0.1, 0.2, -0.2)
    a = front_test(pair, p)
    b = front_test(pair.exchanged(), p)
    assert a.verdict == b.verdict and a.stacked_rank == b.stacked_rank


def test_clifford_fold_point_is_front_but_not_immersion():
    pair = gallery("clifford_ball")
    ft = front_test(pair, CLIFFORD_FOLD)
    assert ft.is_front
    assert ft.x_rank < pair.n


def test_clifford_gcf_checks():
    pair = gallery("clifford_ball")
    rec = gcf_from_frontal(pair, pair.default_samples(30))
    assert rec.fraction_checked >= 0.95
    frac_a = np.mean(rec.schouten_vs_second_samples <= 1e-6)
    frac_d = np.mean(rec.third_vs_dual_samples <= 1e-6)
    assert frac_a >= 0.95 and frac_d >= 0.95
    assert rec.ricci_relation <= 1e-6
    assert rec.scalar_relation <= 1e-6
    assert rec.rank_consistent
    assert rec.joint_full_rank_matches_regularity


def test_exchange_swaps_first_and_third_forms():
    pair = gallery("sphere_section", 3)
    pts = pair.default_samples(10)
    f1, s1, t1, _ = fundamental_forms_batch(pair, pts)
    f2, s2, t2, _ = fundamental_forms_batch(pair.exchanged(), pts)
    np.testing.assert_allclose(f2, t1, atol=1e-13)
    np.testing.assert_allclose(t2, f1, atol=1e-13)
    np.testing.assert_allclose(s2, s1, atol=1e-13)  # II is symmetric in the pair


def test_exchange_preserves_schouten_tensor():
    # the dual metric (= III) has the same Schouten tensor as the original
    pair = gallery("sphere_section", 3)
    rec = gcf_from_frontal(pair.exchanged(), pair.default_samples(20))
    assert rec.schouten_vs_second <= 1e-8


def test_surface_relation_n2():
    for name, params in [("sphere_section", {}), ("conformal_graph", {"sigma": "0.15*u1"})]:
        pair = gallery(name, 2, params)
        rec = gcf_from_frontal(pair, pair.default_samples(25))
        assert rec.gauss_curv_vs_trace <= 1e-7, name


# ---------------------------------------------------------------------------
# conformal change


def test_conformal_change_zero_sigma():
    rep = conformal_change("0", 2)
    pts = rep.points
    yv = map_values(rep.pair.ymap, pts)
    p = map_values(gallery("sphere_section", 2).xmap, pts)[1:]
    np.testing.assert_allclose(yv[0], -0.5, atol=1e-14)
    np.testing.assert_allclose(yv[1:], p / 2.0, atol=1e-14)
    g = round_sphere_metric(2).values(pts)
    np.testing.assert_allclose(rep.ii_pairing, g / 2.0, atol=1e-12)
    np.testing.assert_allclose(rep.ii_frontal, -g / 2.0, atol=1e-12)
    assert rep.ii_agreement <= 1e-12
    assert rep.route_disagreement <= 1e-12


def test_conformal_change_constant_sigma():
    c = 0.37
    rep0 = conformal_change("0", 2)
    rep = conformal_change(f"{c}", 2)
    y0 = map_values(rep0.pair.ymap, rep0.points)
    yc = map_values(rep.pair.ymap, rep.points)
    np.testing.assert_allclose(yc, np.exp(-c) * y0, atol=1e-13)
    # constants contribute nothing to d sigma or Hess sigma
    np.testing.assert_allclose(rep.ii_pairing, rep0.ii_pairing, atol=1e-13)


@pytest.mark.parametrize("sigma", ["0.2*u1", "0.1*u1*u2", "0.3*sin(u1)"])
def test_conformal_change_route_agreement(sigma):
    rep = conformal_change(sigma, 2)
    assert rep.pair_residual <= 1e-10
    assert rep.route_disagreement <= 1e-7
    assert rep.ii_agreement <= 1e-8
    assert rep.ii_codazzi <= 1e-7


def test_conformal_change_dual_is_valid_pair_in_higher_dim():
    rep = conformal_change("0.1*u1 - 0.2*u3", 3)
    assert rep.pair_residual <= 1e-10
    assert rep.route_disagreement <= 1e-7


def test_conformal_graph_sigma_zero_equals_sphere_section():
    graph = gallery("conformal_graph", 2, {"sigma": "0"})
    section = gallery("sphere_section", 2)
    pts = section.default_samples(12)
    np.testing.assert_allclose(
        map_values(graph.xmap, pts), map_values(section.xmap, pts), atol=1e-14
    )
    np.testing.assert_allclose(
        map_values(graph.ymap, pts), map_values(section.ymap, pts), atol=1e-14
    )


# ---------------------------------------------------------------------------
# export


def test_pair_point_cloud_rows():
    pair = gallery("sphere_section", 2)
    pts = pair.default_samples(5)
    rows = pair_point_cloud(pair, pts)
    assert len(rows) == 5
    row = rows[0]
    assert set(row) == {"point", "x", "y", "f", "nu"}
    x = np.array(row["x"])
    f = np.array(row["f"])
    nu = np.array(row["nu"])
    # f, nu rebuild x and satisfy the model constraints
    np.testing.assert_allclose((f + nu) / np.sqrt(2.0), x, atol=1e-12)
    assert (-f[0] ** 2 + np.sum(f[1:] ** 2)) == pytest.approx(-1.0, abs=1e-9)
    assert (-nu[0] ** 2 + np.sum(nu[1:] ** 2)) == pytest.approx(1.0, abs=1e-9)
