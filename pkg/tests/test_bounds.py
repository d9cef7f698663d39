from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from localpack import bounds as bd
from localpack.bodies import R1, R2, Ball, catalog
from localpack.errors import (
    AngleOutOfRange,
    EmptyDomain,
    EmptySection,
    NonBallTruncater,
    NonpositiveMu,
    SelfIntersecting,
)

from helpers import random_convex_spherical_polygon
from oracles import cap_area, mc_sphere_fraction


def gc_arc(P, Q):
    """The short great circle arc from P to Q."""
    n = np.cross(P, Q)
    n /= np.linalg.norm(n)
    return bd.Arc(n, 0.0, np.asarray(P, float), np.asarray(Q, float))


# tau / m ---------------------------------------------------------------------


@pytest.mark.parametrize("D", [1.0, 1.5, 3.0, 12.15])
def test_conv_hull_volume_closed_form(D):
    assert bd.conv_ball_point_volume(D) == pytest.approx(math.pi / 3 * (D + 2 + 1 / D), rel=1e-12)


def test_tau_ratio_matches_hull_volume(derived):
    assert bd.tau_ratio(bd.PHI) == pytest.approx(8 / bd.conv_ball_point_volume(bd.PHI / 2), rel=1e-12)
    assert bd.tau_ratio(bd.PHI) == pytest.approx(derived["tau_ratio_at_24_3"], rel=1e-12)


def test_tau_bounds():
    out = bd.tau_and_m_bounds("O")
    assert out["holds"]
    assert out["ratio"] < bd.LOCAL_DENSITY_FLOOR
    assert 24.0 < out["phi_threshold"] < bd.PHI
    assert bd.tau_ratio(out["phi_threshold"]) == pytest.approx(bd.LOCAL_DENSITY_FLOOR, rel=1e-9)
    assert out["m_bound"] == 26 ** 3
    assert out["tau_bound_body"] == 10 and out["m_bound_body"] == 1331
    assert "tau_bound_body" not in bd.tau_and_m_bounds()


# Steiner count ---------------------------------------------------------------


@pytest.mark.parametrize("name, r, expected", [("O", R1, 40), ("C", R2, 39)])
def test_steiner_bound(name, r, expected):
    out = bd.steiner_neighbor_bound(name, bd.Truncater("ball", r))
    assert out["bound"] == expected
    assert out["colony_radius"] == pytest.approx(2 * r)


def test_steiner_zero_radius_gives_zero():
    assert bd.steiner_neighbor_bound("O", bd.Truncater("ball", 0.0))["bound"] == 0


def test_steiner_rejects_box():
    with pytest.raises(NonBallTruncater):
        bd.steiner_neighbor_bound("O", bd.Truncater("box", k=2.0))


def test_steiner_monotone_in_r():
    vals = [bd.steiner_neighbor_bound("C", bd.Truncater("ball", r))["ratio"] for r in np.linspace(0.1, 3, 12)]
    assert np.all(np.diff(vals) > 0)


# colonies --------------------------------------------------------------------


def test_ball_colony_is_ball_of_double_radius():
    col = bd.colony(bd.Truncater("ball", 1.7))
    rng = np.random.default_rng(0)
    U = rng.normal(size=(200, 3))
    U /= np.linalg.norm(U, axis=1)[:, None]
    assert np.allclose(col.extent(U), 3.4)
    assert np.all(col.contains(3.4 * U * (1 - 1e-9)))
    assert not np.any(col.contains(3.4 * U * (1 + 1e-6)))


@given(st.floats(1.0, 4.0), st.floats(-1.0, 1.0), st.booleans())
@settings(max_examples=60, deadline=None)
def test_box_colony_closed_form(k, t, horizontal):
    p = np.array([t * k, 1.0]) if horizontal else np.array([k, t])
    col = bd.colony(bd.Truncater("box", k=k))
    assert col.gamma(p)[0] == pytest.approx(bd.box_gamma(k, p[0], p[1]), rel=1e-12)
    assert col.contains(col.gamma(p)[0] * p * (1 - 1e-9))[0]


@given(st.floats(0.2, 3.0), st.floats(1.01, 2.0))
@settings(max_examples=40, deadline=None)
def test_colonies_are_nested(r, scale):
    small = bd.colony(bd.Truncater("ball", r))
    big = bd.colony(bd.Truncater("ball", r * scale))
    rng = np.random.default_rng(1)
    X = rng.uniform(-2 * r, 2 * r, size=(300, 3))
    assert np.all(big.contains(X[small.contains(X)]))


def test_box_gamma_rejects_interior_point():
    with pytest.raises(ValueError):
        bd.box_gamma(2.0, 0.5, 0.5)


# Gauss-Bonnet ----------------------------------------------------------------


@pytest.mark.parametrize("rho, d", [(1.0, 0.0), (1.0, 0.5), (2.5, -1.0), (3.0, 2.9)])
def test_single_cap(rho, d):
    region = bd.spherical_section(rho, [[0, 0, 1.0]], [d])
    assert bd.gauss_bonnet_area(region) == pytest.approx(cap_area(rho, d), rel=1e-12)


def test_hemisphere():
    region = bd.spherical_section(2.0, [[1.0, 1.0, 0.0]], [0.0])
    assert bd.gauss_bonnet_area(region) == pytest.approx(8 * math.pi, rel=1e-12)


def test_cap_at_half_radius_is_a_disc():
    r = 1.3
    region = bd.spherical_section(r, [[0, 1.0, 0]], [r / 2])
    assert bd.gauss_bonnet_area(region) == pytest.approx(math.pi * r * r, rel=1e-12)


def test_octant():
    region = bd.spherical_section(1.0, np.eye(3), np.zeros(3))
    assert np.allclose(region.corner_angles(), math.pi / 2)
    assert bd.gauss_bonnet_area(region) == pytest.approx(math.pi / 2, rel=1e-12)


@pytest.mark.parametrize("alpha", [0.3, 1.0, 2.5])
def test_lune(alpha):
    n2 = np.array([-math.sin(alpha), math.cos(alpha), 0.0])
    region = bd.spherical_section(1.5, [[0, 1.0, 0], -n2], [0.0, 0.0])
    assert bd.gauss_bonnet_area(region) == pytest.approx(2 * alpha * 1.5 ** 2, rel=1e-10)


def test_full_sphere_and_empty_section():
    assert bd.spherical_section(1.0, [[0, 0, 1.0]], [-2.0]) == "full"
    with pytest.raises(EmptySection):
        bd.spherical_section(1.0, [[0, 0, 1.0]], [1.5])
    with pytest.raises(EmptySection):
        bd.spherical_section(1.0, [[0, 0, 1.0], [0, 0, -1.0]], [0.5, 0.5])


def test_cusp_is_rejected():
    A, B = np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
    there = bd.Arc(np.array([0, 0, 1.0]), 0.0, A, B)
    back = bd.Arc(np.array([0, 0, -1.0]), 0.0, B, A)
    with pytest.raises(AngleOutOfRange):
        bd.gauss_bonnet_area(bd.SphericalRegion(1.0, ((there, back),)))


def test_bowtie_is_rejected():
    s = 1 / math.sqrt(2)
    a0, a180, a90, a270 = (np.array(v) * s for v in [(1, 0, 1), (-1, 0, 1), (0, 1, 1), (0, -1, 1)])
    loop = (gc_arc(a0, a180), gc_arc(a180, a90), gc_arc(a90, a270), gc_arc(a270, a0))
    with pytest.raises(SelfIntersecting):
        bd.gauss_bonnet_area(bd.SphericalRegion(1.0, (loop,)))


@given(st.integers(0, 10 ** 6))
@settings(max_examples=25, deadline=None)
def test_random_polygon_gauss_bonnet_equals_strips(seed):
    rho, N, d, region = random_convex_spherical_polygon(np.random.default_rng(seed))
    gb = bd.gauss_bonnet_area(region)
    assert 0 < gb < 4 * math.pi * rho * rho
    assert all(0 < th < math.pi for loop in region.corner_angles() for th in loop)
    assert gb == pytest.approx(bd.strip_area(rho, N, d, strips=20000), rel=1e-5)


def test_random_polygon_against_monte_carlo():
    rho, N, d, region = random_convex_spherical_polygon(np.random.default_rng(7))
    est = mc_sphere_fraction(rho, N, d, samples=2_000_000, seed=3)
    assert bd.gauss_bonnet_area(region) == pytest.approx(est, rel=2e-2)


# sections by translates --------------------------------------------------------


def test_ball_section_closed_form():
    s, t, rho = 0.8, 2.0, 1.9
    d = (rho * rho + t * t - s * s) / (2 * t)
    got = bd.sphere_body_section_area(Ball(s), [0, 0, t], rho)
    assert got == pytest.approx(2 * math.pi * rho * (rho - d), rel=1e-12)
    with pytest.raises(EmptySection):
        bd.sphere_body_section_area(Ball(s), [0, 0, 10.0], rho)
    assert bd.sphere_body_section_area(Ball(5.0), [0, 0, 0.5], rho) == pytest.approx(4 * math.pi * rho * rho)


@pytest.mark.parametrize("name", ["O", "C"])
def test_equal_caps_at_both_ends(name):
    prm = bd.parameters(name)
    s, r, rho = prm.inradius, prm.r, prm.rho
    u = np.array([1.0, 2.0, 2.0]) / 3
    near = bd.sphere_body_section_area(Ball(s), 2 * s * u, rho)
    far = bd.sphere_body_section_area(Ball(s), 2 * r * u, rho)
    assert near == pytest.approx(far, rel=1e-9)
    assert near == pytest.approx(prm.cap, rel=1e-9)


def test_sphere_radii():
    assert bd.parameters("O").rho == pytest.approx(math.sqrt(1 / 3 + 4 * R1 / math.sqrt(3)), rel=1e-14)
    assert bd.parameters("C").rho == pytest.approx(math.sqrt(1 + 4 * R2), rel=1e-14)
    with pytest.raises(KeyError):
        bd.parameters("T")


@given(st.floats(0.3, 1.0), st.floats(1.1, 1.95))
@settings(max_examples=40, deadline=None)
def test_ball_section_along_a_ray_is_unimodal(s, ratio):
    # the end caps are nonempty exactly when r < 2 s
    r = s * ratio
    rho = bd.equal_cap_radius(s, r)
    ts = np.linspace(2 * s, 2 * r, 41)
    areas = np.array([bd.sphere_body_section_area(Ball(s), [t, 0, 0], rho) for t in ts])
    peak = math.sqrt(rho * rho - s * s)
    assert 2 * s <= peak <= 2 * r
    up, down = ts <= peak, ts >= peak
    assert np.all(np.diff(areas[up]) >= -1e-12)
    assert np.all(np.diff(areas[down]) <= 1e-12)
    assert areas.min() == pytest.approx(areas[0], rel=1e-9)


@pytest.mark.parametrize("name", ["O", "C"])
def test_polytope_section_gauss_bonnet_vs_mesh(name, derived):
    x = bd.expected_minimizer(name)
    rho = bd.parameters(name).rho
    gb = bd.sphere_body_section_area(name, x, rho)
    assert gb == pytest.approx(derived["mu_at_expected_minimizer"][name], rel=1e-8)
    assert gb == pytest.approx(bd.sphere_body_section_area(name, x, rho, method="mesh"), rel=1e-6)


@pytest.mark.parametrize("name", ["O", "C"])
def test_polytope_section_against_monte_carlo(name):
    body = catalog(name)
    x = bd.expected_minimizer(name)
    rho = bd.parameters(name).rho
    A, b = body.polytope.A, body.polytope.b
    # y in body + x  <=>  A (y - x) <= b  <=>  (-A) y >= -(b + A x)
    est = mc_sphere_fraction(rho, -A, -(b + A @ x), samples=3_000_000, seed=5)
    assert bd.sphere_body_section_area(name, x, rho) == pytest.approx(est, rel=2e-2)


# cap counts ------------------------------------------------------------------


@pytest.mark.parametrize("name, value", [("O", 26.3004), ("C", 26.3724)])
def test_cap_bound_with_inscribed_caps(name, value):
    prm = bd.parameters(name)
    out = bd.cap_bound(prm.rho, prm.cap)
    assert out["value"] == pytest.approx(value, abs=1e-3)
    assert out["bound"] == 26
    assert out["molnar_value"] == pytest.approx(bd.MOLNAR * out["plain"], rel=1e-14)


def test_cap_bound_plain_flag_and_limits():
    out = bd.cap_bound(1.0, 0.5, molnar=False)
    assert out["value"] == out["plain"] == pytest.approx(8 * math.pi)
    assert out["bound"] == 25
    assert bd.cap_bound(1.0, 4 * math.pi, molnar=True)["bound"] == 0
    for mu in (0.0, -1.0, float("nan")):
        with pytest.raises(NonpositiveMu):
            bd.cap_bound(1.0, mu)


# minimal sections over the domains ------------------------------------------


@pytest.mark.parametrize("name", ["O", "C"])
def test_domain_contains_expected_minimizer(name):
    dom = bd.reference_domain(name)
    assert dom.contains(bd.expected_minimizer(name))[0]
    assert not dom.contains(np.zeros(3) + 1e-3)[0]


@pytest.mark.parametrize("name", ["O", "C"])
def test_coarse_search_finds_minimizer(name, derived):
    res = bd.mu_min(name, bd.reference_domain(name), bd.parameters(name).rho, samples_per_axis=9)
    assert np.linalg.norm(res.minimizer - bd.expected_minimizer(name)) <= 1e-3
    assert res.mu == pytest.approx(derived["mu_at_expected_minimizer"][name], rel=1e-7)
    assert res.mu > bd.parameters(name).cap


def test_small_colony_gives_empty_domain():
    dom = bd.reference_domain("O")
    small = bd.Domain(dom.body, 0.5, dom.corners, dom.normals)
    with pytest.raises(EmptyDomain):
        bd.mu_min("O", small, bd.parameters("O").rho, samples_per_axis=5)


def test_report_table_and_json():
    rep = bd.bound_report("O", refined=False)
    assert rep.table().splitlines() == ["steiner: 40", "cap: 26"]
    assert '"body": "O"' in rep.to_json()
