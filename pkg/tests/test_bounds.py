
import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from entgen import bounds
from entgen.bounds import PerformancePoint

Ts = st.floats(0.02, 0.98)
us = st.floats(0.01, 0.999)


def test_triangle_degenerates_at_unit_overlap():
    tri = bounds.triangle(1.0, 0.3)
    assert tri.X1 == (0.0, 0.0) == tri.X0
    assert tri.contains((0.5, 0.25))
    assert not tri.contains((0.5, 0.3))


def test_triangle_apex_spot():
    tri = bounds.triangle(0.5, 1 / 3)
    assert tri.X1[0] == pytest.approx(0.5)
    assert tri.X1[1] == pytest.approx(0.3125, abs=1e-15)


@given(us, Ts)
def test_triangle_fixed_apexes(u, T):
    tri = bounds.triangle(u, T)
    assert tri.X0 == (0.0, 0.0)
    assert tri.X2 == (1.0, 0.5)
    assert tri.contains(tri.X3)
    assert tri.contains(tri.X1)


@pytest.mark.parametrize("u, T", [(0.0, 0.5), (1.1, 0.5), (0.5, 0.0), (0.5, 1.0)])
def test_triangle_domain(u, T):
    with pytest.raises(ValueError):
        bounds.triangle(u, T)


def test_triangle_margin_sign():
    tri = bounds.triangle(0.5, 0.5)
    assert tri.margin((0.5, 0.3)) > 0
    assert tri.margin((0.5, 0.4)) < 0
    assert tri.margin(PerformancePoint(1.0, 0.5)) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("u, T, expected", [(1.0, 0.3, 1.0), (0.5, 0.5, 0.75), (0.5, 0.25, 0.5625)])
def test_fidelity_cap(u, T, expected):
    assert bounds.fidelity_cap(u, T) == pytest.approx(expected, abs=1e-15)


def test_g_polynomial_cases():
    u, z0 = 0.4, 0.3
    assert bounds.g_polynomial(0.0, z0, -0.2, u) == pytest.approx((1 - u ** 2) * (1 - z0 ** 2))
    assert bounds.g_polynomial(1 - u, 0.0, 0.0, u) == pytest.approx(0.0, abs=1e-15)
    at_one = bounds.g_polynomial(1.0, z0, z0, u)
    assert at_one == pytest.approx(-u ** 2 * (1 - z0 ** 2), abs=1e-15)
    assert at_one < 0


@given(us, Ts)
def test_tradeoff_passes_through_x1(u, T):
    tri = bounds.triangle(u, T)
    assert bounds.tradeoff_max_PsF(1 - u, u, T) == pytest.approx(tri.X1[1], abs=1e-12)
    # and the symmetric protocol at Ps = 1 - u is X1 itself
    assert (1 - u) * bounds.f_sym(1 - u, T) == pytest.approx(tri.X1[1], abs=1e-12)


def test_tradeoff_flat_at_half_transmittance():
    u = 0.3
    vals = bounds.tradeoff_max_PsF(np.linspace(0, 1 - u ** 2, 5), u, 0.5)
    np.testing.assert_allclose(vals, 0.5 * (1 - u ** 2), atol=1e-15)


def test_tradeoff_vanishes_for_indistinguishable_pulses():
    assert bounds.tradeoff_max_PsF(0.0, 1.0, 0.3) == 0.0


def test_f_sym_values():
    assert bounds.f_sym(0.0, 0.3) == 1.0
    assert bounds.f_sym(1.0, 0.3) == 0.5
    assert bounds.f_sym(0.5, 0.25) == pytest.approx(0.5625, abs=1e-15)


def test_f_opt_spot_values():
    assert bounds.f_opt(1 / 3, 0.25) == pytest.approx(35 / 54, abs=1e-12)
    assert bounds.f_opt(0.5, 0.25) == pytest.approx(0.5 + 2 / 27, abs=1e-12)
    assert bounds.f_opt(0.5, 0.25) == pytest.approx(0.574074, abs=1e-6)


def test_f_opt_both_branches_meet():
    # second branch evaluated by hand at the tangent point 1/3 for T = 1/4
    second = 0.5 + (2 / 3) / (2 / 3) * (0.25 / 0.5) * (0.5 / 0.75) ** 3
    assert second == pytest.approx(35 / 54, abs=1e-15)


@given(st.floats(0.0, 1.0), st.floats(0.5, 0.98))
def test_f_opt_is_f_sym_without_kink(Ps, T):
    assert bounds.f_opt(Ps, T) == bounds.f_sym(Ps, T)


@pytest.mark.parametrize("T", [0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45])
def test_f_opt_continuity(T):
    k = bounds.ps_star(T)
    eps = 1e-8
    assert abs(bounds.f_opt(k - eps, T) - bounds.f_opt(k + eps, T)) < 1e-6


@pytest.mark.parametrize("T", [0.05, 0.1, 0.25, 0.4, 0.45, 0.5, 0.6, 0.9])
def test_f_opt_dominance_and_concavity(T):
    grid = np.linspace(0, 1, 10_001)
    opt, sym = bounds.f_opt(grid, T), bounds.f_sym(grid, T)
    assert np.all(opt >= sym - 1e-12)
    kink = bounds.ps_star(T)
    if kink is None:
        np.testing.assert_array_equal(opt, sym)
    else:
        low = grid <= kink
        np.testing.assert_array_equal(opt[low], sym[low])
        inner = (grid > kink) & (grid < 1)
        assert np.all(opt[inner] > sym[inner])
    slopes = np.diff(grid * opt) / np.diff(grid)
    assert np.all(np.diff(slopes) <= 1e-9)


def _central(f, x, order, h):
    if order == 1:
        return (f(x + h) - f(x - h)) / (2 * h)
    return (f(x + h) - 2 * f(x) + f(x - h)) / h ** 2


@pytest.mark.parametrize("T", [0.1, 0.25, 0.4, 0.6, 0.85])
def test_derivatives_match_finite_differences(T):
    mpmath.mp.dps = 50
    Tm = mpmath.mpf(T)

    def curve(p):
        return p * (1 + (1 - p) ** ((1 - Tm) / Tm)) / 2

    h = mpmath.mpf("1e-15")
    for Ps in np.linspace(0.01, 0.97, 25):
        first, second = bounds.fsym_curve_derivatives(Ps, T)
        x = mpmath.mpf(Ps)
        d1 = float(_central(curve, x, 1, h))
        d2 = float(_central(curve, x, 2, h))
        assert first == pytest.approx(d1, rel=1e-6)
        if abs(Ps - 2 * T) > 1e-3:
            assert second == pytest.approx(d2, rel=1e-6)


def test_derivative_spots():
    assert bounds.fsym_curve_derivatives(0.0, 0.3)[0] == pytest.approx(1.0)
    assert bounds.fsym_curve_derivatives(0.5, 0.25)[1] == 0.0
    assert bounds.fsym_curve_derivatives(0.9, 0.25)[1] > 0


@pytest.mark.parametrize("T", [0.1, 0.2, 0.3, 0.45])
def test_second_derivative_sign_flip(T):
    grid = np.linspace(0, 0.999, 100_000)
    _, second = bounds.fsym_curve_derivatives(grid, T)
    assert np.all(second[grid > 2 * T] > 0)
    assert np.all(second[grid <= 2 * T] <= 0)


def test_mix():
    p1, p2 = PerformancePoint(0.4, 0.7), PerformancePoint(1.0, 0.5)
    same = bounds.mix(p1, p2, 1.0)
    assert same.Ps == p1.Ps and same.F == pytest.approx(p1.F, abs=1e-15)
    mid = bounds.mix(PerformancePoint(0.0, None), PerformancePoint(1.0, 0.5), 0.5)
    assert mid.Ps == 0.5 and mid.F == pytest.approx(0.5)
    assert bounds.mix(PerformancePoint(0.0, None), PerformancePoint(0.0, None), 0.3).vacuous
    with pytest.raises(ValueError):
        bounds.mix(p1, p2, 1.5)


@given(us, Ts, st.floats(0, 1))
def test_mixing_x1_and_x2_stays_on_edge(u, T, r):
    tri = bounds.triangle(u, T)
    x1 = PerformancePoint.from_plane(*tri.X1)
    m = bounds.mix(x1, PerformancePoint(1.0, 0.5), r)
    assert abs(tri.margin(m)) < 1e-12


def test_hull_collinear():
    pts = [(0, 0), (0.25, 0.25), (0.5, 0.5), (1, 1)]
    np.testing.assert_array_equal(bounds.upper_convex_hull(pts), [[0, 0], [1, 1]])


def test_hull_needs_two_points():
    with pytest.raises(ValueError):
        bounds.upper_convex_hull([(0, 0)])


def test_hull_of_concave_curve_is_the_curve():
    x = np.linspace(0, 1, 50)
    curve = np.column_stack([x, x * (2 - x) / 2])
    rng = np.random.default_rng(3)
    below = np.column_stack([rng.random(200), rng.random(200) * 0.3])
    below = below[below[:, 1] < below[:, 0] * (2 - below[:, 0]) / 2]
    hull = bounds.upper_convex_hull(np.vstack([curve, below]))
    np.testing.assert_allclose(hull, curve)


@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=2, max_size=40))
def test_hull_properties(points):
    pts = np.array(points)
    hull = bounds.upper_convex_hull(pts)
    assert np.all(np.diff(hull[:, 0]) > 0)
    np.testing.assert_array_equal(bounds.upper_convex_hull(hull), hull) if len(hull) >= 2 else None
    # every input point lies on or below the polyline
    heights = bounds.hull_ordinate(hull, pts[:, 0])
    assert np.all(pts[:, 1] <= heights + 1e-9 * (1 + np.abs(heights)))


def test_hull_reproduces_optimal_curve():
    T = 0.25
    grid = np.linspace(0, 1, 10_000)
    hull = bounds.upper_convex_hull(np.column_stack([grid, grid * bounds.f_sym(grid, T)]))
    at_half = bounds.hull_ordinate(hull, 0.5)
    assert at_half == pytest.approx(0.5 * bounds.f_opt(0.5, T), abs=1e-4)
    assert at_half == pytest.approx(0.287037, abs=1e-4)
    assert at_half > 0.5 * bounds.f_sym(0.5, T) == 0.28125


def test_performance_point_validation():
    with pytest.raises(ValueError):
        PerformancePoint(1.5, 0.6)
    with pytest.raises(ValueError):
        PerformancePoint(0.5, None)
    assert PerformancePoint(0.0, None).plane == (0.0, 0.0)
