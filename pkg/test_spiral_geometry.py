"""Winding numbers, sheet parametrization and point location"""

import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.optimize import minimize_scalar

from spiral_errors import BranchOutOfRange, NonPositiveTime, OnSheet
from spiral_geometry import (locate_point, normal_distance_estimate, on_sheet_mask, radial_gap,
                             region_index, sheet_point, winding_limits, winding_number,
                             winding_numbers, winding_vector)
from spiral_model import TWO_PI, PolarPoint, SpiralFamily


def brute_force_winding(a, theta_k, r, theta, span=10 ** 4):
    """Least j with a(2πj + θ_k - θ) + ln r > 0, by enumeration"""
    js = np.arange(-span, span + 1)
    admissible = js[a * (TWO_PI * js + theta_k - theta) + math.log(r) > 0.0]
    return int(admissible.min())


@pytest.mark.numerical
def test_winding_number_reference_points(unit_spiral):
    assert winding_number(unit_spiral, PolarPoint(1.0, 0.0), 0) == 1
    assert winding_number(unit_spiral, PolarPoint(math.exp(math.pi), 0.0), 0) == 0


@pytest.mark.property
@given(st.floats(min_value=-12.0, max_value=12.0), st.floats(min_value=-30.0, max_value=30.0),
       st.integers(min_value=-5, max_value=5))
@settings(max_examples=300, deadline=None)
def test_winding_shifts_with_whole_turns(log_r, theta, turns):
    family = SpiralFamily(a=0.6, mu=0.0, g=(1.0, 2.0), theta=(0.5, 3.0))
    p = PolarPoint(math.exp(log_r), theta)
    assume(not on_sheet_mask(family, p.r, p.theta))
    base = winding_vector(family, p)
    shifted = winding_vector(family, p.shifted(turns))
    assert [j + turns for j in base] == list(shifted)


def test_winding_agrees_with_enumeration():
    family = SpiralFamily(a=0.4, mu=0.0, g=(1.0, 1.0, 1.0), theta=(0.0, 1.0, 4.0))
    rng = np.random.default_rng(7)
    r = 10.0 ** rng.uniform(-6, 6, 300)
    theta = rng.uniform(-20, 20, 300)
    J = winding_numbers(family, r, theta)
    for i in range(300):
        for k in range(family.M):
            assert J[i, k] == brute_force_winding(family.a, family.theta[k], r[i], theta[i])


def test_winding_band_bounds():
    family = SpiralFamily(a=1.3, mu=0.0, g=(1.0,), theta=(2.0,))
    rng = np.random.default_rng(3)
    r = 10.0 ** rng.uniform(-6, 6, 10000)
    theta = rng.uniform(-20, 20, 10000)
    J = winding_numbers(family, r, theta)[:, 0]
    s = (theta - 2.0 - np.log(r) / 1.3) / TWO_PI
    assert np.all(s < J)
    assert np.all(J <= s + 1)


@pytest.mark.parametrize('m, k, expected', [(1, 1, (0, 1)), (2, 0, (1, 1)), (0, 2, (0, 0))])
def test_winding_limits_on_branch(m, k, expected):
    family = SpiralFamily(a=1.0, mu=0.0, g=(1.0, 1.0, 1.0), theta=(0.0, 2.0, 4.0))
    assert winding_limits(family, m, 0.7, k) == expected


def test_winding_limits_match_nearby_points():
    family = SpiralFamily(a=1.0, mu=0.0, g=(1.0, 1.0, 1.0), theta=(0.0, 2.0, 4.0))
    m, theta = 1, 0.7
    r = math.exp(family.a * (theta - family.theta[m]))
    right = winding_numbers(family, r, theta - 1e-8)
    left = winding_numbers(family, r, theta + 1e-8)
    for k in range(family.M):
        assert (right[k], left[k]) == winding_limits(family, m, theta, k)


def test_branch_index_checked(unit_spiral):
    with pytest.raises(BranchOutOfRange):
        winding_limits(unit_spiral, 1, 0.0, 0)
    with pytest.raises(BranchOutOfRange):
        sheet_point(unit_spiral, -1, 0.0)


@pytest.mark.numerical
def test_sheet_point_reference_values(unit_spiral):
    point = sheet_point(unit_spiral, 0, 0.0, 1.0)
    assert_allclose(point.Z, 1.0, atol=1e-15)
    assert_allclose(point.dZ, 1.0 + 1.0j, atol=1e-15)
    assert_allclose(point.gamma, math.sqrt(2.0), rtol=1e-15)
    assert_allclose(point.normal, 1j * (1.0 + 1.0j) / math.sqrt(2.0), atol=1e-15)


@pytest.mark.property
@given(st.floats(min_value=-8.0, max_value=8.0), st.floats(min_value=0.1, max_value=10.0),
       st.floats(min_value=-1.0, max_value=1.0))
@settings(max_examples=200, deadline=None)
def test_sheet_tangent_ratio_is_a_plus_i(theta, t, mu):
    family = SpiralFamily(a=0.9, mu=mu, g=(1.0, -0.5), theta=(0.0, 3.0))
    point = sheet_point(family, 1, theta, t)
    assert_allclose(point.dZ / point.Z, complex(0.9, 1.0), rtol=1e-14)
    assert_allclose(point.Gamma, -0.5 * abs(point.Z) ** 2 / t, rtol=1e-12)


def test_sheet_point_rejects_non_positive_time(unit_spiral):
    with pytest.raises(NonPositiveTime):
        sheet_point(unit_spiral, 0, 0.0, 0.0)


def test_single_branch_has_one_region(unit_spiral):
    rng = np.random.default_rng(11)
    for r, theta in zip(10.0 ** rng.uniform(-3, 3, 50), rng.uniform(-10, 10, 50)):
        assert region_index(unit_spiral, PolarPoint(r, theta)) == 0


def test_region_follows_last_crossing(alexander3):
    assert region_index(alexander3, PolarPoint(1.0, 0.1)) == 0
    assert region_index(alexander3, PolarPoint(1.0, 2.2)) == 1
    assert region_index(alexander3, PolarPoint(1.0, 4.3)) == 2
    assert region_index(alexander3, PolarPoint(1.0, 0.1 + TWO_PI)) == 0


def test_radial_gap_vanishes_on_branch(unit_spiral):
    theta = np.linspace(-3.0, 3.0, 13)
    r = np.exp(theta)
    assert_allclose(radial_gap(unit_spiral, r, theta), 0.0, atol=1e-13)
    assert np.all(on_sheet_mask(unit_spiral, r, theta))
    assert not np.any(on_sheet_mask(unit_spiral, r * 1.01, theta))


def test_normal_distance_estimate_is_first_order_exact(unit_spiral):
    point = sheet_point(unit_spiral, 0, 0.4)
    offset = 1e-6
    z = point.Z + offset * point.normal
    estimate = normal_distance_estimate(unit_spiral, abs(z), cmath.phase(z))
    assert_allclose(estimate, offset, rtol=1e-4)


@pytest.mark.numerical
def test_locate_point_distance_matches_dense_search(unit_spiral):
    z = 0.5 * cmath.exp(0.1j)
    grid = np.linspace(-30.0, 5.0, 10 ** 6)
    values = np.abs(z - np.exp(grid) * np.exp(1j * grid))
    best = int(np.argmin(values))
    refined = minimize_scalar(lambda tp: abs(z - cmath.exp(complex(tp, tp))),
                              bounds=(grid[best - 1], grid[best + 1]), method='bounded',
                              options={'xatol': 1e-13})
    location = locate_point(unit_spiral, PolarPoint.from_complex(z))
    assert location.region == 0
    assert_allclose(location.distance, refined.fun, rtol=1e-8)


def test_locate_point_rejects_sheet_points(unit_spiral):
    with pytest.raises(OnSheet):
        locate_point(unit_spiral, PolarPoint(math.exp(0.3), 0.3))


def test_locate_point_scales_with_time():
    family = SpiralFamily(a=1.0, mu=0.5, g=(1.0,), theta=(0.0,))
    p = PolarPoint(0.5, 0.1)
    at_one = locate_point(family, p, 1.0)
    at_four = locate_point(family, p.scaled(2.0), 4.0)
    assert at_four.winding == at_one.winding
    assert_allclose(at_four.distance, 2.0 * at_one.distance, rtol=1e-9)


@pytest.mark.numerical
@pytest.mark.parametrize('a', [10.0, 1000.0])
def test_locate_point_distance_at_large_pitch(a):
    family = SpiralFamily(a=a, mu=0.0, g=(1.0, 0.5), theta=(0.0, 2.0))
    point = sheet_point(family, 0, 1.0 / a)
    offset = 1e-3 * abs(point.Z)
    location = locate_point(family, PolarPoint.from_complex(point.Z + offset * point.normal))
    assert_allclose(location.distance, offset, rtol=1e-8)


@pytest.mark.numerical
@pytest.mark.parametrize('a', [10.0, 1000.0])
def test_locate_point_large_pitch_matches_dense_search(a):
    family = SpiralFamily(a=a, mu=0.0, g=(1.0,), theta=(0.0,))
    z = 1.3 * cmath.exp(0.4j)

    def distance(u):
        return np.abs(z - np.exp(u + 1j * u / a))

    grid = np.linspace(math.log(abs(z)) - 40.0, math.log(abs(z)) + 1.0, 10 ** 6)
    values = distance(grid)
    best = int(np.argmin(values))
    refined = minimize_scalar(lambda d: float(distance(grid[best] + d)),
                              bounds=(grid[best - 1] - grid[best], grid[best + 1] - grid[best]),
                              method='bounded', options={'xatol': 1e-14})
    location = locate_point(family, PolarPoint.from_complex(z))
    assert_allclose(location.distance, refined.fun, rtol=1e-8)
