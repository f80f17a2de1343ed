"""Biot-Savart quadrature, finite-difference Euler residuals and the weak form"""

import cmath
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from spiral_constraint import constraint_report
from spiral_errors import (CompatibilityViolated, InvalidArgument, NonPositiveTime, OnSheet,
                           QuadratureBudgetExceeded, StencilCrossesSheet, ToleranceNotMet)
from spiral_field import profile_w
from spiral_geometry import normal_distance_estimate, sheet_point
from spiral_model import TWO_PI, PolarPoint, SpiralFamily, alexander_family
from spiral_oracle import (QuadSpec, TestField, biot_savart_closed_form,
                           biot_savart_quadrature, euler_scale, integrand_forms,
                           interior_euler_residual, matching_residuals, random_test_fields,
                           residue_sum, weak_form_ratio, weak_form_residual)


@pytest.fixture
def compatible():
    """M = 3 symmetric family with μ = 1/2; compatible but not a solution"""
    return alexander_family(1.0, 3, 1.0, 0.5)


def test_biot_savart_quadrature_budget(compatible):
    with pytest.raises(ToleranceNotMet):
        biot_savart_quadrature(compatible, 0.5 + 0.2j, tol=1e-15, max_splits=1)


def test_integrand_forms_agree_under_compatibility(compatible):
    sigma = np.linspace(-5.0, 5.0, 101)
    growing, decaying = integrand_forms(compatible, 0.7, 0.4, sigma)
    E = np.exp(complex(1.0, 1.0) * sigma[:, None] + 1j * (compatible.theta_array - 0.4))
    scale = np.sum((np.exp(2.0 * sigma[:, None]) + 0.49) / np.abs(0.7 - E), axis=-1)
    assert np.max(np.abs(growing - decaying) / scale) < 1e-12


@pytest.mark.numerical
def test_residue_sum_matches_closed_form(prandtl, compatible):
    for family in (prandtl, compatible):
        for r, theta in ((0.5, 0.0), (1.7, 2.2), (0.05, -4.0)):
            total, scale = residue_sum(family, r, theta)
            assert abs(total - biot_savart_closed_form(family, r, theta)) < 1e-13 * scale


def test_closed_form_reproduces_velocity(compatible):
    p = PolarPoint(0.6, 1.1)
    value = biot_savart_closed_form(compatible, p.r, p.theta)
    velocity = cmath.exp(1j * p.theta) * (2.0 * compatible.a * value).conjugate()
    assert_allclose(velocity, profile_w(compatible, p), rtol=1e-13)


@pytest.mark.slow
def test_biot_savart_quadrature_matches_closed_form(compatible):
    z = 0.5 + 0.2j
    result = biot_savart_quadrature(compatible, z, 1.0, tol=1e-8)
    assert abs(result.velocity - profile_w(compatible, PolarPoint.from_complex(z))) < 1e-8
    assert result.tail_cutoffs[0] < 0.0 < result.tail_cutoffs[1]


@pytest.mark.slow
def test_biot_savart_quadrature_at_later_time(compatible):
    z, t = 0.9 - 0.4j, 2.0
    result = biot_savart_quadrature(compatible, z, t, tol=1e-8)
    expected = t ** (compatible.mu - 1.0) * profile_w(
        compatible, PolarPoint.from_complex(z / t ** compatible.mu))
    assert abs(result.velocity - expected) < 1e-8


@pytest.mark.slow
def test_biot_savart_independent_of_split(compatible):
    z = 0.3 + 0.8j
    values = [biot_savart_quadrature(compatible, z, tol=1e-10, sigma_split=split).velocity
              for split in (-1.5, 0.0, 2.0)]
    assert max(abs(v - values[1]) for v in values) < 3e-10


@pytest.mark.slow
def test_biot_savart_on_random_symmetric_families():
    rng = np.random.default_rng(5)
    for _ in range(5):
        family = alexander_family(float(rng.uniform(0.5, 2.0)), 3, float(rng.uniform(0.5, 2.0)),
                                  float(rng.uniform(-0.5, 0.5)))
        checked = 0
        while checked < 20:
            r, theta = 10.0 ** rng.uniform(-0.5, 0.5), rng.uniform(-math.pi, math.pi)
            if normal_distance_estimate(family, r, theta) < 1e-3 * r:
                continue
            w = profile_w(family, PolarPoint(r, theta))
            result = biot_savart_quadrature(family, cmath.rect(r, theta), tol=1e-7 * abs(w))
            assert abs(result.velocity - w) < 1e-6 * abs(w)
            checked += 1


def test_biot_savart_requires_compatibility(alexander2):
    with pytest.raises(CompatibilityViolated):
        biot_savart_quadrature(alexander2, 0.5 + 0.2j)


def test_biot_savart_rejects_sheet_points(compatible):
    Z = sheet_point(compatible, 0, 0.3).Z
    with pytest.raises(OnSheet):
        biot_savart_quadrature(compatible, Z)


@pytest.mark.numerical
def test_euler_holds_for_any_parameters():
    family = alexander_family(1.0, 1, 1.0, 0.7)
    z = 0.5 + 0.5j
    w = profile_w(family, PolarPoint.from_complex(z))
    residual = interior_euler_residual(family, z, 1e-5)
    assert residual < 1e-6 * abs(w) ** 2 / abs(z)
    assert residual < 1e-6 * euler_scale(family, z)


def test_euler_residual_is_second_order(asymmetric):
    z = 1.7 * cmath.exp(2.9j)
    coarse = interior_euler_residual(asymmetric, z, 1e-3)
    fine = interior_euler_residual(asymmetric, z, 5e-4)
    assert 3.0 < coarse / fine < 5.0


def test_euler_stencil_must_clear_sheet(unit_spiral):
    point = sheet_point(unit_spiral, 0, 0.3)
    with pytest.raises(StencilCrossesSheet):
        interior_euler_residual(unit_spiral, point.Z + 1e-6 * point.normal, 1e-5)
    with pytest.raises(StencilCrossesSheet):
        interior_euler_residual(unit_spiral, point.Z, 1e-5)


def test_euler_stencil_must_clear_steep_sheet():
    family = SpiralFamily(a=1000.0, mu=0.0, g=(1.0, 0.5), theta=(0.0, 2.0))
    point = sheet_point(family, 0, 1e-3)
    size = abs(point.Z)
    with pytest.raises(StencilCrossesSheet):
        interior_euler_residual(family, point.Z + 1e-3 * size * point.normal, 2e-3 * size)


def test_matching_residuals_vanish_on_solutions(alexander3):
    samples = [(m, theta) for m in range(3) for theta in (-2.0, 0.0, 1.5)]
    residuals = matching_residuals(alexander3, samples)
    assert np.max(np.abs(residuals.vel)) < 1e-10
    assert np.max(np.abs(residuals.pres)) < 1e-10


@pytest.mark.numerical
def test_matching_residuals_track_constraint(prandtl, asymmetric):
    residuals = matching_residuals(prandtl.replace(mu=0.1), [(0, 0.0), (0, 2.5)])
    assert_allclose(residuals.vel, [0.1, 0.1], atol=1e-12)
    assert_allclose(residuals.pres, [-0.1, -0.1], atol=1e-12)

    report = constraint_report(asymmetric)
    a = asymmetric.a
    samples = [(m, 0.4) for m in range(3)]
    residuals = matching_residuals(asymmetric, samples)
    assert_allclose(residuals.vel, a * report.residual.imag, atol=1e-11)
    assert_allclose(residuals.pres, 2 * a * a / (a * a + 1) * report.residual.real, atol=1e-11)


@pytest.mark.numerical
def test_matching_residuals_track_constraint_on_random_families():
    rng = np.random.default_rng(12)
    for _ in range(1000):
        M = int(rng.integers(1, 5))
        signs = rng.choice([-1.0, 1.0], M)
        family = SpiralFamily(a=float(10.0 ** rng.uniform(-0.7, 0.7)), mu=float(rng.uniform(-1.0, 1.0)),
                              g=tuple(signs * rng.uniform(0.2, 2.0, M)),
                              theta=tuple(np.sort(rng.uniform(0.0, TWO_PI, M))))
        report = constraint_report(family)
        branches = rng.integers(0, M, 2)
        samples = list(zip(branches.tolist(), rng.uniform(-1.0, 1.0, 2).tolist()))
        residuals = matching_residuals(family, samples)

        a = family.a
        atol = 1e-10 * (1.0 + np.max(np.abs(report.K)) + abs(report.rhs)) ** 2
        assert_allclose(residuals.vel, a * report.residual[branches].imag, rtol=0, atol=atol)
        assert_allclose(residuals.pres, 2 * a * a / (a * a + 1) * report.residual[branches].real,
                        rtol=0, atol=atol)


def test_random_test_fields_are_seeded():
    spec = QuadSpec()
    first = random_test_fields(5, spec, np.random.default_rng(4))
    second = random_test_fields(5, spec, np.random.default_rng(4))
    assert first == second
    for test in first:
        assert 1.25 * spec.radius <= abs(test.center) <= 3.0 * spec.radius


@pytest.mark.numerical
def test_weak_form_in_smooth_region(prandtl):
    test = TestField(center=-3.0 + 0.0j, radius=1.0, t_center=1.0, t_half_width=0.1)
    ratio, points = weak_form_ratio(prandtl, test, QuadSpec())
    assert points > 0
    assert ratio < 1e-8


@pytest.mark.slow
def test_weak_form_across_the_sheet(prandtl):
    test = TestField(center=math.e * cmath.exp(1j), radius=1.0, t_center=1.0, t_half_width=0.25)
    solved, _ = weak_form_ratio(prandtl, test, QuadSpec())
    perturbed, _ = weak_form_ratio(prandtl.replace(mu=0.2), test, QuadSpec())
    assert solved < 1e-3
    assert perturbed >= 10.0 * solved


@pytest.mark.slow
def test_weak_form_residual_of_solution(alexander3):
    ratios = weak_form_residual(alexander3, test_count=2, seed=1)
    assert len(ratios) == 2
    assert max(ratios) < 1e-3


def test_weak_form_argument_checks(prandtl):
    with pytest.raises(InvalidArgument):
        weak_form_ratio(prandtl, TestField(1.0 + 0.0j, 1.0, 1.0, 0.1), QuadSpec())
    with pytest.raises(NonPositiveTime):
        weak_form_ratio(prandtl, TestField(3.0 + 0.0j, 1.0, 0.2, 0.5), QuadSpec())
    with pytest.raises(InvalidArgument):
        weak_form_ratio(prandtl, TestField(3.0 + 0.0j, 1.0, 1.0, 0.1), QuadSpec(bump_power=2))
    with pytest.raises(QuadratureBudgetExceeded):
        weak_form_ratio(prandtl, TestField(3.0 + 0.0j, 1.0, 1.0, 0.1), QuadSpec(max_points=100))


def test_weak_form_residual_needs_test_fields(prandtl):
    with pytest.raises(InvalidArgument):
        weak_form_residual(prandtl, test_count=0)
    with pytest.raises(InvalidArgument):
        weak_form_residual(prandtl, fields=[])
