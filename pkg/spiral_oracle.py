#!/usr/bin/env python3
"""
Independent numerical checks of the closed-form spiral fields.

Biot-Savart: for a family satisfying the compatibility conditions, the
velocity at ζ = r e^{iθ} is w = e^{iθ} conj(2a I) with

    I = (1/2πi) ∫_ℝ Σ_k g_k e^{2aσ} / (r - e^{(a+i)σ + iΔ_k}) dσ,   Δ_k = θ_k - θ.

The integrand grows like e^{aσ} for σ → +∞ in that form; on [σ_split, ∞) the
equivalent form Σ_k g_k r² e^{-2iσ-2iΔ_k} / (r - e^{(a+i)σ+iΔ_k}) is used, which
decays like e^{-aσ}. Both agree pointwise exactly when the compatibility sums
vanish. The poles sit at

    σ_j = ((a-i) ln r - (2πj + Δ_k)(1+ai)) / (1+a²)

and adaptive subdivision is seeded at their real parts.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from spiral_constraint import compatibility_check
from spiral_errors import (CompatibilityViolated, InvalidArgument, NonPositiveTime, OnSheet,
                           QuadratureBudgetExceeded, StencilCrossesSheet, ToleranceNotMet)
from spiral_field import evaluate_arrays, potential_with_winding, sheet_trace
from spiral_geometry import (ON_SHEET_TOL, check_off_sheet, locate_point, normal_distance_estimate,
                             sheet_point, winding_numbers)
from spiral_model import TWO_PI, PolarPoint, SpiralFamily

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error_estimate: float
    splits: int
    tail_cutoffs: Tuple[float, float]
    velocity: complex = 0j


def _phase_offsets(family: SpiralFamily, theta: float) -> np.ndarray:
    return family.theta_array - theta


def integrand_forms(family: SpiralFamily, r: float, theta: float, sigma) -> Tuple[np.ndarray, np.ndarray]:
    """Both Biot-Savart integrands at real σ (arrays broadcast over σ)"""
    a = family.a
    sigma = np.asarray(sigma, dtype=float)[..., None]
    delta = _phase_offsets(family, theta)
    E = np.exp(complex(a, 1.0) * sigma + 1j * delta)
    g = family.g_array
    growing = np.sum(g * np.exp(2.0 * a * sigma) / (r - E), axis=-1)
    decaying = np.sum(g * r * r * np.exp(-2j * sigma - 2j * delta) / (r - E), axis=-1)
    return growing, decaying


def biot_savart_closed_form(family: SpiralFamily, r: float, theta: float) -> complex:
    """(1/2πi)∫f dσ = Σ_k g_k r^{iA} e^{AΔ_k} e^{2πJ_k A} / (r(a+i)(1-e^{2πA}))"""
    winding = winding_numbers(family, r, theta)
    Phi = potential_with_winding(family, math.log(r), theta, winding)
    return complex(Phi) / (r * complex(family.a, 1.0))


def pole_real_parts(family: SpiralFamily, r: float, theta: float,
                    lo: float, hi: float) -> Tuple[np.ndarray, np.ndarray]:
    """(Re σ_j, |Im σ_j|) for every pole with Re σ_j in [lo, hi]"""
    a = family.a
    log_r = math.log(r)
    denom = 1.0 + a * a
    real_parts, imag_parts = [], []
    for delta in _phase_offsets(family, theta):
        j_lo = math.ceil((a * log_r - delta - denom * hi) / TWO_PI)
        j_hi = math.floor((a * log_r - delta - denom * lo) / TWO_PI)
        j = np.arange(j_lo, j_hi + 1)
        phase = TWO_PI * j + delta
        real_parts.append((a * log_r - phase) / denom)
        imag_parts.append(np.abs(a * phase + log_r) / denom)
    return np.concatenate(real_parts), np.concatenate(imag_parts)


def tail_cutoffs(family: SpiralFamily, r: float, budget: float,
                 sigma_split: float = 0.0) -> Tuple[float, float]:
    """σ₋, σ₊ beyond which each tail contributes less than budget"""
    a = family.a
    total_g = family.total_abs_circulation
    # σ ≤ σ₋: |r - E| ≥ r/2, tail ≤ Σ|g| e^{2aσ₋}/(a r)
    sigma_minus = min(math.log(r / 2.0) / a,
                      math.log(budget * a * r / total_g) / (2.0 * a),
                      sigma_split - 1.0)
    # σ ≥ σ₊: |r - E| ≥ e^{aσ}/2, tail ≤ 2r²Σ|g| e^{-aσ₊}/a
    sigma_plus = max(math.log(2.0 * r) / a,
                     math.log(2.0 * r * r * total_g / (a * budget)) / a,
                     sigma_split + 1.0)
    return sigma_minus, sigma_plus


def biot_savart_quadrature(family: SpiralFamily, z: complex, t: float = 1.0, tol: float = 1e-8,
                           sigma_split: float = 0.0, max_splits: int = 20000,
                           on_sheet_tol: float = ON_SHEET_TOL) -> QuadratureResult:
    """Velocity at (z, t) by real-line quadrature of the Biot-Savart integral.

    tol bounds the absolute error of the returned velocity.
    """
    if not t > 0:
        raise NonPositiveTime(f"time must be positive, got {t}")
    compat = compatibility_check(family)
    if not compat.holds:
        raise CompatibilityViolated(
            f"compatibility sums {abs(compat.compat1):.3e}, {abs(compat.compat2):.3e} do not vanish; "
            "the Biot-Savart integral diverges")

    mu, a = family.mu, family.a
    p = PolarPoint.from_complex(z / t ** mu)
    check_off_sheet(family, p, on_sheet_tol)
    r, theta = p.r, p.theta

    # velocity error = 2a t^{μ-1} × integral error
    target = tol / (2.0 * a * t ** (mu - 1.0))
    sigma_minus, sigma_plus = tail_cutoffs(family, r, target / 10.0, sigma_split)

    centres, widths = pole_real_parts(family, r, theta, sigma_minus, sigma_plus)
    seeds = [sigma_minus, sigma_split, sigma_plus]
    seeds.extend(centres.tolist())
    close = widths < 1.0
    seeds.extend((centres[close] - widths[close]).tolist())
    seeds.extend((centres[close] + widths[close]).tolist())
    seeds = np.unique(np.clip(seeds, sigma_minus, sigma_plus))

    # the growing form left of the split, the decaying form right of it
    pieces = ((sigma_minus, sigma_split, 0), (sigma_split, sigma_plus, 1))
    share = 0.4 * target
    total, error, splits, seed_intervals = 0j, 0.0, 0, 0
    for lo, hi, form in pieces:
        interior = seeds[(seeds > lo) & (seeds < hi)]

        def integrand(sigma, form=form):
            return np.atleast_1d(integrand_forms(family, r, theta, sigma)[form])

        part, part_error, info = integrate.quad_vec(
            integrand, lo, hi, epsabs=share, epsrel=0.0, limit=interior.size + 1 + max_splits,
            points=interior, quadrature='gk15', full_output=True)
        if info.status != 0 and part_error > share:
            raise ToleranceNotMet(
                f"quadrature error {part_error:.3e} above {share:.3e} on [{lo:.2f}, {hi:.2f}] "
                f"after {len(info.intervals)} intervals")
        total += complex(part[0])
        error += float(part_error)
        seed_intervals += interior.size + 1
        splits += len(info.intervals) - (interior.size + 1)

    value = total / (2j * math.pi)
    error /= 2.0 * math.pi
    velocity = t ** (mu - 1.0) * cmath.exp(1j * theta) * (2.0 * a * value).conjugate()

    logger.debug(f"Biot-Savart at z={z}: {seed_intervals} seed intervals, {splits} splits, "
                 f"window [{sigma_minus:.2f}, {sigma_plus:.2f}]")
    return QuadratureResult(value=value, error_estimate=error, splits=splits,
                            tail_cutoffs=(sigma_minus, sigma_plus), velocity=velocity)


def residue_sum(family: SpiralFamily, r: float, theta: float, terms: int = 60) -> Tuple[complex, float]:
    """-Σ res(f, σ_j) over the poles j ≥ J_k in the lower half plane.

    Returns the sum and the sum of the term magnitudes (a scale for
    relative comparisons).
    """
    a = family.a
    ai = complex(a, 1.0)
    log_r = math.log(r)
    J = winding_numbers(family, r, theta)
    total = 0j
    scale = 0.0
    for k, (g_k, delta) in enumerate(zip(family.g, _phase_offsets(family, theta))):
        j = np.arange(J[k], J[k] + terms)
        sigma = (complex(a, -1.0) * log_r - (TWO_PI * j + delta) * complex(1.0, a)) / (1.0 + a * a)
        residues = -g_k * np.exp(2.0 * a * sigma) / (ai * np.exp(ai * sigma + 1j * delta))
        total -= np.sum(residues)
        scale += float(np.sum(np.abs(residues)))
    return complex(total), scale


def euler_scale(family: SpiralFamily, z: complex) -> float:
    """Magnitude of the individual terms of the self-similar Euler equation at z"""
    p = PolarPoint.from_complex(z)
    w, _, _ = evaluate_arrays(family, p.r, p.theta)
    speed = float(abs(w))
    return speed * speed / p.r + (1.0 + abs(family.mu)) * speed


def interior_euler_residual(family: SpiralFamily, z: complex, h: float,
                            on_sheet_tol: float = ON_SHEET_TOL) -> float:
    """Max-norm of ∇q + (μ-1)w - μ(z·∇)w + (w·∇)w by central differences"""
    try:
        location = locate_point(family, PolarPoint.from_complex(z), tol=on_sheet_tol)
    except OnSheet:
        raise StencilCrossesSheet(f"z={z} lies on the sheet")
    if location.distance <= 4.0 * h:
        raise StencilCrossesSheet(
            f"z={z} is {location.distance:.3e} from the sheet, stencil needs more than {4.0 * h:.3e}")

    stencil = np.array([z, z + h, z - h, z + 1j * h, z - 1j * h])
    w, _, q = evaluate_arrays(family, np.abs(stencil), np.angle(stencil))
    w0 = w[0]
    w_x = (w[1] - w[2]) / (2.0 * h)
    w_y = (w[3] - w[4]) / (2.0 * h)
    grad_q = complex((q[1] - q[2]) / (2.0 * h), (q[3] - q[4]) / (2.0 * h))

    mu = family.mu
    residual = (grad_q + (mu - 1.0) * w0 - mu * (z.real * w_x + z.imag * w_y)
                + (w0.real * w_x + w0.imag * w_y))
    return float(max(abs(residual.real), abs(residual.imag)))


class MatchingResiduals(NamedTuple):
    vel: np.ndarray
    pres: np.ndarray


def matching_residuals(family: SpiralFamily, samples: Iterable[Tuple[int, float]]) -> MatchingResiduals:
    """Normal pseudovelocity and pressure jump on the sheet at t = 1.

    vel = Re(i dZ conj(w_avg - μZ)) / |Z|², pres = (q_R - q_L) / (g_m |Z|²);
    both are independent of θ along a branch.
    """
    vel, pres = [], []
    for m, theta in samples:
        point = sheet_point(family, m, theta, 1.0)
        trace = sheet_trace(family, m, theta, 1.0)
        growth = abs(point.Z) ** 2
        pseudo = trace.average - family.mu * point.Z
        vel.append((1j * point.dZ * pseudo.conjugate()).real / growth)
        pres.append((trace.q_right - trace.q_left) / (family.g[m] * growth))
    return MatchingResiduals(np.asarray(vel), np.asarray(pres))


# Weak form

@dataclass(frozen=True)
class QuadSpec:
    cells: int = 48
    time_nodes: int = 16
    refine_levels: int = 4
    bump_power: int = 8
    radius: float = 1.0
    t_center: float = 1.0
    t_half_width: float = 0.25
    max_points: int = 20000000

    @classmethod
    def from_settings(cls, section: dict) -> 'QuadSpec':
        names = cls.__dataclass_fields__.keys()
        return cls(**{k: v for k, v in section.items() if k in names})


@dataclass(frozen=True)
class TestField:
    """Curl of ψ = (1-|x-x₀|²/R²)^p_+ (1-((t-t₀)/T)²)^p_+"""
    __test__ = False

    center: complex
    radius: float
    t_center: float
    t_half_width: float


def random_test_fields(count: int, spec: QuadSpec, rng: np.random.Generator) -> List[TestField]:
    fields = []
    for _ in range(count):
        distance = rng.uniform(1.25 * spec.radius, 3.0 * spec.radius)
        angle = rng.uniform(0.0, TWO_PI)
        fields.append(TestField(cmath.rect(distance, angle), spec.radius,
                                spec.t_center, spec.t_half_width))
    return fields


def _refined_offsets(levels: int) -> np.ndarray:
    n = 2 ** levels
    u = (np.arange(n) + 0.5) / n - 0.5
    U, V = np.meshgrid(u, u)
    return (U + 1j * V).ravel()


def _weak_integrands(family: SpiralFamily, points: np.ndarray, t: float, test: TestField,
                     power: int, chi: float, dchi: float) -> Tuple[np.ndarray, np.ndarray]:
    mu = family.mu
    zeta = points / t ** mu
    w, _, _ = evaluate_arrays(family, np.abs(zeta), np.angle(zeta))
    v = t ** (mu - 1.0) * w
    v1, v2 = v.real, v.imag

    R2 = test.radius ** 2
    X = points.real - test.center.real
    Y = points.imag - test.center.imag
    u = np.clip(1.0 - (X * X + Y * Y) / R2, 0.0, None)
    db = -power / R2 * u ** (power - 1)
    ddb = power * (power - 1) / (R2 * R2) * u ** (power - 2)

    psi_xx = (2.0 * db + 4.0 * X * X * ddb) * chi
    psi_yy = (2.0 * db + 4.0 * Y * Y * ddb) * chi
    psi_xy = 4.0 * X * Y * ddb * chi
    dt_phi1 = -2.0 * Y * db * dchi
    dt_phi2 = 2.0 * X * db * dchi

    # φ = (-ψ_y, ψ_x): Σ v_i v_j ∂_iφ_j = (v2² - v1²)ψ_xy + v1 v2 (ψ_xx - ψ_yy)
    signed = (v1 * dt_phi1 + v2 * dt_phi2
              + (v2 * v2 - v1 * v1) * psi_xy + v1 * v2 * (psi_xx - psi_yy))
    speed = np.abs(v)
    grad_norm = np.sqrt(psi_xx ** 2 + psi_yy ** 2 + 2.0 * psi_xy ** 2)
    magnitude = speed * np.hypot(dt_phi1, dt_phi2) + speed * speed * grad_norm
    return signed, magnitude


def weak_form_ratio(family: SpiralFamily, test: TestField, spec: QuadSpec) -> Tuple[float, int]:
    """|∫∫ v·∂_tφ + v_i v_j ∂_iφ_j| / ∫∫ (|v||∂_tφ| + |v|²|∇φ|) and the node count"""
    if abs(test.center) < 1.25 * test.radius:
        raise InvalidArgument("test field support must stay R/4 away from the origin")
    if test.t_center - test.t_half_width <= 0.0:
        raise NonPositiveTime("test field support must lie in t > 0")
    if spec.bump_power < 3:
        raise InvalidArgument(f"bump power must be at least 3 for a C¹ test field, got {spec.bump_power}")

    n = spec.cells
    power = spec.bump_power
    h = 2.0 * test.radius / n
    offsets = (np.arange(n) + 0.5) * h - test.radius
    OX, OY = np.meshgrid(offsets, offsets)
    cells = test.center + (OX + 1j * OY).ravel()
    cells = cells[np.abs(cells - test.center) < test.radius + h]
    sub_offsets = _refined_offsets(spec.refine_levels) * h
    sub_weight = (h / 2 ** spec.refine_levels) ** 2

    dt = 2.0 * test.t_half_width / spec.time_nodes
    numerator = 0.0
    denominator = 0.0
    points_used = 0
    refined_cells = 0
    for j in range(spec.time_nodes):
        tau = -1.0 + (j + 0.5) * 2.0 / spec.time_nodes
        t = test.t_center + tau * test.t_half_width
        chi = (1.0 - tau * tau) ** power
        dchi = -2.0 * power * tau / test.t_half_width * (1.0 - tau * tau) ** (power - 1)

        zeta = cells / t ** family.mu
        gap = normal_distance_estimate(family, np.abs(zeta), np.angle(zeta)) * t ** family.mu
        near = gap < 2.0 * h

        coarse = cells[~near]
        fine = (cells[near][:, None] + sub_offsets[None, :]).ravel()
        points_used += coarse.size + fine.size
        refined_cells += int(np.count_nonzero(near))
        if points_used > spec.max_points:
            raise QuadratureBudgetExceeded(
                f"weak-form quadrature needs more than {spec.max_points} nodes")

        for points, weight in ((coarse, h * h), (fine, sub_weight)):
            if points.size == 0:
                continue
            signed, magnitude = _weak_integrands(family, points, t, test, power, chi, dchi)
            numerator += weight * dt * float(np.sum(signed))
            denominator += weight * dt * float(np.sum(magnitude))

    logger.debug(f"Test field at {test.center:.3f}: {points_used} nodes, "
                 f"{refined_cells} refined cell-slices")
    ratio = abs(numerator) / denominator if denominator > 0.0 else 0.0
    return ratio, points_used


def weak_form_residual(family: SpiralFamily, test_count: int = 6, quad_spec: Optional[QuadSpec] = None,
                       seed: int = 0, fields: Optional[Sequence[TestField]] = None) -> List[float]:
    """Weak Euler residual ratio for each test field"""
    spec = quad_spec or QuadSpec()
    if fields is None:
        if test_count < 1:
            raise InvalidArgument(f"need at least one test field, got test_count={test_count}")
        fields = random_test_fields(test_count, spec, np.random.default_rng(seed))
    if len(fields) == 0:
        raise InvalidArgument("need at least one test field")
    ratios = []
    for test in fields:
        ratio, _ = weak_form_ratio(family, test, spec)
        ratios.append(ratio)
    logger.info(f"Weak-form ratios over {len(ratios)} test fields: max {max(ratios):.3e}")
    return ratios
