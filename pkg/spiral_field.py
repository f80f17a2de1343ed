#!/usr/bin/env python3
"""
Closed-form spiral sheet fields.

With J the winding vector at z = r e^{iθ} (θ unreduced), the complex potential
and conjugate velocity of the self-similar profile are

    Φ(z)  = Σ_k g_k exp(iA ln r + A(θ_k - θ + 2πJ_k)) / (1 - e^{2πA})
    w*(z) = iA Φ(z) / z

and the Bernoulli pressure profile is q = -Re((2μ-1)Φ - μ z w*) - |w|²/2.
Space-time fields follow from v = t^{μ-1} w(z/t^μ), p = t^{2μ-2} q(z/t^μ).
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import integrate

from spiral_errors import InvalidArgument, NonPositiveTime
from spiral_geometry import (ON_SHEET_TOL, WindingVector, check_off_sheet, on_sheet_mask,
                             region_index, region_indices, sheet_point, winding_limits,
                             winding_numbers, winding_vector)
from spiral_model import TWO_PI, PolarPoint, SpiralFamily

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FieldSample:
    w: complex
    Phi: complex
    q: float
    region: int
    winding: WindingVector


@dataclass(frozen=True)
class SheetTrace:
    w_right: complex
    w_left: complex
    jump: complex
    average: complex
    q_right: float
    q_left: float


@dataclass
class FieldGrid:
    bounds: Tuple[float, float, float, float]
    nx: int
    ny: int
    t: float
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    p: np.ndarray
    region: np.ndarray

    @property
    def on_sheet_count(self) -> int:
        return int(np.count_nonzero(self.region < 0))


def potential_with_winding(family: SpiralFamily, log_r, theta, winding) -> np.ndarray:
    """Φ for explicit winding numbers; arrays broadcast, branches on the last axis"""
    A = family.A
    log_r = np.asarray(log_r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    exponent = (1j * A) * log_r[..., None] + A * (
        family.theta_array - theta[..., None] + TWO_PI * np.asarray(winding))
    return np.exp(exponent) @ family.g_array / (1.0 - family.geometric_ratio)


def fields_with_winding(family: SpiralFamily, log_r, theta, winding):
    """(w, Φ, q) for explicit winding numbers, no on-sheet screening"""
    Phi = potential_with_winding(family, log_r, theta, winding)
    iA = 1j * family.A
    z = np.exp(np.asarray(log_r) + 1j * np.asarray(theta))
    w = np.conj(iA * Phi / z)
    mu = family.mu
    q = -np.real((2.0 * mu - 1.0 - mu * iA) * Phi) - 0.5 * np.abs(w) ** 2
    return w, Phi, q


def evaluate_arrays(family: SpiralFamily, r, theta):
    """(w, Φ, q) on arrays of polar coordinates, no on-sheet screening"""
    r = np.asarray(r, dtype=float)
    return fields_with_winding(family, np.log(r), theta, winding_numbers(family, r, theta))


def field_sample(family: SpiralFamily, p: PolarPoint, tol: float = ON_SHEET_TOL) -> FieldSample:
    check_off_sheet(family, p, tol)
    winding = winding_vector(family, p)
    w, Phi, q = fields_with_winding(family, p.log_r, p.theta, winding.as_array())
    return FieldSample(complex(w), complex(Phi), float(q), region_index(family, p), winding)


def profile_w(family: SpiralFamily, p: PolarPoint) -> complex:
    return field_sample(family, p).w


def potential_Phi(family: SpiralFamily, p: PolarPoint) -> complex:
    return field_sample(family, p).Phi


def pressure_q(family: SpiralFamily, p: PolarPoint) -> float:
    return field_sample(family, p).q


def velocity_terms(family: SpiralFamily, r, theta) -> np.ndarray:
    """Per-branch velocity terms
    e^{iθ} (2a g_k / (r(a-i))) conj(r^{iA} e^{A(θ_k-θ)} e^{2πJ_k A} / (1 - e^{2πA})),
    each factor exponentiated on its own; branches on the last axis"""
    a, A = family.a, family.A
    r = np.asarray(r, dtype=float)[..., None]
    theta = np.asarray(theta, dtype=float)[..., None]
    J = winding_numbers(family, r[..., 0], theta[..., 0])
    r_power = np.exp(1j * A * np.log(r))
    geometric = (r_power * np.exp(A * (family.theta_array - theta))
                 * np.exp(TWO_PI * A * J) / (1.0 - family.geometric_ratio))
    prefactor = 2.0 * a * family.g_array / (r * complex(a, -1.0))
    return np.exp(1j * theta) * prefactor * np.conj(geometric)


def profile_w_termwise(family: SpiralFamily, p: PolarPoint) -> complex:
    check_off_sheet(family, p)
    return complex(np.sum(velocity_terms(family, p.r, p.theta)))


def spacetime_fields(family: SpiralFamily, z: complex, t: float,
                     tol: float = ON_SHEET_TOL) -> Tuple[complex, float]:
    """(v, p) at physical point z and time t"""
    if not t > 0:
        raise NonPositiveTime(f"time must be positive, got {t}")
    mu = family.mu
    sample = field_sample(family, PolarPoint.from_complex(z / t ** mu), tol)
    return t ** (mu - 1.0) * sample.w, t ** (2.0 * mu - 2.0) * sample.q


def spacetime_arrays(family: SpiralFamily, x, y, t: float, tol: float = ON_SHEET_TOL):
    """Vectorized (v, p, region) on physical coordinates; on-sheet nodes get NaN and region -1"""
    if not t > 0:
        raise NonPositiveTime(f"time must be positive, got {t}")
    mu = family.mu
    zeta = (np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float)) / t ** mu
    r = np.abs(zeta)
    theta = np.angle(zeta)

    centre = r == 0.0
    safe_r = np.where(centre, 1.0, r)
    w, _, q = evaluate_arrays(family, safe_r, theta)
    region = region_indices(family, safe_r, theta)

    rejected = centre | on_sheet_mask(family, safe_r, theta, tol)
    v = np.where(rejected, complex(np.nan, np.nan), t ** (mu - 1.0) * w)
    p = np.where(rejected, np.nan, t ** (2.0 * mu - 2.0) * q)
    region = np.where(rejected, -1, region)
    return v, p, region


def sample_grid(family: SpiralFamily, bounds: Tuple[float, float, float, float],
                nx: int, ny: int, t: float, tol: float = ON_SHEET_TOL) -> FieldGrid:
    """Evaluate v and p on an nx × ny node grid; rows run over x fastest"""
    x0, x1, y0, y1 = bounds
    if not (x0 < x1 and y0 < y1):
        raise InvalidArgument(f"grid bounds must satisfy x0 < x1 and y0 < y1, got {bounds}")
    if nx < 1 or ny < 1:
        raise InvalidArgument(f"grid needs at least one node per axis, got {nx}x{ny}")

    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    X, Y = np.meshgrid(xs, ys)
    v, p, region = spacetime_arrays(family, X.ravel(), Y.ravel(), t, tol)

    grid = FieldGrid(bounds=(x0, x1, y0, y1), nx=nx, ny=ny, t=t,
                     x=X.ravel(), y=Y.ravel(), u=v.real, v=v.imag, p=p, region=region)
    logger.debug(f"Sampled {nx}x{ny} grid at t={t}, {grid.on_sheet_count} nodes on the sheet")
    return grid


def sheet_trace(family: SpiralFamily, m: int, theta: float, t: float = 1.0) -> SheetTrace:
    """One-sided limits of v and p on branch m at parameter θ"""
    point = sheet_point(family, m, theta, t)
    limits = [winding_limits(family, m, theta, k) for k in range(family.M)]
    right = np.array([lim[0] for lim in limits])
    left = np.array([lim[1] for lim in limits])

    log_r = family.a * (theta - family.theta[m])
    w_r, _, q_r = fields_with_winding(family, log_r, theta, right)
    w_l, _, q_l = fields_with_winding(family, log_r, theta, left)

    v_scale = t ** (family.mu - 1.0)
    p_scale = t ** (2.0 * family.mu - 2.0)
    w_right = complex(w_r) * v_scale
    w_left = complex(w_l) * v_scale
    logger.debug(f"Trace on branch {m} at theta={theta}: Z={point.Z}")
    return SheetTrace(
        w_right=w_right,
        w_left=w_left,
        jump=w_right - w_left,
        average=0.5 * (w_right + w_left),
        q_right=float(q_r) * p_scale,
        q_left=float(q_l) * p_scale,
    )


def jump_closed_form(family: SpiralFamily, m: int, theta: float, t: float = 1.0) -> complex:
    """(2a/(a²+1)) g_m t^{μ-1} e^{a(θ-θ_m)} e^{iθ} (a+i)"""
    a = family.a
    return (2.0 * a / (a * a + 1.0) * family.g[m] * t ** (family.mu - 1.0)
            * math.exp(a * (theta - family.theta[m])) * cmath.exp(1j * theta) * complex(a, 1.0))


def _circle_pieces(family: SpiralFamily, log_R: float) -> List[Tuple[float, float, np.ndarray]]:
    """Split |z| = R at the branch crossings; winding is constant on each arc"""
    crossings = np.sort(np.mod(family.theta_array + log_R / family.a, TWO_PI))
    edges = np.append(crossings, crossings[0] + TWO_PI)
    pieces = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (lo + hi)
        winding = winding_numbers(family, math.exp(log_R), mid)
        pieces.append((float(lo), float(hi), winding))
    return pieces


def _integrate_pieces(integrand, pieces, limit: int) -> float:
    total = 0.0
    for lo, hi, winding in pieces:
        value, error = integrate.quad(integrand, lo, hi, args=(winding,),
                                      epsabs=0.0, epsrel=1e-13, limit=limit)
        logger.debug(f"Arc [{lo:.6f}, {hi:.6f}]: {value:.16e} (±{error:.1e})")
        total += value
    return total


def energy_in_ball(family: SpiralFamily, r: float, limit: int = 200) -> float:
    """∫_{B(0,r)} |w|² via (r⁴/4) ∫_0^{2π} |w(e^{iθ'})|² dθ'"""
    if not r > 0:
        raise InvalidArgument(f"radius must be positive, got {r}")
    A2 = abs(family.A) ** 2

    def integrand(phi, winding):
        Phi = potential_with_winding(family, 0.0, phi, winding)
        return A2 * abs(complex(Phi)) ** 2

    circle = _integrate_pieces(integrand, _circle_pieces(family, 0.0), limit)
    return 0.25 * r ** 4 * circle


def reversed_time_energy(family: SpiralFamily, s: float) -> float:
    """∫_{B(0,1)} |u|² for u(x,t) = v(t₀-t, -x) at s = t₀ - t"""
    if not s > 0:
        raise NonPositiveTime(f"time to blow-up must be positive, got {s}")
    mu = family.mu
    return s ** (4.0 * mu - 2.0) * energy_in_ball(family, s ** (-mu))


def enclosed_circulation(family: SpiralFamily, rho: float, t: float = 1.0,
                         limit: int = 200) -> float:
    """∮_{|z|=ρ} v·dl, counter-clockwise"""
    if not rho > 0:
        raise InvalidArgument(f"radius must be positive, got {rho}")
    if not t > 0:
        raise NonPositiveTime(f"time must be positive, got {t}")
    mu = family.mu
    log_R = math.log(rho) - mu * math.log(t)
    A = family.A

    # w* dz = iAΦ/z · iz dφ = -AΦ dφ on the circle
    def integrand(phi, winding):
        Phi = potential_with_winding(family, log_R, phi, winding)
        return float(np.real(-A * Phi))

    circulation = _integrate_pieces(integrand, _circle_pieces(family, log_R), limit)
    return t ** (2.0 * mu - 1.0) * circulation


def empirical_growth_constant(family: SpiralFamily, r, theta) -> float:
    """max |w(z)|/|z| over the off-sheet sample points"""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    keep = ~on_sheet_mask(family, r, theta)
    w, _, _ = evaluate_arrays(family, r[keep], theta[keep])
    return float(np.max(np.abs(w) / r[keep]))
