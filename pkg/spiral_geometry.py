#!/usr/bin/env python3
"""
Spiral geometry: winding numbers, sheet parametrization and point location.

Branch m at time t is the curve Z_m(θ,t) = t^μ e^{a(θ-θ_m)} e^{iθ}. The
winding number J(r,θ,k) is the least integer j with a(2πj+θ_k-θ) + ln r > 0;
it picks the loop of branch k lying just inside the query point and keeps
complex powers on the right sheet of the logarithm.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from spiral_errors import BranchOutOfRange, NonPositiveTime, OnSheet
from spiral_model import TWO_PI, PolarPoint, SpiralFamily

logger = logging.getLogger(__name__)

ON_SHEET_TOL = 1e-12
DISTANCE_SAMPLES = 256
LOG_RADIUS_STEP = 0.01
FAR_LOG_RADIUS = 40.0


@dataclass(frozen=True)
class WindingVector:
    J: Tuple[int, ...]

    def __getitem__(self, k: int) -> int:
        return self.J[k]

    def __len__(self) -> int:
        return len(self.J)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.J, dtype=np.int64)


@dataclass(frozen=True)
class SheetPoint:
    branch: int
    theta: float
    t: float
    Z: complex
    dZ: complex
    normal: complex
    tangent: complex
    Gamma: float
    gamma: float


class PointLocation(NamedTuple):
    region: int
    winding: WindingVector
    distance: float


def _check_branch(family: SpiralFamily, m: int):
    if not 0 <= m < family.M:
        raise BranchOutOfRange(f"branch {m} outside 0..{family.M - 1}")


def _check_time(t: float):
    if not t > 0:
        raise NonPositiveTime(f"time must be positive, got {t}")


def _loop_coordinate(family: SpiralFamily, log_r, theta):
    """s_k = (θ - θ_k - ln r/a)/2π; integer values lie on branch k"""
    log_r = np.asarray(log_r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return (theta[..., None] - family.theta_array - log_r[..., None] / family.a) / TWO_PI


def winding_numbers(family: SpiralFamily, r, theta) -> np.ndarray:
    """Vectorized J over arrays of (r, θ); trailing axis indexes branches"""
    s = _loop_coordinate(family, np.log(r), theta)
    return np.floor(s).astype(np.int64) + 1


def winding_number(family: SpiralFamily, p: PolarPoint, k: int) -> int:
    _check_branch(family, k)
    s = (p.theta - family.theta[k] - p.log_r / family.a) / TWO_PI
    return math.floor(s) + 1


def winding_vector(family: SpiralFamily, p: PolarPoint) -> WindingVector:
    J = winding_numbers(family, p.r, p.theta)
    return WindingVector(tuple(int(j) for j in J))


def winding_limits(family: SpiralFamily, m: int, theta: float, k: int) -> Tuple[int, int]:
    """(J^R, J^L) at Z_m(θ,1): (1 if θ_k < θ_m, 1 if θ_k <= θ_m).

    The left side is the one reached by increasing the polar angle at fixed
    radius, which is also the side the unit normal points into.
    """
    _check_branch(family, m)
    _check_branch(family, k)
    return int(k < m), int(k <= m)


def sheet_point(family: SpiralFamily, m: int, theta: float, t: float = 1.0) -> SheetPoint:
    _check_time(t)
    _check_branch(family, m)

    a = family.a
    growth = a * (theta - family.theta[m])
    Z = t ** family.mu * math.exp(growth) * cmath.exp(1j * theta)
    dZ = complex(a, 1.0) * Z
    tangent = dZ / abs(dZ)
    g_m = family.g[m]

    return SheetPoint(
        branch=m,
        theta=theta,
        t=t,
        Z=Z,
        dZ=dZ,
        normal=1j * tangent,
        tangent=tangent,
        Gamma=g_m * t ** (2.0 * family.mu - 1.0) * math.exp(2.0 * growth),
        gamma=2.0 * a * g_m * t ** (family.mu - 1.0) * math.exp(growth) / math.sqrt(1.0 + a * a),
    )


def radial_gap(family: SpiralFamily, r, theta) -> np.ndarray:
    """Distance from (r, θ) to the nearest loop of any branch along its ray"""
    r = np.asarray(r, dtype=float)
    s = _loop_coordinate(family, np.log(r), theta)
    frac = s - np.floor(s)
    span = TWO_PI * family.a
    outward = np.expm1(span * frac)
    inward = -np.expm1(-span * (1.0 - frac))
    return r * np.min(np.minimum(outward, inward), axis=-1)


def normal_distance_estimate(family: SpiralFamily, r, theta) -> np.ndarray:
    """Radial gap projected on the local normal; exact to first order near a branch"""
    return radial_gap(family, r, theta) / math.sqrt(1.0 + family.a ** 2)


def on_sheet_mask(family: SpiralFamily, r, theta, tol: float = ON_SHEET_TOL) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return normal_distance_estimate(family, r, theta) <= tol * np.maximum(1.0, r)


def check_off_sheet(family: SpiralFamily, p: PolarPoint, tol: float = ON_SHEET_TOL):
    if bool(on_sheet_mask(family, p.r, p.theta, tol)):
        raise OnSheet(f"point r={p.r} theta={p.theta} lies on the sheet")


def region_indices(family: SpiralFamily, r, theta) -> np.ndarray:
    """Gap index: Ω_m lies between Σ_m and Σ_{m+1} (Σ_M ≡ Σ_0)"""
    s = _loop_coordinate(family, np.log(r), theta)
    return np.argmin(s - np.floor(s), axis=-1)


def region_index(family: SpiralFamily, p: PolarPoint) -> int:
    return int(region_indices(family, p.r, p.theta))


def _branch_distance(family: SpiralFamily, k: int, zeta: complex, theta_in: float) -> float:
    """min |ζ - Z_k(θ',1)| for θ' over the two loops bracketing |ζ|.

    The search runs in u = ln|Z_k| = a(θ'-θ_k). Samples are uniform in θ'
    and, between |ζ|e^{-40} and 2|ζ|, uniform in u as well, so steep loops
    (large a) are resolved. Points beyond 2|ζ| are farther than the inner
    loop on the same ray.
    """
    a = family.a
    theta_k = family.theta[k]
    log_R = math.log(abs(zeta))

    def distance(u):
        return np.abs(zeta - np.exp(u + 1j * (theta_k + u / a)))

    u_lo = a * (theta_in - math.pi - theta_k)
    u_hi = a * (theta_in + TWO_PI + math.pi - theta_k)
    parts = [np.linspace(u_lo, u_hi, DISTANCE_SAMPLES)]
    near_lo = max(u_lo, log_R - FAR_LOG_RADIUS)
    near_hi = min(u_hi, log_R + math.log(2.0))
    if near_hi > near_lo:
        count = int(math.ceil((near_hi - near_lo) / LOG_RADIUS_STEP)) + 1
        parts.append(np.linspace(near_lo, near_hi, count))
    grid = np.unique(np.concatenate(parts))

    values = distance(grid)
    best = int(np.argmin(values))
    u_best = grid[best]
    left = grid[max(best - 1, 0)] - u_best
    right = grid[min(best + 1, grid.size - 1)] - u_best
    if right - left <= 0.0:
        return float(values[best])

    # offsets from u_best keep the bounded search's relative tolerance small
    result = minimize_scalar(lambda d: float(distance(u_best + d)), bounds=(left, right),
                             method='bounded', options={'xatol': 1e-14})
    return float(min(result.fun, values[best]))


def locate_point(family: SpiralFamily, p: PolarPoint, t: float = 1.0,
                 tol: float = ON_SHEET_TOL) -> PointLocation:
    """Region, winding vector and distance to Σ(t) for a physical point p"""
    _check_time(t)
    scale = t ** family.mu
    zeta_p = p.scaled(1.0 / scale)

    if bool(on_sheet_mask(family, zeta_p.r, zeta_p.theta, tol)):
        raise OnSheet(f"point r={p.r} theta={p.theta} lies on the sheet at t={t}")

    winding = winding_vector(family, zeta_p)
    zeta = zeta_p.z
    distance = min(
        _branch_distance(family, k, zeta, zeta_p.theta - TWO_PI * winding[k])
        for k in range(family.M)
    ) * scale

    if distance <= tol * max(1.0, p.r):
        raise OnSheet(f"point r={p.r} theta={p.theta} is within {distance:.3e} of the sheet")

    region = region_index(family, zeta_p)
    logger.debug(f"Located r={p.r} theta={p.theta} at t={t}: region {region}, distance {distance:.3e}")
    return PointLocation(region, winding, distance)
